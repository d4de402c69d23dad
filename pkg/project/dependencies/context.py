from typing import Dict, List, Optional, Tuple

from app.core.exception import configuration_exception
from app.core.kernels import build_kernel_table
from app.core.obstacles import make_obstacle, obstacle_exterior
from app.core.solver import resolve_settings
from db.base import ArtifactSession
from db.crud.crud_diagnostic import DiagnosticDAL
from db.crud.crud_report import ReportDAL
from db.crud.crud_solution import SolutionDAL
from models.grid import Exterior, GridFunction
from models.kernel_table import KernelTable
from schemas.experiment import ExperimentConfig
from schemas.kernel import GridSpec, KernelSpec


class StageContext:
    """
    Shared state of one run: lazily built tables, obstacle and exterior,
    solutions of earlier stages, and the artifact DALs.
    """

    def __init__(self, config: ExperimentConfig, session: ArtifactSession):
        self.config = config
        self.session = session
        self.document = config.document()
        self.document['solver'] = resolve_settings(config.solver, config.grid.dim).dict()

        self.solutions = SolutionDAL(session, self.document)
        self.reports = ReportDAL(session, self.document)
        self.diagnostics = DiagnosticDAL(session, self.document)
        self.state: Dict[str, GridFunction] = {}
        self._tables: Dict[Tuple[str, float], KernelTable] = {}

    @property
    def grid(self) -> GridSpec:
        return self.config.grid

    def table_for(self, spec: KernelSpec, grid: Optional[GridSpec] = None) -> KernelTable:
        grid = grid or self.grid
        key = (spec.json(by_alias=True), grid.h)
        if key not in self._tables:
            self._tables[key] = build_kernel_table(spec, grid, self.config.window_radius, self.config.quadrature)
        return self._tables[key]

    def kernel_table(self, grid: Optional[GridSpec] = None) -> KernelTable:
        if self.config.kernel is None:
            configuration_exception('this stage needs a single kernel in the config')
        return self.table_for(self.config.kernel, grid)

    def family_tables(self) -> Tuple[KernelTable, ...]:
        if self.config.family is None:
            configuration_exception('this stage needs a kernel family in the config')
        return tuple(self.table_for(m.kernel) for m in self.config.family.members)

    def kernel_specs(self) -> List[Tuple[str, KernelSpec]]:
        specs = [('kernel', self.config.kernel)] if self.config.kernel else []
        if self.config.family:
            specs += [(f'member{k}', m.kernel) for k, m in enumerate(self.config.family.members)]
        return specs

    def obstacle(self) -> GridFunction:
        if 'phi' not in self.state:
            self.state['phi'] = make_obstacle(self.config.obstacle, self.grid)
        return self.state['phi']

    def exterior(self) -> Exterior:
        return obstacle_exterior(self.config.obstacle, self.grid)

    def solution(self) -> Optional[GridFunction]:
        return self.state.get('u', self.state.get('u_fnl'))
