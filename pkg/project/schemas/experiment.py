import pathlib
from typing import List, Optional, Tuple

from pydantic import BaseModel, root_validator, validator

from schemas.analysis import AnalysisConfig
from schemas.kernel import GridSpec, KernelSpec
from schemas.solver import SolverSettings

STAGE_NAMES = ('validate-kernel', 'solve', 'solve-fnl', 'dirichlet', 'analyze', 'barrier-check', 'harnack')
OBSTACLE_CATALOG = ('bump', 'cosine_bump', 'tent', 'table')
REGION_KINDS = ('halfspace', 'box', 'cone')


def kernel_reference(v):
    """
    kernels are given inline or as the path of a kernel JSON file
    """
    if not isinstance(v, (str, pathlib.Path)):
        return v
    try:
        return KernelSpec.from_json(v)
    except OSError as e:
        raise ValueError(f'cannot read kernel file {v}: {e.strerror}')


class ObstacleSpec(BaseModel):
    """
    bump: b (1 - |x/a|^2)_+^2; cosine_bump: b cos^2(pi |x| / 2a) on |x| < a;
    tent: b (1 - |x|/a)_+ (Lipschitz only); table: sampled values in C order
    """
    catalog: str = 'bump'
    a: float = 1.0
    b: float = 1.0
    values: Optional[List[float]] = None

    @validator('catalog')
    def catalog_validator(cls, v):
        if v not in OBSTACLE_CATALOG:
            raise ValueError(f'unknown obstacle catalog id {v!r}, expected one of {OBSTACLE_CATALOG}')
        return v

    @validator('a')
    def radius_validator(cls, v):
        if not v > 0:
            raise ValueError('obstacle radius a must be positive')
        return v

    @root_validator(skip_on_failure=True)
    def table_validator(cls, values):
        if values['catalog'] == 'table' and not values.get('values'):
            raise ValueError("obstacle catalog 'table' needs sampled values")
        return values


class MemberSpec(BaseModel):
    kernel: KernelSpec
    drift: float = 0.0

    @validator('kernel', pre=True)
    def kernel_file_validator(cls, v):
        return kernel_reference(v)


class FamilySpec(BaseModel):
    members: List[MemberSpec]
    normalization: bool = False


class DirichletSettings(BaseModel):
    domain_radius: float = 1.0
    rhs: float = -1.0
    exterior_value: float = 0.0


class AnalysisSettings(BaseModel):
    alpha: Optional[float] = None
    radii: Optional[List[float]] = None
    gamma_probe: Optional[float] = None
    tau_probe: float = 0.05
    regular_ratio: float = 4.0
    blowup_window: float = 1.0
    # blow-up scales count as resolved from this many cells up
    collapse_cells: float = 64.0
    ell_grid: List[float] = [0.125, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0]
    # None: smallest analysis radius
    cone_radius: Optional[float] = None
    # None: (4h, largest analysis radius)
    quotient_band: Optional[Tuple[float, float]] = None
    normal_window: Optional[float] = None

    def config(self, s: float) -> AnalysisConfig:
        return AnalysisConfig(s=s, alpha=self.alpha, radii=self.radii, gamma_probe=self.gamma_probe,
                              tau_probe=self.tau_probe, regular_ratio=self.regular_ratio)


class RegionSpec(BaseModel):
    kind: str = 'halfspace'
    lo: float = 0.25
    hi: Optional[float] = None
    r_min: Optional[float] = None
    r_max: Optional[float] = None

    @validator('kind')
    def kind_validator(cls, v):
        if v not in REGION_KINDS:
            raise ValueError(f'unknown region kind {v!r}, expected one of {REGION_KINDS}')
        return v


class BarrierCheck(BaseModel):
    kind: str
    e: Tuple[float, ...]
    K: float = 1.0
    epsilon: Optional[float] = None
    # cone profile without eta: searched over 2^-k
    eta: Optional[float] = None
    sense: str = 'harmonic'
    region: RegionSpec = RegionSpec()
    bound: Optional[float] = None
    tolerance: Optional[float] = None
    refine: bool = True


class HarnackSettings(BaseModel):
    refine: bool = True
    # allowed growth of the quotient under refinement
    slack: float = 0.05


class ExperimentConfig(BaseModel):
    name: str
    kernel: Optional[KernelSpec] = None
    family: Optional[FamilySpec] = None
    grid: GridSpec
    window_radius: Optional[float] = None
    quadrature: str = 'moment'
    obstacle: ObstacleSpec = ObstacleSpec()
    solver: SolverSettings = SolverSettings()
    analysis: AnalysisSettings = AnalysisSettings()
    dirichlet: DirichletSettings = DirichletSettings()
    harnack: HarnackSettings = HarnackSettings()
    barriers: List[BarrierCheck] = []
    stages: List[str] = ['validate-kernel', 'solve', 'analyze']
    # None: settings.output_dir (NLOBS_OUTPUT_DIR)
    outputs: Optional[str] = None

    @validator('kernel', pre=True)
    def kernel_file_validator(cls, v):
        return kernel_reference(v)

    @validator('stages', each_item=True)
    def stage_validator(cls, v):
        if v not in STAGE_NAMES:
            raise ValueError(f'unknown stage {v!r}, expected one of {STAGE_NAMES}')
        return v

    @root_validator(skip_on_failure=True)
    def operator_validator(cls, values):
        kernel, family, grid = values.get('kernel'), values.get('family'), values['grid']
        if kernel is None and family is None:
            raise ValueError('either kernel or family is required')
        specs = ([kernel] if kernel else []) + ([m.kernel for m in family.members] if family else [])
        if any(spec.dim != grid.dim for spec in specs):
            raise ValueError('kernel dimension does not match the grid')
        if 'solve-fnl' in values.get('stages', []) and family is None:
            raise ValueError("stage 'solve-fnl' needs a kernel family")
        if values['obstacle'].catalog == 'table':
            size = 1
            for n in grid.shape:
                size *= n
            if len(values['obstacle'].values) != size:
                raise ValueError(f'obstacle table has {len(values["obstacle"].values)} values, grid has {size} nodes')
        return values

    @property
    def s(self) -> float:
        if self.kernel is not None:
            return self.kernel.s
        return self.family.members[0].kernel.s

    def document(self) -> dict:
        return self.dict(by_alias=True)
