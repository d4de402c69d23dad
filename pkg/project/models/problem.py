from dataclasses import dataclass, field
from typing import Optional, Tuple

from models.grid import ZERO_EXTERIOR, Exterior, GridFunction
from models.kernel_table import KernelTable
from models.operator import FullyNonlinearSpec
from schemas.kernel import GridSpec


@dataclass(eq=False)
class ObstacleProblem:
    """
    min(-L u, u - phi) = 0, or min(-I u, u - phi) = 0 for a family.
    Exactly one of table / family is set.
    """
    phi: GridFunction
    table: Optional[KernelTable] = None
    family: Optional[FullyNonlinearSpec] = None
    tables: Tuple[KernelTable, ...] = ()
    exterior: Exterior = field(default=ZERO_EXTERIOR)

    @property
    def grid(self) -> GridSpec:
        return self.phi.grid

    @property
    def is_family(self) -> bool:
        return self.family is not None
