from typing import List, Optional

from pydantic import BaseModel, validator


class SolverSettings(BaseModel):
    # None -> settings.tolerance_1d / tolerance_2d by dimension
    tolerance: Optional[float] = None
    max_iters: Optional[int] = None
    max_policy_iters: Optional[int] = None
    method: str = 'howard'
    sweep_order: str = 'lexicographic'

    @validator('method')
    def method_validator(cls, v):
        if v not in ('howard', 'pgs'):
            raise ValueError("method must be 'howard' or 'pgs'")
        return v

    @validator('sweep_order')
    def sweep_order_validator(cls, v):
        if v not in ('lexicographic', 'red_black'):
            raise ValueError("sweep_order must be 'lexicographic' or 'red_black'")
        return v

    @validator('tolerance')
    def tolerance_validator(cls, v):
        if v is not None and not v > 0:
            raise ValueError('tolerance must be positive')
        return v


class SolveReport(BaseModel):
    iterations: int = 0
    complementarity_residual: float = float('inf')
    operator_bound: float = 0.0
    converged: bool = False
    wall_time: float = 0.0
    method: str = 'howard'
    tolerance: float = 0.0
    residual_history: List[float] = []
    policy_iterations: int = 0
    monotone_residuals: bool = True
    message: str = ''


class AprioriReport(BaseModel):
    semiconvexity_min: float
    phi_c11: float
    sup_u: float
    sup_phi: float
    lipschitz_u: float
    lipschitz_phi: float
    contact_operator_bound: float
    semiconvexity_ok: bool
    sup_ok: bool
    lipschitz_ok: bool
    operator_bound_finite: bool

    @property
    def passed(self) -> bool:
        return self.semiconvexity_ok and self.sup_ok and self.lipschitz_ok and self.operator_bound_finite
