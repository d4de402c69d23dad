from typing import List, Optional, Tuple

from pydantic import BaseModel, root_validator, validator


class AnalysisConfig(BaseModel):
    """
    alpha defaults to 0.8*min(s, 1-s) and gamma_probe to s/2;
    radii None means analysis.default_radii(grid)
    """
    s: float
    alpha: Optional[float] = None
    radii: Optional[List[float]] = None
    gamma_probe: Optional[float] = None
    tau_probe: float = 0.05
    # theta(last)/theta(first) at or above this flags a regular candidate
    regular_ratio: float = 4.0
    contact_tol: Optional[float] = None

    @validator('s')
    def order_validator(cls, v):
        if not 0 < v < 1:
            raise ValueError('s must lie in (0, 1)')
        return v

    @validator('radii')
    def radii_validator(cls, v):
        if v is None:
            return v
        if not v or any(r <= 0 for r in v):
            raise ValueError('radii must be positive')
        if any(b >= a for a, b in zip(v, v[1:])):
            raise ValueError('radii must be strictly decreasing')
        return v

    @validator('tau_probe')
    def tau_validator(cls, v):
        if not 0 < v < 1:
            raise ValueError('tau_probe must lie in (0, 1)')
        return v

    @root_validator(skip_on_failure=True)
    def exponent_validator(cls, values):
        s = values['s']
        alpha = values.get('alpha')
        if alpha is None:
            alpha = 0.8 * min(s, 1 - s)
        if not (0 < alpha < s and 1 + s + alpha < 2):
            raise ValueError('alpha must satisfy 0 < alpha < s and 1 + s + alpha < 2')
        values['alpha'] = alpha

        gamma = values.get('gamma_probe')
        if gamma is None:
            gamma = s / 2
        if not 0 < gamma < s:
            raise ValueError('gamma_probe must lie in (0, s)')
        values['gamma_probe'] = gamma
        return values


class GrowthReport(BaseModel):
    x0: Tuple[float, ...]
    radii: List[float]
    theta: List[float]
    alpha: float
    ratio: float
    regular_candidate: bool
    # divergence proxy for the qualitative modulus of regular points
    criterion: str = 'theta(last)/theta(first) >= regular_ratio'


class ExponentFit(BaseModel):
    beta: float
    c: float
    residual: float
    radii_used: List[float]
    sups: List[float] = []


class MonotonicityReport(BaseModel):
    passed: bool
    ell: Optional[float] = None
    r: float
    direction: Tuple[float, ...]
    min_derivative: float
    ell_grid: List[float] = []
    # min over the cone of d_e' w on B_r, one per ell
    cone_minima: List[float] = []
    kick: Optional[float] = None
    kick_positive: bool = False


class HarnackReport(BaseModel):
    min_ratio: float
    max_ratio: float
    quotient: float
    nodes: int


class DensityReport(BaseModel):
    x0: Tuple[float, ...]
    radii: List[float]
    density: List[float]


class CollapseReport(BaseModel):
    # finest resolved blow-up scales, largest first
    radii: List[float]
    c1_distance: List[float]
    resolved_cells: float
    decreasing: bool


class BlowupSummary(BaseModel):
    r: float
    K: float
    e: Tuple[float, ...]
    c1_distance: float
    grad_sup_unit: float
