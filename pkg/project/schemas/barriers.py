from typing import List, Optional, Tuple

from pydantic import BaseModel, root_validator, validator


class ProfileSpec(BaseModel):
    kind: str
    s: float
    e: Tuple[float, ...]
    K: float = 1.0
    # cone_subsolution only
    epsilon: Optional[float] = None
    eta: Optional[float] = None

    @validator('e')
    def unit_validator(cls, v):
        norm = sum(x * x for x in v) ** 0.5
        if not v or abs(norm - 1) > 1e-12:
            raise ValueError('e must be a unit vector')
        return v

    @validator('K')
    def amplitude_validator(cls, v):
        if not v > 0:
            raise ValueError('K must be positive')
        return v

    @root_validator(skip_on_failure=True)
    def cone_validator(cls, values):
        if values['kind'] != 'cone_subsolution':
            return values
        s, epsilon, eta = values['s'], values.get('epsilon'), values.get('eta')
        if epsilon is None or not 0 < epsilon < 1 - s:
            raise ValueError('cone_subsolution needs epsilon in (0, 1 - s)')
        if eta is None or not eta > 0:
            raise ValueError('cone_subsolution needs eta > 0')
        return values


class VerificationReport(BaseModel):
    profile: str
    sense: str
    h: List[float]
    region_size: List[int]
    # declared-sense violation per h, coarse first
    violation: List[float]
    sup: List[float]
    inf: List[float]
    tolerance: float
    bound: Optional[float] = None
    eta: Optional[float] = None
    passed: bool
