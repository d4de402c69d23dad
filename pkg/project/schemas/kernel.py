import json
import pathlib
from typing import List, Tuple, Union

from pydantic import BaseModel, Field, validator


class KernelSpec(BaseModel):
    """
    Operator of the class L*: order s, ellipticity bounds, tabulated even density mu.
    1D: mu = (mu(+1), mu(-1)); 2D: mu at angles 2*pi*k/len(mu).
    Invariants are checked by kernels.validate_kernel_spec, not here.
    """
    dim: int
    s: float
    lam: float = Field(alias='lambda')
    Lam: float = Field(alias='Lambda')
    mu: Tuple[float, ...]

    class Config:
        allow_population_by_field_name = True
        frozen = True

    @validator('dim')
    def dim_validator(cls, v):
        if v not in (1, 2):
            raise ValueError('dim must be 1 or 2')
        return v

    @classmethod
    def from_json(cls, path: Union[str, pathlib.Path]) -> 'KernelSpec':
        with open(path) as f:
            return cls.parse_obj(json.load(f))

    def document(self) -> dict:
        return self.dict(by_alias=True)


class GridSpec(BaseModel):
    dim: int
    h: float
    R: float
    exterior_rule: str = 'zero'

    class Config:
        frozen = True

    @validator('dim')
    def dim_validator(cls, v):
        if v not in (1, 2):
            raise ValueError('dim must be 1 or 2')
        return v

    @validator('h', 'R')
    def positive_validator(cls, v):
        if not v > 0:
            raise ValueError('must be positive')
        return v

    @validator('R')
    def ratio_validator(cls, v, values):
        h = values.get('h')
        if h is None:
            return v
        ratio = v / h
        if abs(ratio - round(ratio)) > 1e-9 * max(1.0, ratio):
            raise ValueError('R/h must be an integer')
        if round(ratio) < 8:
            raise ValueError('R/h must be at least 8')
        return v

    @validator('exterior_rule')
    def exterior_validator(cls, v):
        if v not in ('zero', 'obstacle'):
            raise ValueError("exterior_rule must be 'zero' or 'obstacle'")
        return v

    @property
    def n(self) -> int:
        """
        nodes per half axis; the lattice is h * (-n..n)
        """
        return int(round(self.R / self.h))

    @property
    def shape(self) -> Tuple[int, ...]:
        return (2 * self.n + 1,) * self.dim

    def refined(self) -> 'GridSpec':
        return GridSpec(dim=self.dim, h=self.h / 2, R=self.R, exterior_rule=self.exterior_rule)


class ValidationCheck(BaseModel):
    name: str
    passed: bool
    detail: str = ''


class ValidationReport(BaseModel):
    passed: bool
    checks: List[ValidationCheck] = []

    def failures(self) -> List[str]:
        return [f'{c.name}: {c.detail}' for c in self.checks if not c.passed]
