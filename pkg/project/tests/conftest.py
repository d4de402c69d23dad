import pytest

from app.core.kernels import build_kernel_table, isotropic_spec
from schemas.kernel import GridSpec


@pytest.fixture
def grid_1d():
    return GridSpec(dim=1, h=1 / 16, R=2)


@pytest.fixture
def table_1d(grid_1d):
    return build_kernel_table(isotropic_spec(1, 0.5), grid_1d)


@pytest.fixture
def grid_2d():
    return GridSpec(dim=2, h=1 / 8, R=1)


@pytest.fixture
def table_2d(grid_2d):
    return build_kernel_table(isotropic_spec(2, 0.5), grid_2d)
