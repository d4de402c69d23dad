from typing import NoReturn


class NonlocalObstacleError(Exception):
    pass


# invalid parameters: windows, tolerances, obstacle support, ellipticity
class ConfigurationError(NonlocalObstacleError):
    pass


# shape / grid mismatch, empty families or domains
class StructuralError(NonlocalObstacleError):
    pass


class FreeBoundaryError(NonlocalObstacleError):
    pass


class AnalysisError(NonlocalObstacleError):
    pass


def configuration_exception(msg: str) -> NoReturn:
    raise ConfigurationError(msg)


def structural_exception(msg: str) -> NoReturn:
    raise StructuralError(msg)


def free_boundary_exception(msg: str) -> NoReturn:
    raise FreeBoundaryError(msg)


def analysis_exception(msg: str) -> NoReturn:
    raise AnalysisError(msg)


def grid_mismatch_exception(what: str) -> NoReturn:
    raise StructuralError(f'grid mismatch: {what} is defined on a different lattice')
