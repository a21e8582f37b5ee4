"""Exception hierarchy shared by all gridspect modules."""


class GridSpectError(Exception):
    """Base class for errors raised by gridspect."""


class NetworkError(GridSpectError, ValueError):
    """Invalid network description (topology, sign convention, duplicates)."""


class NotNormalError(GridSpectError, ValueError):
    """Matrix is not normal to the requested tolerance."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class SingularBlockError(GridSpectError, ValueError):
    """A block that must be inverted is singular."""


class DataError(GridSpectError, ValueError):
    """Phasor data has wrong shape, too few samples, or is inconsistent."""


class RankDeficiencyError(DataError):
    """Measurement matrix does not have the rank an estimator requires."""

    def __init__(self, message, rank=None, required=None):
        super().__init__(message)
        self.rank = rank
        self.required = required


class ConditioningError(GridSpectError, ArithmeticError):
    """Matrix to be inverted exceeds the configured condition-number ceiling."""

    def __init__(self, message, kappa=None, ceiling=None):
        super().__init__(message)
        self.kappa = kappa
        self.ceiling = ceiling


class ConfigError(GridSpectError, ValueError):
    """Invalid run or benchmark configuration."""


class FileFormatError(DataError):
    """Malformed network, dataset, or estimate file."""

    def __init__(self, message, path=None, line=None):
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(where + message)
        self.path = path
        self.line = line
