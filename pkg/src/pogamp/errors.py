"""Exception hierarchy shared by every pogamp module."""

import numpy as np


class PogampError(Exception):
    """Base class for all pogamp errors."""


class NotPositiveDefinite(PogampError, np.linalg.LinAlgError):
    pass


class InvalidPartition(PogampError, ValueError):
    pass


class RotatedOutOfDomain(PogampError, ValueError):
    pass


class UnsupportedFamily(PogampError, ValueError):
    pass


class DegreesOfFreedomTooSmall(PogampError, ValueError):
    pass


class UnboundedIntensity(PogampError, ValueError):
    pass


class QuadratureFailure(PogampError, RuntimeError):
    pass


class DerivativeDegenerate(PogampError, RuntimeError):
    pass


class NotSymmetric(PogampError, ValueError):
    pass


class DivergentChain(PogampError, RuntimeError):
    pass


class ConfigError(PogampError, ValueError):
    pass


class ParseError(PogampError, ValueError):
    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = []
        if line is not None:
            where.append(f"line {line}")
        if column is not None:
            where.append(f"column {column}")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)


class DuplicateLocation(PogampError, ValueError):
    pass


class OutOfDomain(PogampError, ValueError):
    pass
