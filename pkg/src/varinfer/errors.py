"""Exception hierarchy shared by all stages of the pipeline."""


class VarInferError(Exception):
    """Base class for every error raised by :mod:`varinfer`."""


class DimensionMismatch(VarInferError, ValueError):
    pass


class NonSquare(DimensionMismatch):
    pass


class IndexOutOfRange(VarInferError, IndexError):
    pass


class NumericalFailure(VarInferError):
    pass


class Unstable(VarInferError):
    """Transition matrix has spectral radius >= 1."""

    def __init__(self, radius, message=None):
        self.radius = float(radius)
        super().__init__(message or f"spectral radius {self.radius:.6g} >= 1; process is not stationary")


class CapExceeded(VarInferError):
    def __init__(self, cap, trace):
        self.cap = cap
        self.trace = list(trace)
        super().__init__(f"decay index exceeds iteration cap {cap}; last norms {self.trace[-3:]}")


class Overflow(VarInferError):
    pass


class NotConverged(VarInferError):
    """Iterative solver stopped at its iteration limit.

    ``result`` carries the best iterate found so callers can decide
    whether to accept it.
    """

    def __init__(self, message, result=None):
        self.result = result
        super().__init__(message)


class DegenerateMu(VarInferError):
    def __init__(self, indices, values, floor):
        self.indices = list(indices)
        self.values = list(values)
        self.floor = floor
        super().__init__(
            f"curvature estimate mu_hat below floor {floor:g} at rows {self.indices} "
            f"(values {[round(v, 6) for v in self.values]}); "
            "enlarge the weight threshold T or switch to the other loss kind"
        )


class ExcessiveClip(VarInferError):
    pass


class EmptyDraws(VarInferError, ValueError):
    pass


class EmptyInput(VarInferError, ValueError):
    pass


class DegenerateDesign(VarInferError, ValueError):
    pass


class ConfigError(VarInferError, ValueError):
    pass
