"""Exception types raised by the numerical routines."""


class HypflowError(Exception):
    """Base class; the CLI maps subclasses to exit codes."""


class InputError(HypflowError, ValueError):
    """Malformed input file or out-of-range parameter."""


class MonotonicityViolation(InputError):
    pass


class NumericalFailure(HypflowError):
    """A solver did not reach its postcondition."""


class NonConvergence(NumericalFailure):
    def __init__(self, msg, vertex=None):
        super().__init__(msg if vertex is None else f"{msg} (vertex {vertex})")
        self.vertex = vertex


class DegenerateStencil(NumericalFailure):
    pass


class SolverDivergence(NumericalFailure):
    pass


class DegenerateMap(NumericalFailure):
    pass


class IterationLimit(NumericalFailure):
    pass
