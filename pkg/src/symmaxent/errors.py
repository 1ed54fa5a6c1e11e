"""Exception hierarchy shared by all modules."""


class MaxEntError(Exception):
    """Base class for every error raised by this package."""


class SpaceMismatch(MaxEntError):
    pass


class NonHermitian(MaxEntError):
    pass


class DomainError(MaxEntError):
    pass


class IterationLimit(MaxEntError):
    pass


class UnsupportedOrder(MaxEntError):
    pass


class InvalidState(MaxEntError):
    def __init__(self, report):
        super().__init__(f"invalid state: {report}")
        self.report = report


class InvalidEvent(MaxEntError):
    pass


class NotOrthogonal(MaxEntError):
    pass


class NotOrthonormal(MaxEntError):
    pass


class ClosureCapExceeded(MaxEntError):
    pass


class BadDimension(MaxEntError):
    pass


class TruncationTooSmall(MaxEntError):
    pass


class BadSpin(MaxEntError):
    pass


class QuadratureTooCoarse(MaxEntError):
    pass


class BadObservable(MaxEntError):
    pass


class ProblemFormatError(MaxEntError):
    """Malformed problem, state, group or behavior file."""


class SolverFailure(MaxEntError):
    """Solver ended without an optimal point.

    ``solution`` carries the last iterate with its status set, so callers
    (the CLI in particular) can still report residuals and diagnostics.
    """

    def __init__(self, message, solution=None, certificate=None):
        super().__init__(message)
        self.solution = solution
        self.certificate = certificate


class Infeasible(SolverFailure):
    pass


class MaxIterations(SolverFailure):
    pass
