"""Exception hierarchy shared by all modules."""


class DefinettiKitError(Exception):
    """Base class for every error raised by the package."""


class DomainError(DefinettiKitError, ValueError):
    """An argument lies outside the domain of a formula."""


class PreconditionError(DefinettiKitError, ValueError):
    """An input object violates a structural precondition (symmetry, support, ...)."""


class InfeasibleError(DefinettiKitError):
    """No state satisfies the constraint of an optimization problem."""

    def __init__(self, message, lambda_min=None):
        super().__init__(message)
        self.lambda_min = lambda_min


class NumericalError(DefinettiKitError, ArithmeticError):
    """An iterative routine did not reach its tolerance."""

    def __init__(self, message, state=None):
        super().__init__(message)
        self.state = state


class TruncationError(DefinettiKitError):
    """A finite cutoff is too small for the requested accuracy."""


class ResourceGuardError(DefinettiKitError):
    """A dense construction would exceed the configured size guard."""


class BoundViolation(DefinettiKitError, AssertionError):
    """A checked inequality failed; ``report`` carries the counterexample."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report or {}
