"""Exception hierarchy shared by every module."""


class LatticeSnakeError(Exception):
    """Base class; the CLI maps these to exit status 3."""


class ConfigError(LatticeSnakeError):
    """Invalid user configuration (CLI exit status 2)."""


class ZeroDirection(LatticeSnakeError, ValueError):
    pass


class NonCommensurate(LatticeSnakeError):
    pass


class NoComplexBranch(LatticeSnakeError):
    pass


class SearchExhausted(LatticeSnakeError):
    pass


class NoMaxwellPoint(LatticeSnakeError):
    pass


class Unsupported(LatticeSnakeError):
    pass


class FitFailed(LatticeSnakeError):
    pass


class Overflow(LatticeSnakeError):
    pass


class ComplexDominance(LatticeSnakeError):
    """Raised when complex eigenvalues dominate the late terms.

    The ``diagnostic`` dict carries the oscillation evidence.
    """

    def __init__(self, message, diagnostic=None):
        super().__init__(message)
        self.diagnostic = diagnostic or {}


class NoPinnedFront(LatticeSnakeError):
    pass


class EmptyWindow(LatticeSnakeError):
    pass


class SingularJacobian(LatticeSnakeError):
    pass


class NoConvergence(LatticeSnakeError):
    pass


class StepUnderflow(LatticeSnakeError):
    pass


class InsufficientFolds(LatticeSnakeError):
    pass


class Instability(LatticeSnakeError):
    pass


class NoFront(LatticeSnakeError):
    pass


class BracketInvalid(LatticeSnakeError):
    pass
