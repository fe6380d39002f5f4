"""Exception hierarchy shared by the solvers and the CLI."""

from __future__ import annotations


class GravVortexError(Exception):
    """Base class for every error raised by this package."""


class PreconditionError(GravVortexError, ValueError):
    """An argument violates a documented precondition."""


class ResolutionTooSmall(PreconditionError):
    pass


class DegenerateLattice(PreconditionError):
    pass


class GridMismatch(PreconditionError):
    """A field does not live on the grid it was handed with."""


class GridKindMismatch(GridMismatch):
    pass


class InvalidDivisor(PreconditionError):
    pass


class NonConvergence(GravVortexError):
    """Newton iteration ran out of budget or diverged.

    ``history`` holds the sup-norm residual of every accepted iterate and
    ``certificate`` is filled in by solvers that can attach an obstruction
    (for instance a nonzero Futaki value).
    """

    def __init__(self, message: str, *, history=None, diverged: bool = False,
                 certificate=None, trace=None):
        super().__init__(message)
        self.history = list(history or [])
        self.diverged = diverged
        self.certificate = certificate
        self.trace = trace


class StepUnderflow(GravVortexError):
    """Continuation step fell below the floor; ``last_t`` is the last accepted t."""

    def __init__(self, message: str, *, last_t: float, states=None):
        super().__init__(message)
        self.last_t = last_t
        self.states = list(states or [])


class KahlerPositivityLost(GravVortexError):
    """The conformal factor 1 - Δ₀v is not positive somewhere."""
