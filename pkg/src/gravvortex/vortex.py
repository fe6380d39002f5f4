"""Vortex equation on a fixed background of area 2π.

With ``h = h₀ e^{2f}`` and ``H = |φ|²_{h₀}`` the equation reads

    Δ₀ f + ½ (e^{2f} H - τ) = -N

and has a solution iff ``N < τ/2``.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from typing import TextIO

import numpy as np

from gravvortex.errors import NonConvergence, PreconditionError
from gravvortex.newton import damped_newton, weighted_pcg
from gravvortex.surface import SurfaceGrid

DIVERGENCE_FLOOR = -50.0


@dataclass(frozen=True)
class VortexSolution:
    f: np.ndarray
    residual_sup: float
    iterations: int
    history: list[float] = field(default_factory=list)

    def higgs_norm(self, higgs: np.ndarray) -> np.ndarray:
        return np.exp(2.0 * self.f) * higgs


def vortex_residual(grid: SurfaceGrid, f: np.ndarray, higgs: np.ndarray, tau: float, degree: int):
    # constants grouped first so a tiny e^{2f}H is not absorbed when τ = 2N
    return grid.laplacian(f) + 0.5 * np.exp(2.0 * f) * higgs + (degree - 0.5 * tau)


def initial_guess(higgs: np.ndarray, tau: float) -> float:
    return 0.5 * np.log(tau / (float(np.max(higgs)) + tau))


def residual_logger(stream: TextIO):
    stream.write("# iteration residual_sup step_sup damping\n")

    def log(it, res, step, lam):
        stream.write(f"{it} {res:.6e} {step:.6e} {lam:.6e}\n")

    return log


def solve_vortex(
    grid: SurfaceGrid,
    higgs: np.ndarray,
    tau: float,
    tol: float = 1e-10,
    max_iter: int = 200,
    *,
    degree: int,
    f0: np.ndarray | float | None = None,
    verbose: bool | TextIO = False,
) -> VortexSolution:
    """Damped Newton for the vortex equation; linear steps by weighted PCG.

    The linearisation ``Δ₀ + e^{2f} H`` is positive definite, and
    ``(Δ₀ + mean(e^{2f} H))^{-1}`` serves as preconditioner.  Raises
    :class:`NonConvergence` when the budget runs out or ``min f`` drops
    below -50 (the ``f → -∞`` failure mode of inadmissible ``τ``).
    """
    H = grid.check(higgs, "higgs")
    if tol <= 0:
        raise PreconditionError("tol must be positive")
    if np.any(H < 0) or not np.any(H > 0):
        raise PreconditionError("higgs norm must be nonnegative and not identically zero")
    if degree < 1:
        raise PreconditionError("degree must be positive")

    if f0 is None:
        x0 = grid.constant(initial_guess(H, tau))
    elif np.isscalar(f0):
        x0 = grid.constant(float(f0))
    else:
        x0 = grid.check(f0, "f0").copy()

    def residual(f):
        return vortex_residual(grid, f, H, tau, degree)

    def solve(f, r):
        d = np.exp(2.0 * f) * H
        shift = max(grid.mean(d), 1e-300)
        return weighted_pcg(
            lambda u: grid.laplacian(u) + d * u,
            -r,
            grid.weights,
            lambda u: grid.solve_shifted(u, shift),
        )

    log = None
    if verbose:
        log = residual_logger(sys.stderr if verbose is True else verbose)

    result = damped_newton(
        residual,
        solve,
        x0,
        tol=tol,
        max_iter=max_iter,
        diverged=lambda f: float(np.min(f)) < DIVERGENCE_FLOOR,
        log=log,
    )
    return VortexSolution(result.x, result.residual_sup, result.iterations, result.history)


def expect_failure(exc: NonConvergence) -> bool:
    """True when ``exc`` shows the ``f → -∞`` signature."""
    return exc.diverged
