"""Damped Newton iteration and the Krylov helpers shared by the solvers."""

from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass, field

import numpy as np

from gravvortex.errors import NonConvergence

MIN_DAMPING = 2.0**-30


@dataclass
class NewtonResult:
    x: np.ndarray
    residual_sup: float
    iterations: int
    history: list[float] = field(default_factory=list)
    steps: list[float] = field(default_factory=list)


def sup(a: np.ndarray) -> float:
    return float(np.max(np.abs(a)))


def damped_newton(
    residual: Callable[[np.ndarray], np.ndarray],
    solve: Callable[[np.ndarray, np.ndarray], np.ndarray],
    x0: np.ndarray,
    *,
    tol: float,
    max_iter: int,
    step_tol: float = 1e-6,
    diverged: Callable[[np.ndarray], bool] | None = None,
    log: Callable[[int, float, float, float], None] | None = None,
    observe: Callable[[np.ndarray], None] | None = None,
) -> NewtonResult:
    """Newton with halving line search on the sup-norm of ``residual``.

    ``solve(x, r)`` returns the update ``δ`` with ``J(x) δ = -r``.  A step is
    accepted only if it strictly lowers the residual sup-norm.  The iteration
    has converged once the residual is below ``tol`` and the last accepted
    update is below ``step_tol``; requiring both keeps a residual that tends
    to zero only as the unknowns run off to infinity from counting as a
    solution.
    """
    x = np.array(x0, dtype=float)
    r = residual(x)
    res = sup(r)
    history = [res]
    steps: list[float] = []
    last_step = np.inf
    if observe is not None:
        observe(x)
    for it in range(1, max_iter + 1):
        if not np.isfinite(res):
            raise NonConvergence("residual is not finite", history=history, diverged=True)
        if res < tol and last_step < step_tol:
            return NewtonResult(x, res, it - 1, history, steps)
        delta = solve(x, r)
        lam = 1.0
        while True:
            x_new = x + lam * delta
            r_new = residual(x_new)
            res_new = sup(r_new)
            if np.isfinite(res_new) and res_new < res:
                break
            if res_new == res == 0.0:
                break
            lam *= 0.5
            if lam < MIN_DAMPING:
                raise NonConvergence(
                    f"line search stalled at residual {res:.3e} after {it - 1} iterations",
                    history=history,
                )
        last_step = lam * sup(delta)
        x, r, res = x_new, r_new, res_new
        history.append(res)
        steps.append(last_step)
        if observe is not None:
            observe(x)
        if log is not None:
            log(it, res, last_step, lam)
        if diverged is not None and diverged(x):
            raise NonConvergence(
                f"iterate diverged after {it} iterations", history=history, diverged=True
            )
    if res < tol and last_step < step_tol:
        return NewtonResult(x, res, max_iter, history, steps)
    raise NonConvergence(
        f"no convergence in {max_iter} iterations (residual {res:.3e}, step {last_step:.3e})",
        history=history,
    )


def weighted_pcg(
    apply: Callable[[np.ndarray], np.ndarray],
    rhs: np.ndarray,
    weights: np.ndarray,
    precondition: Callable[[np.ndarray], np.ndarray],
    *,
    rtol: float = 1e-12,
    max_iter: int = 500,
) -> np.ndarray:
    """Preconditioned conjugate gradients in the inner product ``Σ w a b``.

    ``apply`` must be self-adjoint and positive definite for that inner
    product, which is the case for ``Δ + diag(d)`` with ``d > 0`` on both
    grids; ``precondition`` must be self-adjoint as well.
    """

    def dot(a, b):
        return float(np.sum(weights * a * b))

    x = np.zeros_like(rhs)
    r = rhs.copy()
    z = precondition(r)
    p = z.copy()
    rz = dot(r, z)
    target = rtol * np.sqrt(dot(rhs, rhs))
    for _ in range(max_iter):
        if np.sqrt(dot(r, r)) <= target:
            break
        Ap = apply(p)
        alpha = rz / dot(p, Ap)
        x += alpha * p
        r -= alpha * Ap
        z = precondition(r)
        rz_new = dot(r, z)
        p = z + (rz_new / rz) * p
        rz = rz_new
    return x
