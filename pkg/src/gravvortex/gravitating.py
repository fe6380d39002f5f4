"""Gravitating vortices: the coupled metric and Higgs-field system.

The unknowns are conformal potentials ``(f, v)`` with ``h = h₀ e^{2f}`` and
``ω = (1 - Δ₀ v) ω₀ = ψ ω₀``.  Along the continuity path in ``t`` the reduced
system is

    F₁ = Δ₀ f + ½(e^{2f} H - τ) ψ + N = 0
    F₂ = Δ₀ v + ψ - 1 = 0,      ψ = exp(4tτ f - 2t e^{2f} H - 2c v),

with ``c = χ - 2tτN`` and ``H = |φ|²_{h₀}``.  At ``t = 0`` it decouples into
the vortex equation with ``v = 0``.

The curvature ``S`` entering the equations is the Gaussian curvature ``K``
of ``ω`` (so ``∫ S ω = 2πχ``); the Riemannian scalar curvature ``R = 2K`` is
reported for Gauss-Bonnet checks.

On the sphere with ``c = 0`` (Einstein-Bogomol'nyi) the system collapses to
a single nonlocal equation for ``f``, solved by :func:`solve_einstein_bogomolnyi_sphere`.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field, replace
from typing import TextIO

import numpy as np
from scipy.sparse.linalg import LinearOperator, gmres

from gravvortex.errors import (
    KahlerPositivityLost,
    NonConvergence,
    PreconditionError,
    StepUnderflow,
)
from gravvortex.futaki import futaki_closed_form, futaki_integral
from gravvortex.higgs import (
    Divisor,
    StabilityClass,
    bradlow_admissible,
    classify_divisor,
    higgs_norm,
    is_infinite,
)
from gravvortex.newton import damped_newton, sup
from gravvortex.surface import TOTAL_AREA, SurfaceGrid, gauss_curvature
from gravvortex.vortex import DIVERGENCE_FLOOR, residual_logger, solve_vortex

OSC_CEILING = 50.0
# relative spectral amplitude allowed in the top third of the resolved degrees
RESOLUTION_TOL = 1e-4
BLOWUP_RUN = 5
BLOWUP_FACTOR = 10.0
# first continuation step never exceeds this unless dt0 is given
DEFAULT_MAX_DT0 = 1.0 / 80.0


# ---------------------------------------------------------------------------
# parameters


@dataclass(frozen=True)
class ModelParams:
    """Coupling ``alpha`` (or continuity time), ``tau``, degree ``N`` and genus."""

    alpha: float
    tau: float
    N: int
    genus: int

    def __post_init__(self):
        if self.alpha < 0:
            raise PreconditionError(f"alpha must be nonnegative, got {self.alpha}")
        if not self.tau > 0:
            raise PreconditionError(f"tau must be positive, got {self.tau}")
        if self.N < 1:
            raise PreconditionError(f"degree must be positive, got {self.N}")
        if self.genus < 0:
            raise PreconditionError(f"genus must be nonnegative, got {self.genus}")

    @property
    def chi(self) -> int:
        return 2 - 2 * self.genus

    @property
    def c(self) -> float:
        return topological_c(self)

    @property
    def volume(self) -> float:
        return TOTAL_AREA

    def at(self, alpha: float) -> ModelParams:
        return replace(self, alpha=float(alpha))

    @classmethod
    def einstein_bogomolnyi(cls, tau: float, N: int) -> ModelParams:
        """Genus 0 with ``c = 0``, i.e. ``α = χ / (2τN)``."""
        return cls(alpha=1.0 / (tau * N), tau=tau, N=N, genus=0)


def topological_c(params: ModelParams) -> float:
    return params.chi - 2.0 * params.alpha * params.tau * params.N


def alpha_star(genus: int, tau: float, N: int) -> float:
    """Coupling threshold ``(2g-2) / (2τ(τ/2 - N))`` of the higher-genus existence range."""
    if genus < 2:
        raise PreconditionError(f"alpha_star needs genus >= 2, got {genus}")
    if not (0 < N and 2 * N < tau):
        raise PreconditionError(f"alpha_star needs 0 < N < tau/2, got N={N}, tau={tau}")
    return (2 * genus - 2) / (2.0 * tau * (tau / 2.0 - N))


# ---------------------------------------------------------------------------
# states and monitors


@dataclass(frozen=True)
class EstimateTrace:
    """Per-state values of the a priori estimate quantities along a path.

    ``identity_*`` are the two integral identities of the reduced system
    (targets ``-4πN`` and ``2π``); ``jensen_*`` are ``∫((2+4tτ)f - 2cv)ω₀``
    and ``∫(4tτf - 2cv)ω₀``.
    """

    t: tuple[float, ...] = ()
    y_min: tuple[float, ...] = ()
    y_max: tuple[float, ...] = ()
    osc_f: tuple[float, ...] = ()
    osc_v: tuple[float, ...] = ()
    identity_1: tuple[float, ...] = ()
    identity_2: tuple[float, ...] = ()
    jensen_1: tuple[float, ...] = ()
    jensen_2: tuple[float, ...] = ()

    COLUMNS = ("t", "y_min", "y_max", "osc_f", "osc_v", "identity_1", "identity_2", "jensen_1", "jensen_2")

    def __len__(self) -> int:
        return len(self.t)

    def append(self, **sample: float) -> EstimateTrace:
        return EstimateTrace(**{k: getattr(self, k) + (float(sample[k]),) for k in self.COLUMNS})

    def rows(self):
        return list(zip(*(getattr(self, k) for k in self.COLUMNS)))

    def blowup_flags(self) -> list[str]:
        """Quantities that grew monotonically for several states to ten times their start."""
        flags = []
        for name in ("osc_f", "osc_v", "y_max"):
            flags += _monotone_blowup(name, getattr(self, name))
        inv = tuple(1.0 / y for y in self.y_min)
        flags += _monotone_blowup("1/y_min", inv)
        return flags


def _monotone_blowup(name: str, values) -> list[str]:
    vals = np.abs(np.asarray(values, dtype=float))
    run = 0
    for k in range(1, len(vals)):
        run = run + 1 if vals[k] > vals[k - 1] else 0
        start = vals[k - run]
        if run + 1 >= BLOWUP_RUN and start > 0 and vals[k] > BLOWUP_FACTOR * start:
            return [name]
    return []


@dataclass(frozen=True)
class GravSolveState:
    f: np.ndarray
    v: np.ndarray
    t: float
    residuals: tuple[float, float]
    monitors: EstimateTrace = field(default_factory=EstimateTrace)
    psi: np.ndarray | None = None

    def conformal_factor(self, grid: SurfaceGrid) -> np.ndarray:
        return 1.0 - grid.laplacian(self.v)


def exponent(f, v, H, t: float, tau: float, c: float) -> np.ndarray:
    """``log ψ`` along the continuity path."""
    return 4.0 * t * tau * f - 2.0 * t * np.exp(2.0 * f) * H - 2.0 * c * v


def monitor_estimates(state: GravSolveState, params: ModelParams, grid: SurfaceGrid, higgs,
                      previous: EstimateTrace | None = None) -> EstimateTrace:
    t, tau, c = params.alpha, params.tau, params.c
    f, v = state.f, state.v
    H = grid.check(higgs, "higgs")
    psi = state.psi if state.psi is not None else np.exp(exponent(f, v, H, t, tau, c))
    y = np.exp(4.0 * t * tau * f - 2.0 * c * v)
    trace = previous if previous is not None else EstimateTrace()
    return trace.append(
        t=t,
        y_min=float(np.min(y)),
        y_max=float(np.max(y)),
        osc_f=float(np.ptp(f)),
        osc_v=float(np.ptp(v)),
        identity_1=grid.integrate((np.exp(2.0 * f) * H - tau) * psi),
        identity_2=grid.integrate(psi),
        jensen_1=grid.integrate((2.0 + 4.0 * t * tau) * f - 2.0 * c * v),
        jensen_2=grid.integrate(4.0 * t * tau * f - 2.0 * c * v),
    )


def write_path_log(path_or_stream, states: list[GravSolveState]) -> None:
    """One row per accepted state: residuals followed by the estimate monitors."""
    header = "# t r1_sup r2_sup y_min y_max osc_f osc_v identity_1 identity_2 jensen_1 jensen_2\n"
    lines = [header]
    for s in states:
        row = s.monitors.rows()[-1] if len(s.monitors) else (s.t,) + (np.nan,) * 8
        vals = (s.t, *s.residuals, *row[1:])
        lines.append(" ".join(f"{x:.12e}" for x in vals) + "\n")
    if hasattr(path_or_stream, "write"):
        path_or_stream.writelines(lines)
    else:
        with open(path_or_stream, "w") as fh:
            fh.writelines(lines)


# ---------------------------------------------------------------------------
# residuals of the geometric equations


@dataclass(frozen=True)
class GeometricFields:
    """Curvatures of ``(ω, h)`` evaluated in the moving metric."""

    psi: np.ndarray
    higgs_h: np.ndarray
    curvature_form: np.ndarray  # iΛ_ω F_h
    gauss: np.ndarray  # K_ω
    laplacian_higgs: np.ndarray  # Δ_ω |φ|²_h

    @property
    def scalar(self) -> np.ndarray:
        """Riemannian scalar curvature ``R = 2K``."""
        return 2.0 * self.gauss


def geometric_fields(grid: SurfaceGrid, f, v, higgs, degree: int) -> GeometricFields:
    f = grid.check(f, "f")
    v = grid.check(v, "v")
    psi = 1.0 - grid.laplacian(v)
    if np.any(psi <= 0):
        raise KahlerPositivityLost(f"1 - Δ₀v has minimum {float(np.min(psi)):.3e}")
    P = np.exp(2.0 * f) * grid.check(higgs, "higgs")
    return GeometricFields(
        psi=psi,
        higgs_h=P,
        curvature_form=(degree + grid.laplacian(f)) / psi,
        gauss=gauss_curvature(grid, psi),
        laplacian_higgs=grid.laplacian(P) / psi,
    )


def equation_residuals(grid: SurfaceGrid, f, v, higgs, params: ModelParams):
    """Pointwise residuals ``(r1, r2, r_KE)`` of the gravitating vortex equations.

    ``r1 = iΛF + ½(|φ|² - τ)``, ``r2 = S + α(Δ_ω + τ)(|φ|² - τ) - c`` and
    ``r_KE = S + αΔ_ω|φ|² - 2ατ iΛF - c``, the trace of the Kähler-Einstein
    type form of the second equation.
    """
    g = geometric_fields(grid, f, v, higgs, params.N)
    a, tau, c = params.alpha, params.tau, params.c
    r1 = g.curvature_form + 0.5 * (g.higgs_h - tau)
    r2 = g.gauss + a * g.laplacian_higgs + a * tau * (g.higgs_h - tau) - c
    rke = g.gauss + a * g.laplacian_higgs - 2.0 * a * tau * g.curvature_form - c
    return r1, r2, rke


def residuals_gravitating(state: GravSolveState, params: ModelParams, grid: SurfaceGrid, higgs) -> tuple[float, float]:
    r1, r2, _ = equation_residuals(grid, state.f, state.v, higgs, params)
    return sup(r1), sup(r2)


def measured_c(grid: SurfaceGrid, f, v, higgs, params: ModelParams) -> float:
    """``c`` recovered from integrals, ``(∫S ω + ατ∫(|φ|² - τ) ω) / Vol``."""
    g = geometric_fields(grid, f, v, higgs, params.N)
    w = g.psi
    return (grid.integrate(g.gauss * w) + params.alpha * params.tau * grid.integrate((g.higgs_h - params.tau) * w)) / TOTAL_AREA


# ---------------------------------------------------------------------------
# continuity path


def continuity_residual(grid: SurfaceGrid, f, v, H, t: float, tau: float, N: int, chi: int) -> np.ndarray:
    c = chi - 2.0 * t * tau * N
    psi = np.exp(exponent(f, v, H, t, tau, c))
    P = np.exp(2.0 * f) * H
    F1 = grid.laplacian(f) + 0.5 * (P - tau) * psi + N
    F2 = grid.laplacian(v) + (psi - 1.0)
    return np.stack([F1, F2])


def _jacobian_coefficients(f, v, H, t, tau, N, chi):
    c = chi - 2.0 * t * tau * N
    P = np.exp(2.0 * f) * H
    psi = np.exp(exponent(f, v, H, t, tau, c))
    dpsi_f = psi * (4.0 * t * tau - 4.0 * t * P)
    dpsi_v = -2.0 * c * psi
    g = 0.5 * (P - tau)
    return P * psi + g * dpsi_f, g * dpsi_v, dpsi_f, dpsi_v


def jacobian_apply(grid: SurfaceGrid, f, v, H, t: float, tau: float, N: int, chi: int, df, dv) -> np.ndarray:
    """Analytic linearisation of :func:`continuity_residual` applied to ``(df, dv)``."""
    a11, a12, a21, a22 = _jacobian_coefficients(f, v, H, t, tau, N, chi)
    return np.stack([
        grid.laplacian(df) + a11 * df + a12 * dv,
        grid.laplacian(dv) + a21 * df + a22 * dv,
    ])


def jacobian_fd_error(grid: SurfaceGrid, f, v, H, t: float, tau: float, N: int, chi: int,
                      df, dv, h: float = 1e-5) -> float:
    """Relative sup-norm gap between :func:`jacobian_apply` and a central difference."""
    exact = jacobian_apply(grid, f, v, H, t, tau, N, chi, df, dv)
    plus = continuity_residual(grid, f + h * df, v + h * dv, H, t, tau, N, chi)
    minus = continuity_residual(grid, f - h * df, v - h * dv, H, t, tau, N, chi)
    fd = (plus - minus) / (2.0 * h)
    return sup(exact - fd) / max(sup(exact), 1e-300)


def _block_preconditioner(grid: SurfaceGrid, coeffs):
    """Exact inverse of the constant-coefficient 2x2 operator built from mean coefficients."""
    a11, a12, a21, a22 = (grid.mean(a) for a in coeffs)

    def det(lam):
        d = (lam + a11) * (lam + a22) - a12 * a21
        tiny = 1e-12 * (1.0 + np.abs(lam)) ** 2
        return np.where(np.abs(d) < tiny, np.where(d < 0, -tiny, tiny), d)

    def apply(r1, r2):
        z1 = grid.apply_spectral(r1, lambda l: (l + a22) / det(l)) - grid.apply_spectral(r2, lambda l: a12 / det(l))
        z2 = grid.apply_spectral(r2, lambda l: (l + a11) / det(l)) - grid.apply_spectral(r1, lambda l: a21 / det(l))
        return z1, z2

    return apply


def _gmres(matvec, precond, rhs, shape, rtol=1e-11, maxiter=20):
    n = rhs.size
    A = LinearOperator((n, n), matvec=lambda x: matvec(x.reshape(shape)).ravel())
    M = LinearOperator((n, n), matvec=lambda x: precond(x.reshape(shape)).ravel())
    x, _ = gmres(A, rhs.ravel(), M=M, rtol=rtol, atol=0.0, restart=80, maxiter=maxiter)
    return x.reshape(shape)


def newton_continuity(grid: SurfaceGrid, H, t: float, tau: float, N: int, chi: int, x0,
                      tol: float, max_iter: int = 15, log=None):
    """Damped Newton-Krylov solve of the reduced system at a fixed ``t``.

    The budget is small on purpose: from a good predictor Newton converges
    in a handful of steps, and a failed solve only costs a halved step.
    """
    shape = (2,) + grid.shape

    def residual(x):
        # overflow becomes inf, which the line search rejects
        with np.errstate(over="ignore", invalid="ignore"):
            return continuity_residual(grid, x[0], x[1], H, t, tau, N, chi)

    def solve(x, r):
        coeffs = _jacobian_coefficients(x[0], x[1], H, t, tau, N, chi)
        pre = _block_preconditioner(grid, coeffs)
        a11, a12, a21, a22 = coeffs

        def matvec(d):
            return np.stack([
                grid.laplacian(d[0]) + a11 * d[0] + a12 * d[1],
                grid.laplacian(d[1]) + a21 * d[0] + a22 * d[1],
            ])

        with np.errstate(over="ignore", invalid="ignore"):
            return _gmres(matvec, lambda q: np.stack(pre(q[0], q[1])), -r, shape, maxiter=4)

    def diverged(x):
        return float(np.min(x[0])) < DIVERGENCE_FLOOR or float(np.max(np.abs(x))) > 1e3

    return damped_newton(residual, solve, x0, tol=tol, max_iter=max_iter, diverged=diverged, log=log)


def _make_state(grid, f, v, H, params: ModelParams, previous: EstimateTrace | None) -> GravSolveState:
    psi = np.exp(exponent(f, v, H, params.alpha, params.tau, params.c))
    state = GravSolveState(f=f, v=v, t=params.alpha, residuals=(np.nan, np.nan), psi=psi)
    res = residuals_gravitating(state, params, grid, H)
    mon = monitor_estimates(state, params, grid, H, previous)
    return replace(state, residuals=res, monitors=mon)


def solve_continuity(
    grid: SurfaceGrid,
    higgs,
    tau: float,
    alpha_target: float,
    tol: float = 1e-8,
    *,
    degree: int,
    dt0: float | None = None,
    min_step: float = 1e-6,
    max_steps: int = 400,
    newton_tol: float | None = None,
    verbose: bool | TextIO = False,
) -> list[GravSolveState]:
    """March the continuity path from ``t = 0`` to ``alpha_target``.

    Steps are halved on a failed solve and doubled after three successes.
    A state is accepted only if both geometric residuals are below ``tol``
    and ``1 - Δ₀v > 0`` everywhere.  Raises :class:`StepUnderflow` when the
    step drops below ``min_step`` or ``max_steps`` solves are spent, and
    :class:`KahlerPositivityLost` when the step underflows because every
    candidate lost positivity.
    """
    H = grid.check(higgs, "higgs")
    if alpha_target < 0:
        raise PreconditionError("alpha_target must be nonnegative")
    if not bradlow_admissible(degree, tau):
        raise PreconditionError(f"N={degree} and tau={tau} violate N < tau/2")
    genus = 1 if grid.kind == "torus" else 0
    base = ModelParams(0.0, tau, degree, genus)
    chi = base.chi
    inner_tol = newton_tol if newton_tol is not None else min(1e-3 * tol, 1e-11)
    log = None
    if verbose:
        log = residual_logger(sys.stderr if verbose is True else verbose)

    vs = solve_vortex(grid, H, tau, min(inner_tol, 1e-10), degree=degree, verbose=verbose)
    f0 = vs.f
    v0 = grid.constant(0.0)
    states = [_make_state(grid, f0, v0, H, base, None)]
    if alpha_target == 0:
        return states

    dt = dt0 if dt0 is not None else min(alpha_target / 8.0, DEFAULT_MAX_DT0)
    t = 0.0
    successes = 0
    lost_positivity = False
    prev_x = None
    x = np.stack([f0, v0])
    for _ in range(max_steps):
        if t >= alpha_target:
            return states
        t_new = min(alpha_target, t + dt)
        guess = x if prev_x is None else x + (t_new - t) / max(states[-1].t - states[-2].t, 1e-300) * (x - prev_x)
        params = base.at(t_new)
        try:
            out = newton_continuity(grid, H, t_new, tau, degree, chi, guess, inner_tol, log=log)
            state = _make_state(grid, out.x[0], out.x[1], H, params, states[-1].monitors)
            ok = max(state.residuals) < tol
        except KahlerPositivityLost:
            lost_positivity = True
            ok = False
        except NonConvergence:
            ok = False
        if ok:
            prev_x, x = x, out.x
            t = t_new
            states.append(state)
            successes += 1
            if successes >= 3:
                dt *= 2.0
                successes = 0
        else:
            dt *= 0.5
            successes = 0
            if dt < min_step:
                if lost_positivity:
                    raise KahlerPositivityLost(f"positivity lost beyond t={t:.6g}")
                raise StepUnderflow(f"continuation stalled at t={t:.6g}", last_t=t, states=states)
    if t >= alpha_target:
        return states
    raise StepUnderflow(f"step budget exhausted at t={t:.6g}", last_t=t, states=states)


# ---------------------------------------------------------------------------
# Einstein-Bogomol'nyi equations on the sphere


def spectral_tail(grid: SurfaceGrid, values) -> float:
    """Largest degree amplitude in the top third of resolved degrees, relative to the largest nonconstant one."""
    grid.require("sphere")
    c = grid.sht.analysis(grid.check(values))
    amp = np.sqrt(np.sum(np.abs(c) ** 2, axis=0))[1:]
    top = amp.max()
    if top == 0:
        return 0.0
    cut = (2 * len(amp)) // 3
    return float(amp[cut:].max() / top)


def _safe_shift(grid: SurfaceGrid, a: float) -> float:
    """Move ``a`` at least ½ away from every ``-λ_k`` so ``Δ + a`` stays invertible."""
    lam = np.unique(np.round(np.asarray(grid._lam).ravel(), 9))
    k = int(np.argmin(np.abs(lam + a)))
    gap = lam[k] + a
    if abs(gap) < 0.5:
        a = -lam[k] + (0.5 if gap >= 0 else -0.5)
    return a


def _eb_conformal(grid, f, H, alpha, tau, s):
    P = np.exp(2.0 * f) * H
    w = s * (2.0 * alpha * tau * f - alpha * P)
    e = np.exp(2.0 * (w - w.max()))
    return P, TOTAL_AREA * e / grid.integrate(e)


def eb_residual(grid: SurfaceGrid, f, H, alpha: float, tau: float, N: int, s: float = 1.0) -> np.ndarray:
    """``Δ₀f + ½ψ(e^{2f}H - τ) + N`` with ``ψ ∝ e^{2s(2ατf - αe^{2f}H)}`` of mass 2π."""
    P, psi = _eb_conformal(grid, f, H, alpha, tau, s)
    return grid.laplacian(f) + 0.5 * psi * P + (N - 0.5 * tau * psi)


def _eb_newton(grid, H, alpha, tau, N, s, f0, tol, max_iter, observe):
    def residual(f):
        return eb_residual(grid, f, H, alpha, tau, N, s)

    def solve(f, r):
        P, psi = _eb_conformal(grid, f, H, alpha, tau, s)
        dw = s * (2.0 * alpha * tau - 2.0 * alpha * P)
        diag = P * psi + (P - tau) * psi * dw
        g = 0.5 * (P - tau) * psi

        def matvec(x):
            # the normalisation of ψ contributes a rank-one term
            m = grid.integrate(psi * 2.0 * dw * x) / TOTAL_AREA
            return grid.laplacian(x) + diag * x - g * m

        shift = _safe_shift(grid, grid.mean(diag))
        return _gmres(matvec, lambda q: grid.solve_shifted(q, shift), -r, grid.shape, rtol=1e-12)

    def diverged(f):
        return float(np.min(f)) < DIVERGENCE_FLOOR or float(np.ptp(f)) > OSC_CEILING

    return damped_newton(residual, solve, f0, tol=tol, max_iter=max_iter, diverged=diverged, observe=observe)


@dataclass(frozen=True)
class EBCertificate:
    """Evidence attached to an Einstein-Bogomol'nyi solve."""

    stability: StabilityClass
    futaki: complex | None
    spectral_tail: float | None = None
    futaki_at_state: complex | None = None
    osc_trace: tuple[float, ...] = ()

    def describe(self) -> str:
        parts = [f"stability {self.stability}"]
        if self.futaki is not None:
            parts.append(f"futaki {self.futaki.real:.6e}{self.futaki.imag:+.6e}i")
        if self.spectral_tail is not None:
            parts.append(f"spectral_tail {self.spectral_tail:.3e}")
        if self.futaki_at_state is not None:
            z = self.futaki_at_state
            parts.append(f"futaki_at_state {z.real:.6e}{z.imag:+.6e}i")
        return ", ".join(parts)


def futaki_certificate(divisor: Divisor, tau: float) -> complex | None:
    """Futaki value of the limiting two-point configuration, heaviest point sent to ``∞``.

    Nonzero exactly for unstable divisors when ``τ ≠ 2N``; ``None`` for stable ones.
    """
    cls = classify_divisor(divisor)
    if cls is StabilityClass.STABLE:
        return None
    N = divisor.degree
    alpha = 1.0 / (tau * N)
    return futaki_closed_form(N, N - divisor.max_multiplicity, alpha, tau)


def _monomial_exponent(divisor: Divisor) -> int | None:
    """Order of vanishing at ``z = 0`` when the support lies in ``{0, ∞}``."""
    if all(p == 0 or is_infinite(p) for p in divisor.points):
        return divisor.multiplicity_at(0)
    return None


def solve_einstein_bogomolnyi_sphere(
    divisor: Divisor,
    tau: float,
    tol: float,
    grid: SurfaceGrid,
    *,
    max_iter: int = 400,
    min_homotopy_step: float = 1.0 / 1024,
) -> GravSolveState:
    """Solve the ``c = 0`` system on the sphere with ``α = 1/(τN)``.

    The exponent of ``ψ`` is switched on through a homotopy ``s ∈ [0, 1]``
    starting from the vortex solution.  ``max_iter`` bounds the Newton
    iterations summed over the homotopy.

    A converged discrete state is accepted only if it is resolved (relative
    spectral amplitude below ``RESOLUTION_TOL`` in the top third of degrees)
    and, for divisors supported on ``{0, ∞}``, if the Futaki integral
    evaluated at the state agrees with its closed form, as it must since the
    invariant does not depend on the pair.  Otherwise :class:`NonConvergence`
    is raised with an :class:`EBCertificate` as ``certificate``.
    """
    grid.require("sphere")
    N = divisor.degree
    if tol <= 0:
        raise PreconditionError("tol must be positive")
    if not bradlow_admissible(N, tau):
        raise PreconditionError(f"N={N} and tau={tau} violate N < tau/2")
    params = ModelParams.einstein_bogomolnyi(tau, N)
    alpha = params.alpha
    stability = classify_divisor(divisor)
    cert_value = futaki_certificate(divisor, tau)
    H = higgs_norm(divisor, grid)
    oscs: list[float] = []
    history: list[float] = []

    def fail(msg, diverged=False, **extra):
        cert = EBCertificate(stability, cert_value if stability is StabilityClass.UNSTABLE else None,
                             osc_trace=tuple(oscs), **extra)
        raise NonConvergence(f"{msg}; {cert.describe()}", history=history, diverged=diverged,
                             certificate=cert, trace=tuple(oscs))

    f = solve_vortex(grid, H, tau, min(tol, 1e-10), degree=N).f
    s, ds, used = 0.0, 0.125, 0
    out = None
    while s < 1.0:
        if used >= max_iter:
            fail(f"iteration budget of {max_iter} exhausted at s={s:.4g}")
        s_try = min(1.0, s + ds)
        try:
            out = _eb_newton(grid, H, alpha, tau, N, s_try, f, tol, min(40, max_iter - used),
                             lambda x: oscs.append(float(np.ptp(x))))
        except NonConvergence as exc:
            used += len(exc.history)
            history.extend(exc.history)
            if exc.diverged:
                fail(f"iterate diverged at s={s_try:.4g}", diverged=True)
            ds *= 0.5
            if ds < min_homotopy_step:
                fail(f"homotopy stalled at s={s:.4g}")
            continue
        used += out.iterations
        history.extend(out.history)
        f, s = out.x, s_try
        ds = min(2.0 * ds, 0.25)

    tail = spectral_tail(grid, f)
    P, psi = _eb_conformal(grid, f, H, alpha, tau, 1.0)
    l0 = _monomial_exponent(divisor)
    at_state = None
    if l0 is not None:
        at_state = futaki_integral(grid, N, l0, alpha, tau, f=f, psi=psi)
        expected = 2j * np.pi * alpha * (2 * N - tau) * (2 * l0 - N)
        if abs(at_state - expected) > 1e-6 * (1.0 + abs(expected)):
            fail("discrete state contradicts the Futaki invariant", spectral_tail=tail, futaki_at_state=at_state)
    if tail > RESOLUTION_TOL:
        fail("discrete state is not resolved by the grid", spectral_tail=tail, futaki_at_state=at_state)

    v = grid.solve_shifted(1.0 - psi, 0.0)
    v = v - grid.mean(v)
    v_res = sup(grid.laplacian(v) + (psi - 1.0))
    if v_res > 10.0 * tol:
        fail(f"metric potential reconstruction left residual {v_res:.3e}", spectral_tail=tail, futaki_at_state=at_state)
    state = GravSolveState(f=f, v=v, t=alpha, residuals=(np.nan, np.nan), psi=psi)
    res = residuals_gravitating(state, params, grid, H)
    return replace(state, residuals=res, monitors=monitor_estimates(state, params, grid, H))


def eb_reduced_residual(grid: SurfaceGrid, state: GravSolveState, divisor: Divisor, tau: float) -> float:
    N = divisor.degree
    H = higgs_norm(divisor, grid)
    return sup(eb_residual(grid, state.f, H, 1.0 / (tau * N), tau, N))
