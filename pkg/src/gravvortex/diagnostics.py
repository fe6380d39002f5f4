"""Cross-checks shared by the solvers: the σ one-form, flow weights and state audits."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from gravvortex.errors import GravVortexError, PreconditionError
from gravvortex.gravitating import (
    GravSolveState,
    ModelParams,
    equation_residuals,
    geometric_fields,
    measured_c,
)
from gravvortex.higgs import Divisor, is_infinite
from gravvortex.surface import TOTAL_AREA, SurfaceGrid

AUDIT_DIRECTIONS = 32
SIGMA_TOL = 1e-6


# ---------------------------------------------------------------------------
# σ one-form


def sigma_one_form(state: GravSolveState, params: ModelParams, grid: SurfaceGrid, higgs,
                   direction: tuple[np.ndarray, np.ndarray], *, rtol: float = 1e-10) -> float:
    """σ at ``(ω, h)`` along ``(φ̇, ḟ)`` with ``ω̇ = dd^c φ̇`` and ``ḣ = 2ḟ h``.

    ``σ = -8α ∫ ḟ R₁ ω - ∫ φ̇ R₂' ω`` where ``R₁ = iΛF + ½(|φ|² - τ)`` and
    ``R₂' = S + αΔ_ω|φ|² - 2ατ iΛF``.  ``φ̇`` must have zero ``ω``-mean.
    """
    phidot = grid.check(direction[0], "potential direction")
    fdot = grid.check(direction[1], "metric direction")
    g = geometric_fields(grid, state.f, state.v, higgs, params.N)
    w = g.psi
    scale = max(float(np.max(np.abs(phidot))), 1.0)
    if abs(grid.integrate(phidot * w)) > rtol * scale * TOTAL_AREA:
        raise PreconditionError("potential direction must integrate to zero in the moving metric")
    a, tau = params.alpha, params.tau
    r1 = g.curvature_form + 0.5 * (g.higgs_h - tau)
    r2 = g.gauss + a * g.laplacian_higgs - 2.0 * a * tau * g.curvature_form
    return -8.0 * a * grid.integrate(fdot * r1 * w) - grid.integrate(phidot * r2 * w)


def normalise_potential(grid: SurfaceGrid, state: GravSolveState, phidot) -> np.ndarray:
    w = 1.0 - grid.laplacian(state.v)
    return phidot - grid.integrate(phidot * w) / grid.integrate(w)


def residual_direction(state: GravSolveState, params: ModelParams, grid: SurfaceGrid, higgs):
    """The direction along which σ detects a non-solution: ``(R₂' - mean, R₁)``."""
    g = geometric_fields(grid, state.f, state.v, higgs, params.N)
    a, tau = params.alpha, params.tau
    r1 = g.curvature_form + 0.5 * (g.higgs_h - tau)
    r2 = g.gauss + a * g.laplacian_higgs - 2.0 * a * tau * g.curvature_form
    return normalise_potential(grid, state, r2), r1


def random_smooth_field(grid: SurfaceGrid, rng: np.random.Generator, scale: float = 4.0) -> np.ndarray:
    """Band-limited random field: white noise filtered by ``exp(-Δ/scale)``."""
    noise = rng.standard_normal(grid.shape)
    smooth = grid.apply_spectral(noise, lambda lam: np.exp(-lam / scale))
    return smooth / max(float(np.max(np.abs(smooth))), 1e-300)


def direction_norm(direction) -> float:
    return float(sum(np.max(np.abs(d)) for d in direction))


# ---------------------------------------------------------------------------
# weight along the diagonal flow


def _flowed_norm(divisor: Divisor, grid: SurfaceGrid, t: float) -> np.ndarray:
    """``|φ_t|²_{h_FS}`` for ``φ_t(z) = z^ℓ Π (e^{-2t} z - r_j)^{n_j}``, the finite nonzero roots pushed out."""
    x0, x1 = grid.homogeneous
    out = np.ones(grid.shape)
    finite = 0
    for p, n in divisor.pairs():
        if is_infinite(p):
            continue
        finite += n
        if p == 0:
            out = out * np.abs(x1) ** (2 * n)
        else:
            out = out * np.abs(np.exp(-2.0 * t) * x1 - p * x0) ** (2 * n)
    return out * np.abs(x0) ** (2 * (divisor.degree - finite))


def flow_weight(divisor: Divisor, alpha: float, tau: float, t: float, grid: SurfaceGrid) -> float:
    """``σ(ḃ_t)`` at time ``t`` of the diagonal flow, evaluated at the Fubini-Study pair.

    The generator is ``ζ = diag(N - 2ℓ - 1, N - 2ℓ + 1)``, acting on P¹ like
    ``2z∂_z`` and fixing the limit ``x0^{N-ℓ} x1^ℓ``, where ``ℓ`` is the
    multiplicity of ``D`` at ``0``.  Its vertical part is ``2(ℓ - N u)`` and its
    Hamiltonian ``i(2u - 1)``, with ``u = |z|²/(1+|z|²)``.
    """
    grid.require("sphere")
    N = divisor.degree
    l = divisor.multiplicity_at(0)
    H = _flowed_norm(divisor, grid, t)
    u = np.sin(grid.theta / 2.0) ** 2
    A = 2.0 * (l - N * u)
    pot = 2.0 * u - 1.0
    r1 = N + 0.5 * H - 0.5 * tau
    r2 = 2.0 + alpha * grid.laplacian(H) - 2.0 * alpha * tau * N
    # Im[4iα∫A r1 ω - ∫ i·pot r2 ω]
    return 4.0 * alpha * grid.integrate(A * r1) - grid.integrate(pot * r2)


def weight_along_flow(divisor: Divisor, alpha: float, tau: float, flow_times, grid: SurfaceGrid) -> list[float]:
    return [flow_weight(divisor, alpha, tau, float(t), grid) for t in flow_times]


# ---------------------------------------------------------------------------
# audit


@dataclass(frozen=True)
class AuditCheck:
    name: str
    value: float
    target: float
    tol: float
    relation: str = "eq"  # eq: |value - target| <= tol, le: value <= target + tol, gt: value > target

    @property
    def passed(self) -> bool:
        if not np.isfinite(self.value):
            return False
        if self.relation == "le":
            return self.value <= self.target + self.tol
        if self.relation == "gt":
            return self.value > self.target
        return abs(self.value - self.target) <= self.tol

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{self.name} {self.value:.12e} {self.target:.12e} {self.tol:.3e} {status}"


@dataclass(frozen=True)
class AuditReport:
    checks: tuple[AuditCheck, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list[str]:
        return [c.name for c in self.checks if not c.passed]

    def __getitem__(self, name: str) -> AuditCheck:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_text(self) -> str:
        return "# name value target tol status\n" + "".join(c.line() + "\n" for c in self.checks)


def audit_state(state: GravSolveState, params: ModelParams, grid: SurfaceGrid, higgs, *,
                tol: float = 1e-8, seed: int = 0, directions: int = AUDIT_DIRECTIONS) -> AuditReport:
    """Pass/fail table of the identities every accepted state must satisfy."""
    H = grid.check(higgs, "higgs")
    N, tau = params.N, params.tau
    psi0 = 1.0 - grid.laplacian(state.v)
    checks = [AuditCheck("kahler_min", float(np.min(psi0)), 0.0, 0.0, "gt")]
    try:
        g = geometric_fields(grid, state.f, state.v, H, N)
    except GravVortexError:
        return AuditReport(tuple(checks))
    r1, r2, rke = equation_residuals(grid, state.f, state.v, H, params)
    w = g.psi
    checks += [
        AuditCheck("residual_vortex", float(np.max(np.abs(r1))), 0.0, tol),
        AuditCheck("residual_metric", float(np.max(np.abs(r2))), 0.0, tol),
        AuditCheck("residual_kahler_einstein", float(np.max(np.abs(rke))), 0.0, 10.0 * tol),
        AuditCheck("gauss_bonnet", grid.integrate(g.scalar * w), 4.0 * np.pi * params.chi, 1e-4),
        AuditCheck("degree", grid.integrate(g.curvature_form * w), 2.0 * np.pi * N, 1e-6),
        AuditCheck("identity_higgs", grid.integrate((g.higgs_h - tau) * w), -4.0 * np.pi * N, 1e-8 * 4.0 * np.pi * N),
        AuditCheck("identity_volume", grid.integrate(w), TOTAL_AREA, 1e-8 * TOTAL_AREA),
        AuditCheck("topological_c", measured_c(grid, state.f, state.v, H, params), params.c, 1e-4),
        AuditCheck("higgs_bound", float(np.max(g.higgs_h)), tau, 1e-8 * tau, "le"),
    ]
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(directions):
        d = (normalise_potential(grid, state, random_smooth_field(grid, rng)), random_smooth_field(grid, rng))
        worst = max(worst, abs(sigma_one_form(state, params, grid, H, d)) / direction_norm(d))
    checks.append(AuditCheck("sigma_max", worst, 0.0, max(SIGMA_TOL, 10.0 * tol)))
    return AuditReport(tuple(checks))
