"""Futaki invariant of (P¹, O(N), φ) for the diagonal C* action.

With ``φ = z^ℓ`` in the chart ``z = x1/x0`` and ``y = z ∂_z`` the invariant is

    ⟨F, y⟩ = 4iα ∫ A_h y (iΛF_h + ½|φ|²_h - τ/2) ω
             - ∫ φ_y (S_ω + α Δ_ω |φ|²_h - 2ατ iΛF_h) ω,

where ``A_h y`` is the vertical part of the lifted action and ``φ_y = i φ₂``
its normalised Hamiltonian potential.  Any pair ``(ω, h)`` gives the same
value; on the Fubini-Study pair it equals ``2πiα(2N - τ)(2ℓ - N)``.

All quadratures here are done on the Gauss-Legendre grid, whose nodes avoid
both poles, so the point at infinity needs no separate chart.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import legendre as npleg

from gravvortex.errors import PreconditionError
from gravvortex.surface import SphereGrid, SurfaceGrid, gauss_curvature


class FutakiMethod(enum.Enum):
    CLOSED_FORM = "ClosedForm"
    QUADRATURE = "Quadrature"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class FutakiResult:
    value: complex
    method: FutakiMethod
    N: int
    l: int
    alpha: float
    tau: float
    sub_integrals: tuple[complex, ...] = field(default=())

    @property
    def config(self) -> tuple[int, int, float, float]:
        return (self.N, self.l, self.alpha, self.tau)

    def report(self) -> str:
        lines = [
            f"method {self.method}",
            f"config N={self.N} l={self.l} alpha={self.alpha!r} tau={self.tau!r}",
            f"value {self.value.real:.16e} {self.value.imag:+.16e}i",
        ]
        for k, s in enumerate(self.sub_integrals, start=1):
            s = complex(s)
            lines.append(f"sub_integral_{k} {s.real:.16e} {s.imag:+.16e}i")
        return "\n".join(lines) + "\n"


def _check_config(N: int, l: int, alpha: float) -> None:
    if N < 1:
        raise PreconditionError(f"degree must be positive, got {N}")
    if not 0 <= l < N:
        raise PreconditionError(f"need 0 <= l < N, got l={l}, N={N}")
    if not alpha > 0:
        raise PreconditionError(f"alpha must be positive, got {alpha}")


def futaki_closed_form(N: int, l: int, alpha: float, tau: float) -> complex:
    _check_config(N, l, alpha)
    return 2j * np.pi * alpha * (2 * N - tau) * (2 * l - N)


def limit_futaki(N: int, l: int, alpha: float, tau: float) -> complex:
    """``2πiα(2N - τ)(2ℓ - N)`` for the monomial ``x0^{N-ℓ} x1^ℓ``, any ``0 ≤ ℓ ≤ N``.

    The quadrature confirms the formula at ``ℓ = N`` as well, where the
    generator ``z∂_z`` still preserves the monomial.
    """
    if not 0 <= l <= N:
        raise PreconditionError(f"need 0 <= l <= N, got l={l}, N={N}")
    return 2j * np.pi * alpha * (2 * N - tau) * (2 * l - N)


def maximal_weight(N: int, l: int, alpha: float, tau: float) -> float:
    """Weight of the limit configuration ``x0^{N-ℓ} x1^ℓ``; negative iff ``ℓ > N/2`` when ``τ > 2N``."""
    if not 0 <= l <= N:
        raise PreconditionError(f"need 0 <= l <= N, got l={l}, N={N}")
    return 4.0 * np.pi * alpha * (tau - 2 * N) * (N - 2 * l)


def monomial_norm(grid: SphereGrid, N: int, l: int) -> np.ndarray:
    """``|z|^{2ℓ} / (1+|z|²)^N`` written without the chart singularity at ∞."""
    s2 = np.sin(grid.theta / 2.0) ** 2
    return s2**l * (1.0 - s2) ** (N - l)


def axisymmetric_potential(grid: SphereGrid, psi: np.ndarray) -> np.ndarray:
    """Normalised Hamiltonian ``φ₂`` of the rotation generator for ``ω = ψ ω_FS``.

    ``φ₂(θ) = ½ ∫_x^1 ψ dx'`` with ``x = cos θ``, shifted to ``∫ φ₂ ω = 0``.
    ``ψ`` must be independent of the azimuth; its first column is used.
    """
    sht = grid.sht
    prof = np.asarray(psi, dtype=float)[:, 0]
    # Gauss quadrature gives the Legendre coefficients exactly for polynomial data
    V = npleg.legvander(sht.x, grid.n_theta - 1)
    coef = (V * sht.w[:, None]).T @ prof * (2 * np.arange(grid.n_theta) + 1) / 2.0
    anti = npleg.legint(coef, lbnd=1.0)
    col = -0.5 * npleg.legval(sht.x, anti)
    pot = np.repeat(col[:, None], grid.n_phi, axis=1)
    weight = psi * grid.weights
    return pot - float(np.sum(pot * weight) / np.sum(weight))


def _pair_data(grid: SphereGrid, N: int, l: int, f, psi):
    """Curvatures and lifted action at the pair ``(ψ ω_FS, e^{2f} h_FS^N)``."""
    H = monomial_norm(grid, N, l) * np.exp(2.0 * f)
    lap = grid.laplacian
    ilf = (N + lap(f)) / psi
    S = gauss_curvature(grid, psi)
    s2 = np.sin(grid.theta / 2.0) ** 2
    Ay = l - N * s2 + np.sin(grid.theta) * grid.dtheta(f)
    pot = 1j * axisymmetric_potential(grid, psi)
    return H, ilf, S, Ay, pot, lap(H) / psi


def futaki_integral(grid: SurfaceGrid, N: int, l: int, alpha: float, tau: float, f=None, psi=None) -> complex:
    """Evaluate the defining integral at an axisymmetric pair ``(ψ ω_FS, e^{2f} h_FS^N)``.

    ``ψ`` must have total mass 2π, e.g. ``ψ = 1 - Δ₀ v``.
    """
    grid.require("sphere")
    f = grid.constant(0.0) if f is None else grid.check(f, "f")
    psi = grid.constant(1.0) if psi is None else grid.check(psi, "psi")
    if np.any(psi <= 0):
        raise PreconditionError("perturbed metric is not positive")
    H, ilf, S, Ay, pot, lapH = _pair_data(grid, N, l, f, psi)
    w = psi * grid.weights
    term1 = 4j * alpha * np.sum(Ay * (ilf + 0.5 * H - 0.5 * tau) * w)
    term2 = -np.sum(pot * (S + alpha * lapH - 2.0 * alpha * tau * ilf) * w)
    return complex(term1 + term2)


def futaki_quadrature(l: int, N: int, alpha: float, tau: float, grid: SurfaceGrid) -> FutakiResult:
    """Quadrature at the Fubini-Study pair, with the two sub-integrals of the closed-form reduction.

    The sub-integrals are ``∫ A y ω_FS = π(2ℓ - N)`` and
    ``∫ (i A y - 2φ_y)|φ|² ω_FS = 0``.
    """
    _check_config(N, l, alpha)
    grid.require("sphere")
    H = monomial_norm(grid, N, l)
    s2 = np.sin(grid.theta / 2.0) ** 2
    Ay = l - N * s2
    pot = 0.5j * (2.0 * s2 - 1.0)
    w = grid.weights
    sub1 = complex(np.sum(Ay * w))
    sub2 = complex(np.sum((1j * Ay - 2.0 * pot) * H * w))
    value = futaki_integral(grid, N, l, alpha, tau)
    return FutakiResult(value, FutakiMethod.QUADRATURE, N, l, alpha, tau, (sub1, sub2))


def closed_form_result(N: int, l: int, alpha: float, tau: float) -> FutakiResult:
    sub = (np.pi * (2 * l - N) + 0j, 0j)
    return FutakiResult(futaki_closed_form(N, l, alpha, tau), FutakiMethod.CLOSED_FORM, N, l, alpha, tau, sub)


def off_diagonal_futaki(N: int, alpha: float, tau: float, grid: SurfaceGrid) -> complex:
    """Pairing with ``y' = ∂_z`` for ``φ = x0^N`` (the ``ℓ = 0`` configuration)."""
    grid.require("sphere")
    H = monomial_norm(grid, N, 0)
    s = np.sin(grid.theta)
    e = np.exp(-1j * grid.phi)
    Ay = -0.5 * N * s * e
    pot = 0.5j * s * e
    lapH = grid.laplacian(H)
    w = grid.weights
    term1 = 4j * alpha * np.sum(Ay * (N + 0.5 * H - 0.5 * tau) * w)
    term2 = -np.sum(pot * (2.0 + alpha * lapH - 2.0 * alpha * tau * N) * w)
    return complex(term1 + term2)


def limit_exponent_at_infinity(N: int, n_max: int) -> int:
    """Exponent ``ℓ`` of the limit configuration once the heaviest point is sent to ``∞``."""
    return N - n_max


def check_extremal_pair(grid: SurfaceGrid, psi=None, tol: float = 1e-4) -> bool:
    """Check that ``(ω, h_FS)`` is extremal for ``φ = x0`` on ``O(1)`` with ``a = 8``.

    With ``ω = ψ ω_FS`` (``ψ = 1`` by default) the two identities are
    ``Δ_ω |φ|² = 2(1-|z|²)/(1+|z|²)``, the Hamiltonian of ``v = 4iz∂_z``, and
    ``∂̄|φ|² = ¼ ι_{v^{1,0}} ω``.  In polar form the second reads
    ``∂_θ H + (i/sin θ) ∂_φ H = -½ ψ sin θ``.
    """
    grid.require("sphere")
    psi = grid.constant(1.0) if psi is None else grid.check(psi, "psi")
    sht = grid.sht
    H = monomial_norm(grid, 1, 0)
    hamiltonian = 2.0 * np.cos(grid.theta)
    lap_err = np.max(np.abs(grid.laplacian(H) / psi - hamiltonian))
    c = sht.analysis(H)
    dbar = sht.synthesis_dtheta(c) + 1j * sht.synthesis_dphi(c) / np.sin(grid.theta)
    dbar_err = np.max(np.abs(dbar + 0.5 * psi * np.sin(grid.theta)))
    return bool(max(lap_err, dbar_err) < tol)
