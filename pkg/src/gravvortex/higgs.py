"""Effective divisors, Higgs-field norms, and SL(2,C) stability on P¹."""

from __future__ import annotations

import cmath
import enum
import json
from collections.abc import Iterable
from dataclasses import dataclass

import numpy as np

from gravvortex.errors import InvalidDivisor, PreconditionError
from gravvortex.surface import SphereGrid, SurfaceGrid, TorusGrid, gradient_squared

INF = complex("inf")

THETA_TOL = 1e-14


def is_infinite(p: complex) -> bool:
    return cmath.isinf(p)


@dataclass(frozen=True)
class Divisor:
    """``D = Σ n_j p_j`` with distinct points and positive multiplicities.

    Points are chart coordinates: ``z`` on P¹ (``INF`` for the point at
    infinity) or the physical coordinate ``x + iy`` on the torus.
    """

    points: tuple[complex, ...]
    multiplicities: tuple[int, ...]

    def __post_init__(self):
        pts = tuple(complex(p) for p in self.points)
        mult = tuple(int(n) for n in self.multiplicities)
        if len(pts) != len(mult):
            raise InvalidDivisor("points and multiplicities differ in length")
        if not pts:
            raise InvalidDivisor("empty divisor")
        if any(n < 1 for n in mult):
            raise InvalidDivisor(f"multiplicities must be positive, got {mult}")
        if any(cmath.isnan(p) for p in pts):
            raise InvalidDivisor("NaN point")
        finite = [p for p in pts if not is_infinite(p)]
        if len(set(finite)) != len(finite) or len(pts) - len(finite) > 1:
            raise InvalidDivisor("divisor points must be pairwise distinct")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "multiplicities", mult)

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[complex, int]]) -> Divisor:
        pairs = list(pairs)
        return cls(tuple(p for p, _ in pairs), tuple(n for _, n in pairs))

    @property
    def degree(self) -> int:
        return sum(self.multiplicities)

    @property
    def max_multiplicity(self) -> int:
        return max(self.multiplicities)

    def pairs(self) -> list[tuple[complex, int]]:
        return list(zip(self.points, self.multiplicities))

    def multiplicity_at(self, point: complex) -> int:
        for p, n in self.pairs():
            if (is_infinite(p) and is_infinite(point)) or p == point:
                return n
        return 0

    def to_records(self) -> list[dict]:
        return [{"point": _format_point(p), "multiplicity": n} for p, n in self.pairs()]

    def to_json(self) -> str:
        return json.dumps(self.to_records())


def _format_point(p: complex) -> str | list[float]:
    if is_infinite(p):
        return "inf"
    return [p.real, p.imag]


def _parse_point(raw) -> complex:
    if isinstance(raw, str):
        text = raw.strip().lower().replace(" ", "")
        if text in ("inf", "infinity", "∞"):
            return INF
        try:
            return complex(text.replace("i", "j"))
        except ValueError:
            raise InvalidDivisor(f"cannot parse point {raw!r}") from None
    if isinstance(raw, (int, float)):
        return complex(raw)
    if isinstance(raw, (list, tuple)) and len(raw) == 2:
        return complex(float(raw[0]), float(raw[1]))
    raise InvalidDivisor(f"cannot parse point {raw!r}")


def parse_divisor(records) -> Divisor:
    """Build a divisor from ``[{"point": ..., "multiplicity": n}, ...]``.

    ``records`` may also be a JSON string.  Points are ``"inf"``, a complex
    literal such as ``"1+2i"``, a number, or a ``[re, im]`` pair.
    """
    if isinstance(records, str):
        try:
            records = json.loads(records)
        except json.JSONDecodeError as exc:
            raise InvalidDivisor(f"divisor is not valid JSON: {exc}") from None
    if not isinstance(records, list):
        raise InvalidDivisor("divisor must be a list of {point, multiplicity} records")
    pairs = []
    for rec in records:
        if not isinstance(rec, dict) or "point" not in rec:
            raise InvalidDivisor(f"bad divisor record {rec!r}")
        n = rec.get("multiplicity", 1)
        if isinstance(n, bool) or not isinstance(n, int):
            raise InvalidDivisor(f"multiplicity must be an integer, got {n!r}")
        pairs.append((_parse_point(rec["point"]), n))
    return Divisor.from_pairs(pairs)


class StabilityClass(enum.Enum):
    STABLE = "Stable"
    STRICTLY_POLYSTABLE = "StrictlyPolystable"
    STRICTLY_SEMISTABLE = "StrictlySemistable"
    UNSTABLE = "Unstable"

    @property
    def polystable(self) -> bool:
        return self in (StabilityClass.STABLE, StabilityClass.STRICTLY_POLYSTABLE)

    def __str__(self) -> str:
        return self.value


def classify_divisor(divisor: Divisor) -> StabilityClass:
    """GIT class of ``divisor`` under the SL(2,C) action on P¹.

    Stable iff every multiplicity is below N/2, strictly polystable iff the
    divisor is two distinct points of multiplicity N/2 each, unstable iff
    some multiplicity exceeds N/2.  The remaining case (a point of
    multiplicity exactly N/2 together with at least two other points) is
    semistable but not polystable.
    """
    N = divisor.degree
    mult = divisor.multiplicities
    if all(2 * n < N for n in mult):
        return StabilityClass.STABLE
    if any(2 * n > N for n in mult):
        return StabilityClass.UNSTABLE
    if len(mult) == 2:
        return StabilityClass.STRICTLY_POLYSTABLE
    return StabilityClass.STRICTLY_SEMISTABLE


def hilbert_mumford_destabilized_exponent(divisor: Divisor) -> int:
    """Exponent ℓ of the limit monomial ``x0^(N-ℓ) x1^ℓ`` of the optimal
    one-parameter subgroup: the largest multiplicity of ``divisor``."""
    return divisor.max_multiplicity


def bradlow_admissible(N: int, tau: float) -> bool:
    """Vortex existence criterion ``N < τ Vol / 4π`` with Vol = 2π."""
    if N < 1:
        raise PreconditionError("degree must be positive")
    return N < tau / 2.0


def higgs_norm_sphere(divisor: Divisor, grid: SurfaceGrid) -> np.ndarray:
    """``|φ|²`` in the Fubini-Study metric on O(N) for the monic section with zeros D.

    With unit homogeneous coordinates ``(x0, x1)``, ``z = x1/x0`` this is
    ``Π |x1 - p_j x0|^(2 n_j) · |x0|^(2 n_∞)``, i.e. ``|p(z)|² / (1+|z|²)^N``.
    """
    grid.require("sphere")
    assert isinstance(grid, SphereGrid)
    return _sphere_norm(divisor, *grid.homogeneous)


def _sphere_norm(divisor: Divisor, x0, x1) -> np.ndarray:
    out = np.ones(np.shape(x0))
    for p, n in divisor.pairs():
        if is_infinite(p):
            out = out * np.abs(x0) ** (2 * n)
        else:
            out = out * np.abs(x1 - p * x0) ** (2 * n)
    return out


def sphere_norm_at(divisor: Divisor, z) -> np.ndarray:
    """Evaluate the Fubini-Study norm of the monic section at chart points ``z``."""
    z = np.asarray(z, dtype=complex)
    x0 = 1.0 / np.sqrt(1.0 + np.abs(z) ** 2)
    return _sphere_norm(divisor, x0 + 0j, z * x0)


def theta1(v, q_nome, tol: float = THETA_TOL, max_terms: int = 200):
    """Jacobi ``θ₁(v, q) = 2 Σ (-1)^n q^((n+1/2)²) sin((2n+1) v)`` for arrays ``v``.

    Summation stops once a whole term is below ``tol`` in absolute value.
    """
    v = np.asarray(v, dtype=complex)
    log_q = cmath.log(q_nome)
    total = np.zeros_like(v)
    for n in range(max_terms):
        term = 2.0 * (-1) ** n * np.exp(log_q * (n + 0.5) ** 2) * np.sin((2 * n + 1) * v)
        total += term
        if n > 0 and float(np.max(np.abs(term), initial=0.0)) <= tol:
            break
    return total


def _reduce_to_cell(d: np.ndarray, tau: complex) -> np.ndarray:
    """Shift ``d`` by lattice vectors of ``Z + τZ`` into the centred cell."""
    k2 = np.round(d.imag / tau.imag)
    d = d - k2 * tau
    k1 = np.round(d.real)
    return d - k1


def torus_point_in_domain(grid: TorusGrid, p: complex) -> bool:
    s = np.linalg.solve(grid.basis, np.array([p.real, p.imag]))
    return bool(np.all(s >= -1e-12) and np.all(s < 1.0 + 1e-12))


def higgs_norm_torus(divisor: Divisor, grid: SurfaceGrid) -> np.ndarray:
    """Doubly periodic ``|φ|²_{h₀}`` on the torus vanishing to order ``2 n_j`` at ``p_j``.

    Each point contributes ``|θ₁(π d)|² exp(-2π (Im d)² / Im τ)`` where ``d``
    is the separation in unit-lattice coordinates; the Gaussian factor
    cancels the quasi-periodicity of θ₁, and ``Δ₀ log`` of the product is
    the constant ``2N`` away from the zeros.
    """
    grid.require("torus")
    assert isinstance(grid, TorusGrid)
    for p in divisor.points:
        if is_infinite(p) or not torus_point_in_domain(grid, p):
            raise InvalidDivisor(f"point {p} lies outside the torus fundamental domain")
    return torus_norm_at(divisor, grid, grid.z)


def torus_norm_at(divisor: Divisor, grid: TorusGrid, z) -> np.ndarray:
    tau = complex(grid.lattice_modulus)
    q = cmath.exp(1j * np.pi * tau)
    z = np.asarray(z, dtype=complex)
    out = np.ones(z.shape)
    for p, n in divisor.pairs():
        d = _reduce_to_cell((z - p) / grid.scale, tau)
        factor = np.abs(theta1(np.pi * d, q)) ** 2 * np.exp(-2.0 * np.pi * d.imag**2 / tau.imag)
        out = out * factor**n
    return out


def higgs_norm(divisor: Divisor, grid: SurfaceGrid) -> np.ndarray:
    if grid.kind == "sphere":
        return higgs_norm_sphere(divisor, grid)
    return higgs_norm_torus(divisor, grid)


def distance_to_divisor(divisor: Divisor, grid: SurfaceGrid) -> np.ndarray:
    """Background geodesic distance from each node to the nearest divisor point."""
    out = np.full(grid.shape, np.inf)
    if grid.kind == "torus":
        assert isinstance(grid, TorusGrid)
        tau = complex(grid.lattice_modulus)
        for p in divisor.points:
            d = _reduce_to_cell((grid.z - p) / grid.scale, tau)
            # nearest image among the neighbours of the centred cell
            best = np.full(grid.shape, np.inf)
            for a in (-1, 0, 1):
                for b in (-1, 0, 1):
                    best = np.minimum(best, np.abs(d + a + b * tau))
            out = np.minimum(out, best * grid.scale)
        return out
    assert isinstance(grid, SphereGrid)
    x0, x1 = grid.homogeneous
    r = np.sqrt(0.5)
    for p in divisor.points:
        if is_infinite(p):
            q0, q1 = 0.0, 1.0
        else:
            nrm = np.sqrt(1.0 + abs(p) ** 2)
            q0, q1 = 1.0 / nrm, p / nrm
        # chordal -> angular distance between unit vectors in C²
        overlap = np.clip(np.abs(np.conj(q0) * x0 + np.conj(q1) * x1), 0.0, 1.0)
        out = np.minimum(out, 2.0 * r * np.arccos(overlap))
    return out


def log_laplacian(grid: SurfaceGrid, higgs: np.ndarray) -> np.ndarray:
    """``Δ₀ ln H`` evaluated as ``ΔH/H + |∇H|²/H²``.

    ``H`` is smooth while ``ln H`` is singular on the divisor, so this form
    keeps the spectral accuracy of the grid operators away from the zeros.
    Nodes where ``H`` vanishes come back as NaN.
    """
    H = grid.check(higgs, "higgs")
    with np.errstate(divide="ignore", invalid="ignore"):
        out = grid.laplacian(H) / H + gradient_squared(grid, H) / H**2
    return np.where(H > 0, out, np.nan)
