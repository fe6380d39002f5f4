"""Background surfaces: the flat torus and the round sphere, both of area 2π.

Fields are plain ``numpy`` arrays of shape ``grid.shape``.  The Laplacian is
the geometer's one, ``Δ = -div grad``, which is positive semi-definite and
nonnegative at an interior maximum.  Both discretisations are spectral:

* torus: uniform periodic grid on a lattice ``Z + τ Z`` rescaled to area
  2π, with a Fourier Laplacian;
* sphere: Gauss-Legendre latitudes times uniform longitudes, with a
  spherical-harmonic Laplacian.  Grid functions outside the band-limited
  space are assigned the largest resolved eigenvalue so that the operator
  stays invertible on mean-zero fields.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from gravvortex._legendre import SphericalTransform
from gravvortex.errors import (
    DegenerateLattice,
    GridKindMismatch,
    GridMismatch,
    ResolutionTooSmall,
)

TOTAL_AREA = 2.0 * np.pi
SPHERE_RADIUS2 = 0.5  # 4π r² = 2π
MIN_RESOLUTION = 8


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


class SurfaceGrid:
    """Common interface of the two background grids."""

    kind: str
    shape: tuple[int, int]
    weights: np.ndarray
    euler_characteristic: int

    @property
    def node_count(self) -> int:
        return self.shape[0] * self.shape[1]

    def check(self, values, name: str = "field") -> np.ndarray:
        arr = np.asarray(values, dtype=float)
        if arr.shape != self.shape:
            raise GridMismatch(f"{name} has shape {arr.shape}, grid expects {self.shape}")
        return arr

    def require(self, kind: str) -> None:
        if self.kind != kind:
            raise GridKindMismatch(f"operation needs a {kind} grid, got {self.kind}")

    def integrate(self, values) -> float:
        return float(np.sum(self.check(values) * self.weights))

    def mean(self, values) -> float:
        return self.integrate(values) / TOTAL_AREA

    def constant(self, value: float) -> np.ndarray:
        return np.full(self.shape, float(value))

    # subclass hooks
    def laplacian(self, values) -> np.ndarray:  # pragma: no cover - abstract
        raise NotImplementedError

    def gradient(self, values) -> tuple[np.ndarray, np.ndarray]:  # pragma: no cover
        raise NotImplementedError

    def solve_shifted(self, rhs, shift: float) -> np.ndarray:  # pragma: no cover
        raise NotImplementedError

    def metadata(self) -> dict:  # pragma: no cover
        raise NotImplementedError

    def coordinates(self) -> tuple[np.ndarray, np.ndarray]:  # pragma: no cover
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class TorusGrid(SurfaceGrid):
    n1: int
    n2: int
    lattice_modulus: complex
    kind: str = field(default="torus", init=False)
    euler_characteristic: int = field(default=0, init=False)

    def __post_init__(self):
        tau = complex(self.lattice_modulus)
        scale = np.sqrt(TOTAL_AREA / tau.imag)
        e1 = np.array([scale, 0.0])
        e2 = np.array([scale * tau.real, scale * tau.imag])
        basis = np.column_stack([e1, e2])
        s1 = np.arange(self.n1) / self.n1
        s2 = np.arange(self.n2) / self.n2
        S1, S2 = np.meshgrid(s1, s2, indexing="ij")
        X = S1 * e1[0] + S2 * e2[0]
        Y = S1 * e1[1] + S2 * e2[1]

        k1 = np.fft.fftfreq(self.n1, d=1.0 / self.n1)
        k2 = np.fft.fftfreq(self.n2, d=1.0 / self.n2)
        K1, K2 = np.meshgrid(k1, k2, indexing="ij")
        dual = 2.0 * np.pi * np.linalg.inv(basis).T  # columns are dual vectors
        kx = dual[0, 0] * K1 + dual[0, 1] * K2
        ky = dual[1, 0] * K1 + dual[1, 1] * K2
        lam = kx**2 + ky**2
        # symmetrise so that Nyquist modes of skew lattices stay real
        neg1 = (-np.arange(self.n1)) % self.n1
        neg2 = (-np.arange(self.n2)) % self.n2
        lam = 0.5 * (lam + lam[np.ix_(neg1, neg2)])
        nyq = np.zeros_like(lam, dtype=bool)
        if self.n1 % 2 == 0:
            nyq |= np.abs(K1) == self.n1 // 2
        if self.n2 % 2 == 0:
            nyq |= np.abs(K2) == self.n2 // 2

        object.__setattr__(self, "shape", (self.n1, self.n2))
        object.__setattr__(self, "scale", scale)
        object.__setattr__(self, "basis", _frozen(basis))
        object.__setattr__(self, "x", _frozen(X))
        object.__setattr__(self, "y", _frozen(Y))
        object.__setattr__(self, "weights", _frozen(np.full(self.shape, TOTAL_AREA / (self.n1 * self.n2))))
        object.__setattr__(self, "_lam", _frozen(lam))
        object.__setattr__(self, "_kx", _frozen(np.where(nyq, 0.0, kx)))
        object.__setattr__(self, "_ky", _frozen(np.where(nyq, 0.0, ky)))

    @property
    def z(self) -> np.ndarray:
        return self.x + 1j * self.y

    @property
    def eigenvalues(self) -> np.ndarray:
        return self._lam

    def wavevector(self, k1: int, k2: int) -> np.ndarray:
        dual = 2.0 * np.pi * np.linalg.inv(self.basis).T
        return dual @ np.array([k1, k2], dtype=float)

    def laplacian(self, values) -> np.ndarray:
        f = self.check(values)
        if np.ptp(f) == 0.0:
            return np.zeros(self.shape)
        # removing the mean first keeps a large offset from leaking round-off
        # into the high modes
        f = f - f.mean()
        return np.fft.ifft2(self._lam * np.fft.fft2(f)).real

    def gradient(self, values):
        fh = np.fft.fft2(self.check(values))
        gx = np.fft.ifft2(1j * self._kx * fh).real
        gy = np.fft.ifft2(1j * self._ky * fh).real
        return gx, gy

    def apply_spectral(self, values, multiplier) -> np.ndarray:
        """Apply ``m(Δ)`` for a real function ``multiplier`` of the eigenvalues."""
        fh = np.fft.fft2(self.check(values))
        return np.fft.ifft2(multiplier(self._lam) * fh).real

    def solve_shifted(self, rhs, shift: float) -> np.ndarray:
        """Return ``u`` with ``(Δ + shift) u = rhs``; for ``shift == 0`` the
        mean of ``rhs`` is discarded and ``u`` has zero mean."""
        rh = np.fft.fft2(self.check(rhs, "rhs"))
        denom = self._lam + shift
        if shift == 0.0:
            denom = denom.copy()
            denom[0, 0] = 1.0
            rh[0, 0] = 0.0
        return np.fft.ifft2(rh / denom).real

    def coordinates(self):
        return self.x, self.y

    def metadata(self) -> dict:
        tau = complex(self.lattice_modulus)
        return {
            "kind": "torus",
            "resolution": [self.n1, self.n2],
            "lattice_modulus": [tau.real, tau.imag],
            "area": TOTAL_AREA,
        }


@dataclass(frozen=True, eq=False)
class SphereGrid(SurfaceGrid):
    n_theta: int
    n_phi: int
    kind: str = field(default="sphere", init=False)
    euler_characteristic: int = field(default=2, init=False)

    def __post_init__(self):
        sht = SphericalTransform(self.n_theta, self.n_phi)
        phi = 2.0 * np.pi * np.arange(self.n_phi) / self.n_phi
        TH, PH = np.meshgrid(sht.theta, phi, indexing="ij")
        w = SPHERE_RADIUS2 * np.outer(sht.w, np.full(self.n_phi, 2.0 * np.pi / self.n_phi))
        lmax = sht.l_max
        lam = sht.degree() * (sht.degree() + 1.0) / SPHERE_RADIUS2
        object.__setattr__(self, "shape", (self.n_theta, self.n_phi))
        object.__setattr__(self, "sht", sht)
        object.__setattr__(self, "theta", _frozen(TH))
        object.__setattr__(self, "phi", _frozen(PH))
        object.__setattr__(self, "weights", _frozen(w))
        object.__setattr__(self, "_lam", _frozen(lam))
        object.__setattr__(self, "unresolved_eigenvalue", lmax * (lmax + 1.0) / SPHERE_RADIUS2)

    @property
    def z(self) -> np.ndarray:
        """Stereographic chart coordinate, ``z = 0`` at the north pole."""
        return np.tan(self.theta / 2.0) * np.exp(1j * self.phi)

    @property
    def homogeneous(self) -> tuple[np.ndarray, np.ndarray]:
        """Unit representative ``(x0, x1)`` of each node, ``z = x1 / x0``."""
        return np.cos(self.theta / 2.0) + 0j, np.sin(self.theta / 2.0) * np.exp(1j * self.phi)

    def project(self, values) -> np.ndarray:
        return self.sht.synthesis(self.sht.analysis(self.check(values)))

    def laplacian(self, values) -> np.ndarray:
        f = self.check(values)
        if np.ptp(f) == 0.0:
            return np.zeros(self.shape)
        f = f - self.mean(f)
        c = self.sht.analysis(f)
        smooth = self.sht.synthesis(c)
        return self.sht.synthesis(self._lam * c) + self.unresolved_eigenvalue * (f - smooth)

    def gradient(self, values):
        c = self.sht.analysis(self.check(values))
        r = np.sqrt(SPHERE_RADIUS2)
        g_theta = self.sht.synthesis_dtheta(c) / r
        g_phi = self.sht.synthesis_dphi(c) / (r * np.sin(self.theta))
        return g_theta, g_phi

    def dtheta(self, values) -> np.ndarray:
        """Coordinate derivative ∂f/∂θ of the band-limited part."""
        return self.sht.synthesis_dtheta(self.sht.analysis(self.check(values)))

    def apply_spectral(self, values, multiplier) -> np.ndarray:
        """Apply ``m(Δ)``; unresolved grid modes use the largest eigenvalue."""
        f = self.check(values)
        c = self.sht.analysis(f)
        rest = f - self.sht.synthesis(c)
        mu = np.array([self.unresolved_eigenvalue])
        return self.sht.synthesis(multiplier(self._lam) * c) + multiplier(mu)[0] * rest

    def solve_shifted(self, rhs, shift: float) -> np.ndarray:
        f = self.check(rhs, "rhs")
        c = self.sht.analysis(f)
        rest = f - self.sht.synthesis(c)
        denom = self._lam + shift
        if shift == 0.0:
            # constants and the unused m > l slots share the zero eigenvalue
            kernel = denom == 0.0
            denom = np.where(kernel, 1.0, denom)
            c = np.where(kernel, 0.0, c)
        return self.sht.synthesis(c / denom) + rest / (self.unresolved_eigenvalue + shift)

    def coordinates(self):
        return self.theta, self.phi

    def metadata(self) -> dict:
        return {
            "kind": "sphere",
            "resolution": [self.n_theta, self.n_phi],
            "lattice_modulus": None,
            "area": TOTAL_AREA,
            "latitudes": "gauss-legendre",
        }


def make_torus_grid(n1: int, n2: int, lattice_modulus: complex = 1j) -> TorusGrid:
    """Uniform periodic grid on the flat torus ``C / (Z + τZ)`` scaled to area 2π."""
    if n1 < MIN_RESOLUTION or n2 < MIN_RESOLUTION:
        raise ResolutionTooSmall(f"torus resolution must be at least {MIN_RESOLUTION}, got {(n1, n2)}")
    tau = complex(lattice_modulus)
    if not tau.imag > 0:
        raise DegenerateLattice(f"lattice modulus must have positive imaginary part, got {tau}")
    return TorusGrid(int(n1), int(n2), tau)


def make_sphere_grid(n_theta: int, n_phi: int) -> SphereGrid:
    """Gauss-Legendre latitude/longitude grid on the round sphere of area 2π."""
    if n_theta < MIN_RESOLUTION or n_phi < MIN_RESOLUTION:
        raise ResolutionTooSmall(f"sphere resolution must be at least {MIN_RESOLUTION}, got {(n_theta, n_phi)}")
    return SphereGrid(int(n_theta), int(n_phi))


def laplacian(grid: SurfaceGrid, values) -> np.ndarray:
    return grid.laplacian(values)


def integrate(grid: SurfaceGrid, values) -> float:
    return grid.integrate(values)


def gradient_squared(grid: SurfaceGrid, values) -> np.ndarray:
    """Pointwise ``|∇f|²`` in the background metric."""
    g1, g2 = grid.gradient(values)
    return g1 * g1 + g2 * g2


def gauss_curvature(grid: SurfaceGrid, psi) -> np.ndarray:
    """Gaussian curvature of ``ψ ω₀``, ``K = (K₀ + ½ Δ₀ log ψ) / ψ``.

    ``K₀ = χ`` because the background has constant curvature and area 2π.
    """
    psi = grid.check(psi, "psi")
    return (grid.euler_characteristic + 0.5 * grid.laplacian(np.log(psi))) / psi


def write_field(path, grid: SurfaceGrid, values, name: str = "value") -> Path:
    """Write ``index coord1 coord2 value`` rows plus a JSON sidecar."""
    path = Path(path)
    f = grid.check(values)
    c1, c2 = grid.coordinates()
    idx = np.arange(grid.node_count)
    table = np.column_stack([idx, c1.ravel(), c2.ravel(), f.ravel()])
    coord_names = ("x", "y") if grid.kind == "torus" else ("theta", "phi")
    header = f"index {coord_names[0]} {coord_names[1]} {name}"
    np.savetxt(path, table, fmt=["%d", "%.17g", "%.17g", "%.17g"], header=header)
    meta = dict(grid.metadata(), field=name, columns=header.split())
    path.with_suffix(path.suffix + ".json").write_text(json.dumps(meta, indent=2) + "\n")
    return path


def read_field(path) -> tuple[dict, np.ndarray]:
    """Inverse of :func:`write_field`; returns ``(metadata, values)``."""
    path = Path(path)
    meta = json.loads(path.with_suffix(path.suffix + ".json").read_text())
    table = np.loadtxt(path, ndmin=2)
    shape = tuple(meta["resolution"])
    return meta, table[:, 3].reshape(shape)
