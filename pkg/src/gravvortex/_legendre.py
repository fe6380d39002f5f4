"""Gauss-Legendre spherical harmonic transform used by the sphere grid.

Fields live on an ``(n_theta, n_phi)`` array; latitudes are the
Gauss-Legendre nodes in ``x = cos(theta)`` so that the quadrature is exact
for band-limited products.  Coefficients are stored as a complex array
``(m_max + 1, l_max + 1)`` indexed ``[m, l]`` with zeros for ``l < m``.
"""

from __future__ import annotations

import numpy as np


_EXT = np.longdouble


def gauss_legendre(n: int):
    """Gauss-Legendre nodes and weights polished in extended precision."""
    x0, _ = np.polynomial.legendre.leggauss(n)
    x = np.asarray(x0, dtype=_EXT)
    for _ in range(3):
        p, dp = _legendre_p(n, x)
        x = x - p / dp
    _, dp = _legendre_p(n, x)
    w = 2 / ((1 - x * x) * dp * dp)
    return x, w


def _legendre_p(n, x):
    p0 = np.ones_like(x)
    p1 = x.copy()
    for k in range(2, n + 1):
        p0, p1 = p1, ((2 * k - 1) * x * p1 - (k - 1) * p0) / k
    return p1, n * (x * p1 - p0) / (x * x - 1)


def normalized_legendre_table(x: np.ndarray, l_max: int):
    """Orthonormal associated Legendre functions and their theta-derivatives.

    Returns ``(P, dP)`` of shape ``(l_max+1, len(x), l_max+1)`` where
    ``int_{-1}^{1} P[m,:,l]**2 dx = 1`` and ``dP = dP/dtheta``.  The
    three-term recurrence in l runs in extended precision; the result is
    rounded to float64 once at the end.
    """
    x = np.asarray(x, dtype=_EXT)
    s = np.sqrt(1 - x * x)
    P = np.zeros((l_max + 1, x.size, l_max + 1), dtype=_EXT)
    dP = np.zeros_like(P)

    pmm = np.full(x.shape, 1 / np.sqrt(_EXT(2)), dtype=_EXT)
    for m in range(l_max + 1):
        if m > 0:
            pmm = np.sqrt(_EXT(2 * m + 1) / _EXT(2 * m)) * s * pmm
        P[m, :, m] = pmm
        if m + 1 <= l_max:
            P[m, :, m + 1] = np.sqrt(_EXT(2 * m + 3)) * x * pmm
        for l in range(m + 2, l_max + 1):
            a = np.sqrt(_EXT(4 * l * l - 1) / _EXT(l * l - m * m))
            b = np.sqrt(_EXT((l - 1) ** 2 - m * m) / _EXT(4 * (l - 1) ** 2 - 1))
            P[m, :, l] = a * (x * P[m, :, l - 1] - b * P[m, :, l - 2])
        for l in range(m, l_max + 1):
            # sin(theta) dP/dtheta = l x P_l - sqrt((2l+1)/(2l-1) (l^2-m^2)) P_{l-1}
            term = l * x * P[m, :, l]
            if l > m:
                term = term - np.sqrt(_EXT(2 * l + 1) / _EXT(2 * l - 1) * _EXT(l * l - m * m)) * P[m, :, l - 1]
            dP[m, :, l] = term / s
    return P.astype(float), dP.astype(float)


class SphericalTransform:
    """Analysis/synthesis pair on a Gauss-Legendre grid.

    ``l_max = n_theta - 1`` and ``m_max = min(l_max, n_phi // 2 - 1)`` so the
    transform is an exact W-orthogonal projection onto band-limited fields.
    """

    def __init__(self, n_theta: int, n_phi: int):
        self.n_theta = n_theta
        self.n_phi = n_phi
        x, w = gauss_legendre(n_theta)
        # north pole first: theta increasing
        order = np.argsort(-x)
        x, w = x[order], w[order]
        self.l_max = n_theta - 1
        self.m_max = min(self.l_max, n_phi // 2 - 1)
        P, dP = normalized_legendre_table(x, self.l_max)
        self.x = x.astype(float)
        self.w = w.astype(float)
        self.theta = np.arccos(x).astype(float)
        self.P = P[: self.m_max + 1]
        self.dP = dP[: self.m_max + 1]
        self.l = np.arange(self.l_max + 1)
        self.m = np.arange(self.m_max + 1)
        mask = self.l[None, :] >= self.m[:, None]
        self.mask = mask
        # weighted table for analysis
        self._Pw = self.P * self.w[None, :, None]

    def analysis(self, field: np.ndarray) -> np.ndarray:
        F = np.fft.rfft(field, axis=1) * (2.0 * np.pi / self.n_phi)
        F = F[:, : self.m_max + 1]
        # c[m, l] = sum_i w_i F[i, m] P[m, i, l]
        c = np.einsum("im,mil->ml", F, self._Pw)
        return c * self.mask

    def _to_grid(self, Fm: np.ndarray) -> np.ndarray:
        full = np.zeros((self.n_theta, self.n_phi // 2 + 1), dtype=complex)
        full[:, : self.m_max + 1] = Fm
        return np.fft.irfft(full, n=self.n_phi, axis=1) * (self.n_phi / (2.0 * np.pi))

    def synthesis(self, coeffs: np.ndarray) -> np.ndarray:
        return self._to_grid(np.einsum("ml,mil->im", coeffs, self.P))

    def synthesis_dtheta(self, coeffs: np.ndarray) -> np.ndarray:
        return self._to_grid(np.einsum("ml,mil->im", coeffs, self.dP))

    def synthesis_dphi(self, coeffs: np.ndarray) -> np.ndarray:
        return self.synthesis(coeffs * (1j * self.m[:, None]))

    def degree(self) -> np.ndarray:
        """Array of l values broadcast to the coefficient layout."""
        return np.broadcast_to(self.l[None, :], (self.m_max + 1, self.l_max + 1))
