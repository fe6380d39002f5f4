"""Manufactured solutions: smooth (f, v, H) whose exact residuals are derived symbolically."""

import numpy as np
import pytest
import sympy as sp

from gravvortex.gravitating import ModelParams, equation_residuals
from gravvortex.surface import make_sphere_grid, make_torus_grid

PARAMS = ModelParams(alpha=0.1, tau=6.0, N=1, genus=1)
SPHERE_PARAMS = ModelParams(alpha=0.1, tau=6.0, N=2, genus=0)


def _exact_residuals(lap, f, v, H, params):
    """Continuum residuals for the geometer's Laplacian ``lap`` of the background."""
    psi = 1 - lap(v)
    P = sp.exp(2 * f) * H
    ilf = (params.N + lap(f)) / psi
    K = (params.chi + sp.Rational(1, 2) * lap(sp.log(psi))) / psi
    lapP = lap(P) / psi
    a, tau, c = params.alpha, params.tau, params.c
    r1 = ilf + sp.Rational(1, 2) * (P - tau)
    r2 = K + a * lapP + a * tau * (P - tau) - c
    return r1, r2


def _torus_case():
    x, y = sp.symbols("x y", real=True)
    L = sp.sqrt(2 * sp.pi)
    k = 2 * sp.pi / L
    f = sp.Rational(3, 10) * sp.sin(k * x) * sp.cos(k * y) - sp.Rational(1, 5)
    v = sp.Rational(1, 100) * sp.cos(k * x + 2 * k * y)
    H = 1 + sp.Rational(1, 2) * sp.sin(k * y) ** 2

    def lap(u):
        return -(sp.diff(u, x, 2) + sp.diff(u, y, 2))

    r1, r2 = _exact_residuals(lap, f, v, H, PARAMS)
    to_np = [sp.lambdify((x, y), e, "numpy") for e in (f, v, H, r1, r2)]
    return to_np


def _sphere_case():
    th, ph = sp.symbols("theta phi", real=True)
    R2 = sp.Rational(1, 2)
    X, Y, Z = sp.sin(th) * sp.cos(ph), sp.sin(th) * sp.sin(ph), sp.cos(th)
    f = sp.Rational(1, 5) * X * Z + sp.Rational(1, 10) * Y - sp.Rational(1, 3)
    v = sp.Rational(1, 30) * (X**2 - Y * Z)
    H = 1 + sp.Rational(1, 4) * Z + sp.Rational(1, 5) * X * Y

    def lap(u):
        return -(sp.diff(sp.sin(th) * sp.diff(u, th), th) / sp.sin(th) + sp.diff(u, ph, 2) / sp.sin(th) ** 2) / R2

    r1, r2 = _exact_residuals(lap, f, v, H, SPHERE_PARAMS)
    return [sp.lambdify((th, ph), e, "numpy") for e in (f, v, H, r1, r2)]


def _errors(grid, fns, params):
    a, b = grid.coordinates()
    f, v, H, r1, r2 = (np.broadcast_to(fn(a, b), grid.shape).astype(float) for fn in fns)
    d1, d2, _ = equation_residuals(grid, f, v, H, params)
    return max(np.max(np.abs(d1 - r1)), np.max(np.abs(d2 - r2)))


@pytest.fixture(scope="module")
def torus_fns():
    return _torus_case()


@pytest.fixture(scope="module")
def sphere_fns():
    return _sphere_case()


def test_torus_manufactured_converges(torus_fns):
    # spectral decay down to the roundoff floor of the nonlinear terms
    errs = [_errors(make_torus_grid(n, n, 1j), torus_fns, PARAMS) for n in (8, 16, 32, 64)]
    assert all(b < a / 10 for a, b in zip(errs, errs[1:]))
    assert errs[-1] < 1e-8


def test_sphere_manufactured_converges(sphere_fns):
    errs = [_errors(make_sphere_grid(n, 2 * n), sphere_fns, SPHERE_PARAMS) for n in (8, 16, 32)]
    assert errs[1] < errs[0] / 100
    assert errs[2] < 1e-8
