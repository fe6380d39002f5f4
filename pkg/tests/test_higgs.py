import numpy as np
import pytest

from gravvortex.errors import GridKindMismatch, InvalidDivisor, PreconditionError
from gravvortex.higgs import (
    INF,
    Divisor,
    StabilityClass,
    bradlow_admissible,
    classify_divisor,
    distance_to_divisor,
    higgs_norm,
    higgs_norm_sphere,
    higgs_norm_torus,
    hilbert_mumford_destabilized_exponent,
    log_laplacian,
    parse_divisor,
    sphere_norm_at,
    torus_norm_at,
)
from gravvortex.surface import make_sphere_grid, make_torus_grid


@pytest.fixture(scope="module")
def sphere64():
    return make_sphere_grid(64, 128)


# --- divisor type -----------------------------------------------------------


def test_divisor_degree_and_pairs():
    D = Divisor((0, 1j, INF), (2, 1, 3))
    assert D.degree == 6
    assert D.max_multiplicity == 3
    assert D.multiplicity_at(INF) == 3
    assert D.multiplicity_at(0) == 2
    assert D.multiplicity_at(5) == 0


@pytest.mark.parametrize(
    "points, mult",
    [((), ()), ((0, 0), (1, 1)), ((0,), (0,)), ((INF, INF), (1, 1)), ((0, 1), (1,))],
)
def test_divisor_rejects_invalid(points, mult):
    with pytest.raises(InvalidDivisor):
        Divisor(points, mult)


def test_divisor_json_round_trip():
    D = Divisor((0, 1 - 2j, INF), (2, 1, 1))
    assert parse_divisor(D.to_json()) == D


def test_parse_divisor_point_formats():
    D = parse_divisor([{"point": "inf", "multiplicity": 1}, {"point": "1+2i", "multiplicity": 2}, {"point": [0, 1]}])
    assert D.points == (INF, 1 + 2j, 1j)
    assert D.multiplicities == (1, 2, 1)


@pytest.mark.parametrize("raw", ["[]", "not json", '[{"multiplicity": 1}]', '[{"point": "x?", "multiplicity": 1}]',
                                 '[{"point": 0, "multiplicity": 1.5}]', '{"point": 0}'])
def test_parse_divisor_rejects_malformed(raw):
    with pytest.raises(InvalidDivisor):
        parse_divisor(raw)


# --- stability ----------------------------------------------------------------


def test_classify_three_distinct_points_stable():
    assert classify_divisor(Divisor((0, 1, INF), (1, 1, 1))) is StabilityClass.STABLE


def test_classify_two_equal_points_strictly_polystable():
    assert classify_divisor(Divisor((0, 1), (2, 2))) is StabilityClass.STRICTLY_POLYSTABLE


@pytest.mark.parametrize("N", range(1, 9))
def test_classify_single_point_unstable(N):
    assert classify_divisor(Divisor((0,), (N,))) is StabilityClass.UNSTABLE


def test_classify_half_weight_with_two_others_is_semistable_only():
    c = classify_divisor(Divisor((0, 1, 2), (2, 1, 1)))
    assert c is StabilityClass.STRICTLY_SEMISTABLE
    assert not c.polystable


def test_hilbert_mumford_exponent_examples():
    assert hilbert_mumford_destabilized_exponent(Divisor((0,), (5,))) == 5
    D = Divisor((0, 1), (2, 2))
    l = hilbert_mumford_destabilized_exponent(D)
    assert l == 2 and D.degree - 2 * l == 0
    D = Divisor((0, 1, 2, 3), (2, 1, 1, 1))
    l = hilbert_mumford_destabilized_exponent(D)
    assert l == 2 and D.degree - 2 * l > 0


@pytest.mark.parametrize("mult", [(1,), (2, 1), (3, 2, 1), (2, 2), (4, 1, 1, 1), (1, 1, 1, 1)])
def test_unstable_iff_negative_exponent_gap(mult):
    D = Divisor(tuple(range(len(mult))), mult)
    l = hilbert_mumford_destabilized_exponent(D)
    assert (classify_divisor(D) is StabilityClass.UNSTABLE) == (D.degree - 2 * l < 0)


def test_bradlow_examples():
    assert bradlow_admissible(2, 6)
    assert not bradlow_admissible(2, 4)
    assert bradlow_admissible(1, 2.0000001)
    with pytest.raises(PreconditionError):
        bradlow_admissible(0, 6)


# --- sphere norm --------------------------------------------------------------


@pytest.mark.parametrize("N, l", [(1, 0), (2, 1), (3, 2), (4, 4)])
def test_sphere_monomial_norm(sphere64, N, l):
    D = Divisor.from_pairs([(p, n) for p, n in ((0, l), (INF, N - l)) if n > 0])
    x0, x1 = sphere64.homogeneous
    z2 = np.abs(x1) ** 2 / np.abs(x0) ** 2
    expected = z2**l / (1.0 + z2) ** N
    np.testing.assert_allclose(higgs_norm_sphere(D, sphere64), expected, rtol=1e-12, atol=1e-300)


def test_sphere_norm_vanishes_at_divisor():
    D = Divisor((0,), (2,))
    assert sphere_norm_at(D, 0.0) == 0.0
    assert sphere_norm_at(Divisor((1j,), (1,)), 1j) == 0.0


def test_sphere_norm_nonnegative(sphere64):
    H = higgs_norm_sphere(Divisor((0.3, -2 + 1j, INF), (1, 2, 1)), sphere64)
    assert np.all(H >= 0)


def test_sphere_norm_rejects_torus(torus32):
    with pytest.raises(GridKindMismatch):
        higgs_norm_sphere(Divisor((0,), (1,)), torus32)


@pytest.mark.parametrize("D", [Divisor((0, INF), (1, 1)), Divisor((0, 1j, INF), (2, 1, 1)), Divisor((1, -1), (1, 2))])
def test_sphere_off_divisor_log_laplacian(sphere64, D):
    L = log_laplacian(sphere64, higgs_norm(D, sphere64))
    far = distance_to_divisor(D, sphere64) > 0.5
    np.testing.assert_allclose(L[far], 2 * D.degree, atol=1e-8)


def test_sphere_norm_azimuthal_symmetry_of_antipodal_pair(sphere64, antipodal_pair):
    H = higgs_norm(antipodal_pair, sphere64)
    assert np.max(np.ptp(H, axis=1)) < 1e-15


def test_sphere_norm_rotation_invariance(sphere64):
    # rotating the divisor about the polar axis rotates the field
    shift = 8
    rot = np.exp(2j * np.pi * shift / sphere64.n_phi)
    D = Divisor((0.4 + 0.1j, -1.5j), (1, 2))
    Drot = Divisor(tuple(p * rot for p in D.points), D.multiplicities)
    H = higgs_norm(D, sphere64)
    Hrot = higgs_norm(Drot, sphere64)
    np.testing.assert_allclose(np.roll(H, shift, axis=1), Hrot, rtol=1e-10, atol=1e-14)


# --- torus norm ---------------------------------------------------------------


def test_torus_norm_zero_at_centre(torus64):
    centre = 0.5 * torus64.scale * (1 + 1j)
    D = Divisor((centre,), (1,))
    assert torus_norm_at(D, torus64, centre) == 0.0
    assert np.all(higgs_norm_torus(D, torus64) >= 0)


@pytest.mark.parametrize("pairs", [[(0.5 + 0.5j, 1)], [(0.3 + 0.2j, 1), (1.5 + 1.9j, 2)], [(2.0 + 0.1j, 3)]])
def test_torus_off_divisor_log_laplacian(torus64, pairs):
    D = Divisor.from_pairs(pairs)
    L = log_laplacian(torus64, higgs_norm(D, torus64))
    far = distance_to_divisor(D, torus64) >= 5 * torus64.scale / 64
    assert far.sum() > 0.8 * far.size
    assert np.max(np.abs(L[far] - 2 * D.degree)) < 1e-6


@pytest.mark.parametrize("modulus", [1j, 0.3 + 1.2j])
def test_torus_double_periodicity(modulus):
    g = make_torus_grid(32, 32, modulus)
    D = Divisor((0.7 + 0.4j, 1.1 + 0.9j), (1, 1))
    base = torus_norm_at(D, g, g.z)
    e1 = g.scale
    e2 = g.scale * modulus
    for shift in (e1, e2, e1 + e2, -e2):
        np.testing.assert_allclose(torus_norm_at(D, g, g.z + shift), base, rtol=1e-13, atol=1e-15)


def test_torus_norm_rejects_point_outside_domain(torus32):
    with pytest.raises(InvalidDivisor):
        higgs_norm_torus(Divisor((-0.5 + 0.5j,), (1,)), torus32)
    with pytest.raises(InvalidDivisor):
        higgs_norm_torus(Divisor((INF,), (1,)), torus32)


def test_torus_norm_rejects_sphere(sphere32):
    with pytest.raises(GridKindMismatch):
        higgs_norm_torus(Divisor((0.5,), (1,)), sphere32)


# --- degree identity ----------------------------------------------------------


@pytest.mark.parametrize("pairs", [[(0.5 + 0.5j, 1)], [(0.31 + 0.77j, 1), (1.9 + 2.2j, 1)]])
def test_degree_identity_torus(torus64, pairs):
    D = Divisor.from_pairs(pairs)
    density = 0.5 * log_laplacian(torus64, higgs_norm(D, torus64))
    assert np.all(np.isfinite(density))
    assert abs(torus64.integrate(density) - 2 * np.pi * D.degree) < 1e-8


# simple zeros only: at a double zero the quotient form loses digits to cancellation
@pytest.mark.parametrize("D", [Divisor((0, INF), (1, 1)), Divisor((0, 2, INF), (1, 1, 1)), Divisor((1, -1, 1j), (1, 1, 1))])
def test_degree_identity_sphere(sphere64, D):
    density = 0.5 * log_laplacian(sphere64, higgs_norm(D, sphere64))
    assert abs(sphere64.integrate(density) - 2 * np.pi * D.degree) < 1e-8
