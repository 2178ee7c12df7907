import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pdolab.grid import (
    GridFunction,
    Spectrum,
    TorusGrid,
    inverse,
    node_distance_matrix,
    norms,
    support_of,
    torus_distance,
    transform,
)

TWO_PI = 2 * np.pi


@pytest.mark.parametrize("M", [8, 100, 1000, 3])
def test_rejects_bad_sizes(M):
    with pytest.raises(ValueError):
        TorusGrid(1, M)


def test_rejects_dimension_three():
    with pytest.raises(ValueError):
        TorusGrid(3, 16)


def test_frequencies_cover_lattice():
    g = TorusGrid(1, 16)
    assert sorted(g.freqs[:, 0].tolist()) == list(range(-8, 8))


def test_plane_wave_spectrum(g256):
    s = transform(GridFunction.plane_wave(g256, 3)).coefficients
    expected = np.zeros(g256.size, complex)
    expected[3] = TWO_PI
    assert np.allclose(s, expected, atol=1e-12)


def test_constant_spectrum(g256):
    s = transform(GridFunction(g256, np.ones(g256.size))).coefficients
    assert s[0] == pytest.approx(TWO_PI)
    assert np.abs(s[1:]).max() < 1e-12


def test_round_trip_random(g256, rng):
    u = GridFunction(g256, rng.standard_normal(g256.size) + 1j * rng.standard_normal(g256.size))
    back = inverse(transform(u)).values
    assert np.abs(back - u.values).max() <= 1e-12 * np.abs(u.values).max()


def test_round_trip_two_dimensional(rng):
    g = TorusGrid(2, 16)
    u = GridFunction(g, rng.standard_normal(g.size))
    assert np.allclose(inverse(transform(u)).values, u.values, atol=1e-13)
    k = (2, -3)
    w = transform(GridFunction.plane_wave(g, k)).coefficients
    assert abs(w[g.index_of(np.array(k))] - TWO_PI**2) < 1e-10


def test_mismatched_grid_rejected(g256):
    with pytest.raises(ValueError):
        GridFunction(g256, np.ones(10))


def test_support_examples(g256):
    s = Spectrum.from_modes(g256, {3: TWO_PI})
    assert support_of(s).as_set() == {(3,)}
    assert len(support_of(Spectrum(g256, np.zeros(g256.size)))) == 0
    u = GridFunction.plane_wave(g256, 3) + GridFunction.plane_wave(g256, 5) * 1e-14
    assert support_of(transform(u), 1e-10).as_set() == {(3,)}


@pytest.mark.parametrize("tau", [0.0, 1.0, -1e-3])
def test_support_rejects_tau(g256, tau):
    with pytest.raises(ValueError):
        support_of(Spectrum(g256, np.ones(g256.size)), tau)


def test_support_monotone_in_tau(g256, rng):
    s = Spectrum(g256, rng.standard_normal(g256.size) * np.logspace(0, -15, g256.size))
    assert support_of(s, 1e-6).issubset(support_of(s, 1e-9))


def test_norm_examples(g256):
    u = GridFunction.plane_wave(g256, 3)
    n = norms(u, 1.0)
    assert n["L2"] == pytest.approx(np.sqrt(TWO_PI), rel=1e-12)
    assert n["sup"] == pytest.approx(1.0)
    assert n["Hs"] == pytest.approx(np.sqrt(TWO_PI * 10), rel=1e-12)
    z = norms(GridFunction.zeros(g256), 2.0)
    assert z == {"L2": 0.0, "sup": 0.0, "Hs": 0.0}
    two = GridFunction.plane_wave(g256, 3) + GridFunction.plane_wave(g256, 5)
    # direct quadrature of |u|^2 on the nodes
    assert norms(two)["L2"] ** 2 == pytest.approx(np.sum(np.abs(two.values) ** 2) * g256.dx, rel=1e-12)
    assert norms(two)["L2"] ** 2 == pytest.approx(2 * TWO_PI, rel=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([16, 64, 256]))
def test_parseval_and_linearity(seed, M):
    g = TorusGrid(1, M)
    r = np.random.default_rng(seed)
    u = GridFunction(g, r.standard_normal(M) + 1j * r.standard_normal(M))
    v = GridFunction(g, r.standard_normal(M))
    lhs = np.sum(np.abs(u.values) ** 2) * g.dx
    rhs = np.sum(np.abs(transform(u).coefficients) ** 2) / TWO_PI
    assert abs(lhs - rhs) <= 1e-12 * lhs
    a, b = 2.0 - 1j, 0.5
    combo = transform(u * a + v * b).coefficients
    sep = a * transform(u).coefficients + b * transform(v).coefficients
    assert np.abs(combo - sep).max() <= 1e-12 * np.abs(sep).max()


def test_torus_distance_is_metric():
    g = TorusGrid(1, 16)
    D = node_distance_matrix(g)
    assert np.allclose(D, D.T)
    assert np.all(np.diag(D) == 0)
    for i, j, k in itertools.product(range(16), repeat=3):
        assert D[i, k] <= D[i, j] + D[j, k] + 1e-12
    x = g.nodes
    assert np.allclose(torus_distance(x[:, None, :], x[None, :, :]), D)


def test_torus_distance_two_dimensional():
    g = TorusGrid(2, 16)
    D = node_distance_matrix(g)
    for i, j, k in itertools.product(range(0, g.size, 23), repeat=3):
        assert D[i, k] <= D[i, j] + D[j, k] + 1e-12
    assert torus_distance(np.array([0.1, 0.0]), np.array([2 * np.pi - 0.1, 0.0])) == pytest.approx(0.2)
