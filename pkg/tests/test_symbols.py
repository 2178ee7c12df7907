import numpy as np
import pytest

from pdolab.cutoffs import Corona, RadialCutoff, TwistedCutoff
from pdolab.grid import TorusGrid
from pdolab.operators import full_matrix
from pdolab.symbols import (
    Symbol,
    adjoint_symbol,
    ching,
    cone_check,
    constant_symbol,
    exponential_symbol,
    feep_check,
    max_ching_level,
    n_seminorm,
    partial_ft,
    random_symbol,
    seminorm_p,
    split_symbols,
    tdc_check,
    twisted_decomposition,
    twisted_localize,
    xmod,
)

CHI = TwistedCutoff()


@pytest.fixture(scope="module")
def ch0(g1024):
    return ching(sigma=0, grid=g1024)


def test_ching_value_at_dyadic_point(g1024, ch0):
    x = g1024.nodes[:, 0]
    col = ch0.values[:, 4]
    assert np.allclose(col, np.exp(-4j * x), atol=1e-12)


def test_ching_sigma2_vanishes_at_theta_multiples(g1024):
    a = ching(sigma=2, grid=g1024)
    for j in range(0, a.ching["J_max"] + 1):
        assert np.abs(a.values[:, 2**j]).max() == 0.0


def test_ching_closed_form_agrees(g1024):
    for s in (0, 1, 2):
        a = ching(sigma=s, d=0.5, grid=g1024)
        x = g1024.nodes[:, 0][:, None]
        k = g1024.freqs[:, 0].astype(float)[None, :]
        ref = a.func(x, k)
        assert np.abs(ref - a.values).max() <= 1e-12 * np.abs(a.values).max()


def test_ching_partial_ft_support(g1024, ch0):
    g = g1024
    allowed = set()
    for j in range(ch0.ching["J_max"] + 1):
        for e in range(-g.M // 2, g.M // 2):
            if 0.75 * 2**j <= abs(e) <= 1.25 * 2**j:
                allowed.add((-(2**j), e))
    mask = np.abs(ch0.hat) > 1e-12 * np.abs(ch0.hat).max()
    xi_i, eta_i = np.nonzero(mask)
    got = {(int(g.freqs[i, 0]), int(g.freqs[j, 0])) for i, j in zip(xi_i, eta_i)}
    assert got and got <= allowed


def test_ching_rejects_large_level(g1024):
    top = max_ching_level(g1024)
    assert 1.25 * 2**top <= g1024.kmax < 1.25 * 2 ** (top + 1)
    with pytest.raises(ValueError, match=str(top)):
        ching(J_max=top + 1, grid=g1024)


def test_partial_ft_round_trip(g1024):
    a = random_symbol(g1024, 12, d=1.0, seed=4)
    back = partial_ft(a).inverse()
    assert np.abs(back - a.values).max() <= 1e-12 * np.abs(a.values).max()
    b = Symbol(g1024, a.values.copy())
    assert np.abs(b.hat - a.hat).max() <= 1e-12 * np.abs(a.hat).max()


def test_seminorm_examples(g1024):
    eta = constant_symbol(g1024, lambda e: e, d=1.0)
    p00 = seminorm_p(eta, 0, 0)
    assert p00["value"] == pytest.approx(g1024.kmax / (1 + g1024.kmax), rel=1e-12)
    p10 = seminorm_p(eta, 1, 0, eta_max=200)
    assert p10["method"] == "fd4" and p10["value"] == pytest.approx(1.0, abs=1e-12)
    e = exponential_symbol(g1024, -1)
    assert seminorm_p(e, 0, 1)["value"] == pytest.approx(1.0, abs=1e-12)


def test_seminorm_rejects_uncovered_band(g1024):
    eta = constant_symbol(g1024, lambda e: e, d=1.0)
    with pytest.raises(ValueError):
        seminorm_p(eta, 2, 0, eta_max=g1024.kmax)


def test_seminorm_uses_analytic_ching_derivative(g1024, ch0):
    an = seminorm_p(ch0, 1, 0)
    fd = seminorm_p(ch0, 1, 0, method="fd4", eta_max=500)
    assert an["method"] == "analytic"
    assert an["value"] == pytest.approx(fd["value"], rel=0.05)


def test_xmod_examples(g1024):
    psi = RadialCutoff()
    e1 = exponential_symbol(g1024, -1)
    e4 = exponential_symbol(g1024, -4)
    assert np.allclose(xmod(e1, psi, 0).values, e1.values, atol=1e-13)
    assert np.abs(xmod(e4, psi, 0).values).max() < 1e-13
    assert np.allclose(xmod(e4, Corona(psi), 2).values, e4.values, atol=1e-13)


def test_constant_symbol_localizes_to_zero(g1024):
    a = constant_symbol(g1024, lambda e: 1 + e**2, d=2.0)
    for eps in (0.5, 0.125):
        assert np.abs(twisted_localize(a, CHI, eps).hat).max() == 0.0
        assert n_seminorm(a, CHI, eps)["value"] == 0.0


def test_feep_supports_for_ching(ch0):
    parts = twisted_decomposition(ch0, CHI, 6)
    for nu, e in enumerate(parts[1:]):
        assert feep_check(e, 2.0**-nu)["pass"]


def test_decomposition_reconstructs(g1024, ch0):
    nu_max = 4
    parts = twisted_decomposition(ch0, CHI, nu_max)
    total = sum(p.hat for p in parts)
    band = 2.0**-nu_max * g1024.freq_norm < 2
    err = np.abs(total - ch0.hat)[:, band].max()
    assert err <= 1e-12 * np.abs(ch0.hat).max()


def test_twisted_localize_rejects_eps(ch0):
    with pytest.raises(ValueError):
        twisted_localize(ch0, CHI, 0.0)
    with pytest.raises(ValueError):
        twisted_localize(ch0, CHI, 1.5)


@pytest.mark.parametrize("sigma", [0, 1, 2])
def test_localized_sup_decays(g1024, sigma):
    a = ching(sigma=sigma, grid=g1024)
    nus = np.arange(1, 7)
    sups = [np.abs(twisted_localize(a, CHI, 2.0**-nu).values).max() for nu in nus]
    slope = np.polyfit(-nus, np.log2(sups), 1)[0]
    assert slope >= sigma - 1


def test_n_seminorm_ching_slope(ch0):
    nus = np.arange(1, 7)
    vals = [n_seminorm(ch0, CHI, 2.0**-nu)["value"] for nu in nus]
    slope = np.polyfit(-nus, np.log2(vals), 1)[0]
    assert abs(slope - 0.5) <= 0.3


def test_adjoint_examples(g1024):
    e = exponential_symbol(g1024, -1)
    e = e.derived(hat=e.hat, eta_band=g1024.kmax - 1)
    adj = adjoint_symbol(e)
    assert np.allclose(adj.values[:, : g1024.kmax - 1], exponential_symbol(g1024, 1).values[:, : g1024.kmax - 1])
    c = constant_symbol(g1024, lambda k: 1 + k**2, d=2.0)
    inband = g1024.freq_norm <= c.eta_band
    assert np.allclose(adjoint_symbol(c).values[:, inband], c.values[:, inband])


def test_adjoint_matrix_identity_and_involution(ch0):
    adj = adjoint_symbol(ch0)
    G = full_matrix(ch0)
    scale = np.abs(G).max()
    assert np.abs(full_matrix(adj) - G.conj().T).max() <= 1e-10 * scale
    assert np.abs(full_matrix(adjoint_symbol(adj)) - G).max() <= 1e-10 * scale


def test_adjoint_rejects_missing_headroom(g1024):
    a = random_symbol(g1024, 16, seed=3)
    with pytest.raises(ValueError, match="pad"):
        adjoint_symbol(a)


def test_tdc_examples(g1024, psi):
    c = constant_symbol(g1024, lambda k: (1 + k**2) ** 0.5, d=1.0)
    assert tdc_check(c, 1.0)["pass"]
    r = tdc_check(ching(sigma=0, J_max=5, grid=g1024), 10.0)
    assert not r["pass"]
    assert r["worst_violation"][:2] == (-32, 32)
    sp = split_symbols(ching(sigma=0, grid=g1024), psi)
    assert tdc_check(sp.a1, 2.0)["pass"] and tdc_check(sp.a3, 2.0)["pass"]
    with pytest.raises(ValueError):
        tdc_check(c, 0.5)


def test_split_constant_coefficient(g1024, psi):
    a = constant_symbol(g1024, lambda k: 1 + k**2, d=2.0)
    sp = split_symbols(a, psi)
    assert np.abs(sp.a3.hat).max() == 0.0
    tot = sp.a1.values + sp.a2.values + sp.a3.values
    assert np.abs(tot - a.values).max() <= 1e-12 * np.abs(a.values).max()
    # a^(1) = sum_{k>=h} a phi(2^{-k} eta), evaluated independently
    phi = Corona(psi)
    rho = g1024.freq_norm
    w = sum(phi(rho * 2.0**-k) for k in range(3, 14))
    assert np.allclose(sp.a1.values[0], a.values[0] * w, atol=1e-9 * np.abs(a.values).max())


def test_split_identity_and_cones(ch0, psi):
    sp = split_symbols(ch0, psi)
    tot = sp.a1.values + sp.a2.values + sp.a3.values
    assert np.abs(tot - ch0.values).max() <= 1e-12 * np.abs(ch0.values).max()
    assert cone_check(sp)["violations"] == 0
    assert sp.a1.tdc_B == pytest.approx(2.0)


def test_split_rejects_small_h(ch0, psi):
    with pytest.raises(ValueError):
        split_symbols(ch0, psi, h=2)


def test_symbol_shape_checked(g1024):
    with pytest.raises(ValueError):
        Symbol(g1024, np.zeros((4, 4)))
    with pytest.raises(ValueError):
        Symbol(g1024, np.zeros((g1024.size, g1024.size)), eta_band=g1024.M)


def test_two_dimensional_ching():
    g = TorusGrid(2, 32)
    a = ching(sigma=1, theta=(1, 1), grid=g)
    x = g.nodes[:, None, :]
    k = g.freqs.astype(float)[None, :, :]
    assert np.abs(a.func(x, k) - a.values).max() <= 1e-12 * max(np.abs(a.values).max(), 1)
