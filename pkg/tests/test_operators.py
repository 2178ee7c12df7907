import numpy as np
import pytest

from pdolab.cutoffs import Corona, RadialCutoff
from pdolab.grid import GridFunction, Spectrum, TorusGrid, inverse, l2_norm, multiplier, transform
from pdolab.operators import (
    commutator_defect,
    compose_multiplier,
    full_matrix,
    kernel,
    kernel_m,
    modulated_op,
    modulated_symbol,
    modulation_limit_probe,
    operator_matrix,
    operator_norm,
    quantize,
)
from pdolab.symbols import ching, constant_symbol, exponential_symbol, random_symbol, xmod
from pdolab.corpus import random_input


@pytest.fixture(scope="module")
def g():
    return TorusGrid(1, 256)


def wave(g, k):
    return GridFunction.plane_wave(g, k)


def test_identity_symbol(g):
    u = random_input(g, 60, seed=1)
    one = constant_symbol(g, lambda e: np.ones_like(e), d=0.0)
    assert np.abs(quantize(one, u).values - u.values).max() < 1e-12


def test_eta_symbol_is_derivative(g):
    eta = constant_symbol(g, lambda e: e, d=1.0)
    assert np.allclose(quantize(eta, wave(g, 3)).values, 3 * wave(g, 3).values, atol=1e-12)


def test_symbol_recovery(g):
    e = exponential_symbol(g, -1)
    assert np.allclose(quantize(e, wave(g, 3)).values, wave(g, 2).values, atol=1e-12)


@pytest.mark.parametrize("make", [
    lambda g: exponential_symbol(g, -1),
    lambda g: ching(sigma=0, grid=g),
    lambda g: ching(sigma=2, d=1.0, grid=g),
    lambda g: random_symbol(g, 8, d=1.0, seed=2),
])
def test_two_routes_agree(g, make):
    a = make(g)
    u = random_input(g, 100, seed=3)
    d = quantize(a, u).values
    m = quantize(a, u, route="matrix").values
    assert np.abs(d - m).max() <= 1e-10 * np.abs(d).max()
    # matrix times u_hat equals the transform of the direct route
    uh = transform(u).coefficients
    lhs = full_matrix(a) @ uh
    rhs = transform(GridFunction(g, d)).coefficients
    assert np.abs(lhs - rhs).max() <= 1e-10 * np.abs(rhs).max()


def test_quantize_linear(g):
    a = random_symbol(g, 8, seed=5)
    b = ching(sigma=1, grid=g)
    u = random_input(g, 80, seed=6)
    v = random_input(g, 80, seed=7)
    lhs = quantize(a, 2 * u + 1j * v).values
    rhs = 2 * quantize(a, u).values + 1j * quantize(a, v).values
    assert np.abs(lhs - rhs).max() <= 1e-12 * np.abs(rhs).max()
    lhs = quantize(a + b, u).values
    rhs = quantize(a, u).values + quantize(b, u).values
    assert np.abs(lhs - rhs).max() <= 1e-12 * np.abs(rhs).max()


def test_band_mismatch_rejected(g):
    e = exponential_symbol(g, -1)
    narrow = e.derived(hat=e.hat, eta_band=10)
    with pytest.raises(ValueError, match="beyond"):
        quantize(narrow, wave(g, 20))
    with pytest.raises(ValueError):
        quantize(e, wave(TorusGrid(1, 64), 1))


def test_compose_multiplier(g):
    e = exponential_symbol(g, -1)
    c = compose_multiplier(e, lambda k: k)
    assert np.allclose(quantize(c, wave(g, 3)).values, 3 * wave(g, 2).values, atol=1e-12)
    same = compose_multiplier(e, lambda k: np.ones_like(k))
    assert np.allclose(same.values, e.values, atol=1e-14)


def test_compose_realizes_littlewood_paley_piece(g, psi):
    a = ching(sigma=0, grid=g)
    phi = Corona(psi)
    u = random_input(g, 120, seed=8)
    for k in (2, 4, 5):
        mult = phi(g.freq_norm * 2.0**-k)
        lhs = quantize(compose_multiplier(a, mult), u)
        rhs = quantize(a, multiplier(u, mult))
        assert l2_norm(lhs - rhs) <= 1e-10 * l2_norm(u)


def test_modulated_op_examples(g, psi):
    a = ching(sigma=0, grid=g)
    u = random_input(g, 100, seed=9)
    full = quantize(a, u).values
    assert np.abs(modulated_op(a, psi, 7, u).values - full).max() <= 1e-12 * np.abs(full).max()
    e = exponential_symbol(g, -1)
    assert np.abs(modulated_op(e, psi, 0, wave(g, 3)).values).max() < 1e-14


def test_modulated_op_matches_definition(g, psi):
    a = random_symbol(g, 12, seed=10)
    u = random_input(g, 100, seed=11)
    m = 4
    ref = quantize(xmod(a, psi, m), multiplier(u, psi(g.freq_norm / 2**m)))
    assert np.allclose(modulated_op(a, psi, m, u).values, ref.values, atol=1e-12)


def test_limit_probe_stabilizes(g):
    psis = [RadialCutoff(1, 2), RadialCutoff(0.75, 2.5)]
    a = ching(sigma=0, grid=g)
    u = random_input(g, 60, seed=12)
    rep = modulation_limit_probe(a, u, psis)
    assert rep.stabilized
    assert max(rep.m0.values()) <= rep.bound
    assert rep.discrepancy <= 1e-12


def test_limit_probe_constant_coefficient(g):
    psis = [RadialCutoff(1, 2), RadialCutoff(0.5, 3)]
    a = constant_symbol(g, lambda e: (1 + e**2) ** 0.5, d=1.0)
    u = random_input(g, 60, seed=13)
    rep = modulation_limit_probe(a, u, psis)
    ref = quantize(a, u)
    for lim in rep.limits.values():
        assert l2_norm(lim - ref) <= 1e-12 * l2_norm(ref)


def test_limit_probe_needs_two(g, psi):
    a = ching(sigma=0, grid=g)
    with pytest.raises(ValueError):
        modulation_limit_probe(a, wave(g, 1), [psi])


def test_kernel_examples(g):
    one = constant_symbol(g, lambda e: np.ones_like(e), d=0.0)
    K = kernel(one)
    assert np.allclose(K, np.eye(g.size) / g.cell, atol=1e-9)
    K = kernel(exponential_symbol(g, -1))
    x = g.nodes[:, 0]
    assert np.allclose(K, np.diag(np.exp(-1j * x)) / g.cell, atol=1e-9)


def test_kernel_quadrature_reproduces_operator(g):
    a = random_symbol(g, 8, seed=14)
    u = random_input(g, 100, seed=15)
    out = kernel(a) @ u.values * g.cell
    ref = quantize(a, u).values
    assert np.abs(out - ref).max() <= 1e-10 * np.abs(ref).max()


def test_kernel_m_two_routes(g, psi):
    a = ching(sigma=0, grid=g)
    A = kernel_m(a, psi, 3, route="convolution")
    B = kernel_m(a, psi, 3, route="symbol")
    assert np.abs(A - B).max() <= 1e-10 * np.abs(B).max()
    with pytest.raises(ValueError):
        kernel_m(a, psi, 3, route="other")


def test_commutator_examples(g, psi):
    c = constant_symbol(g, lambda e: 1 + e**2, d=2.0)
    u = random_input(g, 60, seed=16)
    # zero up to rounding in a symbol of size ~ band^2, with one more factor of band from D
    assert commutator_defect(c, u) <= 1e-14 * (1 + 60**2) * 60
    assert commutator_defect(exponential_symbol(g, -1), wave(g, 3)) <= 1e-12
    m3 = modulated_symbol(ching(sigma=0, grid=g), psi, 3)
    assert commutator_defect(m3, u) <= 1e-10


def test_commutator_headroom(g):
    a = random_symbol(g, 40, seed=17)
    with pytest.raises(ValueError, match="headroom"):
        commutator_defect(a, random_input(g, 100, seed=18))


def test_operator_norm_examples(g):
    one = constant_symbol(g, lambda e: np.ones_like(e), d=0.0)
    mat = operator_matrix(one)
    assert np.allclose(mat.matrix, np.eye(mat.matrix.shape[0]))
    assert operator_norm(mat).norm == pytest.approx(1.0, abs=1e-8)
    e = exponential_symbol(g, -1)
    res = operator_norm(operator_matrix(e, eta_band=100, zeta_band=101))
    assert res.converged and res.norm == pytest.approx(1.0, abs=1e-8)


def test_operator_norm_against_svd(g):
    a = ching(sigma=1, grid=g)
    mat = operator_matrix(a, eta_band=90)
    res = operator_norm(mat, s_in=1.0, s_out=0.5)
    wz = (1 + g.freq_norm[mat.zeta_index] ** 2) ** 0.25
    we = (1 + g.freq_norm[mat.eta_index] ** 2) ** -0.5
    ref = np.linalg.svd(wz[:, None] * mat.matrix * we[None, :], compute_uv=False)[0]
    assert res.norm == pytest.approx(ref, rel=1e-6)


def test_operator_norm_reports_nonconvergence(g, caplog):
    a = random_symbol(g, 8, seed=19)
    res = operator_norm(operator_matrix(a), max_iter=2, tol=1e-15)
    assert not res.converged and res.iterations == 2 and res.residual > 0


def test_operator_matrix_rejects_bands(g):
    with pytest.raises(ValueError):
        operator_matrix(exponential_symbol(g, -1), eta_band=1e6)


def test_ching_norm_increases():
    g = TorusGrid(1, 512)
    norms = [operator_norm(operator_matrix(ching(sigma=0, J_max=J, grid=g))).norm for J in range(3, 8)]
    assert all(b > a for a, b in zip(norms, norms[1:]))


def test_operator_matrix_apply(g):
    a = ching(sigma=0, grid=g)
    u = random_input(g, 100, seed=20)
    mat = operator_matrix(a)
    out = inverse(Spectrum(g, mat.apply(transform(u).coefficients))).values
    ref = quantize(a, u).values
    assert np.abs(out - ref).max() <= 1e-10 * np.abs(ref).max()
