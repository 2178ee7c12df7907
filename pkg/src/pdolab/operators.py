"""Quantization, frequency-modulated operators, kernels, operator matrices and norms."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations

import numpy as np

from .grid import (
    TWO_PI,
    GridFunction,
    Spectrum,
    TorusGrid,
    band_radius,
    inverse,
    l2_norm,
    multiplier,
    support_mask,
    transform,
)
from .symbols import Symbol, xmod

logger = logging.getLogger(__name__)

BAND_TAU = 1e-10


@lru_cache(maxsize=4)
def difference_index(grid: TorusGrid) -> np.ndarray:
    """Flat index of ``(p - q) mod M`` for every pair of flat indices ``(p, q)``.

    Serves both node differences ``x - y`` and frequency differences ``zeta - eta``.
    """
    m = grid.node_index
    return grid.index_of(m[:, None, :] - m[None, :, :])


def _band_mask(grid: TorusGrid, band: float) -> np.ndarray:
    return grid.freq_norm <= band + 1e-9


def band_limited_coefficients(a: Symbol, u: GridFunction, tau: float = BAND_TAU) -> np.ndarray:
    """Spectrum of ``u`` restricted to the symbol's eta-band; rejects out-of-band mass."""
    if u.grid != a.grid:
        raise ValueError("symbol and input live on different grids")
    uh = transform(u).coefficients
    inside = _band_mask(a.grid, a.eta_band)
    live = support_mask(uh, tau)
    if (live & ~inside).any():
        k = float(a.grid.freq_norm[live & ~inside].max())
        raise ValueError(f"input spectrum reaches |eta|={k:g} beyond the symbol band {a.eta_band:g}")
    return uh * inside


def full_matrix(a: Symbol) -> np.ndarray:
    """``(2pi)^{-n} hat(a)(zeta - eta, eta)`` over the whole lattice; columns outside the band are zero."""
    g = a.grid
    cols = np.arange(g.size)
    mat = a.hat[difference_index(g), cols[None, :]] * TWO_PI ** (-g.n)
    return mat * _band_mask(g, a.eta_band)[None, :]


def quantize(a: Symbol, u: GridFunction, route: str = "direct") -> GridFunction:
    """``OP(a)u(x) = (2pi)^{-n} sum_eta exp(i x.eta) a(x, eta) u_hat(eta)``.

    ``route='direct'`` accumulates in x-space; ``route='matrix'`` contracts the
    operator matrix with ``u_hat`` and transforms back.
    """
    g = a.grid
    uh = band_limited_coefficients(a, u)
    if route == "direct":
        vals = (a.values * g.phase_table) @ uh * TWO_PI ** (-g.n)
        return GridFunction(g, vals)
    if route == "matrix":
        return inverse(Spectrum(g, full_matrix(a) @ uh))
    raise ValueError(f"unknown route {route!r}")


def compose_multiplier(a: Symbol, b) -> Symbol:
    """``c(x, eta) = a(x, eta) b(eta)``; ``b`` is a callable of lattice points or an array."""
    g = a.grid
    if callable(b):
        k = g.freqs.astype(float)
        b = b(k[:, 0] if g.n == 1 else k)
    return a.eta_multiply(np.broadcast_to(np.asarray(b, dtype=complex), (g.size,)))


def modulated_symbol(a: Symbol, psi, m: float) -> Symbol:
    """``psi(2^{-m} D_x) a(x, eta) psi(2^{-m} eta)``."""
    b = xmod(a, psi, m)
    return b.eta_multiply(psi(a.grid.freq_norm * 2.0 ** (-m)))


def modulated_op(a: Symbol, psi, m: float, u: GridFunction) -> GridFunction:
    return quantize(modulated_symbol(a, psi, m), u)


@dataclass
class LimitProbeReport:
    """Outcome of the vanishing-frequency-modulation probe."""

    sequences: dict = field(repr=False)
    cauchy: dict
    m0: dict
    limits: dict = field(repr=False)
    discrepancy: float
    bound: int

    @property
    def stabilized(self) -> bool:
        return all(v is not None for v in self.m0.values())


def modulation_limit_probe(a: Symbol, u: GridFunction, psi_list, m_max: int | None = None,
                           tol: float = 1e-12) -> LimitProbeReport:
    """Track ``A_m u`` for several modulation functions.

    ``m0`` is the first index from which every later Cauchy difference stays below
    ``tol * ||u||``; the limit is ``A_{m_max} u``.
    """
    if len(psi_list) < 2:
        raise ValueError("need at least two modulation functions")
    g = a.grid
    uh = band_limited_coefficients(a, u)
    band = max(a.x_band, band_radius(Spectrum(g, uh)), 1.0)
    r_min = min(p.r for p in psi_list)
    bound = int(np.ceil(np.log2(band / r_min)))
    if m_max is None:
        m_max = int(np.ceil(np.log2(g.freq_norm.max() / r_min))) + 2
    un = l2_norm(u)
    seqs, diffs, m0s, lims = {}, {}, {}, {}
    for i, psi in enumerate(psi_list):
        seq = [modulated_op(a, psi, m, u) for m in range(m_max + 1)]
        dif = [l2_norm(seq[m + 1] - seq[m]) for m in range(m_max)]
        small = [dv <= tol * max(un, 1e-300) for dv in dif]
        m0 = None
        for m in range(m_max):
            if all(small[m:]):
                m0 = m
                break
        seqs[i], diffs[i], m0s[i], lims[i] = seq, dif, m0, seq[-1]
    disc = 0.0
    for i, j in combinations(range(len(psi_list)), 2):
        disc = max(disc, l2_norm(lims[i] - lims[j]) / max(un, 1e-300))
    return LimitProbeReport(seqs, diffs, m0s, lims, disc, bound)


# -- kernels ------------------------------------------------------------------


def _kernel_z(grid: TorusGrid, values: np.ndarray) -> np.ndarray:
    """``k(x, z) = F^{-1}_{eta -> z} a(x, eta)`` at nodes ``z``."""
    v = values.reshape((grid.size,) + grid.shape)
    axes = tuple(range(1, grid.n + 1))
    return np.fft.ifftn(v, axes=axes).reshape(grid.size, grid.size) / grid.cell


def _wrap(grid: TorusGrid, kz: np.ndarray) -> np.ndarray:
    rows = np.arange(grid.size)[:, None]
    return kz[rows, difference_index(grid)]


def kernel(a: Symbol) -> np.ndarray:
    """``K(x, y) = F^{-1}_{eta -> z} a(x, eta)`` at ``z = x - y`` (torus-wrapped)."""
    return _wrap(a.grid, _kernel_z(a.grid, a.values))


def kernel_m(a: Symbol, psi, m: float, route: str = "convolution") -> np.ndarray:
    """Kernel of ``OP(psi(2^{-m}D_x) a psi(2^{-m} eta))``.

    ``route='convolution'`` convolves ``k(x, z)`` with ``F^{-1} psi(2^{-m} .)`` in
    both variables; ``route='symbol'`` takes the kernel of the modulated symbol.
    """
    g = a.grid
    if route == "symbol":
        return kernel(modulated_symbol(a, psi, m))
    if route != "convolution":
        raise ValueError(f"unknown route {route!r}")
    check = inverse(Spectrum(g, psi(g.freq_norm * 2.0 ** (-m)))).values
    circ = check[difference_index(g)] * g.cell
    kz = circ @ _kernel_z(g, a.values) @ circ.T
    return _wrap(g, kz)


# -- commutator ---------------------------------------------------------------


def x_derivative(a: Symbol, axis: int = 0) -> Symbol:
    """``D_{x_j} a`` by exact spectral differentiation."""
    xi = a.grid.freqs[:, axis].astype(float)
    return a.derived(hat=a.hat * xi[:, None], d=a.d + 1)


def commutator_defect(a: Symbol, u: GridFunction, axis: int = 0) -> float:
    """``||D_j OP(a)u - OP(a) D_j u - OP(D_{x_j} a)u|| / ||u||`` (L2)."""
    g = a.grid
    uh = band_limited_coefficients(a, u)
    ub = band_radius(Spectrum(g, uh))
    need = a.x_band + ub
    if need > g.kmax:
        raise ValueError(f"headroom violation: x-band {a.x_band:g} + input band {ub:g} exceeds {g.kmax}")
    k = g.freqs[:, axis].astype(float)
    u = inverse(Spectrum(g, uh))
    lhs = multiplier(quantize(a, u), k)
    rhs = quantize(a, multiplier(u, k)) + quantize(x_derivative(a, axis), u)
    un = l2_norm(u)
    return l2_norm(lhs - rhs) / un if un else 0.0


# -- operator matrices and norms ---------------------------------------------


@dataclass(frozen=True, eq=False)
class OperatorMatrix:
    """Dense block of the operator matrix over declared bands."""

    grid: TorusGrid
    matrix: np.ndarray = field(repr=False)
    zeta_index: np.ndarray = field(repr=False)
    eta_index: np.ndarray = field(repr=False)
    eta_band: float
    zeta_band: float

    @property
    def zeta(self) -> np.ndarray:
        return self.grid.freqs[self.zeta_index]

    @property
    def eta(self) -> np.ndarray:
        return self.grid.freqs[self.eta_index]

    def apply(self, uh: np.ndarray) -> np.ndarray:
        """Apply to a full-lattice spectrum; returns a full-lattice spectrum."""
        out = np.zeros(self.grid.size, dtype=complex)
        out[self.zeta_index] = self.matrix @ uh[self.eta_index]
        return out

    def meta(self) -> dict:
        return {"kind": "opmatrix", "eta_band": self.eta_band, "zeta_band": self.zeta_band, **self.grid.to_dict()}


def operator_matrix(a: Symbol, eta_band: float | None = None, zeta_band: float | None = None) -> OperatorMatrix:
    """Entries ``(2pi)^{-n} hat(a)(zeta - eta, eta)`` for ``|zeta| <= zeta_band``, ``|eta| <= eta_band``."""
    g = a.grid
    eb = a.eta_band if eta_band is None else float(eta_band)
    zb = float(g.kmax) if zeta_band is None else float(zeta_band)
    top = float(g.freq_norm.max())
    if eb > top or zb > top:
        raise ValueError("bands must lie within the lattice")
    ei = np.nonzero(_band_mask(g, eb))[0]
    zi = np.nonzero(_band_mask(g, zb))[0]
    full = full_matrix(a)
    return OperatorMatrix(g, full[np.ix_(zi, ei)], zi, ei, eb, zb)


@dataclass(frozen=True)
class NormResult:
    norm: float
    iterations: int
    converged: bool
    residual: float


def operator_norm(mat: OperatorMatrix, s_in: float = 0.0, s_out: float = 0.0, tol: float = 1e-8,
                  max_iter: int = 10_000, seed: int = 0) -> NormResult:
    """Largest singular value of the ``H^{s_in} -> H^{s_out}`` weighted matrix by power iteration."""
    g = mat.grid
    wz = (1.0 + g.freq_norm[mat.zeta_index] ** 2) ** (s_out / 2.0)
    we = (1.0 + g.freq_norm[mat.eta_index] ** 2) ** (-s_in / 2.0)
    W = wz[:, None] * mat.matrix * we[None, :]
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(W.shape[1]) + 1j * rng.standard_normal(W.shape[1])
    v /= np.linalg.norm(v)
    lam = 0.0
    for it in range(1, max_iter + 1):
        w = W @ v
        sigma = np.linalg.norm(w)
        if sigma == 0.0:
            return NormResult(0.0, it, True, 0.0)
        v_new = W.conj().T @ w
        v_new /= np.linalg.norm(v_new)
        if abs(sigma - lam) <= tol * sigma:
            res = float(np.linalg.norm(W.conj().T @ (W @ v_new) - sigma**2 * v_new)) / sigma**2
            return NormResult(float(sigma), it, True, res)
        lam, v = sigma, v_new
    res = float(np.linalg.norm(W.conj().T @ (W @ v) - lam**2 * v)) / max(lam**2, 1e-300)
    logger.warning("power iteration did not converge in %d steps (residual %.3e)", max_iter, res)
    return NormResult(float(lam), max_iter, False, res)
