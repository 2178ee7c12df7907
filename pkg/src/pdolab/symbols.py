"""Symbols ``a(x, eta)`` on the discretized torus and the operations acting on them.

A :class:`Symbol` always carries a sampled array ``values[x, eta]`` of shape
``(P, P)`` with ``P = M^n``: rows are nodes (row-major), columns are lattice
frequencies in FFT order.  Its partial Fourier transform ``hat[xi, eta]`` uses
the same layout with rows indexed by the x-frequency ``xi``.

Sums such as ``xi + eta`` are formed on the integer lattice *without* wrap;
this is what the support conditions are about.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np

from .cutoffs import LPConstants, RadialCutoff, TwistedCutoff, glue, glue_prime, lp_constants
from .grid import TWO_PI, TorusGrid, support_mask

HAT_TAU = 1e-13


def hat_of(grid: TorusGrid, values: np.ndarray) -> np.ndarray:
    v = values.reshape(grid.shape + (grid.size,))
    axes = tuple(range(grid.n))
    return np.fft.fftn(v, axes=axes).reshape(grid.size, grid.size) * grid.cell


def values_of(grid: TorusGrid, hat: np.ndarray) -> np.ndarray:
    h = hat.reshape(grid.shape + (grid.size,))
    axes = tuple(range(grid.n))
    return np.fft.ifftn(h, axes=axes).reshape(grid.size, grid.size) / grid.cell


def _eval_points(grid: TorusGrid):
    """Broadcastable node and frequency arguments for closed-form evaluators."""
    x = grid.nodes
    k = grid.freqs.astype(float)
    if grid.n == 1:
        return x[:, 0][:, None], k[:, 0][None, :]
    return x[:, None, :], k[None, :, :]


@dataclass(frozen=True, eq=False)
class Symbol:
    """Sampled symbol with optional closed form and metadata.

    Parameters
    ----------
    grid : TorusGrid
    values : ndarray, shape (P, P)
        ``a(x, eta)`` at nodes (rows) and lattice frequencies (columns, FFT order).
    d : float
        Order of the symbol.
    eta_band : float, optional
        Radius of the admissible input band ``|eta| <= eta_band``; defaults to
        ``M/2 - 1``.
    func : callable, optional
        Closed form ``func(x, eta)``; in 1-D it receives column/row vectors,
        in 2-D arrays with a trailing coordinate axis.
    eta_derivs : dict, optional
        Analytic evaluators of ``d^alpha/d eta^alpha a`` keyed by multi-index.
    tdc_B : float, optional
        Constant of the twisted diagonal condition, when known.
    ching : dict, optional
        Parameters of a Ching symbol.
    """

    grid: TorusGrid
    values: np.ndarray = field(repr=False)
    d: float = 0.0
    eta_band: float | None = None
    func: Callable | None = field(default=None, repr=False)
    eta_derivs: dict | None = field(default=None, repr=False)
    tdc_B: float | None = None
    ching: dict | None = None
    name: str = ""
    hat_values: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        P = self.grid.size
        v = np.asarray(self.values, dtype=complex)
        if v.shape != (P, P):
            raise ValueError(f"sampled symbol must have shape {(P, P)}, got {v.shape}")
        object.__setattr__(self, "values", v)
        if self.eta_band is None:
            object.__setattr__(self, "eta_band", float(self.grid.kmax))
        if self.eta_band > self.grid.kmax:
            raise ValueError("eta_band exceeds the lattice")

    @classmethod
    def from_callable(cls, grid: TorusGrid, func, d: float = 0.0, **kw) -> "Symbol":
        x, k = _eval_points(grid)
        vals = np.broadcast_to(np.asarray(func(x, k), dtype=complex), (grid.size, grid.size))
        return cls(grid, np.array(vals), d=d, func=func, **kw)

    @classmethod
    def from_hat(cls, grid: TorusGrid, hat: np.ndarray, d: float = 0.0, **kw) -> "Symbol":
        return cls(grid, values_of(grid, hat), d=d, hat_values=np.asarray(hat, dtype=complex), **kw)

    @cached_property
    def hat(self) -> np.ndarray:
        if self.hat_values is not None:
            return self.hat_values
        return hat_of(self.grid, self.values)

    @cached_property
    def x_band(self) -> float:
        """Largest ``|xi|`` carrying mass in ``hat`` (relative threshold 1e-13)."""
        rows = support_mask(self.hat, HAT_TAU).any(axis=1)
        return float(self.grid.freq_norm[rows].max()) if rows.any() else 0.0

    def derived(self, values=None, hat=None, **changes) -> "Symbol":
        """New sampled symbol sharing grid/order/band; closed form is dropped."""
        base = dict(d=self.d, eta_band=self.eta_band, tdc_B=None, ching=None, name=self.name)
        base.update(changes)
        if hat is not None:
            return Symbol.from_hat(self.grid, hat, **base)
        return Symbol(self.grid, values, **base)

    def _other(self, other):
        if not isinstance(other, Symbol) or other.grid != self.grid:
            raise ValueError("symbols live on different grids")
        return other

    def __add__(self, other):
        o = self._other(other)
        return self.derived(hat=self.hat + o.hat, d=max(self.d, o.d), eta_band=min(self.eta_band, o.eta_band))

    def __sub__(self, other):
        o = self._other(other)
        return self.derived(hat=self.hat - o.hat, d=max(self.d, o.d), eta_band=min(self.eta_band, o.eta_band))

    def __mul__(self, c):
        return self.derived(hat=self.hat * c)

    __rmul__ = __mul__

    def eta_multiply(self, b) -> "Symbol":
        """``a(x, eta) b(eta)`` for ``b`` given per lattice point."""
        b = np.asarray(b)
        return self.derived(hat=self.hat * b[None, :])

    def meta(self) -> dict:
        out = {"kind": "symbol", "d": self.d, "eta_band": self.eta_band, "name": self.name, **self.grid.to_dict()}
        if self.ching is not None:
            out["ching"] = dict(self.ching)
        if self.tdc_B is not None:
            out["tdc_B"] = self.tdc_B
        return out


@dataclass(frozen=True, eq=False)
class PartialFT:
    """``hat(xi, eta) = F_{x -> xi} a(x, eta)`` on the full lattice."""

    grid: TorusGrid
    hat: np.ndarray = field(repr=False)

    def inverse(self) -> np.ndarray:
        return values_of(self.grid, self.hat)


def partial_ft(a: Symbol) -> PartialFT:
    return PartialFT(a.grid, a.hat)


# -- simple symbol families ---------------------------------------------------


def constant_symbol(grid: TorusGrid, f, d: float = 0.0, name: str = "") -> Symbol:
    """Constant-coefficient symbol ``a(x, eta) = f(eta)``; ``f`` receives lattice points."""
    k = grid.freqs.astype(float)
    row = np.asarray(f(k[:, 0] if grid.n == 1 else k), dtype=complex)
    vals = np.broadcast_to(row[None, :], (grid.size, grid.size)).copy()
    hat = np.zeros_like(vals)
    hat[0] = row * TWO_PI**grid.n
    return Symbol(grid, vals, d=d, tdc_B=1.0, name=name or "constant", hat_values=hat)


def exponential_symbol(grid: TorusGrid, k, name: str = "") -> Symbol:
    """Multiplication symbol ``a(x, eta) = exp(i k.x)`` (order 0)."""
    k = np.atleast_1d(np.asarray(k, dtype=np.int64))
    roots = np.exp(2j * np.pi * np.arange(grid.M) / grid.M)
    col = roots[np.mod(grid.node_index @ k, grid.M)]
    vals = np.broadcast_to(col[:, None], (grid.size, grid.size)).copy()
    hat = np.zeros_like(vals)
    hat[grid.index_of(k)] = TWO_PI**grid.n
    return Symbol(grid, vals, d=0.0, name=name or f"exp({k.tolist()})", hat_values=hat)


def random_symbol(grid: TorusGrid, x_band: int, d: float = 0.0, seed: int = 0, name: str = "") -> Symbol:
    """Random sampled symbol with x-spectrum in ``|xi| <= x_band`` and ``(1+|eta|)^d`` growth."""
    rng = np.random.default_rng(seed)
    P = grid.size
    hat = rng.standard_normal((P, P)) + 1j * rng.standard_normal((P, P))
    hat *= (grid.freq_norm <= x_band)[:, None]
    hat *= ((1.0 + grid.freq_norm) ** d)[None, :]
    return Symbol.from_hat(grid, hat, d=d, name=name or f"random(x_band={x_band}, seed={seed})")


# -- Ching family -------------------------------------------------------------


def _ching_profile(t, theta, sigma, n, deriv=0, ramp=1.0 / 16):
    """``A_sigma(t)`` or its derivative, 1-D signed ``t``; in 2-D ``t`` has a trailing axis."""
    tnorm = float(np.sqrt(np.sum(np.square(theta))))
    if n == 1:
        s = t - theta[0]
        dist = np.abs(s)
    else:
        diff = t - np.asarray(theta, dtype=float)
        dist = np.sqrt((diff**2).sum(axis=-1))
        s = dist
    arg = (dist / tnorm - (0.25 - ramp)) / ramp
    bump = glue(arg)
    if deriv == 0:
        return s**sigma * bump
    if n != 1:
        raise NotImplementedError("analytic Ching derivatives are provided for n=1")
    dbump = glue_prime(arg) / (ramp * tnorm) * np.sign(s)
    lead = sigma * s ** (sigma - 1) if sigma > 0 else 0.0
    return lead * bump + s**sigma * dbump


def max_ching_level(grid: TorusGrid, theta=1) -> int:
    theta = np.atleast_1d(theta)
    tn = float(np.sqrt(np.sum(np.square(theta))))
    J = -1
    while 1.25 * tn * 2 ** (J + 1) <= grid.kmax:
        J += 1
    return J


def ching(d: float = 0.0, sigma: int = 0, theta=1, J_max: int | None = None, grid: TorusGrid | None = None,
          ramp: float = 1.0 / 16) -> Symbol:
    """Ching symbol ``sum_j 2^{jd} exp(-i 2^j x.theta) A_sigma(2^{-j} eta)``.

    ``A_sigma(t) = (t - theta)^sigma bump(t)`` (``|t - theta|^sigma`` in 2-D).  The
    bump is supported in ``|t - theta| <= |theta|/4``, a ball inside the corona
    ``3/4 <= |t|/|theta| <= 5/4``, and equals 1 on ``|t - theta| <= (1/4 - ramp)|theta|``.
    """
    if not 0 < ramp <= 0.25:
        raise ValueError("ramp must lie in (0, 1/4]")
    if grid is None:
        raise ValueError("a grid is required")
    theta = np.atleast_1d(np.asarray(theta, dtype=np.int64))
    if theta.size != grid.n or not theta.any():
        raise ValueError("theta must be a nonzero lattice point of the grid dimension")
    if sigma < 0 or int(sigma) != sigma:
        raise ValueError("sigma must be a non-negative integer")
    top = max_ching_level(grid, theta)
    if J_max is None:
        J_max = top
    if J_max > top or J_max < 0:
        raise ValueError(f"J_max={J_max} too large for M={grid.M}; maximal admissible J_max={top}")
    n, P = grid.n, grid.size
    k = grid.freqs.astype(float)
    roots = np.exp(2j * np.pi * np.arange(grid.M) / grid.M)
    vals = np.zeros((P, P), dtype=complex)
    hat = np.zeros((P, P), dtype=complex)
    for j in range(J_max + 1):
        t = k * 2.0 ** (-j)
        prof = _ching_profile(t[:, 0] if n == 1 else t, theta.astype(float), sigma, n, ramp=ramp)
        cols = np.nonzero(prof)[0]
        if not cols.size:
            continue
        amp = 2.0 ** (j * d) * prof[cols]
        phase = roots[np.mod(-(grid.node_index @ (theta * 2**j)), grid.M)]
        vals[:, cols] += phase[:, None] * amp[None, :]
        hat[grid.index_of(-theta * 2**j), cols] += TWO_PI**n * amp

    th = theta.astype(float)

    def func(x, eta):
        out = 0.0
        for j in range(J_max + 1):
            ph = np.exp(-1j * 2.0**j * (x * th[0] if n == 1 else (x * th).sum(axis=-1)))
            out = out + 2.0 ** (j * d) * ph * _ching_profile(eta * 2.0 ** (-j), th, sigma, n, ramp=ramp)
        return out

    derivs = None
    if n == 1:

        def d1(x, eta):
            out = 0.0
            for j in range(J_max + 1):
                ph = np.exp(-1j * 2.0**j * x * th[0])
                out = out + 2.0 ** (j * (d - 1)) * ph * _ching_profile(eta * 2.0 ** (-j), th, sigma, 1, deriv=1, ramp=ramp)
            return out

        derivs = {(1,): d1}
    params = {"d": d, "sigma": int(sigma), "theta": theta.tolist(), "J_max": int(J_max), "ramp": ramp}
    return Symbol(
        grid, vals, d=d, func=func, eta_derivs=derivs, ching=params,
        name=f"ching(sigma={sigma}, d={d}, J={J_max})", hat_values=hat,
    )


# -- derivatives and seminorms ------------------------------------------------


def _fd_axis(arr: np.ndarray, axis: int) -> np.ndarray:
    """Fourth-order central difference along an FFT-ordered lattice axis."""
    r = lambda s: np.roll(arr, -s, axis=axis)
    return (-r(2) + 8.0 * r(1) - 8.0 * r(-1) + r(-2)) / 12.0


def eta_difference(grid: TorusGrid, values: np.ndarray, alpha) -> tuple[np.ndarray, float]:
    """``d^alpha/d eta^alpha`` by order-4 central differences.

    Returns the derivative and the per-axis radius where the stencil is valid.
    """
    alpha = tuple(int(a) for a in np.atleast_1d(alpha))
    v = values.reshape((grid.size,) + grid.shape)
    for ax, order in enumerate(alpha):
        for _ in range(order):
            v = _fd_axis(v, ax + 1)
    return v.reshape(grid.size, grid.size), grid.kmax - 2 * sum(alpha)


def multi_index(alpha, n: int) -> tuple:
    """Normalize an int (first axis) or sequence to an ``n``-tuple."""
    if np.ndim(alpha) == 0:
        return (int(alpha),) + (0,) * (n - 1)
    out = tuple(int(x) for x in alpha)
    if len(out) != n:
        raise ValueError(f"multi-index {alpha} does not match dimension {n}")
    return out


def _stencil_mask(grid: TorusGrid, radius: float) -> np.ndarray:
    return (np.abs(grid.freqs) <= radius).all(axis=-1)


def seminorm_p(a: Symbol, alpha=0, beta=0, method: str = "auto", eta_max: float | None = None) -> dict:
    """Estimate ``p_{alpha,beta}(a) = sup (1+|eta|)^{-(d-|alpha|+|beta|)} |D_eta^alpha D_x^beta a|``.

    Returns a dict with ``value`` and ``method`` (``analytic`` or ``fd4``).
    """
    g = a.grid
    alpha, beta = multi_index(alpha, g.n), multi_index(beta, g.n)
    na, nb = sum(alpha), sum(beta)
    band = a.eta_band if eta_max is None else float(eta_max)

    use_analytic = na > 0 and a.eta_derivs is not None and alpha in a.eta_derivs and method in ("auto", "analytic")
    if na == 0:
        base, used, valid = a.values, "exact", g.kmax
    elif use_analytic:
        x, k = _eval_points(g)
        base = np.broadcast_to(a.eta_derivs[alpha](x, k), (g.size, g.size)) * (-1j) ** na
        used, valid = "analytic", g.kmax
    else:
        if method == "analytic":
            raise ValueError("no analytic eta-derivative available for this multi-index")
        base, valid = eta_difference(g, a.values, alpha)
        base = base * (-1j) ** na
        used = "fd4"
    if eta_max is not None and band > valid:
        raise ValueError(f"eta band {band} exceeds the stencil-valid radius {valid}")
    if valid < 0:
        raise ValueError("insufficient eta band for the difference stencil")
    band = min(band, valid)
    if nb:
        w = np.prod(g.freqs.astype(float) ** np.asarray(beta), axis=-1)
        base = values_of(g, hat_of(g, np.asarray(base)) * w[:, None])
    mask = (g.freq_norm <= band) & _stencil_mask(g, valid)
    weight = (1.0 + g.freq_norm) ** (-(a.d - na + nb))
    vals = np.abs(base)[:, mask] * weight[mask][None, :]
    return {"value": float(vals.max()) if vals.size else 0.0, "method": used, "alpha": alpha, "beta": beta}


# -- modulation in x ----------------------------------------------------------


def xmod(a: Symbol, Phi, k: float) -> Symbol:
    """``Phi(2^{-k} D_x) a``: multiply the partial transform by ``Phi(2^{-k} xi)``."""
    w = Phi(a.grid.freq_norm * 2.0 ** (-k))
    return a.derived(hat=a.hat * w[:, None], tdc_B=a.tdc_B)


# -- twisted diagonal ---------------------------------------------------------


def _sum_norm(grid: TorusGrid) -> np.ndarray:
    """``|xi + eta|`` on the unwrapped lattice, rows xi, columns eta."""
    f = grid.freqs.astype(float)
    if grid.n == 1:
        return np.abs(f[:, 0][:, None] + f[:, 0][None, :])
    s = f[:, None, :] + f[None, :, :]
    return np.sqrt((s**2).sum(axis=-1))


def twisted_weight(grid: TorusGrid, chi: TwistedCutoff, eps: float) -> np.ndarray:
    return chi(_sum_norm(grid), eps * grid.freq_norm[None, :])


def twisted_localize(a: Symbol, chi: TwistedCutoff, eps: float) -> Symbol:
    """``a_{chi,eps}`` with ``hat = hat(a) * chi(xi + eta, eps eta)``."""
    if not 0 < eps <= 1:
        raise ValueError("eps must lie in (0, 1]")
    return a.derived(hat=a.hat * twisted_weight(a.grid, chi, eps), name=f"{a.name}_chi({eps:g})")


def twisted_decomposition(a: Symbol, chi: TwistedCutoff, nu_max: int) -> list:
    """``[a - a_{chi,1}, e_1, e_{1/2}, ..., e_{2^{-nu_max}}]`` with ``e_eps = a_{chi,eps} - a_{chi,eps/2}``."""
    g = a.grid
    weights = [twisted_weight(g, chi, 2.0 ** (-nu)) for nu in range(nu_max + 2)]
    parts = [a.derived(hat=a.hat * (1.0 - weights[0]), name=f"{a.name}-a_chi(1)")]
    for nu in range(nu_max + 1):
        parts.append(a.derived(hat=a.hat * (weights[nu] - weights[nu + 1]), name=f"e_{2.0**-nu:g}"))
    return parts


def feep_check(e: Symbol, eps: float, tau: float = 1e-12) -> dict:
    """Check ``supp hat(e_eps) in {eps|eta|/4 <= max(1,|xi+eta|) <= eps|eta|}``."""
    g = e.grid
    m = np.maximum(1.0, _sum_norm(g))
    en = eps * g.freq_norm[None, :]
    outside = (m < en / 4.0) | (m > en)
    live = support_mask(e.hat, tau)
    bad = outside & live
    return {"pass": not bad.any(), "violations": int(bad.sum())}


def _localized_ching_deriv(a: Symbol, chi: TwistedCutoff, eps: float) -> np.ndarray:
    """Analytic ``d/d eta`` of ``a_{chi,eps}`` for a 1-D Ching symbol."""
    g = a.grid
    p = a.ching
    th = float(p["theta"][0])
    k = g.freqs[:, 0].astype(float)
    roots = np.exp(2j * np.pi * np.arange(g.M) / g.M)
    out = np.zeros((g.size, g.size), dtype=complex)
    for j in range(p["J_max"] + 1):
        t = k * 2.0 ** (-j)
        A = _ching_profile(t, np.array([th]), p["sigma"], 1, ramp=p["ramp"])
        cols = np.nonzero(A)[0]
        if not cols.size:
            continue
        kk = k[cols]
        s = kk - th * 2**j
        c = chi(np.abs(s), eps * np.abs(kk))
        cx, ce = chi.gradient(np.abs(s), eps * np.abs(kk))
        dA = _ching_profile(t[cols], np.array([th]), p["sigma"], 1, deriv=1, ramp=p["ramp"]) * 2.0 ** (-j)
        dchi = cx * np.sign(s) + ce * eps * np.sign(kk)
        col = 2.0 ** (j * p["d"]) * (dchi * A[cols] + c * dA)
        phase = roots[np.mod(-(g.node_index[:, 0] * int(th) * 2**j), g.M)]
        out[:, cols] += phase[:, None] * col[None, :]
    return out


def n_seminorm(a: Symbol, chi: TwistedCutoff, eps: float, alpha=0, method: str = "auto",
               radii=None) -> dict:
    """``N_{chi,eps,alpha}(a)``: dyadic-corona L2 seminorm of the twisted localization.

    ``sup_{x,R} R^{-d} ( sum_{R <= |eta| <= 2R} |R^{|alpha|} D^alpha_eta a_{chi,eps}(x,eta)|^2 / R^n )^{1/2}``
    with ``R`` over ``2^j <= M/4``.
    """
    g = a.grid
    na = int(np.sum(alpha))
    used = "exact"
    valid = g.kmax
    if na == 0:
        deriv = twisted_localize(a, chi, eps).values
    elif na == 1 and g.n == 1 and a.ching is not None and method in ("auto", "analytic"):
        deriv = _localized_ching_deriv(a, chi, eps)
        used = "analytic"
    else:
        if method == "analytic":
            raise ValueError("analytic localized derivatives exist only for 1-D Ching symbols")
        deriv, valid = eta_difference(g, twisted_localize(a, chi, eps).values, multi_index(alpha, g.n))
        used = "fd4"
    mag2 = np.abs(deriv) ** 2
    if radii is None:
        radii = [2.0**j for j in range(0, int(np.log2(g.M // 4)) + 1)]
    per_R = {}
    ok = _stencil_mask(g, valid)
    for R in radii:
        mask = (g.freq_norm >= R) & (g.freq_norm <= 2 * R) & ok
        if not mask.any() or 2 * R > valid:
            continue
        s = mag2[:, mask].sum(axis=1) * R ** (2 * na) / R**g.n
        per_R[float(R)] = float(R ** (-a.d) * np.sqrt(s.max()))
    if not per_R:
        return {"value": 0.0, "R": None, "per_R": {}, "method": used}
    R_best = max(per_R, key=per_R.get)
    return {"value": per_R[R_best], "R": R_best, "per_R": per_R, "method": used}


# -- adjoint ------------------------------------------------------------------


def adjoint_symbol(a: Symbol) -> Symbol:
    """Symbol of ``OP(a)^*``: ``hat(a*)(xi, eta) = conj(hat(a)(-xi, eta + xi))``.

    The input is restricted to its eta-band first; every shifted frequency must
    stay on the lattice, otherwise the call is rejected with the padding needed.
    """
    g = a.grid
    f = g.freqs
    band_cols = g.freq_norm <= a.eta_band
    hat = a.hat * band_cols[None, :]
    live = support_mask(hat, HAT_TAU)
    xi_i, eta_i = np.nonzero(live)
    if xi_i.size:
        tgt = f[eta_i] + f[xi_i]
        bad = ~g.in_lattice(tgt)
        if bad.any():
            over = int(np.max(np.abs(tgt[bad])) - g.M // 2 + 1)
            raise ValueError(f"insufficient headroom for the adjoint twist: pad the band by {over} lattice steps")
    xband = float(g.freq_norm[live.any(axis=1)].max()) if xi_i.size else 0.0
    # target (xi, eta) <- source (-xi, eta + xi)
    src_xi = g.index_of(-f)
    s = f[:, None, :] + f[None, :, :]
    ok = g.in_lattice(s)
    src_eta = g.index_of(s)
    out = np.where(ok, np.conj(hat[src_xi[:, None], src_eta]), 0.0)
    new_band = min(float(g.kmax), a.eta_band + xband)
    return a.derived(hat=out, eta_band=new_band, name=f"({a.name})*")


# -- twisted diagonal condition ------------------------------------------------


def tdc_check(a: Symbol, B: float, tau: float = 1e-12) -> dict:
    """Scan for mass of ``hat(a)`` where ``B(1 + |xi+eta|) < |eta|``."""
    if B < 1:
        raise ValueError("B must be >= 1")
    g = a.grid
    sn = _sum_norm(g)
    en = g.freq_norm[None, :]
    region = B * (1.0 + sn) < en
    mag = np.abs(a.hat)
    top = mag.max()
    bad = region & (mag > tau * top) if top > 0 else np.zeros_like(region)
    if not bad.any():
        return {"pass": True, "worst_violation": None, "violations": 0}
    severity = np.where(bad, mag * np.broadcast_to(en, mag.shape) / (B * (1.0 + sn)), -1.0)
    i, j = np.unravel_index(np.argmax(severity), severity.shape)
    xi = g.freqs[i].tolist()
    eta = g.freqs[j].tolist()
    if g.n == 1:
        xi, eta = xi[0], eta[0]
    return {"pass": False, "worst_violation": (xi, eta, float(mag[i, j])), "violations": int(bad.sum())}


# -- paradifferential splitting of symbols --------------------------------------


def top_level(grid: TorusGrid, psi: RadialCutoff) -> int:
    """Smallest ``K`` with ``psi(2^{-K} .) = 1`` on the whole lattice."""
    rho = float(grid.freq_norm.max())
    K = 0
    while psi.r * 2**K < rho:
        K += 1
    return K


@dataclass(frozen=True, eq=False)
class SplitSymbols:
    a1: Symbol
    a2: Symbol
    a3: Symbol
    constants: LPConstants

    def __iter__(self):
        return iter((self.a1, self.a2, self.a3))


def _lp_weights(grid: TorusGrid, psi: RadialCutoff, k: int, kind: str) -> np.ndarray:
    """``psi(2^{-k}|.|)`` (``kind='low'``) or ``phi(2^{-k}|.|)`` on the lattice; 0 for ``k < 0``."""
    rho = grid.freq_norm
    if k < 0:
        return np.zeros_like(rho)
    low = psi(rho * 2.0 ** (-k))
    if kind == "low":
        return low
    if k == 0:
        return low
    return low - psi(rho * 2.0 ** (1 - k))


def split_weights(grid: TorusGrid, psi: RadialCutoff, h: int, k: int) -> dict:
    """Per-level (xi-weight, eta-weight) pairs generating the three split symbols.

    Each entry is a list of ``(w_xi, w_eta)`` whose outer products sum to the
    level-``k`` contribution to ``a^(1)``, ``a^(2)`` and ``a^(3)``.
    """
    low = lambda j: _lp_weights(grid, psi, j, "low")
    cor = lambda j: _lp_weights(grid, psi, j, "corona")
    t1 = [(low(k - h), cor(k))] if k >= h else []
    t3 = [(cor(k), low(k - h))] if k >= h else []
    if k == 0:
        t2 = [(low(0), low(0))]
    else:
        t2 = [(low(k) - low(k - h), cor(k))]
        eta_w = low(k - 1) - (low(k - h) if k >= h else 0.0)
        t2.append((cor(k), eta_w))
    return {1: t1, 2: t2, 3: t3}


def split_symbols(a: Symbol, psi: RadialCutoff, h: int | None = None) -> SplitSymbols:
    """Three-way splitting ``a = a^(1) + a^(2) + a^(3)`` on the lattice."""
    g = a.grid
    const = lp_constants(psi, h)
    h = const.h
    K = top_level(g, psi) + 2
    W = {1: np.zeros((g.size, g.size)), 2: np.zeros((g.size, g.size)), 3: np.zeros((g.size, g.size))}
    for k in range(0, K + 1):
        for i, terms in split_weights(g, psi, h, k).items():
            for wx, we in terms:
                W[i] += np.outer(wx, we)
    a1 = a.derived(hat=a.hat * W[1], tdc_B=const.B1, name=f"{a.name}^(1)")
    a2 = a.derived(hat=a.hat * W[2], name=f"{a.name}^(2)")
    a3 = a.derived(hat=a.hat * W[3], tdc_B=const.B1, name=f"{a.name}^(3)")
    return SplitSymbols(a1, a2, a3, const)


def cone_check(split: SplitSymbols, tau: float = 1e-12) -> dict:
    """Conical supports: ``|xi| <= c|eta|`` on ``hat a^(1)`` and ``|eta| <= c|xi|`` on ``hat a^(3)``."""
    g = split.a1.grid
    c = split.constants.cone
    xi = g.freq_norm[:, None]
    eta = g.freq_norm[None, :]
    bad1 = support_mask(split.a1.hat, tau) & (xi > c * eta + 1e-12)
    bad3 = support_mask(split.a3.hat, tau) & (eta > c * xi + 1e-12)
    return {"a1": not bad1.any(), "a3": not bad3.any(), "violations": int(bad1.sum() + bad3.sum())}
