"""Maximal functions, symbol factors and the factorisation inequality.

For ``u`` with spectrum in a ball of radius ``R`` and an auxiliary cutoff ``chi``
equal to 1 on that ball,

    |OP(a)u(x)| <= F_a(N, R; x) u*(N, R; x),

where ``u*`` is the Peetre-Fefferman-Stein maximal function and ``F_a`` the
weighted L1 norm of the kernel slice ``F^{-1}_{eta -> y}(a(x, eta) chi(eta))``.
On the lattice the inequality is exact, so it is checked node by node.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .cutoffs import AnnularCutoff, Corona, RadialCutoff
from .grid import GridFunction, Spectrum, band_radius, distance_from_origin, inverse
from .operators import _kernel_z, band_limited_coefficients, difference_index, quantize
from .symbols import Symbol, _eval_points, eta_difference, multi_index, xmod

VARIANTS = ("mh_bound", "r_scaling", "q_scaling", "ck_growth")


@dataclass(frozen=True, eq=False)
class MaximalFunction:
    N: float
    R: float
    values: np.ndarray = field(repr=False)


@dataclass(frozen=True, eq=False)
class SymbolFactor:
    N: float
    R: float
    chi_aux: object
    values: np.ndarray = field(repr=False)


def maximal(u: GridFunction, N: float, R: float) -> MaximalFunction:
    """``u*(N, R; x) = max_y |u(x - y)| / (1 + R|y|)^N`` over all nodes ``y``."""
    if N < 0 or R <= 0:
        raise ValueError("need N >= 0 and R > 0")
    g = u.grid
    w = (1.0 + R * distance_from_origin(g)) ** N
    shifted = np.abs(u.values)[difference_index(g)]
    return MaximalFunction(float(N), float(R), (shifted / w[None, :]).max(axis=1))


def _check_band(chi: np.ndarray, g, u_band) -> None:
    if u_band is None:
        return
    rho = g.freq_norm
    if np.ndim(u_band) == 0:
        inside = rho <= float(u_band) + 1e-9
    else:
        lo, hi = u_band
        inside = (rho >= lo - 1e-9) & (rho <= hi + 1e-9)
    if np.any(np.abs(chi[inside] - 1.0) > 1e-12):
        raise ValueError("auxiliary cutoff is not identically 1 on the declared input band")


def symbol_factor(a: Symbol, N: float, R: float, chi_aux=None, u_band=None) -> SymbolFactor:
    """``F_a(N, R; x) = sum_y (1 + R|y|)^N |F^{-1}_{eta -> y}(a(x, .) chi)(y)| dy^n``.

    Parameters
    ----------
    chi_aux : callable, optional
        Profile ``psi_aux``; the cutoff is ``psi_aux(|eta|/R)``.  Defaults to the
        modulation function with ``r = 1``, ``R = 2``.
    u_band : float or (float, float), optional
        Ball radius or annulus on which the cutoff must equal 1.
    """
    if N < 0 or R <= 0:
        raise ValueError("need N >= 0 and R > 0")
    g = a.grid
    profile = RadialCutoff() if chi_aux is None else chi_aux
    chi = profile(g.freq_norm / R) * (g.freq_norm <= a.eta_band + 1e-9)
    _check_band(chi, g, u_band)
    kz = _kernel_z(g, a.values * chi[None, :])
    w = (1.0 + R * distance_from_origin(g)) ** N
    return SymbolFactor(float(N), float(R), profile, (np.abs(kz) * w[None, :]).sum(axis=1) * g.cell)


def factorization_check(a: Symbol, u: GridFunction, N: float, R: float, chi_aux=None) -> dict:
    """Node-wise ratio ``|OP(a)u| / (F_a u*)`` with ``0/0 = 0``."""
    g = a.grid
    uh = band_limited_coefficients(a, u)
    band = band_radius(Spectrum(g, uh))
    if band > R + 1e-9:
        raise ValueError(f"input band {band:g} exceeds R={R:g}")
    u = inverse(Spectrum(g, uh))
    F = symbol_factor(a, N, R, chi_aux, u_band=band).values
    us = maximal(u, N, R).values
    lhs = np.abs(quantize(a, u).values)
    rhs = F * us
    ratio = np.zeros_like(lhs)
    pos = rhs > 0
    ratio[pos] = lhs[pos] / rhs[pos]
    ratio[~pos & (lhs > 1e-300)] = np.inf
    return {"max_ratio": float(ratio.max()), "ratio": ratio, "F": F, "u_star": us}


# -- scaling studies ----------------------------------------------------------


@dataclass
class ScalingResult:
    variant: str
    parameter: str
    points: list
    values: list
    slope: float
    target: str
    tolerance: float
    passed: bool
    gated: bool = True
    extra: dict = field(default_factory=dict)

    def rows(self) -> list:
        return [
            {"variant": self.variant, "parameter": p, "value": v, "fitted_slope": self.slope,
             "tolerance": self.tolerance, "pass": self.passed}
            for p, v in zip(self.points, self.values)
        ]


def _slope(x, y) -> float:
    return float(np.polyfit(np.log2(np.asarray(x, float)), np.log2(np.asarray(y, float)), 1)[0])


def _need(points, what: str) -> None:
    if len(points) < 4:
        raise ValueError(f"insufficient {what} range for a fit: {len(points)} points, need at least 4")


def _support_radius(profile) -> float:
    if isinstance(profile, AnnularCutoff):
        return profile.support[1]
    if isinstance(profile, Corona):
        return profile.support[1]
    return profile.R


def _fits(g, profile, R) -> bool:
    return _support_radius(profile) * R <= g.freq_norm.max() + 1e-9


def mh_rhs(a: Symbol, N: float, R: float, profile) -> np.ndarray:
    """Right-hand side of the Mihlin-Hormander type bound without ``c_{n,N}``, per x."""
    g = a.grid
    top = int(math.floor(N + g.n / 2.0)) + 1
    rho = g.freq_norm
    region = profile(rho / R) != 0
    total = np.zeros(g.size)
    from itertools import product

    for alpha in product(range(top + 1), repeat=g.n):
        na = sum(alpha)
        if na > top:
            continue
        alpha = multi_index(alpha, g.n)
        if na == 0:
            deriv = a.values
        elif a.eta_derivs is not None and alpha in a.eta_derivs:
            x, k = _eval_points(g)
            deriv = np.broadcast_to(a.eta_derivs[alpha](x, k), (g.size, g.size))
        else:
            deriv, valid = eta_difference(g, a.values, alpha)
            if (np.abs(g.freqs[region]) > valid).any():
                raise ValueError("difference stencil does not cover the cutoff support")
        sq = (np.abs(deriv[:, region]) * R**na) ** 2
        total += np.sqrt(sq.sum(axis=1) / R**g.n)
    return total


def scaling_study(a: Symbol, N: float, psi_aux, variant: str, **kw) -> ScalingResult:
    """Fit the R-, Q- or k-dependence behind the pointwise estimates.

    Variants
    --------
    mh_bound
        ``sup_x F_a / RHS`` over ``Rs`` (default ``2^3..2^9``); bounded means a
        log-slope at most ``bound_slope`` (default 0.3).
    r_scaling
        Slope of ``sup_x F_a`` against ``R``; ``d +- 0.3`` for an annular
        ``psi_aux``, else at most ``max(d, [N+n/2]+1) + 0.3``.
    q_scaling
        Local slopes of ``sup_x F_{a_Q}`` against ``Q`` for ``a_Q = phi(Q^{-1}D_x) a``
        at fixed ``R``; passes when the tail slope is at most ``-max(Ms)``
        (an exact zero counts as minus infinity).
    ck_growth
        Exponent of ``sup_x |OP(Phi(2^{-k}D_x) a Psi(2^{-k} eta)) v|`` against ``k``
        with ``v = sum_j 2^{jN} exp(i 2^j x)``; the target is ``N + d`` when
        ``0`` is outside ``supp Psi``, else ``(N + d)_+``.  ``N + d = 0`` with
        ``0 in supp Psi`` is reported but not gated.
    """
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
    g = a.grid
    n = g.n
    if variant == "mh_bound":
        stencil = g.kmax - 2 * (math.floor(N + n / 2.0) + 1)
        Rs = [R for R in kw.get("Rs", [2.0**j for j in range(3, 10)]) if _support_radius(psi_aux) * R < stencil]
        _need(Rs, "R")
        vals = []
        for R in Rs:
            F = symbol_factor(a, N, R, psi_aux).values
            rhs = mh_rhs(a, N, R, psi_aux)
            pos = rhs > 0
            vals.append(float((F[pos] / rhs[pos]).max()) if pos.any() else 0.0)
        slope = _slope(Rs, vals)
        tol = kw.get("bound_slope", 0.3)
        return ScalingResult(variant, "R", Rs, vals, slope, "bounded", tol, slope <= tol)

    if variant == "r_scaling":
        Rs = [R for R in kw.get("Rs", [2.0**j for j in range(4, 8)]) if _fits(g, psi_aux, R)]
        _need(Rs, "R")
        vals = [float(symbol_factor(a, N, R, psi_aux).values.max()) for R in Rs]
        slope = _slope(Rs, vals)
        if isinstance(psi_aux, AnnularCutoff):
            ok = abs(slope - a.d) <= 0.3
            target = f"d={a.d:g}"
        else:
            cap = max(a.d, math.floor(N + n / 2.0) + 1)
            ok = slope <= cap + 0.3
            target = f"<= {cap:g}"
        return ScalingResult(variant, "R", Rs, vals, slope, target, 0.3, ok)

    if variant == "q_scaling":
        R = float(kw.get("R", 16.0))
        phi = kw.get("phi", Corona(RadialCutoff()))
        Ms = kw.get("Ms", (1, 2, 3))
        Qs = list(kw.get("Qs", [2.0**j for j in range(0, 8)]))
        _need(Qs, "Q")
        vals = [float(symbol_factor(xmod(a, phi, math.log2(Q)), N, R, psi_aux).values.max()) for Q in Qs]
        top = max(vals) if vals else 0.0
        logs = [math.log2(v) if v > 1e-13 * max(top, 1e-300) else -math.inf for v in vals]
        local = [(logs[i + 1] - logs[i]) / math.log2(Qs[i + 1] / Qs[i]) if logs[i] > -math.inf else math.nan
                 for i in range(len(Qs) - 1)]
        finite = [s for s in local if not math.isnan(s)]
        tail = finite[-1] if finite else -math.inf
        return ScalingResult(variant, "Q", Qs, vals, tail, f"<= -{max(Ms)}", 0.0, tail <= -max(Ms),
                             extra={"local_slopes": local})

    Phi = kw.get("Phi", RadialCutoff())
    Psi = kw.get("Psi", RadialCutoff())
    x = g.nodes[:, 0] if n == 1 else g.nodes
    js = [j for j in range(0, 64) if 2**j <= g.kmax]
    v = np.zeros(g.size, dtype=complex)
    for j in js:
        v += 2.0 ** (j * N) * np.exp(1j * 2**j * (x if n == 1 else x[:, 0]))
    v = GridFunction(g, v)
    R_psi = _support_radius(Psi)
    ks = [k for k in kw.get("ks", range(1, 32)) if R_psi * 2**k <= g.kmax]
    ks = [k for k in ks if k >= kw.get("k_min", 2)]
    _need(ks, "k")
    vals = []
    for k in ks:
        b = xmod(a, Phi, k).eta_multiply(Psi(g.freq_norm * 2.0 ** (-k)))
        vals.append(float(np.abs(quantize(b, v).values).max()))
    zero_out = float(np.asarray(Psi(np.zeros(1)))[0]) == 0.0
    expo = N + a.d if zero_out else max(N + a.d, 0.0)
    gated = zero_out or N + a.d != 0
    slope = float(np.polyfit(ks, np.log2(vals), 1)[0])
    ok = abs(slope - expo) <= 0.5 if gated else True
    return ScalingResult(variant, "k", ks, vals, slope, f"{expo:g}", 0.5, ok, gated=gated)
