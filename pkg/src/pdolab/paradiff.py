"""Littlewood-Paley pieces, the three paradifferential series and their diagnostics.

All operator terms are evaluated through the operator matrix of the base symbol:
a term ``OP(w_x(D_x) a w_eta(eta)) u`` has spectrum
``sum_eta G(zeta, eta) w_x(|zeta - eta|) w_eta(eta) u_hat(eta)`` with ``G`` the
full operator matrix.  Each of the three series is generated level by level
from the same weight pairs that define the split symbols.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .cutoffs import Corona, RadialCutoff, TwistedCutoff, lp_constants
from .grid import TWO_PI, GridFunction, Spectrum, TorusGrid, band_radius, inverse, support_mask, transform
from .operators import band_limited_coefficients, difference_index, full_matrix, quantize
from .symbols import Symbol, _lp_weights, split_weights, top_level, twisted_localize, xmod

SUPPORT_TAU = 1e-10


def fit_exponent(ks, values, floor: float = 0.0) -> float:
    """Least-squares slope of ``log2(values)`` against ``ks`` over entries above ``floor``."""
    ks = np.asarray(ks, dtype=float)
    v = np.asarray(values, dtype=float)
    keep = v > floor
    if keep.sum() < 2:
        return float("nan")
    return float(np.polyfit(ks[keep], np.log2(v[keep]), 1)[0])


# -- Littlewood-Paley pieces ------------------------------------------------------


@dataclass(frozen=True, eq=False)
class LPDecomposition:
    pieces: list = field(repr=False)
    cumulative: list = field(repr=False)
    J: int

    def piece(self, j: int) -> GridFunction:
        """``u_j`` with ``u_j = 0`` for ``j < 0``."""
        if j < 0:
            return GridFunction.zeros(self.pieces[0].grid)
        return self.pieces[j]

    def cum(self, j: int) -> GridFunction:
        """``u^j`` with ``u^j = 0`` for ``j < 0``."""
        if j < 0:
            return GridFunction.zeros(self.pieces[0].grid)
        return self.cumulative[min(j, self.J)]


def lp_pieces(u: GridFunction, psi: RadialCutoff, J: int) -> LPDecomposition:
    g = u.grid
    uh = transform(u).coefficients
    pieces = [inverse(Spectrum(g, uh * _lp_weights(g, psi, j, "corona"))) for j in range(J + 1)]
    cumulative = [inverse(Spectrum(g, uh * _lp_weights(g, psi, j, "low"))) for j in range(J + 1)]
    return LPDecomposition(pieces, cumulative, J)


def symbol_pieces(a: Symbol, psi: RadialCutoff, J: int) -> dict:
    """``{"a_j": [...], "a^j": [...]}`` for ``j = 0..J`` (``a_0 = a^0``)."""
    phi = Corona(psi)
    low = [xmod(a, psi, j) for j in range(J + 1)]
    cor = [low[0]] + [xmod(a, phi, j) for j in range(1, J + 1)]
    return {"a_j": cor, "a^j": low}


# -- series -----------------------------------------------------------------


class _TermEngine:
    """Evaluates ``OP(w_x(D_x) a w_eta(eta)) u`` spectra against a fixed base."""

    def __init__(self, a: Symbol, u: GridFunction):
        self.grid = a.grid
        self.G = full_matrix(a)
        self.uh = band_limited_coefficients(a, u)
        self.diff = difference_index(a.grid)

    def spectrum(self, pairs, x_extra=None, eta_extra=None) -> np.ndarray:
        out = np.zeros(self.grid.size, dtype=complex)
        for wx, we in pairs:
            if x_extra is not None:
                wx = wx * x_extra
            if eta_extra is not None:
                we = we * eta_extra
            if not np.any(wx) or not np.any(we):
                continue
            out += (self.G * wx[self.diff]) @ (we * self.uh)
        return out


@dataclass
class SeriesDiagnostics:
    """Per-term data of one series, indexed by level ``k``."""

    name: str
    ks: list
    term_spectra: list = field(repr=False)
    grid: TorusGrid = field(repr=False)

    @property
    def terms(self) -> list:
        return [inverse(Spectrum(self.grid, s)) for s in self.term_spectra]

    @property
    def partial_sums(self) -> list:
        acc = np.zeros(self.grid.size, dtype=complex)
        out = []
        for s in self.term_spectra:
            acc = acc + s
            out.append(inverse(Spectrum(self.grid, acc.copy())))
        return out

    @property
    def total(self) -> GridFunction:
        return inverse(Spectrum(self.grid, np.sum(self.term_spectra, axis=0)))

    def term_sup(self) -> list:
        return [float(np.abs(t.values).max()) for t in self.terms]

    def term_l2(self) -> list:
        return [float(np.sqrt(np.sum(np.abs(s) ** 2) * TWO_PI ** (-self.grid.n))) for s in self.term_spectra]

    def supports(self, scale: float, tau: float = SUPPORT_TAU) -> list:
        """``(min |zeta|, max |zeta|)`` of each term's support above ``tau * scale``."""
        out = []
        for s in self.term_spectra:
            live = np.abs(s) > tau * scale
            if live.any():
                nz = self.grid.freq_norm[live]
                out.append((float(nz.min()), float(nz.max())))
            else:
                out.append((None, None))
        return out

    def growth_exponent(self, floor: float = 1e-12) -> float:
        sups = self.term_sup()
        top = max(sups) if sups else 0.0
        return fit_exponent(self.ks, sups, floor * max(top, 1e-300))


def series_terms(a: Symbol, u: GridFunction, psi: RadialCutoff, h: int | None = None,
                 K: int | None = None) -> dict:
    """The three series ``S1``, ``S2``, ``S3`` term by term up to level ``K`` (default: band top)."""
    g = a.grid
    h = lp_constants(psi, h).h
    if K is None:
        K = top_level(g, psi) + 2
    eng = _TermEngine(a, u)
    out = {}
    for i in (1, 2, 3):
        ks, specs = [], []
        for k in range(0, K + 1):
            ks.append(k)
            specs.append(eng.spectrum(split_weights(g, psi, h, k)[i]))
        out[f"S{i}"] = SeriesDiagnostics(f"S{i}", ks, specs, g)
    return out


def series_scale(series: dict) -> float:
    """Largest spectral coefficient over all terms, used as the support threshold scale."""
    return max(float(np.abs(s).max()) for d in series.values() for s in d.term_spectra)


def support_checks(a: Symbol, u: GridFunction, psi: RadialCutoff, h: int | None = None,
                   B: float | None = None, tau: float = SUPPORT_TAU, series: dict | None = None) -> dict:
    """Corona (S1, S3), ball (S2) and, with a TDC constant ``B``, annulus (S2) inclusions."""
    c = lp_constants(psi, h)
    if series is None:
        series = series_terms(a, u, psi, c.h)
    scale = series_scale(series)
    rows = []
    for name, diag in series.items():
        for k, (lo, hi) in zip(diag.ks, diag.supports(scale, tau)):
            if name in ("S1", "S3"):
                lower, upper = c.R_h * 2.0**k, 1.25 * c.R * 2.0**k
            else:
                lower, upper = 0.0, 2.0 * c.R * 2.0**k
                if B is not None and k >= c.h + 1 + math.log2(B / c.r):
                    lower = c.r * 2.0**k / (2.0 ** (c.h + 1) * B)
            ok = lo is None or (lo >= lower - 1e-9 and hi <= upper + 1e-9)
            rows.append({"series": name, "k": k, "supp_min": lo, "supp_max": hi,
                         "lower": lower, "upper": upper, "pass": bool(ok)})
    return {"pass": all(r["pass"] for r in rows), "rows": rows, "constants": c}


def spectral_support_check(a: Symbol, u: GridFunction, tau: float = SUPPORT_TAU, tau_in: float = 1e-13) -> dict:
    """Compare the output support with ``Xi = {xi + eta : (xi, eta) in supp hat a, eta in supp u_hat}``.

    Input supports use the relative threshold ``tau_in``.  Output coefficients
    below ``tau`` times the larger of the output maximum and ``1e-3`` times the
    natural output scale ``(2pi)^{-n} max|hat a| sum|u_hat|`` are treated as zero,
    so an output that vanishes identically is not judged on its rounding noise.
    """
    g = a.grid
    uh = band_limited_coefficients(a, u)
    su = support_mask(uh, tau_in)
    sa = support_mask(a.hat, tau_in) & su[None, :]
    xi_i, eta_i = np.nonzero(sa)
    pts = g.freqs[xi_i] + g.freqs[eta_i]
    pts = pts[g.in_lattice(pts)] if pts.size else pts
    xi_set = {tuple(int(c) for c in p) for p in pts}
    out = transform(quantize(a, inverse(Spectrum(g, uh)))).coefficients
    bound = TWO_PI ** (-g.n) * float(np.abs(a.hat).max()) * float(np.abs(uh).sum())
    scale = max(float(np.abs(out).max()), 1e-3 * bound)
    live = np.abs(out) > tau * scale
    got = {tuple(int(c) for c in p) for p in g.freqs[live]}
    bad = got - xi_set
    return {"pass": not bad, "Xi": xi_set, "support": got, "violations": sorted(bad)}


# -- corona criterion ---------------------------------------------------------


def corona_criterion(u_list, A: float, theta0: float, theta1: float, C: float, N: float,
                     phi_test: GridFunction, tau: float = SUPPORT_TAU, noise: float = 1e-13) -> dict:
    """Check the dyadic-corona and polynomial-bound hypotheses and measure pairing decay.

    The decay exponent is the local rate between the last two pairings above the
    noise floor (``inf`` when at most one pairing rises above it).
    """
    if not A > 1 or not theta1 >= theta0 > 0:
        raise ValueError("need A > 1 and theta1 >= theta0 > 0")
    from .grid import distance_from_origin

    g = u_list[0].grid
    dist0 = distance_from_origin(g)
    dac, cm, pair = [], [], []
    for j, uj in enumerate(u_list):
        s = transform(uj).coefficients
        live = support_mask(s, tau)
        rad = g.freq_norm[live]
        if j == 0:
            ok = bool((rad <= A + 1e-9).all())
        else:
            ok = bool(((rad >= 2.0 ** (j * theta0) / A - 1e-9) & (rad <= A * 2.0 ** (j * theta1) + 1e-9)).all())
        dac.append(ok)
        bound = C * 2.0 ** (j * N * theta1) * (1.0 + dist0) ** N
        cm.append(bool((np.abs(uj.values) <= bound * (1 + 1e-12) + 1e-300).all()))
        pair.append(abs(np.sum(uj.values * np.conj(phi_test.values)) * g.cell))
    pair = np.asarray(pair)
    js = np.arange(len(u_list))
    floor = noise * max(np.abs(phi_test.values).max(), 1e-300) * (2 * np.pi) ** g.n
    above = [j for j in js[1:] if pair[j] > floor]
    if len(above) >= 2:
        j1, j2 = above[-2], above[-1]
        tail = float((np.log2(pair[j1]) - np.log2(pair[j2])) / (j2 - j1))
        ls = -fit_exponent(js[above], pair[above])
    else:
        tail, ls = float("inf"), float("inf")
    return {
        "hypotheses_hold": all(dac) and all(cm),
        "dac": dac,
        "cm": cm,
        "pairings": pair.tolist(),
        "pairing_decay_exponent": tail,
        "least_squares_exponent": ls,
    }


# -- remainders ---------------------------------------------------------------


def primed_levels(psi: RadialCutoff, Psi: RadialCutoff) -> tuple[int, list]:
    """``mu = floor(log2(lambda/R))`` and the integers ``l`` with ``mu < l < 1 + log2(Lambda/r)``."""
    lam, Lam = Psi.r, Psi.R
    mu = math.floor(math.log2(lam / psi.R))
    upper = 1.0 + math.log2(Lam / psi.r)
    ls = [l for l in range(mu + 1, math.ceil(upper) + 1) if l < upper]
    return mu, ls


def remainder_terms(a: Symbol, u: GridFunction, psi: RadialCutoff, Psi: RadialCutoff, m: int,
                    h: int | None = None) -> dict:
    """Remainders ``R^(i)_m u`` of the modulated split operators.

    Returns the remainders, the head sums over ``k <= m + mu``, the full modulated
    outputs ``OP(Psi(2^{-m}D_x) a^(i) Psi(2^{-m} eta)) u`` and the primed term count.
    """
    g = a.grid
    c = lp_constants(psi, h)
    if m < c.h:
        raise ValueError("m must be >= h")
    mu, ls = primed_levels(psi, Psi)
    eng = _TermEngine(a, u)
    Pm = Psi(g.freq_norm * 2.0 ** (-m))
    K = top_level(g, psi) + 2
    out = {"primed_term_count": len(ls), "count_bound": 1.0 + math.log2(c.R * Psi.R / (c.r * Psi.r)),
           "mu": mu, "levels": [m + l for l in ls]}
    for i in (1, 2, 3):
        rem = np.zeros(g.size, dtype=complex)
        for l in ls:
            rem += eng.spectrum(split_weights(g, psi, c.h, m + l)[i], Pm, Pm)
        head = np.zeros(g.size, dtype=complex)
        for k in range(0, m + mu + 1):
            head += eng.spectrum(split_weights(g, psi, c.h, k)[i])
        full = np.zeros(g.size, dtype=complex)
        for k in range(0, max(K, m + ls[-1] if ls else K) + 1):
            full += eng.spectrum(split_weights(g, psi, c.h, k)[i], Pm, Pm)
        out[f"R{i}"] = inverse(Spectrum(g, rem))
        out[f"head{i}"] = inverse(Spectrum(g, head))
        out[f"full{i}"] = inverse(Spectrum(g, full))
    return out


def remainder_vanishing_level(a: Symbol, u: GridFunction, psi: RadialCutoff, Psi: RadialCutoff) -> int:
    """Smallest ``m`` with ``r 2^{m+mu} > band``, from which every primed term is zero."""
    uh = band_limited_coefficients(a, u)
    band = max(a.x_band, band_radius(Spectrum(a.grid, uh)))
    mu, _ = primed_levels(psi, Psi)
    m = 0
    while psi.r * 2.0 ** (m + mu) <= band:
        m += 1
    return m


# -- self-adjoint splitting ---------------------------------------------------


def selfadjoint_splitting_diagnostic(a: Symbol, u: GridFunction, theta: float = 0.5, sigma_ref: float = 0.0,
                                     psi: RadialCutoff | None = None, chi: TwistedCutoff | None = None,
                                     h: int | None = None, N: float = 0.0, tau: float = SUPPORT_TAU) -> dict:
    """Split ``a_k = a_{k,chi,eps} + b_k`` with ``eps = 2^{-k theta}`` and inspect both parts on ``v_k``.

    The symbol is first reduced to ``a_{chi,1}`` so that ``max(1,|xi+eta|) <= |eta|`` on
    its spectrum.  The corona of ``b_k(x,D) v_k`` is checked for every level with
    ``2^{k(1-theta)} > 2^{h+2}/r``; the localized part yields a decay exponent.
    """
    if not 0 < theta < 1:
        raise ValueError("theta must lie in (0, 1)")
    psi = psi or RadialCutoff()
    chi = chi or TwistedCutoff()
    c = lp_constants(psi, h)
    g = a.grid
    red = twisted_localize(a, chi, 1.0)
    phi = Corona(psi)
    uh = band_limited_coefficients(a, u)
    K = top_level(g, psi) + 1
    rows = []
    for k in range(1, K + 1):
        vk_w = _lp_weights(g, psi, k - 1, "low") - _lp_weights(g, psi, k - c.h, "low")
        vk = inverse(Spectrum(g, uh * vk_w))
        ak = xmod(red, phi, k)
        eps = 2.0 ** (-k * theta)
        loc = twisted_localize(ak, chi, eps)
        bk = ak - loc
        yb = transform(quantize(bk, vk)).coefficients
        yl = quantize(loc, vk)
        admissible = 2.0 ** (k * (1 - theta)) > 2.0 ** (c.h + 2) / c.r
        lower = c.r * 2.0 ** (-c.h - 2) * 2.0 ** (k * (1 - theta))
        upper = c.R * 2.0**k
        scale = TWO_PI ** (-g.n) * float(np.sum(np.abs(bk.hat).max(axis=0) * np.abs(uh * vk_w)))
        live = np.abs(yb) > tau * max(scale, 1e-300)
        rad = g.freq_norm[live]
        ok = True
        if admissible and rad.size:
            ok = bool(rad.min() >= lower - 1e-9 and rad.max() <= upper + 1e-9)
        rows.append({"k": k, "eps": eps, "admissible": bool(admissible), "corona_lower": lower,
                     "corona_upper": upper, "supp_min": float(rad.min()) if rad.size else None,
                     "supp_max": float(rad.max()) if rad.size else None, "corona_pass": ok,
                     "local_sup": float(np.abs(yl.values).max())})
    sups = [r["local_sup"] for r in rows]
    top = max(sups) if sups else 0.0
    ks = [r["k"] for r in rows]
    slope = fit_exponent(ks, sups, 1e-12 * max(top, 1e-300))
    target = (sigma_ref - 1 - 2 * a.d - 3 * N) / 2.0
    return {"rows": rows, "decay_exponent": -slope if np.isfinite(slope) else float("inf"),
            "target": target, "corona_pass": all(r["corona_pass"] for r in rows),
            "admissible_levels": [r["k"] for r in rows if r["admissible"]]}
