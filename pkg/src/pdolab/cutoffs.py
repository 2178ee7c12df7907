"""Smooth cutoffs: modulation functions, Littlewood-Paley coronas, twisted cutoff.

Every profile is built from the glue

    g(s) = f(1 - s) / (f(s) + f(1 - s)),   f(s) = exp(-1/s) for s > 0, else 0,

which equals 1 for ``s <= 0``, 0 for ``s >= 1`` and is C-infinity in between.
Cutoffs act on magnitudes, so callers pass ``|xi|`` (or signed scalars in 1-D).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def _f(s):
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    pos = s > 0
    out[pos] = np.exp(-1.0 / s[pos])
    return out


def _fprime(s):
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    pos = s > 0
    out[pos] = np.exp(-1.0 / s[pos]) / s[pos] ** 2
    return out


def glue(s):
    """Smooth step from 1 (``s <= 0``) to 0 (``s >= 1``)."""
    s = np.asarray(s, dtype=float)
    a, b = _f(s), _f(1.0 - s)
    return b / (a + b)


def glue_prime(s):
    s = np.asarray(s, dtype=float)
    a, b = _f(s), _f(1.0 - s)
    da, db = _fprime(s), _fprime(1.0 - s)
    return -(db * a + b * da) / (a + b) ** 2


@dataclass(frozen=True)
class RadialCutoff:
    """Modulation function ``psi(xi) = g((|xi| - r)/(R - r))``.

    Equal to 1 on ``|xi| <= r`` and to 0 on ``|xi| >= R``.
    """

    r: float = 1.0
    R: float = 2.0

    def __post_init__(self):
        if not (0 < self.r < self.R):
            raise ValueError(f"need 0 < r < R, got r={self.r}, R={self.R}")
        if self.R < 1:
            raise ValueError("outer radius must be >= 1")

    def __call__(self, xi):
        return glue((np.abs(np.asarray(xi, dtype=float)) - self.r) / (self.R - self.r))

    def derivative(self, rho):
        """Radial derivative ``d psi / d|xi|``."""
        w = self.R - self.r
        return glue_prime((np.abs(np.asarray(rho, dtype=float)) - self.r) / w) / w

    def dilate(self, k: float):
        """Callable ``xi -> psi(2^{-k} xi)``."""
        s = 2.0 ** (-k)
        return lambda xi: self(np.asarray(xi, dtype=float) * s)

    def to_dict(self) -> dict:
        return {"kind": "glue", "r": self.r, "R": self.R}


@dataclass(frozen=True)
class Corona:
    """``phi = psi - psi(2 .)``, supported in ``r/2 <= |xi| <= R``."""

    psi: RadialCutoff

    def __call__(self, xi):
        xi = np.asarray(xi, dtype=float)
        return self.psi(xi) - self.psi(2.0 * xi)

    def dilate(self, k: float):
        s = 2.0 ** (-k)
        return lambda xi: self(np.asarray(xi, dtype=float) * s)

    @property
    def support(self) -> tuple[float, float]:
        return self.psi.r / 2.0, self.psi.R

    def to_dict(self) -> dict:
        return {"kind": "corona", "psi": self.psi.to_dict()}


@dataclass(frozen=True)
class AnnularCutoff:
    """Auxiliary corona profile ``psi(xi/outer) - psi(xi/inner)`` for ``inner < outer``.

    Equals 1 on ``inner*R <= |xi| <= outer*r`` and vanishes outside
    ``inner*r <= |xi| <= outer*R``, so it omits a neighbourhood of the origin.
    """

    psi: RadialCutoff
    inner: float = 0.25
    outer: float = 2.0

    def __call__(self, xi):
        xi = np.abs(np.asarray(xi, dtype=float))
        return self.psi(xi / self.outer) - self.psi(xi / self.inner)

    @property
    def plateau(self) -> tuple[float, float]:
        return self.inner * self.psi.R, self.outer * self.psi.r

    @property
    def support(self) -> tuple[float, float]:
        return self.inner * self.psi.r, self.outer * self.psi.R

    def to_dict(self) -> dict:
        return {"kind": "annulus", "psi": self.psi.to_dict(), "inner": self.inner, "outer": self.outer}


def make_modulation(r: float = 1.0, R: float = 2.0) -> RadialCutoff:
    return RadialCutoff(float(r), float(R))


def lp_partition(psi: RadialCutoff, J: int) -> list:
    """``[psi, phi(2^{-1} .), ..., phi(2^{-J} .)]``."""
    if J < 0:
        raise ValueError("J must be >= 0")
    phi = Corona(psi)
    return [psi] + [phi.dilate(k) for k in range(1, J + 1)]


@dataclass(frozen=True)
class LPConstants:
    """Constants of the Littlewood-Paley splitting derived from ``(r, R, h)``."""

    r: float
    R: float
    h: int

    @property
    def R_h(self) -> float:
        return self.r / 2.0 - self.R * 2.0 ** (-self.h)

    @property
    def cone(self) -> float:
        """``2R / (r 2^h)``, the aperture of the split-symbol cones."""
        return 2.0 * self.R / (self.r * 2.0**self.h)

    @property
    def B1(self) -> float:
        return 1.0 / (1.0 - self.cone)


def smallest_h(psi: RadialCutoff) -> int:
    """Smallest integer ``h`` with ``2R < r 2^h``."""
    h = 1
    while not 2 * psi.R < psi.r * 2**h:
        h += 1
    return h


def lp_constants(psi: RadialCutoff, h: int | None = None) -> LPConstants:
    h = smallest_h(psi) if h is None else int(h)
    if not 2 * psi.R < psi.r * 2**h:
        raise ValueError(f"h={h} too small: need 2R < r 2^h (smallest admissible h={smallest_h(psi)})")
    return LPConstants(psi.r, psi.R, h)


@dataclass(frozen=True)
class TwistedCutoff:
    """``chi(xi, eta) = A(|eta|) B(2|xi| / |eta|)``.

    ``A`` ramps from 0 at ``|eta| = 1`` to 1 at ``|eta| = 2`` and ``B`` ramps from
    1 at 1 to 0 at 2.  Arguments are magnitudes ``|xi|`` and ``|eta|``.
    """

    def _parts(self, xi, eta):
        xi = np.abs(np.asarray(xi, dtype=float))
        eta = np.abs(np.asarray(eta, dtype=float))
        xi, eta = np.broadcast_arrays(xi, eta)
        A = 1.0 - glue(eta - 1.0)
        t = np.zeros_like(eta)
        live = A > 0
        t[live] = 2.0 * xi[live] / eta[live]
        return A, t, live

    def __call__(self, xi, eta):
        A, t, live = self._parts(xi, eta)
        out = np.zeros_like(A)
        out[live] = A[live] * glue(t[live] - 1.0)
        return out

    def gradient(self, xi, eta):
        """Partial derivatives ``(d chi/d|xi|, d chi/d|eta|)``."""
        xi_a = np.abs(np.asarray(xi, dtype=float))
        eta_a = np.abs(np.asarray(eta, dtype=float))
        A, t, live = self._parts(xi_a, eta_a)
        eta_a = np.broadcast_to(eta_a, A.shape)
        dA = -glue_prime(eta_a - 1.0)
        Bt = np.zeros_like(A)
        dB = np.zeros_like(A)
        Bt[live] = glue(t[live] - 1.0)
        dB[live] = glue_prime(t[live] - 1.0)
        dxi = np.zeros_like(A)
        deta = np.zeros_like(A)
        e = eta_a[live]
        dxi[live] = A[live] * dB[live] * 2.0 / e
        deta[live] = dA[live] * Bt[live] - A[live] * dB[live] * t[live] / e
        return dxi, deta

    def to_dict(self) -> dict:
        return {"kind": "twisted", "A": [1.0, 2.0], "B": [1.0, 2.0]}


def make_twisted_cutoff() -> TwistedCutoff:
    return TwistedCutoff()
