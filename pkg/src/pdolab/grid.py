"""Periodic torus discretization, discrete Fourier transforms and norms.

The torus ``[0, 2pi)^n`` carries ``M`` nodes per axis.  Frequencies live on the
integer lattice ``{-M/2, ..., M/2 - 1}^n`` and are stored in FFT order, so the
flat index of a lattice point ``k`` is the row-major ravel of ``k mod M``.

Conventions
-----------
Forward transform ``u_hat(k) = sum_x u(x) exp(-i k.x) dx^n`` and inverse
``u(x) = (2 pi)^{-n} sum_k u_hat(k) exp(i k.x)``.  With these the lattice sum
over frequencies replaces the integral over ``eta`` with unit weights.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True, eq=False)
class TorusGrid:
    """Uniform grid on the torus ``[0, 2pi)^n``.

    Parameters
    ----------
    n : int
        Spatial dimension, 1 or 2.
    M : int
        Points per axis, a power of two with ``M >= 16``.
    """

    n: int
    M: int

    def __post_init__(self):
        if self.n not in (1, 2):
            raise ValueError(f"dimension must be 1 or 2, got {self.n}")
        M = int(self.M)
        if M < 16 or M & (M - 1):
            raise ValueError(f"M must be a power of two >= 16, got {self.M}")

    def __eq__(self, other):
        return isinstance(other, TorusGrid) and (self.n, self.M) == (other.n, other.M)

    def __hash__(self):
        return hash((self.n, self.M))

    def __repr__(self):
        return f"TorusGrid(n={self.n}, M={self.M})"

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.M,) * self.n

    @property
    def size(self) -> int:
        return self.M**self.n

    @property
    def dx(self) -> float:
        return TWO_PI / self.M

    @property
    def cell(self) -> float:
        """Volume element ``dx^n``."""
        return self.dx**self.n

    @property
    def kmax(self) -> int:
        """Largest symmetric lattice radius per axis, ``M/2 - 1``."""
        return self.M // 2 - 1

    @cached_property
    def nodes(self) -> np.ndarray:
        """Node coordinates, shape ``(size, n)``."""
        axes = [np.arange(self.M) * self.dx] * self.n
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    @cached_property
    def node_index(self) -> np.ndarray:
        """Integer node coordinates ``m`` with ``x = 2 pi m / M``, shape ``(size, n)``."""
        axes = [np.arange(self.M)] * self.n
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    @cached_property
    def freqs(self) -> np.ndarray:
        """Integer frequencies in FFT order, shape ``(size, n)``."""
        k = np.fft.fftfreq(self.M, d=1.0 / self.M).astype(np.int64)
        mesh = np.meshgrid(*([k] * self.n), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    @cached_property
    def freq_norm(self) -> np.ndarray:
        """Euclidean norm ``|k|`` of every lattice point."""
        return np.sqrt((self.freqs.astype(float) ** 2).sum(axis=-1))

    def index_of(self, k) -> np.ndarray:
        """Flat FFT-order index of integer lattice points ``k`` (last axis = n)."""
        k = np.mod(np.asarray(k, dtype=np.int64), self.M)
        idx = k[..., 0]
        for i in range(1, self.n):
            idx = idx * self.M + k[..., i]
        return idx

    def in_lattice(self, k) -> np.ndarray:
        """True where every component of ``k`` (last axis = n) lies in ``[-M/2, M/2 - 1]``."""
        k = np.asarray(k)
        return ((k >= -self.M // 2) & (k <= self.M // 2 - 1)).all(axis=-1)

    @cached_property
    def phase_table(self) -> np.ndarray:
        """``exp(i x.eta)`` for every node (rows) and frequency (columns).

        Built from exact roots of unity so that every lattice exponential is
        periodic to machine precision.
        """
        roots = np.exp(2j * np.pi * np.arange(self.M) / self.M)
        prod = self.node_index @ self.freqs.T
        return roots[np.mod(prod, self.M)]

    def to_dict(self) -> dict:
        return {"n": self.n, "M": self.M}


def _check_values(grid: TorusGrid, values) -> np.ndarray:
    v = np.asarray(values, dtype=complex).reshape(-1)
    if v.size != grid.size:
        raise ValueError(f"expected {grid.size} values for {grid!r}, got {v.size}")
    return v


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Complex samples of ``u`` at the nodes, row-major."""

    grid: TorusGrid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "values", _check_values(self.grid, self.values))

    @classmethod
    def from_callable(cls, grid: TorusGrid, f) -> "GridFunction":
        x = grid.nodes
        return cls(grid, f(x[:, 0]) if grid.n == 1 else f(x))

    @classmethod
    def plane_wave(cls, grid: TorusGrid, k) -> "GridFunction":
        """``exp(i k.x)`` sampled exactly through the root-of-unity table."""
        k = np.atleast_1d(np.asarray(k, dtype=np.int64))
        roots = np.exp(2j * np.pi * np.arange(grid.M) / grid.M)
        return cls(grid, roots[np.mod(grid.node_index @ k, grid.M)])

    @classmethod
    def zeros(cls, grid: TorusGrid) -> "GridFunction":
        return cls(grid, np.zeros(grid.size, dtype=complex))

    def _same(self, other):
        if not isinstance(other, GridFunction) or other.grid != self.grid:
            raise ValueError("grid functions live on different grids")
        return other.values

    def __add__(self, other):
        return GridFunction(self.grid, self.values + self._same(other))

    def __sub__(self, other):
        return GridFunction(self.grid, self.values - self._same(other))

    def __mul__(self, c):
        return GridFunction(self.grid, self.values * c)

    __rmul__ = __mul__

    def __neg__(self):
        return GridFunction(self.grid, -self.values)


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Discrete Fourier coefficients ``u_hat(k)`` in FFT order."""

    grid: TorusGrid
    coefficients: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "coefficients", _check_values(self.grid, self.coefficients))

    @classmethod
    def from_modes(cls, grid: TorusGrid, modes: dict) -> "Spectrum":
        """Build from ``{k: coefficient}`` with integer (or tuple) keys."""
        c = np.zeros(grid.size, dtype=complex)
        for k, v in modes.items():
            c[grid.index_of(np.atleast_1d(k))] += v
        return cls(grid, c)


@dataclass(frozen=True)
class SupportSet:
    """Lattice points whose coefficient exceeds ``tau * max``."""

    points: np.ndarray
    tau: float

    def __len__(self):
        return len(self.points)

    def as_set(self) -> set:
        return {tuple(int(c) for c in p) for p in self.points}

    def norms(self) -> np.ndarray:
        return np.sqrt((self.points.astype(float) ** 2).sum(axis=-1))

    def issubset(self, other: "SupportSet") -> bool:
        return self.as_set() <= other.as_set()


def transform(u: GridFunction) -> Spectrum:
    g = u.grid
    c = np.fft.fftn(u.values.reshape(g.shape)).ravel() * g.cell
    return Spectrum(g, c)


def inverse(s: Spectrum) -> GridFunction:
    g = s.grid
    v = np.fft.ifftn(s.coefficients.reshape(g.shape)).ravel() / g.cell
    return GridFunction(g, v)


def support_mask(coef: np.ndarray, tau: float = 1e-10) -> np.ndarray:
    """Boolean mask of ``|coef| > tau * max|coef|`` (all False for ``coef == 0``)."""
    mag = np.abs(coef)
    top = mag.max() if mag.size else 0.0
    if top == 0.0:
        return np.zeros(mag.shape, dtype=bool)
    return mag > tau * top


def support_of(s: Spectrum, tau: float = 1e-10) -> SupportSet:
    if not 0.0 < tau < 1.0:
        raise ValueError("tau must lie in (0, 1)")
    mask = support_mask(s.coefficients, tau)
    return SupportSet(s.grid.freqs[mask], tau)


def norms(u: GridFunction, s: float = 0.0) -> dict:
    """L2, sup and ``H^s`` norms of ``u``."""
    g = u.grid
    uh = transform(u).coefficients
    w = (1.0 + g.freq_norm**2) ** s
    scale = TWO_PI ** (-g.n)
    return {
        "L2": float(np.sqrt(scale * np.sum(np.abs(uh) ** 2))),
        "sup": float(np.abs(u.values).max()),
        "Hs": float(np.sqrt(scale * np.sum(w * np.abs(uh) ** 2))),
    }


def l2_norm(u: GridFunction) -> float:
    return float(np.sqrt(np.sum(np.abs(u.values) ** 2) * u.grid.cell))


def sup_norm(u: GridFunction) -> float:
    return float(np.abs(u.values).max())


def inner(u: GridFunction, v: GridFunction) -> complex:
    """``<u, v> = sum u conj(v) dx^n``."""
    return complex(np.sum(u.values * np.conj(u._same(v))) * u.grid.cell)


def torus_distance(x, y) -> np.ndarray:
    """Euclidean distance on ``[0, 2pi)^n`` with per-axis wrap (last axis = n)."""
    d = np.abs(np.asarray(x, dtype=float) - np.asarray(y, dtype=float)) % TWO_PI
    d = np.minimum(d, TWO_PI - d)
    return d if d.ndim == 0 else np.sqrt((d**2).sum(axis=-1))


def node_distance_matrix(grid: TorusGrid) -> np.ndarray:
    """Torus distance between all pairs of nodes, computed from integer offsets."""
    m = grid.node_index
    off = np.abs(m[:, None, :] - m[None, :, :])
    off = np.minimum(off, grid.M - off).astype(float) * grid.dx
    return np.sqrt((off**2).sum(axis=-1))


def distance_from_origin(grid: TorusGrid) -> np.ndarray:
    m = grid.node_index
    off = np.minimum(m, grid.M - m).astype(float) * grid.dx
    return np.sqrt((off**2).sum(axis=-1))


def multiplier(u: GridFunction, m) -> GridFunction:
    """Fourier multiplier ``m(D)u`` for ``m`` given per lattice point or as a callable of ``k``."""
    g = u.grid
    w = m(g.freqs) if callable(m) else np.asarray(m)
    return inverse(Spectrum(g, transform(u).coefficients * w))


def band_radius(s: Spectrum, tau: float = 1e-10) -> float:
    """Largest ``|k|`` in the thresholded support (0 for the zero spectrum)."""
    mask = support_mask(s.coefficients, tau)
    return float(s.grid.freq_norm[mask].max()) if mask.any() else 0.0
