"""Test corpus of (symbol, input) pairs shared by the experiments and the test-suite."""

from __future__ import annotations

import numpy as np

from .cutoffs import RadialCutoff
from .grid import GridFunction, Spectrum, TorusGrid, inverse
from .symbols import Symbol, ching, constant_symbol, exponential_symbol, random_symbol, split_symbols


def random_input(grid: TorusGrid, band: float, seed: int = 0, decay: float = 0.0) -> GridFunction:
    """Gaussian spectrum on ``|k| <= band`` with optional ``(1+|k|)^{-decay}`` weight."""
    rng = np.random.default_rng(seed)
    c = rng.standard_normal(grid.size) + 1j * rng.standard_normal(grid.size)
    c *= (grid.freq_norm <= band) * (1.0 + grid.freq_norm) ** (-decay)
    return inverse(Spectrum(grid, c))


def lacunary_input(grid: TorusGrid, weight, J: int, theta: int = 1) -> GridFunction:
    """``sum_{j<=J} weight(j) exp(i 2^j theta x)``."""
    x = grid.nodes[:, 0]
    v = sum(weight(j) * np.exp(1j * 2**j * theta * x) for j in range(J + 1))
    return GridFunction(grid, v)


def symbol_corpus(grid: TorusGrid, seed: int = 0, psi: RadialCutoff | None = None) -> dict[str, Symbol]:
    """Named symbols: multiplication, constant-coefficient, Ching, random and split symbols (n=1)."""
    psi = psi or RadialCutoff()
    rnd = random_symbol(grid, 16, seed=seed, name="random")
    sp = split_symbols(rnd, psi)
    ch0 = ching(sigma=0, grid=grid)
    out = {
        "exp(-ix)": exponential_symbol(grid, -1, name="exp(-ix)"),
        "japanese": constant_symbol(grid, lambda e: (1.0 + e**2) ** 0.5, d=1.0, name="japanese"),
        "ching0": ch0,
        "ching2": ching(sigma=2, grid=grid),
        "random": rnd,
        "random^(1)": sp.a1,
        "random^(2)": sp.a2,
        "random^(3)": sp.a3,
        "ching0^(2)": split_symbols(ch0, psi).a2,
    }
    return out


def input_corpus(grid: TorusGrid, seed: int = 0, band: float = 200.0) -> dict[str, GridFunction]:
    """A random input (band capped at half the lattice radius) and a plane wave."""
    return {
        "random": random_input(grid, min(band, grid.kmax // 2), seed=seed),
        "plane4": GridFunction.plane_wave(grid, 4),
    }


def tdc_corpus(grid: TorusGrid, seed: int = 0, psi: RadialCutoff | None = None) -> dict[str, Symbol]:
    """Symbols satisfying the twisted diagonal condition (with their constants attached)."""
    psi = psi or RadialCutoff()
    sp = split_symbols(random_symbol(grid, 16, seed=seed + 1, name="random"), psi)
    return {
        "japanese": constant_symbol(grid, lambda e: (1.0 + e**2) ** 0.5, d=1.0, name="japanese"),
        "random^(1)": sp.a1,
        "random^(3)": sp.a3,
        "ching0^(1)": split_symbols(ching(sigma=0, grid=grid), psi).a1,
    }
