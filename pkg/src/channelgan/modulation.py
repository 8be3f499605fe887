"""Fixed symbol constellations with uniform priors: BPSK, QPSK, 16-QAM."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class SymbolSource:
    """Constellation points, one per row, drawn with equal probability."""

    name: str
    points: np.ndarray  # (M, dim)

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def size(self) -> int:
        return self.points.shape[0]

    def draw(self, n: int, rng: np.random.Generator) -> np.ndarray:
        idx = rng.integers(0, self.size, size=n)
        return self.points[idx].astype(np.float64)


def bpsk_source() -> SymbolSource:
    """Two antipodal 1-D points {-1, +1}."""
    return SymbolSource("bpsk", np.array([[-1.0], [1.0]]))


def qpsk_source() -> SymbolSource:
    """Four unit-power I/Q points (+-1/sqrt(2), +-1/sqrt(2))."""
    s = 1.0 / np.sqrt(2.0)
    pts = np.array([[s, s], [-s, s], [-s, -s], [s, -s]])
    return SymbolSource("qpsk", pts)


def qam16_source() -> SymbolSource:
    """4x4 grid over {-3,-1,1,3}^2, scaled by 1/sqrt(10) for unit average power."""
    levels = np.array([-3.0, -1.0, 1.0, 3.0])
    grid = np.array([[a, b] for a in levels for b in levels])
    return SymbolSource("qam16", grid / np.sqrt(10.0))


def draw_symbols(source: SymbolSource, n: int, seed) -> np.ndarray:
    """n i.i.d. uniform draws from the constellation, reproducible from seed."""
    return source.draw(n, np.random.default_rng(seed))
