"""Random instances used by the verification suite and the tests."""
from __future__ import annotations

import numpy as np

from .diagram import PersistenceDiagram
from .filtration import CriticalGrid
from .metric import FiniteMetricSpace, MMSpace


def random_planar_space(rng: np.random.Generator, n_min: int = 4, n_max: int = 7) -> FiniteMetricSpace:
    """Points drawn uniformly from the unit square."""
    n = int(rng.integers(n_min, n_max + 1))
    return FiniteMetricSpace.from_points(rng.uniform(0.0, 1.0, size=(n, 2)))


def random_uniform_mm_space(rng: np.random.Generator, n_min: int = 3, n_max: int = 4) -> MMSpace:
    return MMSpace.uniform(random_planar_space(rng, n_min, n_max))


def random_bars(rng: np.random.Generator, max_bars: int = 5, top: float = 4.0, step: float = 0.25) -> list[tuple[float, float]]:
    """Up to ``max_bars`` bars with endpoints on a lattice in [0, top] and positive length."""
    lattice = np.arange(0.0, top + step / 2, step)
    bars = []
    for _ in range(int(rng.integers(0, max_bars + 1))):
        b, d = sorted(rng.choice(len(lattice), size=2, replace=False))
        bars.append((float(lattice[b]), float(lattice[d])))
    return bars


def shared_grid(*bar_lists: list[tuple[float, float]]) -> CriticalGrid:
    """Grid holding 0, every endpoint and every bar midpoint of the given bars."""
    vals = {0.0}
    for bars in bar_lists:
        for b, d in bars:
            vals |= {b, d, (b + d) / 2.0}
    return CriticalGrid.from_values(vals)


def random_diagram_pair(rng: np.random.Generator, max_bars: int = 5) -> tuple[PersistenceDiagram, PersistenceDiagram]:
    """Two random diagrams on a common grid that contains all bar midpoints."""
    s, t = random_bars(rng, max_bars), random_bars(rng, max_bars)
    grid = shared_grid(s, t)
    return PersistenceDiagram.from_values(grid, s), PersistenceDiagram.from_values(grid, t)


def random_grid_measure(rng: np.random.Generator, k_max: int = 8) -> tuple[CriticalGrid, np.ndarray]:
    """A fully supported probability vector on a random grid of 1 to k_max values in [0, 4]."""
    k = int(rng.integers(1, k_max + 1))
    vals = np.concatenate([[0.0], np.sort(rng.choice(np.arange(1, 161), size=k - 1, replace=False)) / 40.0])
    mu = rng.exponential(size=k) + 1e-3
    return CriticalGrid(tuple(vals)), mu / mu.sum()
