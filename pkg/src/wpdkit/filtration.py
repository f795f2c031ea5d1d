"""Critical grids, Vietoris-Rips complexes and filtrations, and the global
distance distribution of a metric measure space."""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np

from .errors import ValidationError
from .metric import DiscreteMeasure1D, FiniteMetricSpace, MMSpace

EPS_EQ = 1e-9
DEFAULT_MAX_DIM = 2

Simplex = tuple[int, ...]


@dataclass(frozen=True)
class CriticalGrid:
    """Sorted grid of filtration values; values closer than ``eps`` were merged into their minimum."""

    values: tuple[float, ...]
    eps: float = EPS_EQ

    def __post_init__(self) -> None:
        vals = tuple(float(v) for v in self.values)
        if not vals or vals[0] != 0.0:
            raise ValidationError("grid must start at 0")
        if any(b - a <= self.eps for a, b in zip(vals, vals[1:])):
            raise ValidationError("grid values must be increasing and separated by more than eps")
        object.__setattr__(self, "values", vals)

    def __len__(self) -> int:
        return len(self.values)

    def index(self, value: float) -> int:
        """Index of the grid value within eps of ``value``."""
        vals = np.asarray(self.values)
        i = int(np.argmin(np.abs(vals - value)))
        if abs(vals[i] - value) > self.eps:
            raise ValidationError(f"value {value} is not on the grid")
        return i

    @classmethod
    def from_values(cls, values: Iterable[float], eps: float = EPS_EQ) -> CriticalGrid:
        """Group sorted distinct values: a new group starts once a value exceeds the group minimum by more than eps."""
        reps: list[float] = []
        for v in sorted(set(float(x) for x in values) | {0.0}):
            if not reps or v - reps[-1] > eps:
                reps.append(v)
        return cls(tuple(reps), eps)


def critical_grid(X: FiniteMetricSpace | MMSpace, eps_eq: float = EPS_EQ) -> CriticalGrid:
    """Distinct pairwise distances of X, 0 included."""
    X = X.space if isinstance(X, MMSpace) else X
    return CriticalGrid.from_values(X.d.ravel(), eps_eq)


def level_indices(grid: CriticalGrid, values: np.ndarray) -> np.ndarray:
    """Grid group of each value that took part in building the grid."""
    return np.searchsorted(np.asarray(grid.values), np.asarray(values), side="right") - 1


@dataclass(frozen=True)
class SimplicialComplex:
    simplices: frozenset[Simplex]

    def __post_init__(self) -> None:
        simps = frozenset(tuple(sorted(s)) for s in self.simplices)
        for s in simps:
            for k in range(1, len(s)):
                for face in combinations(s, k):
                    if face not in simps:
                        raise ValidationError(f"face {face} of {s} missing from complex")
        object.__setattr__(self, "simplices", simps)

    def of_dim(self, d: int) -> list[Simplex]:
        return sorted(s for s in self.simplices if len(s) == d + 1)


def _clique_expansion(d: np.ndarray, max_dim: int, radius: float = np.inf) -> list[tuple[Simplex, float]]:
    """Every simplex of dimension <= max_dim and diameter <= radius, grown vertex by vertex."""
    n = d.shape[0]
    out: list[tuple[Simplex, float]] = []

    def grow(simplex: Simplex, diam: float) -> None:
        out.append((simplex, diam))
        if len(simplex) == max_dim + 1:
            return
        for v in range(simplex[-1] + 1, n):
            new_diam = max(diam, float(np.max(d[v, list(simplex)])))
            if new_diam <= radius:
                grow(simplex + (v,), new_diam)

    for v in range(n):
        grow((v,), 0.0)
    return out


def vr_complex(X: FiniteMetricSpace, r: float, max_dim: int = DEFAULT_MAX_DIM, eps_eq: float = EPS_EQ) -> SimplicialComplex:
    """Vietoris-Rips complex: all simplices of diameter at most r (up to eps_eq)."""
    X = X.space if isinstance(X, MMSpace) else X
    return SimplicialComplex(frozenset(s for s, _ in _clique_expansion(X.d, max_dim, r + eps_eq)))


@dataclass(frozen=True)
class VRFiltration:
    """Rips filtration indexed by a critical grid.

    ``simplices`` are listed in filtration order (level, dimension, vertices) and
    ``levels`` holds the grid index at which each simplex enters.
    """

    grid: CriticalGrid
    max_dim: int
    simplices: tuple[Simplex, ...]
    levels: tuple[int, ...]

    def of_dim(self, d: int) -> list[tuple[Simplex, int]]:
        return [(s, lv) for s, lv in zip(self.simplices, self.levels) if len(s) == d + 1]

    def complex_at(self, i: int) -> SimplicialComplex:
        return SimplicialComplex(frozenset(s for s, lv in zip(self.simplices, self.levels) if lv <= i))

    def diameter(self, simplex: Sequence[int]) -> float:
        lv = self.levels[self.simplices.index(tuple(sorted(simplex)))]
        return self.grid.values[lv]


def vr_filtration(
    X: FiniteMetricSpace | MMSpace, max_dim: int = DEFAULT_MAX_DIM, eps_eq: float = EPS_EQ
) -> VRFiltration:
    X = X.space if isinstance(X, MMSpace) else X
    if max_dim < 0:
        raise ValidationError("max_dim must be non-negative")
    max_dim = min(max_dim, X.n - 1)
    grid = critical_grid(X, eps_eq)
    simps = _clique_expansion(X.d, max_dim)
    lv = level_indices(grid, np.array([diam for _, diam in simps]))
    order = sorted(range(len(simps)), key=lambda k: (int(lv[k]), len(simps[k][0]), simps[k][0]))
    return VRFiltration(
        grid=grid,
        max_dim=max_dim,
        simplices=tuple(simps[k][0] for k in order),
        levels=tuple(int(lv[k]) for k in order),
    )


def gdd_masses(X: MMSpace, grid: CriticalGrid) -> np.ndarray:
    """Mass of mu x mu on each grid group of the distance function."""
    idx = level_indices(grid, X.d.ravel())
    masses = np.zeros(len(grid))
    np.add.at(masses, idx, np.outer(X.mu, X.mu).ravel())
    return masses


def gdd(X: MMSpace, eps_eq: float = EPS_EQ) -> DiscreteMeasure1D:
    """Global distance distribution: pushforward of mu x mu under the distance."""
    grid = critical_grid(X, eps_eq)
    return DiscreteMeasure1D(np.array(grid.values), gdd_masses(X, grid))


@dataclass(frozen=True)
class WeightedVRFiltration:
    filtration: VRFiltration
    weights: tuple[float, ...]

    @property
    def grid(self) -> CriticalGrid:
        return self.filtration.grid


def weighted_vr(X: MMSpace, max_dim: int = DEFAULT_MAX_DIM, eps_eq: float = EPS_EQ) -> WeightedVRFiltration:
    F = vr_filtration(X, max_dim, eps_eq)
    return WeightedVRFiltration(F, tuple(float(w) for w in gdd_masses(X, F.grid)))
