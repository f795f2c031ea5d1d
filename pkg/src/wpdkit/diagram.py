"""Interval posets, Moebius inversion, persistence diagrams from the
birth-death function, flip measures and weighted persistence diagrams."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Hashable, Mapping, Sequence

import numpy as np

from .errors import NotFlipMeasureError, ValidationError
from .filtration import CriticalGrid, VRFiltration, WeightedVRFiltration
from .homology import BirthDeathFunction, zb_function
from .metric import EPS_MASS, DiscreteMeasure1D, FiniteMetricSpace, MMSpace

Interval = tuple[int, int]
FLIP_TOL = 1e-9


def intervals(grid: CriticalGrid) -> list[Interval]:
    """All [q_i, q_j] with i <= j, in lexicographic order (a linear extension of the product order)."""
    k = len(grid)
    return [(i, j) for i in range(k) for j in range(i, k)]


def interval_leq(a: Interval, b: Interval) -> bool:
    return a[0] <= b[0] and a[1] <= b[1]


def interval_values(grid: CriticalGrid, I: Interval) -> tuple[float, float]:
    return grid.values[I[0]], grid.values[I[1]]


def interval_linf(grid: CriticalGrid, a: Interval, b: Interval) -> float:
    (a0, a1), (b0, b1) = interval_values(grid, a), interval_values(grid, b)
    return max(abs(a0 - b0), abs(a1 - b1))


def mobius_invert(
    elements: Sequence[Hashable], leq: Callable[[Hashable, Hashable], bool], m: Mapping[Hashable, int]
) -> dict[Hashable, int]:
    """Moebius inverse on a finite poset: dm(p) = m(p) - sum of dm(p') over p' < p.

    ``elements`` may come in any order; they are processed along a linear
    extension (sorted by the size of their down-sets).
    """
    below = np.array([[leq(q, p) and q != p for q in elements] for p in elements], dtype=np.int64)
    return _invert(elements, below, m)


def _invert(elements: Sequence[Hashable], below: np.ndarray, m: Mapping[Hashable, int]) -> dict[Hashable, int]:
    n = len(elements)
    order = np.argsort(below.sum(axis=1), kind="stable")
    dm = np.zeros(n, dtype=np.int64)
    for k in order:
        dm[k] = int(m.get(elements[k], 0)) - int(below[k] @ dm)
    return {p: int(v) for p, v in zip(elements, dm)}


def grid_mobius(table: np.ndarray) -> np.ndarray:
    """Closed-form inclusion-exclusion on the staircase of an upper-triangular table.

    Arguments (i, j) with i > j lie outside the poset; they are clamped to (j, j),
    which makes the formula agree with the generic inversion on the diagonal.
    """
    t = np.asarray(table, dtype=np.int64)
    k = t.shape[0]

    def m(i: int, j: int) -> int:
        if i < 0 or j < 0:
            return 0
        return int(t[min(i, j), j])

    out = np.zeros_like(t)
    for i in range(k):
        for j in range(i, k):
            out[i, j] = m(i, j) - m(i - 1, j) - m(i, j - 1) + m(i - 1, j - 1)
    return out


@dataclass(frozen=True, eq=False)
class PersistenceDiagram:
    """Multiset of intervals on a grid, keyed by grid indices (birth, death).

    Diagonal entries may be present; distances ignore them.
    """

    grid: CriticalGrid
    bars: Mapping[Interval, int]
    degree: int | None = None

    def __post_init__(self) -> None:
        k = len(self.grid)
        clean: dict[Interval, int] = {}
        for (i, j), mult in sorted(self.bars.items()):
            if not (0 <= i <= j < k):
                raise ValidationError(f"interval ({i}, {j}) is not on a grid of size {k}")
            if int(mult) != mult:
                raise ValidationError("multiplicities must be integers")
            if mult < 0:
                raise ValidationError(f"negative multiplicity {mult} at ({i}, {j})")
            if mult:
                clean[(int(i), int(j))] = int(mult)
        object.__setattr__(self, "bars", clean)

    def off_diagonal(self) -> dict[Interval, int]:
        return {I: v for I, v in self.bars.items() if I[0] != I[1]}

    def bar_values(self) -> list[tuple[float, float, int]]:
        return [(*interval_values(self.grid, I), v) for I, v in self.off_diagonal().items()]

    def bar_count(self) -> int:
        return sum(self.off_diagonal().values())

    @classmethod
    def from_values(
        cls, grid: CriticalGrid, bars: Sequence[tuple[float, float]] | Mapping[tuple[float, float], int], degree: int | None = None
    ) -> PersistenceDiagram:
        items = bars.items() if isinstance(bars, Mapping) else [(b, 1) for b in bars]
        out: dict[Interval, int] = {}
        for (b, d), mult in items:
            I = (grid.index(b), grid.index(d))
            if I[0] > I[1]:
                raise ValidationError(f"bar ({b}, {d}) has birth after death")
            out[I] = out.get(I, 0) + mult
        return cls(grid, out, degree)


def same_off_diagonal(s: PersistenceDiagram, t: PersistenceDiagram, eps: float = FLIP_TOL) -> bool:
    """Equality of the off-diagonal parts, comparing endpoint values up to eps."""
    a = sorted(s.bar_values())
    b = sorted(t.bar_values())
    if len(a) != len(b):
        return False
    return all(abs(x0 - y0) <= eps and abs(x1 - y1) <= eps and m == n for (x0, x1, m), (y0, y1, n) in zip(a, b))


def pd_from_zb(zb: BirthDeathFunction) -> PersistenceDiagram:
    """Moebius inverse of the birth-death function over the interval poset."""
    elems = intervals(zb.grid)
    arr = np.array(elems)
    # strict product order, built in one shot instead of pair by pair
    below = (arr[None, :, 0] <= arr[:, None, 0]) & (arr[None, :, 1] <= arr[:, None, 1])
    np.fill_diagonal(below, False)
    dm = _invert(elems, below.astype(np.int64), zb.as_dict())
    negative = {I: v for I, v in dm.items() if v < 0}
    if negative:
        raise ValidationError(f"Moebius inversion produced negative multiplicities {negative}")
    return PersistenceDiagram(zb.grid, dm, zb.degree)


def pd_mobius(F: VRFiltration, d: int) -> PersistenceDiagram:
    return pd_from_zb(zb_function(F, d))


def flip_measure(grid: CriticalGrid, masses: Sequence[float]) -> dict[Interval, float]:
    """Mass 2 mu(q_i) mu(q_j) on [q_i, q_j] for i < j and mu(q_i)^2 on the diagonal."""
    mu = np.asarray(masses, dtype=float)
    if mu.shape != (len(grid),):
        raise ValidationError("one mass per grid value is required")
    return {(i, j): float((1.0 if i == j else 2.0) * mu[i] * mu[j]) for i, j in intervals(grid)}


def unflip(grid: CriticalGrid, weights: Mapping[Interval, float], tol: float = FLIP_TOL) -> np.ndarray:
    """Masses v on the grid with flip(v) = weights; raises if no such v exists."""
    k = len(grid)
    M = np.zeros((k, k))
    for (i, j), w in weights.items():
        if i == j:
            M[i, i] += w
        else:
            M[i, j] += w / 2.0
            M[j, i] += w / 2.0
    v = M.sum(axis=1)
    err = np.max(np.abs(M - np.outer(v, v))) if k else 0.0
    if err > tol:
        raise NotFlipMeasureError(f"symmetric mass matrix is not of rank one (residual {err:.3g})")
    return v


@dataclass(frozen=True, eq=False)
class WeightedPersistenceDiagram:
    """A persistence diagram with a probability measure on its interval poset."""

    diagram: PersistenceDiagram
    weights: Mapping[Interval, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        grid = self.diagram.grid
        k = len(grid)
        clean: dict[Interval, float] = {}
        for (i, j), w in sorted(self.weights.items()):
            if not (0 <= i <= j < k):
                raise ValidationError(f"weight on ({i}, {j}) is off the grid")
            if not np.isfinite(w) or w < 0:
                raise ValidationError(f"weight on ({i}, {j}) must be non-negative, got {w}")
            if w > 0:
                clean[(int(i), int(j))] = float(w)
        total = sum(clean.values())
        if abs(total - 1.0) > EPS_MASS * max(1, len(clean)):
            raise ValidationError(f"weights must sum to 1, sum to {total:.17g}")
        for I in self.diagram.off_diagonal():
            if I not in clean:
                raise ValidationError(f"bar {interval_values(grid, I)} carries no weight")
        object.__setattr__(self, "weights", clean)

    @property
    def grid(self) -> CriticalGrid:
        return self.diagram.grid


def weighted_pd(wF: WeightedVRFiltration, d: int) -> WeightedPersistenceDiagram:
    return WeightedPersistenceDiagram(pd_mobius(wF.filtration, d), flip_measure(wF.grid, wF.weights))


def recover_gdd(wpd: WeightedPersistenceDiagram) -> DiscreteMeasure1D:
    """The distance distribution whose flip is the weight measure of ``wpd``."""
    v = unflip(wpd.grid, wpd.weights)
    v = np.clip(v, 0.0, None)
    return DiscreteMeasure1D(np.array(wpd.grid.values), v / v.sum())


def flipped_gdd_space(wpd: WeightedPersistenceDiagram) -> tuple[MMSpace, list[Interval]]:
    """Intervals carrying weight, with the sup-distance of their endpoints and the weights as measure."""
    support = sorted(wpd.weights)
    pts = np.array([interval_values(wpd.grid, I) for I in support])
    d = np.max(np.abs(pts[:, None, :] - pts[None, :, :]), axis=-1)
    mu = np.array([wpd.weights[I] for I in support])
    return MMSpace(FiniteMetricSpace(d), mu / mu.sum()), support
