"""Simplicial homology over GF(2): bit-packed boundary matrices, ranks, the
birth-death function of a filtration and a column-reduction persistence oracle."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import ValidationError
from .filtration import CriticalGrid, Simplex, SimplicialComplex, VRFiltration


@dataclass(frozen=True)
class BitMatrix:
    """GF(2) matrix stored column-wise; column j is an int whose bit r is entry (r, j)."""

    n_rows: int
    columns: tuple[int, ...]

    @property
    def n_cols(self) -> int:
        return len(self.columns)

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.n_rows, self.n_cols), dtype=np.uint8)
        for j, col in enumerate(self.columns):
            for r in range(self.n_rows):
                out[r, j] = (col >> r) & 1
        return out

    @classmethod
    def from_dense(cls, dense: np.ndarray) -> BitMatrix:
        dense = np.asarray(dense) % 2
        cols = tuple(sum(1 << int(r) for r in np.nonzero(dense[:, j])[0]) for j in range(dense.shape[1]))
        return cls(dense.shape[0], cols)


def boundary_columns(cells: Sequence[Simplex], faces: Sequence[Simplex]) -> list[int]:
    """Boundary of each cell as a bitmask over the positions of ``faces``."""
    pos = {f: k for k, f in enumerate(faces)}
    cols = []
    for s in cells:
        col = 0
        if len(s) > 1:
            for drop in range(len(s)):
                col ^= 1 << pos[s[:drop] + s[drop + 1 :]]
        cols.append(col)
    return cols


def boundary_matrix(K: SimplicialComplex, d: int) -> BitMatrix:
    """Matrix of the boundary map C_d -> C_{d-1} in lexicographic simplex order."""
    faces = K.of_dim(d - 1) if d > 0 else []
    return BitMatrix(len(faces), tuple(boundary_columns(K.of_dim(d), faces)))


class Echelon:
    """Incrementally maintained GF(2) row-echelon basis keyed by leading bit."""

    def __init__(self) -> None:
        self.pivots: dict[int, int] = {}

    def add(self, v: int) -> bool:
        while v:
            top = v.bit_length() - 1
            if top not in self.pivots:
                self.pivots[top] = v
                return True
            v ^= self.pivots[top]
        return False

    @property
    def rank(self) -> int:
        return len(self.pivots)


def gf2_rank(columns: Iterable[int]) -> int:
    ech = Echelon()
    for c in columns:
        ech.add(c)
    return ech.rank


def _reduce(columns: Sequence[int]) -> tuple[list[int], list[int]]:
    """Left-to-right column reduction with the lowest one taken as the highest set bit.

    Returns the reduced columns and, per column, the set of original columns
    (as a bitmask) summed to produce it.
    """
    by_low: dict[int, int] = {}
    reduced: list[int] = []
    tracks: list[int] = []
    for k, col in enumerate(columns):
        track = 1 << k
        while col:
            low = col.bit_length() - 1
            other = by_low.get(low)
            if other is None:
                by_low[low] = k
                break
            col ^= reduced[other]
            track ^= tracks[other]
        reduced.append(col)
        tracks.append(track)
    return reduced, tracks


@dataclass(frozen=True, eq=False)
class BirthDeathFunction:
    """ZB_d on the interval poset: entry (i, j) with i <= j is
    dim(Z_d(F(q_i)) intersected with B_d(F(q_j)))."""

    grid: CriticalGrid
    degree: int
    table: np.ndarray

    def __call__(self, i: int, j: int) -> int:
        if i > j:
            raise ValidationError("birth-death function is defined on i <= j only")
        return int(self.table[i, j])

    def as_dict(self) -> dict[tuple[int, int], int]:
        k = len(self.grid)
        return {(i, j): int(self.table[i, j]) for i in range(k) for j in range(i, k)}


def _check_degree(F: VRFiltration, d: int) -> None:
    if d < 0:
        raise ValidationError("degree must be non-negative")
    n_vertices = sum(1 for s in F.simplices if len(s) == 1)
    if d + 1 > F.max_dim and n_vertices > F.max_dim + 1:
        raise ValidationError(f"degree {d} needs simplices of dimension {d + 1}; max_dim is {F.max_dim}")


def cycle_and_boundary_bases(F: VRFiltration, d: int) -> tuple[list[tuple[int, int]], list[tuple[int, int]]]:
    """Entry levels and vectors of bases adapted to the filtration.

    The cycles with level <= i span Z_d(F(q_i)) and the boundaries with
    level <= j span B_d(F(q_j)); vectors are bitmasks over the d-simplices in
    filtration order.
    """
    d_cells = F.of_dim(d)
    d_simps = [s for s, _ in d_cells]
    cycles: list[tuple[int, int]] = []
    if d == 0:
        cycles = [(lv, 1 << k) for k, (_, lv) in enumerate(d_cells)]
    else:
        low_cells = [s for s, _ in F.of_dim(d - 1)]
        reduced, tracks = _reduce(boundary_columns(d_simps, low_cells))
        cycles = [(lv, tr) for (_, lv), col, tr in zip(d_cells, reduced, tracks) if col == 0]
    up_cells = F.of_dim(d + 1)
    reduced, _ = _reduce(boundary_columns([s for s, _ in up_cells], d_simps))
    boundaries = [(lv, col) for (_, lv), col in zip(up_cells, reduced) if col]
    return cycles, boundaries


def zb_function(F: VRFiltration, d: int) -> BirthDeathFunction:
    """Birth-death function of degree d, via dim(Z + B) = rank of the stacked bases."""
    _check_degree(F, d)
    k = len(F.grid)
    cycles, boundaries = cycle_and_boundary_bases(F, d)
    table = np.zeros((k, k), dtype=np.int64)
    for i in range(k):
        ech = Echelon()
        for lv, v in cycles:
            if lv <= i:
                ech.add(v)
        dim_z = ech.rank
        dim_b = 0
        pending = iter([(lv, v) for lv, v in boundaries])
        nxt = next(pending, None)
        for j in range(k):
            while nxt is not None and nxt[0] <= j:
                ech.add(nxt[1])
                dim_b += 1
                nxt = next(pending, None)
            if j >= i:
                table[i, j] = dim_z + dim_b - ech.rank
    return BirthDeathFunction(F.grid, d, table)


def pd_reduction_oracle(F: VRFiltration, d: int, tie_seed: int | None = None) -> dict[tuple[int, int], int]:
    """Finite off-diagonal bars of degree d from the standard pairing algorithm.

    Bars are keyed by grid indices (birth, death). With ``tie_seed`` the
    simplices sharing a level and dimension are inserted in a shuffled order.
    """
    _check_degree(F, d)
    low_cells = F.of_dim(d)
    up_cells = F.of_dim(d + 1)
    if tie_seed is not None:
        rng = np.random.default_rng(tie_seed)
        low_cells = _shuffle_ties(low_cells, rng)
        up_cells = _shuffle_ties(up_cells, rng)
    reduced, _ = _reduce(boundary_columns([s for s, _ in up_cells], [s for s, _ in low_cells]))
    bars: dict[tuple[int, int], int] = {}
    for (_, death), col in zip(up_cells, reduced):
        if col:
            birth = low_cells[col.bit_length() - 1][1]
            if birth != death:
                bars[(birth, death)] = bars.get((birth, death), 0) + 1
    return bars


def _shuffle_ties(cells: list[tuple[Simplex, int]], rng: np.random.Generator) -> list[tuple[Simplex, int]]:
    keys = rng.permutation(len(cells))
    return [cells[k] for k in sorted(range(len(cells)), key=lambda k: (cells[k][1], keys[k]))]
