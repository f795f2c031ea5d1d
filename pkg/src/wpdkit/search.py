"""Search for pairs of spaces with the same distance distribution whose
weighted diagrams still look apart at finite p.

Equal distance distributions make the flipped spaces isometric, so the
certified lower bounds in this package vanish on such pairs. What is reported
here is the smallest finite-p upper bound over several restarts: a heuristic
indication of a positive distance, never a certificate.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .diagram import same_off_diagonal, weighted_pd
from .distances import d_defo_inf_weighted, d_defo_p_weighted
from .filtration import weighted_vr
from .metric import FiniteMetricSpace, MMSpace


@dataclass(frozen=True)
class Candidate:
    points_x: tuple[tuple[int, int], ...]
    points_y: tuple[tuple[int, int], ...]
    degree: int
    p: float
    heuristic_value: float
    inf_distance: float
    certified: bool = False


def _lattice_sets(n_points: int, side: int) -> list[tuple[tuple[int, int], ...]]:
    lattice = [(i, j) for i in range(side) for j in range(side)]
    return list(combinations(lattice, n_points))


def _signature(pts) -> tuple[int, ...]:
    return tuple(np.round(FiniteMetricSpace.from_points(pts).pair_distances() ** 2).astype(int).tolist())


def same_gdd_candidates(
    n_points: int = 4,
    side: int = 3,
    degree: int = 0,
    p: float = 2.0,
    restarts: int = 5,
    limit: int = 5,
    seed: int = 0,
) -> list[Candidate]:
    """Pairs of lattice point sets with equal distance multisets and different diagrams.

    Point sets live on a ``side`` x ``side`` integer lattice; squared distances are
    compared exactly. Each candidate carries the smallest finite-p upper bound found
    over seeds ``seed .. seed + restarts - 1`` and the exact p = inf distance.
    """
    groups: dict[tuple[int, ...], list] = {}
    for pts in _lattice_sets(n_points, side):
        groups.setdefault(tuple(sorted(_signature(pts))), []).append(pts)
    out: list[Candidate] = []
    for members in groups.values():
        for A, B in combinations(members, 2):
            X = MMSpace.uniform(FiniteMetricSpace.from_points(A))
            Y = MMSpace.uniform(FiniteMetricSpace.from_points(B))
            a = weighted_pd(weighted_vr(X, degree + 1), degree)
            b = weighted_pd(weighted_vr(Y, degree + 1), degree)
            if same_off_diagonal(a.diagram, b.diagram):
                continue
            values = [d_defo_p_weighted(a, b, p, restarts=1, seed=seed + k).value for k in range(restarts)]
            out.append(Candidate(A, B, degree, p, min(values), d_defo_inf_weighted(a, b).value))
            if len(out) >= limit:
                return out
    return out
