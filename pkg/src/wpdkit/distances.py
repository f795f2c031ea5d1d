"""Edit-type distances between (weighted) persistence diagrams.

A matching pairs intervals of a source diagram on grid Q with intervals of a
target diagram on grid R. For a cell (I, J) with I = [a, b], J = [c, d] write
its endpoint displacements as c - a and d - b. The displacement of two cells
is the largest gap between a displacement of one and a displacement of the
other, so the cost of a matching is the spread of all endpoint displacements
on its support, the anchor cell ([0,0],[0,0]) contributing 0. The exact
solvers below search over windows [lo, hi] containing 0.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Mapping

import networkx as nx
import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching

from .diagram import Interval, PersistenceDiagram, WeightedPersistenceDiagram, interval_values
from .errors import CapExceededError, ValidationError
from .filtration import CriticalGrid
from .transport import interior_plan, minimise_quadratic, plan_on_support, support_closure

ANCHOR: Interval = (0, 0)
Cell = tuple[Interval, Interval]
DEFO_BAR_CAP = 8
WEIGHTED_CELL_CAP = 4096
EPS_SUPP = 1e-7


def defo(I1: tuple[float, float], I2: tuple[float, float], J1: tuple[float, float], J2: tuple[float, float]) -> float:
    """Displacement of the pair of cells (I1, J1), (I2, J2)."""
    (a1, b1), (a2, b2), (c1, d1), (c2, d2) = I1, I2, J1, J2
    return max(
        abs((a1 - a2) - (c1 - c2)),
        abs((a1 - b2) - (c1 - d2)),
        abs((b1 - a2) - (d1 - c2)),
        abs((b1 - b2) - (d1 - d2)),
    )


def defo_matrix(ends: np.ndarray) -> np.ndarray:
    """Pairwise displacement for cells given as rows (a, b, c, d)."""
    a, b, c, d = (ends[:, k] for k in range(4))
    terms = [
        (a[:, None] - a[None, :]) - (c[:, None] - c[None, :]),
        (a[:, None] - b[None, :]) - (c[:, None] - d[None, :]),
        (b[:, None] - a[None, :]) - (d[:, None] - c[None, :]),
        (b[:, None] - b[None, :]) - (d[:, None] - d[None, :]),
    ]
    return np.max(np.abs(np.stack(terms)), axis=0)


@dataclass(frozen=True, eq=False)
class Matching:
    """Integer-valued gamma on (source interval, target interval) cells."""

    source: CriticalGrid
    target: CriticalGrid
    gamma: Mapping[Cell, int]

    def cells(self) -> list[Cell]:
        return sorted(c for c, v in self.gamma.items() if v > 0)


@dataclass(frozen=True, eq=False)
class WeightedMatching:
    matching: Matching
    eta: Mapping[Cell, float]

    def support(self) -> list[Cell]:
        return sorted(c for c, v in self.eta.items() if v > 0)


@dataclass(frozen=True)
class MatchingReport:
    valid: bool
    problems: tuple[str, ...] = ()


@dataclass(frozen=True, eq=False)
class DistanceResult:
    """Distance value, the certificate attaining it and whether it is exact or an upper bound."""

    value: float
    certificate: Any
    mode: str
    lower_bound: float | None = None
    details: Mapping[str, Any] = field(default_factory=dict)


def _cell_ends(cells: list[Cell], Q: CriticalGrid, R: CriticalGrid) -> np.ndarray:
    return np.array([(*interval_values(Q, I), *interval_values(R, J)) for I, J in cells], dtype=float).reshape(-1, 4)


def validate_matching(g: Matching, s: PersistenceDiagram, t: PersistenceDiagram) -> MatchingReport:
    problems: list[str] = []
    if g.source != s.grid or g.target != t.grid:
        problems.append("matching grids differ from the diagram grids")
    kq, kr = len(s.grid), len(t.grid)
    rows: dict[Interval, int] = {}
    cols: dict[Interval, int] = {}
    for (I, J), v in g.gamma.items():
        if not (0 <= I[0] <= I[1] < kq and 0 <= J[0] <= J[1] < kr):
            problems.append(f"cell {(I, J)} is off the grids")
            continue
        if v < 0 or int(v) != v:
            problems.append(f"gamma{(I, J)}={v} is not a non-negative integer")
        rows[I] = rows.get(I, 0) + int(v)
        cols[J] = cols.get(J, 0) + int(v)
    if g.gamma.get((ANCHOR, ANCHOR), 0) != 1:
        problems.append("anchor gamma([0,0],[0,0]) must equal 1")
    sig, tau = s.off_diagonal(), t.off_diagonal()
    for I in set(sig) | {I for I in rows if I[0] != I[1]}:
        if rows.get(I, 0) != sig.get(I, 0):
            problems.append(f"source interval {I}: row sum {rows.get(I, 0)} != multiplicity {sig.get(I, 0)}")
    for J in set(tau) | {J for J in cols if J[0] != J[1]}:
        if cols.get(J, 0) != tau.get(J, 0):
            problems.append(f"target interval {J}: column sum {cols.get(J, 0)} != multiplicity {tau.get(J, 0)}")
    return MatchingReport(not problems, tuple(problems))


def validate_weighted_matching(
    wg: WeightedMatching, ws: WeightedPersistenceDiagram, wt: WeightedPersistenceDiagram, tol: float = 1e-9
) -> MatchingReport:
    rep = validate_matching(wg.matching, ws.diagram, wt.diagram)
    problems = list(rep.problems)
    rows: dict[Interval, float] = {}
    cols: dict[Interval, float] = {}
    for (I, J), w in wg.eta.items():
        if w < 0:
            problems.append(f"eta{(I, J)} is negative")
        rows[I] = rows.get(I, 0.0) + w
        cols[J] = cols.get(J, 0.0) + w
    for I in set(rows) | set(ws.weights):
        if abs(rows.get(I, 0.0) - ws.weights.get(I, 0.0)) > tol:
            problems.append(f"eta row {I} does not match the source weight")
    for J in set(cols) | set(wt.weights):
        if abs(cols.get(J, 0.0) - wt.weights.get(J, 0.0)) > tol:
            problems.append(f"eta column {J} does not match the target weight")
    for c in wg.matching.cells():
        if wg.eta.get(c, 0.0) <= 0:
            problems.append(f"gamma is positive on {c} where eta vanishes")
    return MatchingReport(not problems, tuple(problems))


def defcost(g: Matching) -> float:
    """Largest displacement over pairs of cells where gamma is positive."""
    cells = g.cells()
    if not cells:
        return 0.0
    return float(np.max(defo_matrix(_cell_ends(cells, g.source, g.target))))


def defcost_p(wg: WeightedMatching, p: float) -> float:
    """p-cost of a weighted matching: displacement averaged over eta x eta (max over its support for p = inf)."""
    cells = wg.support()
    if not cells:
        return 0.0
    D = defo_matrix(_cell_ends(cells, wg.matching.source, wg.matching.target))
    if np.isinf(p):
        return float(np.max(D))
    w = np.array([wg.eta[c] for c in cells])
    return float((w @ (D**p) @ w) ** (1.0 / p))


def _displacement_range(cells: list[Cell], Q: CriticalGrid, R: CriticalGrid) -> tuple[np.ndarray, np.ndarray]:
    ends = _cell_ends(cells, Q, R)
    left = ends[:, 2] - ends[:, 0]
    right = ends[:, 3] - ends[:, 1]
    return np.minimum(left, right), np.maximum(left, right)


def _diagonals(grid: CriticalGrid) -> list[Interval]:
    return [(i, i) for i in range(len(grid))]


def _matching_flow(
    sigma: Mapping[Interval, int],
    tau: Mapping[Interval, int],
    allowed: list[Cell],
) -> dict[Cell, int] | None:
    """Integral gamma using only ``allowed`` cells that meets every off-diagonal multiplicity.

    Off-diagonal intervals are saturated exactly; diagonal intervals act as
    unlimited sources (source side) and sinks (target side).
    """
    to_diag: dict[Interval, Interval] = {}
    from_diag: dict[Interval, Interval] = {}
    direct: list[Cell] = []
    for I, J in allowed:
        i_off, j_off = I[0] != I[1], J[0] != J[1]
        if i_off and j_off and I in sigma and J in tau:
            direct.append((I, J))
        elif i_off and not j_off and I in sigma:
            to_diag.setdefault(I, J)
        elif not i_off and j_off and J in tau:
            from_diag.setdefault(J, I)
    total_s, total_t = sum(sigma.values()), sum(tau.values())
    G = nx.DiGraph()
    G.add_node("dq", demand=-total_t)
    G.add_node("dr", demand=total_s)
    G.add_edge("dq", "dr", weight=0)
    for I, v in sigma.items():
        G.add_node(("s", I), demand=-v)
        if I in to_diag:
            G.add_edge(("s", I), "dr", weight=0)
    for J, v in tau.items():
        G.add_node(("t", J), demand=v)
        if J in from_diag:
            G.add_edge("dq", ("t", J), weight=0)
    for I, J in direct:
        G.add_edge(("s", I), ("t", J), weight=0)
    try:
        _, flow = nx.network_simplex(G)
    except nx.NetworkXUnfeasible:
        return None
    gamma: dict[Cell, int] = {(ANCHOR, ANCHOR): 1}
    for I, J in direct:
        if flow[("s", I)].get(("t", J), 0) > 0:
            gamma[(I, J)] = flow[("s", I)][("t", J)]
    for I, J in to_diag.items():
        if flow[("s", I)].get("dr", 0) > 0:
            gamma[(I, J)] = gamma.get((I, J), 0) + flow[("s", I)]["dr"]
    for J, I in from_diag.items():
        if flow["dq"].get(("t", J), 0) > 0:
            gamma[(I, J)] = gamma.get((I, J), 0) + flow["dq"][("t", J)]
    return gamma


def _window_search(lows: np.ndarray, highs: np.ndarray, feasible) -> tuple[float, float, Any]:
    """Narrowest window [lo, hi] with lo <= 0 <= hi on which ``feasible`` succeeds.

    Candidate endpoints are the cell displacement extremes and 0. Feasibility is
    monotone under enlarging the window, so for decreasing lo the least feasible
    hi can only decrease and one sweep of two pointers visits every candidate
    at most once.
    """
    lo_vals = np.unique(np.concatenate([[0.0], lows[lows <= 0]]))[::-1]
    hi_vals = np.unique(np.concatenate([[0.0], highs[highs >= 0]]))
    h = len(hi_vals) - 1
    best: tuple[float, float, Any] | None = None
    for lo in lo_vals:
        if best is not None and -lo >= best[1] - best[0]:
            break
        cert = feasible(lo, hi_vals[h])
        if cert is None:
            continue
        while h > 0:
            smaller = feasible(lo, hi_vals[h - 1])
            if smaller is None:
                break
            h -= 1
            cert = smaller
        if best is None or hi_vals[h] - lo < best[1] - best[0]:
            best = (float(lo), float(hi_vals[h]), cert)
    if best is None:  # pragma: no cover - the widest window always admits a matching
        raise RuntimeError("no feasible window")
    return best


def d_defo_exact(s: PersistenceDiagram, t: PersistenceDiagram, cap: int | None = DEFO_BAR_CAP) -> DistanceResult:
    """Exact displacement distance between two unweighted diagrams with an optimal matching."""
    sigma, tau = s.off_diagonal(), t.off_diagonal()
    for name, count in (("source bars", s.bar_count()), ("target bars", t.bar_count())):
        if cap is not None and count > cap:
            raise CapExceededError(name, cap, count)
    Q, R = s.grid, t.grid
    cells: list[Cell] = [(ANCHOR, ANCHOR)]
    cells += [(I, J) for I in sigma for J in list(tau) + _diagonals(R)]
    cells += [(I, J) for I in _diagonals(Q) for J in tau]
    lows, highs = _displacement_range(cells, Q, R)

    def feasible(lo: float, hi: float):
        ok = (lows >= lo) & (highs <= hi)
        return _matching_flow(sigma, tau, [c for c, k in zip(cells, ok) if k])

    _, _, gamma = _window_search(lows, highs, feasible)
    g = Matching(Q, R, gamma)
    return DistanceResult(defcost(g), g, "exact")


def _weight_vectors(ws: WeightedPersistenceDiagram, wt: WeightedPersistenceDiagram):
    rows = sorted(ws.weights)
    cols = sorted(wt.weights)
    a = np.array([ws.weights[I] for I in rows])
    b = np.array([wt.weights[J] for J in cols])
    return rows, cols, a / a.sum(), b / b.sum()


def _trivial_weighted_matching(ws, wt, rows, cols, a, b) -> WeightedMatching | None:
    """Product coupling with any matching it supports; a valid but usually poor certificate."""
    allowed = [(I, J) for I in rows for J in cols]
    gamma = _matching_flow(ws.diagram.off_diagonal(), wt.diagram.off_diagonal(), allowed)
    if gamma is None:
        return None
    plan = np.outer(a, b)
    eta = {(I, J): float(plan[r, c]) for r, I in enumerate(rows) for c, J in enumerate(cols)}
    return WeightedMatching(Matching(ws.grid, wt.grid, gamma), eta)


def _no_weighted_matching(ws, wt, rows, cols) -> bool:
    return ANCHOR not in rows or ANCHOR not in cols


def d_defo_inf_weighted(
    ws: WeightedPersistenceDiagram, wt: WeightedPersistenceDiagram, cap: int | None = WEIGHTED_CELL_CAP
) -> DistanceResult:
    """Weighted displacement distance for p = inf.

    Exact when the number of weighted cells is within ``cap``; otherwise the
    product-coupling certificate is returned as an upper bound, with the
    unweighted distance as lower bound.
    """
    rows, cols, a, b = _weight_vectors(ws, wt)
    if _no_weighted_matching(ws, wt, rows, cols):
        return DistanceResult(float("inf"), None, "exact")
    if cap is not None and len(rows) * len(cols) > cap:
        cert = _trivial_weighted_matching(ws, wt, rows, cols, a, b)
        lower = None
        try:
            lower = d_defo_exact(ws.diagram, wt.diagram).value
        except CapExceededError:
            pass
        return DistanceResult(defcost_p(cert, np.inf), cert, "upper_bound", lower)
    sigma, tau = ws.diagram.off_diagonal(), wt.diagram.off_diagonal()
    cells = [(I, J) for I in rows for J in cols]
    lows, highs = _displacement_range(cells, ws.grid, wt.grid)
    shape = (len(rows), len(cols))
    lo_m, hi_m = lows.reshape(shape), highs.reshape(shape)
    anchor = (rows.index(ANCHOR), cols.index(ANCHOR))

    def feasible(lo: float, hi: float):
        mask = (lo_m >= lo) & (hi_m <= hi)
        plan = plan_on_support(a, b, mask)
        if plan is None:
            return None
        closure = support_closure(mask, plan)
        if not closure[anchor]:
            return None
        allowed = [cells[k] for k in np.flatnonzero(closure.ravel())]
        gamma = _matching_flow(sigma, tau, allowed)
        if gamma is None:
            return None
        return mask, gamma

    _, _, (mask, gamma) = _window_search(lows, highs, feasible)
    required = np.zeros(shape, dtype=bool)
    index = {c: k for k, c in enumerate(cells)}
    for c in gamma:
        required.flat[index[c]] = True
    eta_plan = interior_plan(a, b, mask, required)
    if eta_plan is None:  # pragma: no cover - required cells lie in the support closure
        raise RuntimeError("could not realise the matching support")
    eta = {cells[k]: float(eta_plan.flat[k]) for k in np.flatnonzero(eta_plan.ravel() > 0)}
    wg = WeightedMatching(Matching(ws.grid, wt.grid, gamma), eta)
    return DistanceResult(defcost_p(wg, np.inf), wg, "exact")


def d_defo_p_weighted(
    ws: WeightedPersistenceDiagram,
    wt: WeightedPersistenceDiagram,
    p: float,
    restarts: int = 5,
    seed: int = 0,
    eps_supp: float = EPS_SUPP,
) -> DistanceResult:
    """Upper bound on the weighted displacement distance for finite p.

    Frank-Wolfe picks a coupling of the weights. If its support holds no valid
    matching, a small multiple of the product coupling is mixed in so that
    every cell carries mass. The mixing share is the largest
    power of 1/2 that raises the cost by at most ``eps_supp``.
    """
    if np.isinf(p):
        return d_defo_inf_weighted(ws, wt)
    if p < 1:
        raise ValidationError(f"p must be >= 1, got {p}")
    rows, cols, a, b = _weight_vectors(ws, wt)
    if _no_weighted_matching(ws, wt, rows, cols):
        return DistanceResult(float("inf"), None, "upper_bound")
    cells = [(I, J) for I in rows for J in cols]
    D = defo_matrix(_cell_ends(cells, ws.grid, wt.grid))
    C = D**p
    _, plan = minimise_quadratic(C, a, b, restarts=restarts, seed=seed)
    base = plan.ravel()
    sigma, tau = ws.diagram.off_diagonal(), wt.diagram.off_diagonal()
    gamma = _matching_flow(sigma, tau, [c for c, v in zip(cells, base) if v > 0])
    if gamma is not None:
        # the optimiser's own support already holds a matching: no mixing needed
        eta = {cells[k]: float(base[k]) for k in np.flatnonzero(base > 0)}
        wg = WeightedMatching(Matching(ws.grid, wt.grid, gamma), eta)
        return DistanceResult(defcost_p(wg, p), wg, "upper_bound", details={"mixing_share": 0.0})
    prod = np.outer(a, b).ravel()
    A, B, P = base @ C @ base, base @ C @ prod, prod @ C @ prod
    target = max(A, 0.0) ** (1.0 / p) + eps_supp
    share = 1.0
    while share > 0:
        f = (1 - share) ** 2 * A + 2 * share * (1 - share) * B + share**2 * P
        if max(f, 0.0) ** (1.0 / p) <= target:
            break
        share /= 2.0
    if share == 0:
        share = np.nextafter(0.0, 1.0)
    mixed = (1 - share) * base + share * prod
    eta = {cells[k]: float(mixed[k]) for k in np.flatnonzero(mixed > 0)}
    gamma = _matching_flow(sigma, tau, [c for c in cells if c in eta])
    if gamma is None:
        return DistanceResult(float("inf"), None, "upper_bound")
    wg = WeightedMatching(Matching(ws.grid, wt.grid, gamma), eta)
    return DistanceResult(defcost_p(wg, p), wg, "upper_bound", details={"mixing_share": share})


def bottleneck(s: PersistenceDiagram, t: PersistenceDiagram) -> float:
    """Bottleneck distance: sup-norm matching with projection to the diagonal at half the bar length."""
    A = [(b, d) for b, d, m in s.bar_values() for _ in range(m)]
    B = [(b, d) for b, d, m in t.bar_values() for _ in range(m)]
    n, m = len(A), len(B)
    if n + m == 0:
        return 0.0
    inf = np.inf
    cost = np.full((n + m, m + n), inf)
    for i, (a0, a1) in enumerate(A):
        for j, (b0, b1) in enumerate(B):
            cost[i, j] = max(abs(a0 - b0), abs(a1 - b1))
        cost[i, m + i] = (a1 - a0) / 2.0
    for j, (b0, b1) in enumerate(B):
        cost[n + j, j] = (b1 - b0) / 2.0
    cost[n:, m:] = 0.0
    values = np.unique(cost[np.isfinite(cost)])

    def perfect(tval: float) -> bool:
        adj = csr_matrix((cost <= tval).astype(np.int8))
        match = maximum_bipartite_matching(adj, perm_type="column")
        return bool(np.all(match >= 0))

    lo, hi = 0, len(values) - 1
    while lo < hi:
        mid = (lo + hi) // 2
        if perfect(values[mid]):
            hi = mid
        else:
            lo = mid + 1
    return float(values[hi])
