"""Finite pseudo-metric spaces, metric measure spaces, maps between them and
Gromov-type distances computed exactly or bounded from above."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import networkx as nx
import numpy as np
from scipy import sparse
from scipy.optimize import Bounds, LinearConstraint, milp

from .errors import CapExceededError, ValidationError
from .transport import minimise_quadratic, plan_on_support

EPS_TRI = 1e-9
EPS_MASS = 1e-12
GH_CELL_CAP = 20
GW_CELL_CAP = 20


@dataclass(frozen=True, eq=False)
class FiniteMetricSpace:
    """Distance matrix of a finite pseudo-metric space (distinct points may be at distance 0)."""

    d: np.ndarray

    def __post_init__(self) -> None:
        d = validate_pseudo_metric(self.d)
        d.setflags(write=False)
        object.__setattr__(self, "d", d)

    @property
    def n(self) -> int:
        return self.d.shape[0]

    @classmethod
    def from_points(cls, points: Sequence[Sequence[float]]) -> FiniteMetricSpace:
        pts = np.asarray(points, dtype=float)
        if pts.ndim != 2:
            raise ValidationError("point cloud must be a 2-D array")
        diff = pts[:, None, :] - pts[None, :, :]
        return cls(np.sqrt(np.sum(diff * diff, axis=-1)))

    def pair_distances(self) -> np.ndarray:
        """Distances d(x_i, x_j) for i < j."""
        iu = np.triu_indices(self.n, k=1)
        return self.d[iu]


def validate_pseudo_metric(matrix: Iterable, tol: float = EPS_TRI) -> np.ndarray:
    """Return a cleaned copy of ``matrix`` or raise naming the first violation."""
    d = np.array(matrix, dtype=float)
    if d.ndim != 2 or d.shape[0] != d.shape[1]:
        raise ValidationError(f"distance matrix must be square, got shape {d.shape}")
    if d.shape[0] == 0:
        raise ValidationError("space must contain at least one point")
    if not np.all(np.isfinite(d)):
        i, j = map(int, np.argwhere(~np.isfinite(d))[0])
        raise ValidationError(f"non-finite distance d({i},{j})")
    if np.any(d < 0):
        i, j = map(int, np.argwhere(d < 0)[0])
        raise ValidationError(f"negative distance d({i},{j})={d[i, j]}")
    diag = np.abs(np.diag(d))
    if np.any(diag > tol):
        i = int(np.argmax(diag))
        raise ValidationError(f"nonzero self-distance d({i},{i})={d[i, i]}")
    asym = np.abs(d - d.T)
    if np.any(asym > tol):
        i, j = map(int, np.argwhere(asym > tol)[0])
        raise ValidationError(f"asymmetric distances d({i},{j})={d[i, j]} but d({j},{i})={d[j, i]}")
    d = (d + d.T) / 2.0
    np.fill_diagonal(d, 0.0)
    n = d.shape[0]
    for j in range(n):
        # d(i,k) <= d(i,j) + d(j,k) for every i, k
        excess = d - (d[:, j][:, None] + d[j, :][None, :])
        if np.any(excess > tol):
            i, k = map(int, np.argwhere(excess > tol)[0])
            raise ValidationError(
                f"triangle inequality fails: d({i},{k})={d[i, k]} > d({i},{j})+d({j},{k})={d[i, j] + d[j, k]}"
            )
    return d


@dataclass(frozen=True, eq=False)
class MMSpace:
    """Finite metric measure space with a fully supported probability measure."""

    space: FiniteMetricSpace
    mu: np.ndarray

    def __post_init__(self) -> None:
        mu = np.array(self.mu, dtype=float)
        if mu.shape != (self.space.n,):
            raise ValidationError(f"measure has {mu.size} entries for {self.space.n} points")
        if np.any(~np.isfinite(mu)) or np.any(mu <= 0):
            i = int(np.argmax(~np.isfinite(mu) | (mu <= 0)))
            raise ValidationError(f"measure must have full support: mu[{i}]={mu[i]}")
        if abs(mu.sum() - 1.0) > EPS_MASS:
            raise ValidationError(f"measure must sum to 1, sums to {mu.sum():.17g}")
        mu.setflags(write=False)
        object.__setattr__(self, "mu", mu)

    @property
    def d(self) -> np.ndarray:
        return self.space.d

    @property
    def n(self) -> int:
        return self.space.n

    @classmethod
    def uniform(cls, space: FiniteMetricSpace) -> MMSpace:
        return cls(space, np.full(space.n, 1.0 / space.n))


@dataclass(frozen=True)
class PointMap:
    """A map between finite point sets, stored as the tuple of image indices."""

    images: tuple[int, ...]
    codomain_size: int

    def __post_init__(self) -> None:
        imgs = tuple(int(v) for v in self.images)
        if any(v < 0 or v >= self.codomain_size for v in imgs):
            raise ValidationError("map image outside the codomain")
        object.__setattr__(self, "images", imgs)

    @property
    def is_surjective(self) -> bool:
        return len(set(self.images)) == self.codomain_size


def distortion(f: PointMap, X: FiniteMetricSpace, Y: FiniteMetricSpace) -> float:
    """max |d_X(x, x') - d_Y(f x, f x')|."""
    _check_map(f, X, Y)
    idx = np.asarray(f.images)
    return float(np.max(np.abs(X.d - Y.d[np.ix_(idx, idx)])))


def pullback(phi: PointMap, X: FiniteMetricSpace) -> FiniteMetricSpace:
    """Pseudo-metric d_X(phi z, phi z') on the domain of ``phi``."""
    if phi.codomain_size != X.n:
        raise ValidationError("map codomain does not match the space")
    idx = np.asarray(phi.images)
    return FiniteMetricSpace(X.d[np.ix_(idx, idx)])


def is_order_preserving(f: PointMap, X: FiniteMetricSpace, Y: FiniteMetricSpace, eps: float = 1e-9) -> bool:
    """Whether d_X(a) <= d_X(b) implies d_Y(f a) <= d_Y(f b) for all point pairs a, b."""
    _check_map(f, X, Y)
    idx = np.asarray(f.images)
    dx = X.d.ravel()
    dy = Y.d[np.ix_(idx, idx)].ravel()
    bad = (dx[:, None] <= dx[None, :] + eps) & (dy[:, None] > dy[None, :] + eps)
    return not bool(np.any(bad))


def pushforward(f: PointMap, mu: np.ndarray) -> np.ndarray:
    out = np.zeros(f.codomain_size)
    np.add.at(out, np.asarray(f.images), np.asarray(mu, dtype=float))
    return out


def is_monge(f: PointMap, X: MMSpace, Y: MMSpace, tol: float = EPS_MASS) -> bool:
    """Whether f pushes the measure of X onto the measure of Y."""
    _check_map(f, X.space, Y.space)
    return bool(np.all(np.abs(pushforward(f, X.mu) - Y.mu) <= tol))


@dataclass(frozen=True)
class MorphismReport:
    order_preserving: bool
    monge: bool
    surjective: bool


def check_morphism(f: PointMap, X: MMSpace, Y: MMSpace) -> MorphismReport:
    return MorphismReport(is_order_preserving(f, X.space, Y.space), is_monge(f, X, Y), f.is_surjective)


def _check_map(f: PointMap, X: FiniteMetricSpace, Y: FiniteMetricSpace) -> None:
    if len(f.images) != X.n or f.codomain_size != Y.n:
        raise ValidationError("map does not go between the given spaces")


def validate_correspondence(pairs: Iterable[tuple[int, int]], nx_: int, ny: int) -> frozenset[tuple[int, int]]:
    """Check that both projections of the relation are surjective."""
    rel = frozenset((int(x), int(y)) for x, y in pairs)
    if {x for x, _ in rel} != set(range(nx_)) or {y for _, y in rel} != set(range(ny)):
        raise ValidationError("relation is not a correspondence: a projection is not surjective")
    return rel


def validate_coupling(plan: np.ndarray, mu_x: np.ndarray, mu_y: np.ndarray, tol: float = EPS_MASS) -> np.ndarray:
    P = np.asarray(plan, dtype=float)
    if P.shape != (len(mu_x), len(mu_y)):
        raise ValidationError(f"coupling has shape {P.shape}, expected {(len(mu_x), len(mu_y))}")
    if np.any(P < -tol):
        raise ValidationError("coupling has negative mass")
    if np.any(np.abs(P.sum(axis=1) - mu_x) > tol) or np.any(np.abs(P.sum(axis=0) - mu_y) > tol):
        raise ValidationError("coupling marginals do not match the measures")
    return P


def cell_gaps(X: FiniteMetricSpace, Y: FiniteMetricSpace) -> np.ndarray:
    """|d_X(x, x') - d_Y(y, y')| indexed by cell pairs ((x, y), (x', y')) in row-major cell order."""
    n, m = X.n, Y.n
    G = np.abs(X.d[:, None, :, None] - Y.d[None, :, None, :])
    return G.reshape(n * m, n * m)


def correspondence_distortion(pairs: Iterable[tuple[int, int]], X: FiniteMetricSpace, Y: FiniteMetricSpace) -> float:
    rel = sorted(set(pairs))
    xs = np.array([x for x, _ in rel])
    ys = np.array([y for _, y in rel])
    return float(np.max(np.abs(X.d[np.ix_(xs, xs)] - Y.d[np.ix_(ys, ys)])))


def p_distortion(plan: np.ndarray, X: FiniteMetricSpace | MMSpace, Y: FiniteMetricSpace | MMSpace, p: float) -> float:
    """p-distortion of a coupling; p may be ``inf`` (max over pairs of support cells)."""
    X = X.space if isinstance(X, MMSpace) else X
    Y = Y.space if isinstance(Y, MMSpace) else Y
    P = np.asarray(plan, dtype=float)
    G = cell_gaps(X, Y)
    w = P.ravel()
    if np.isinf(p):
        supp = np.nonzero(w > 0)[0]
        return float(np.max(G[np.ix_(supp, supp)])) if len(supp) else 0.0
    return float((w @ (G**p) @ w) ** (1.0 / p))


def _check_cap(name: str, size: int, cap: int | None) -> None:
    if cap is not None and size > cap:
        raise CapExceededError(name, cap, size)


def _compatible_cliques(G: np.ndarray, t: float, n: int, m: int):
    """Maximal sets of cells whose pairwise gaps are <= t and which meet every row and column.

    Cells whose compatible neighbourhood misses a row or a column cannot lie in
    such a set; they are discarded until none remain before enumerating cliques.
    """
    adj = G <= t
    alive = np.ones(n * m, dtype=bool)
    rows = np.arange(n * m) // m
    cols = np.arange(n * m) % m
    while True:
        nb = (adj & alive[None, :]).reshape(n * m, n, m)
        keep = alive & nb.any(axis=2).all(axis=1) & nb.any(axis=1).all(axis=1)
        if np.array_equal(keep, alive):
            break
        alive = keep
    nodes = np.nonzero(alive)[0]
    if len(nodes) == 0:
        return
    graph = nx.Graph()
    graph.add_nodes_from(int(v) for v in nodes)
    sub = adj[np.ix_(nodes, nodes)]
    iu, ju = np.nonzero(np.triu(sub, k=1))
    graph.add_edges_from((int(nodes[i]), int(nodes[j])) for i, j in zip(iu, ju))
    for clique in nx.find_cliques(graph):
        cl = sorted(clique)
        if set(rows[cl]) == set(range(n)) and set(cols[cl]) == set(range(m)):
            yield cl


def _threshold_search(values: np.ndarray, feasible, budget: int | None = None):
    """Smallest value for which ``feasible`` returns a certificate (feasibility is monotone).

    ``feasible(t, budget)`` may give up with UNKNOWN. Such thresholds are first
    treated as feasible so the bisection keeps moving down; they are settled
    afterwards, for free when a smaller threshold turns out feasible, and by an
    unbounded run otherwise.
    """
    hi = len(values) - 1
    best = feasible(values[hi], None)
    if best is None or best is UNKNOWN:
        raise RuntimeError("largest threshold infeasible")  # pragma: no cover
    lo = 0
    while lo < hi:
        # optimistic bisection on [lo, hi]: unknown probes count as feasible
        a, b = lo, hi
        while a < b:
            mid = (a + b) // 2
            cert = feasible(values[mid], budget)
            if cert is None:
                a = mid + 1
            else:
                b = mid
                if cert is not UNKNOWN:
                    hi, best = mid, cert
        if b == hi:
            break
        # values[b - 1] is proven infeasible; settle the unknown value at b
        cert = feasible(values[b], None)
        if cert is None:
            lo = b + 1
        else:
            return values[b], cert
    return values[hi], best


def optimal_correspondence(
    X: FiniteMetricSpace, Y: FiniteMetricSpace, cap: int | None = GH_CELL_CAP
) -> tuple[float, frozenset[tuple[int, int]]]:
    """Correspondence of least distortion, found by thresholding the pairwise gaps."""
    n, m = X.n, Y.n
    _check_cap("|X|*|Y|", n * m, cap)
    G = cell_gaps(X, Y)

    def feasible(t: float, budget: int | None):
        for cl in _compatible_cliques(G, t, n, m):
            return frozenset((c // m, c % m) for c in cl)
        return None

    _, rel = _threshold_search(np.unique(G), feasible)
    return correspondence_distortion(rel, X, Y), rel


def gh_exact(X: FiniteMetricSpace, Y: FiniteMetricSpace, cap: int | None = GH_CELL_CAP) -> float:
    """Gromov-Hausdorff distance: half the least distortion of a correspondence."""
    X = X.space if isinstance(X, MMSpace) else X
    Y = Y.space if isinstance(Y, MMSpace) else Y
    dis, _ = optimal_correspondence(X, Y, cap)
    return dis / 2.0


def _propagate(adj: np.ndarray, chosen: np.ndarray, cand: np.ndarray, n: int, m: int):
    """Shrink a search node; returns (chosen, cand) or None when the node is dead.

    A candidate is dropped when the cells compatible with it cannot meet every
    row and column; a cell that is the only option left for its row or column
    is forced into the chosen set.
    """
    chosen, cand = chosen.copy(), cand.copy()
    while True:
        allowed = chosen | cand
        cover = allowed.reshape(n, m)
        if not (cover.any(axis=1).all() and cover.any(axis=0).all()):
            return None
        nb = (adj[cand] & allowed[None, :]).reshape(-1, n, m)
        ok = nb.any(axis=2).all(axis=1) & nb.any(axis=1).all(axis=1)
        if not ok.all():
            cand[np.flatnonzero(cand)[~ok]] = False
            continue
        forced = None
        for lines in (cover, cover.T):
            single = np.flatnonzero(lines.sum(axis=1) == 1)
            for r in single:
                c = int(np.flatnonzero(lines[r])[0])
                cell = r * m + c if lines is cover else c * m + r
                if cand[cell]:
                    forced = cell
                    break
            if forced is not None:
                break
        if forced is None:
            return chosen, cand
        chosen[forced] = True
        cand &= adj[forced]
        cand[forced] = False
        if not adj[forced][chosen].all():
            return None


class _Unknown:
    """Marker for a feasibility test that ran out of its node budget."""


UNKNOWN = _Unknown()


def _coupling_with_compatible_support(
    adj: np.ndarray, a: np.ndarray, b: np.ndarray, budget: int | None = None, usable: np.ndarray | None = None
) -> np.ndarray | None | _Unknown:
    """A coupling of a and b whose support is pairwise compatible under ``adj``, or None.

    Depth-first search over cell sets: a node holds the cells already chosen
    and the candidates compatible with all of them. Nodes are shrunk by
    propagation and pruned when no coupling lives on their cells; a node whose
    coupling already has a compatible support ends the search. Otherwise the
    row or column with the fewest remaining cells that no chosen cell covers is
    branched on, since some cell in it must carry mass.
    """
    n, m = len(a), len(b)
    start = np.ones(n * m, dtype=bool) if usable is None else np.asarray(usable, dtype=bool).copy()
    stack = [(np.zeros(n * m, dtype=bool), start)]
    visited = 0
    while stack:
        visited += 1
        if budget is not None and visited > budget:
            return UNKNOWN
        chosen, cand = stack.pop()
        node = _propagate(adj, chosen, cand, n, m)
        if node is None:
            continue
        chosen, cand = node
        allowed = chosen | cand
        # cells clashing with many others are priced up so the plan tends to avoid them
        clashes = (~adj[:, allowed]).sum(axis=1).astype(float)
        plan = plan_on_support(a, b, allowed.reshape(n, m), clashes.reshape(n, m))
        if plan is None:
            continue
        supp = np.flatnonzero(plan.ravel() > 0)
        if adj[np.ix_(supp, supp)].all():
            return plan
        got = chosen.reshape(n, m)
        free = cand.reshape(n, m)
        options = [np.flatnonzero(free[r]) + r * m for r in range(n) if not got[r].any()]
        options += [np.flatnonzero(free[:, c]) * m + c for c in range(m) if not got[:, c].any()]
        if not options:
            # every line is covered yet the chosen cells alone carry no coupling: add any conflicting cell
            options = [np.flatnonzero(cand)]
        line = min(options, key=len)
        line = line[np.argsort(clashes[line], kind="stable")]
        # push in reverse so the first option is explored first; sibling k excludes options before it
        for k in range(len(line) - 1, -1, -1):
            c = int(line[k])
            rest = cand.copy()
            rest[line[:k]] = False
            with_c = chosen.copy()
            with_c[c] = True
            stack.append((with_c, rest & adj[c] & ~with_c))
    return None


def _milp_compatible_coupling(adj: np.ndarray, a: np.ndarray, b: np.ndarray, usable: np.ndarray) -> np.ndarray | None:
    """Same question as the branch and bound, posed as a mixed-integer program.

    A binary per usable cell switches it on, mass may only sit on switched-on
    cells and incompatible cells cannot both be on. A reported solution is
    re-certified through an LP on the switched-on cells.
    """
    n, m = len(a), len(b)
    use = np.flatnonzero(usable)
    k = len(use)
    if k == 0:
        return None
    rows, cols = use // m, use % m
    idx = np.arange(k)
    marg = sparse.csr_matrix(
        (np.ones(2 * k), (np.concatenate([rows, n + cols]), np.concatenate([idx, idx]))), shape=(n + m, 2 * k)
    )
    cap = np.minimum(a[rows], b[cols])
    link = sparse.hstack([sparse.eye(k), -sparse.diags(cap)]).tocsr()
    constraints = [
        LinearConstraint(marg, np.concatenate([a, b]), np.concatenate([a, b])),
        LinearConstraint(link, -np.inf, 0.0),
    ]
    bad = np.argwhere(np.triu(~adj[np.ix_(use, use)], 1))
    if len(bad):
        r = np.arange(len(bad))
        clash = sparse.csr_matrix(
            (np.ones(2 * len(bad)), (np.concatenate([r, r]), np.concatenate([k + bad[:, 0], k + bad[:, 1]]))),
            shape=(len(bad), 2 * k),
        )
        constraints.append(LinearConstraint(clash, -np.inf, 1.0))
    res = milp(
        np.zeros(2 * k),
        constraints=constraints,
        integrality=np.concatenate([np.zeros(k), np.ones(k)]),
        bounds=Bounds(0.0, np.concatenate([np.full(k, np.inf), np.ones(k)])),
    )
    if res.status == 2:
        return None
    if res.status != 0:  # pragma: no cover - time or iteration limits are not set
        raise RuntimeError(f"mixed-integer solver failed: {res.message}")
    on = np.zeros(n * m, dtype=bool)
    on[use[res.x[k:] > 0.5]] = True
    plan = plan_on_support(a, b, on.reshape(n, m))
    if plan is None:  # pragma: no cover - numerical disagreement between the two solvers
        raise RuntimeError("mixed-integer solution does not carry a coupling")
    supp = np.flatnonzero(plan.ravel() > 0)
    if not adj[np.ix_(supp, supp)].all():  # pragma: no cover
        raise RuntimeError("mixed-integer solution has incompatible cells")
    return plan


def _winf_samples(x: np.ndarray, wx: np.ndarray, y: np.ndarray, wy: np.ndarray) -> float:
    """inf-Wasserstein distance between two weighted samples on the line."""
    ox, oy = np.argsort(x, kind="stable"), np.argsort(y, kind="stable")
    x, wx, y, wy = x[ox], wx[ox], y[oy], wy[oy]
    cx, cy = np.cumsum(wx), np.cumsum(wy)
    cx[-1] = cy[-1] = 1.0
    levels = np.unique(np.concatenate([[0.0], cx, cy]))
    levels = levels[np.concatenate([[True], np.diff(levels) > EPS_MASS])]
    levels[-1] = 1.0
    mids = (levels[:-1] + levels[1:]) / 2.0
    qx = x[np.minimum(np.searchsorted(cx, mids), len(x) - 1)]
    qy = y[np.minimum(np.searchsorted(cy, mids), len(y) - 1)]
    return float(np.max(np.abs(qx - qy)))


def profile_gaps(X: MMSpace, Y: MMSpace) -> np.ndarray:
    """inf-Wasserstein gap between the distance profiles d_X(x, .)#mu_X and d_Y(y, .)#mu_Y.

    If a coupling with inf-distortion t charges (x, y), pushing it forward by
    (x', y') -> (d_X(x, x'), d_Y(y, y')) couples the two profiles within t, so
    cells whose gap exceeds t can be dropped at threshold t.
    """
    return np.array(
        [[_winf_samples(X.d[x], X.mu, Y.d[y], Y.mu) for y in range(Y.n)] for x in range(X.n)]
    )


def gw_inf_coupling(X: MMSpace, Y: MMSpace, cap: int | None = GW_CELL_CAP) -> tuple[float, np.ndarray]:
    """Exact Gromov-Wasserstein distance for p = inf together with an optimal coupling.

    Thresholds t are bisected over the distinct gaps; at each one a coupling
    whose support has all pairwise gaps <= t is searched for exactly, first by
    a short branch and bound and, if that runs out of nodes, by a
    mixed-integer program.
    """
    n, m = X.n, Y.n
    _check_cap("|X|*|Y|", n * m, cap)
    G = cell_gaps(X.space, Y.space)

    local = profile_gaps(X, Y).ravel()

    def feasible(t: float, budget: int | None):
        adj, usable = G <= t, local <= t
        found = _coupling_with_compatible_support(adj, X.mu, Y.mu, 64, usable)
        if found is UNKNOWN:
            found = _milp_compatible_coupling(adj, X.mu, Y.mu, usable)
        return found

    _, plan = _threshold_search(np.unique(G), feasible)
    return p_distortion(plan, X, Y, np.inf) / 2.0, plan


def gw_inf_exact(X: MMSpace, Y: MMSpace, cap: int | None = GW_CELL_CAP) -> float:
    return gw_inf_coupling(X, Y, cap)[0]


def gw_p_upper(
    X: MMSpace, Y: MMSpace, p: float, restarts: int = 5, seed: int = 0
) -> tuple[float, np.ndarray]:
    """Certified upper bound on the p-Gromov-Wasserstein distance with its coupling.

    The value is half the p-distortion of the returned coupling, so it is
    attained and can only overestimate the infimum.
    """
    if np.isinf(p):
        return gw_inf_coupling(X, Y, cap=None)
    if p < 1:
        raise ValidationError(f"p must be >= 1, got {p}")
    C = cell_gaps(X.space, Y.space) ** p
    _, plan = minimise_quadratic(C, X.mu, Y.mu, restarts=restarts, seed=seed)
    return p_distortion(plan, X, Y, p) / 2.0, plan


@dataclass(frozen=True, eq=False)
class DiscreteMeasure1D:
    """Finitely supported probability measure on the real line (support sorted, masses positive)."""

    support: np.ndarray
    masses: np.ndarray

    def __post_init__(self) -> None:
        x = np.array(self.support, dtype=float)
        w = np.array(self.masses, dtype=float)
        if x.shape != w.shape or x.ndim != 1:
            raise ValidationError("support and masses must be 1-D of equal length")
        if np.any(np.diff(x) <= 0):
            raise ValidationError("support must be strictly increasing")
        if np.any(w < 0):
            raise ValidationError("masses must be non-negative")
        if abs(w.sum() - 1.0) > EPS_MASS:
            raise ValidationError(f"masses must sum to 1, sum to {w.sum():.17g}")
        x.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "support", x)
        object.__setattr__(self, "masses", w)

    def as_dict(self) -> dict[float, float]:
        return {float(a): float(b) for a, b in zip(self.support, self.masses)}


def wasserstein_1d(a: DiscreteMeasure1D, b: DiscreteMeasure1D, p: float = 1.0) -> float:
    """Exact p-Wasserstein distance on the line through the quantile coupling."""
    ca = np.cumsum(a.masses)
    cb = np.cumsum(b.masses)
    ca[-1] = cb[-1] = 1.0
    levels = np.unique(np.concatenate([[0.0], ca, cb]))
    # cumulative sums that agree up to rounding would otherwise leave sliver slices
    keep = np.concatenate([[True], np.diff(levels) > EPS_MASS])
    levels = levels[keep]
    levels[-1] = 1.0
    widths = np.diff(levels)
    mids = (levels[:-1] + levels[1:]) / 2.0
    qa = a.support[np.minimum(np.searchsorted(ca, mids, side="left"), len(ca) - 1)]
    qb = b.support[np.minimum(np.searchsorted(cb, mids, side="left"), len(cb) - 1)]
    gap = np.abs(qa - qb)
    if np.isinf(p):
        return float(np.max(gap)) if len(gap) else 0.0
    return float(np.sum(widths * gap**p) ** (1.0 / p))
