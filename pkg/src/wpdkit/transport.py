"""Transportation-polytope primitives: feasibility on a support, support closure,
vertex construction and a Frank-Wolfe minimiser for quadratic transport costs."""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Sequence

import numpy as np
from scipy import sparse
from scipy.optimize import linprog
from scipy.sparse.csgraph import connected_components

MARGINAL_TOL = 1e-9
POSITIVE_TOL = 1e-13

_HIGHS_OPTIONS = {"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10}


def worker_count() -> int:
    """Thread budget taken from WPDKIT_THREADS (default 1)."""
    raw = os.environ.get("WPDKIT_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def plan_on_support(
    a: np.ndarray, b: np.ndarray, mask: np.ndarray, cost: np.ndarray | None = None
) -> np.ndarray | None:
    """Return a coupling of ``a`` and ``b`` vanishing outside ``mask``.

    With ``cost`` given, the returned coupling minimises the linear cost.
    Returns None when no such coupling exists.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    mask = np.asarray(mask, dtype=bool)
    n, m = mask.shape
    # every row and column carrying mass needs at least one admissible cell
    if np.any((a > 0) & ~mask.any(axis=1)) or np.any((b > 0) & ~mask.any(axis=0)):
        return None
    rows, cols = np.nonzero(mask)
    k = len(rows)
    idx = np.arange(k)
    A = sparse.csr_matrix(
        (np.ones(2 * k), (np.concatenate([rows, n + cols]), np.concatenate([idx, idx]))),
        shape=(n + m, k),
    )
    c = np.zeros(k) if cost is None else np.asarray(cost, dtype=float)[rows, cols]
    res = linprog(
        c,
        A_eq=A,
        b_eq=np.concatenate([a, b]),
        bounds=(0, None),
        method="highs",
        options=_HIGHS_OPTIONS,
    )
    if res.status != 0:
        return None
    plan = np.zeros((n, m))
    plan[rows, cols] = np.clip(res.x, 0.0, None)
    if not _has_marginals(plan, a, b):
        return None
    return plan


def _has_marginals(plan: np.ndarray, a: np.ndarray, b: np.ndarray, tol: float = MARGINAL_TOL) -> bool:
    return bool(
        np.all(np.abs(plan.sum(axis=1) - a) <= tol) and np.all(np.abs(plan.sum(axis=0) - b) <= tol)
    )


def solve_transport(cost: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Optimal plan of the linear transportation problem on the full grid."""
    plan = plan_on_support(a, b, np.ones(np.shape(cost), dtype=bool), cost)
    if plan is None:  # pragma: no cover - full support is always feasible for balanced marginals
        raise RuntimeError("transport LP failed on a full support")
    return plan


def support_closure(mask: np.ndarray, plan: np.ndarray) -> np.ndarray:
    """Cells of ``mask`` that are positive in at least one coupling supported in ``mask``.

    ``plan`` must be one such coupling. A zero cell (i, j) can be made positive
    exactly when row i and column j lie on a common cycle of the residual graph,
    whose arcs are row->column for admissible cells and column->row for cells
    carrying mass in ``plan``.
    """
    mask = np.asarray(mask, dtype=bool)
    n, m = mask.shape
    pos = plan > POSITIVE_TOL
    fr, fc = np.nonzero(mask)
    br, bc = np.nonzero(pos)
    src = np.concatenate([fr, n + bc])
    dst = np.concatenate([n + fc, br])
    graph = sparse.csr_matrix((np.ones(len(src)), (src, dst)), shape=(n + m, n + m))
    _, label = connected_components(graph, directed=True, connection="strong")
    same = label[:n, None] == label[None, n:]
    return mask & (pos | same)


def interior_plan(a: np.ndarray, b: np.ndarray, mask: np.ndarray, required: np.ndarray) -> np.ndarray | None:
    """A coupling supported in ``mask`` that is positive on every ``required`` cell.

    Maximises the smallest mass over the required cells; None if that optimum is zero.
    """
    mask = np.asarray(mask, dtype=bool)
    required = np.asarray(required, dtype=bool) & mask
    n, m = mask.shape
    rows, cols = np.nonzero(mask)
    k = len(rows)
    idx = np.arange(k)
    A_eq = sparse.csr_matrix(
        (np.ones(2 * k), (np.concatenate([rows, n + cols]), np.concatenate([idx, idx]))),
        shape=(n + m, k + 1),
    )
    req = np.nonzero(required[rows, cols])[0]
    # s - x_c <= 0 for each required cell, maximise s
    A_ub = sparse.csr_matrix(
        (
            np.concatenate([-np.ones(len(req)), np.ones(len(req))]),
            (np.concatenate([np.arange(len(req))] * 2), np.concatenate([req, np.full(len(req), k)])),
        ),
        shape=(len(req), k + 1),
    )
    c = np.zeros(k + 1)
    c[k] = -1.0
    res = linprog(
        c,
        A_ub=A_ub,
        b_ub=np.zeros(len(req)),
        A_eq=A_eq,
        b_eq=np.concatenate([a, b]),
        bounds=[(0, None)] * k + [(0, 1)],
        method="highs",
        options=_HIGHS_OPTIONS,
    )
    if res.status != 0 or res.x[k] <= POSITIVE_TOL:
        return None
    plan = np.zeros((n, m))
    plan[rows, cols] = np.clip(res.x[:k], 0.0, None)
    if not _has_marginals(plan, a, b) or np.any(plan[required] <= 0):
        return None
    return plan


def northwest_corner(
    a: np.ndarray, b: np.ndarray, row_order: Sequence[int] | None = None, col_order: Sequence[int] | None = None
) -> np.ndarray:
    """Vertex of the transportation polytope built by the northwest-corner rule."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    ro = list(range(len(a))) if row_order is None else list(row_order)
    co = list(range(len(b))) if col_order is None else list(col_order)
    plan = np.zeros((len(a), len(b)))
    ra = a[ro].copy()
    rb = b[co].copy()
    i = j = 0
    while i < len(ro) and j < len(co):
        x = min(ra[i], rb[j])
        plan[ro[i], co[j]] += x
        ra[i] -= x
        rb[j] -= x
        if ra[i] <= rb[j]:
            i += 1
        else:
            j += 1
    return plan


def quadratic_value(C: np.ndarray, plan: np.ndarray) -> float:
    v = plan.ravel()
    return float(v @ C @ v)


def frank_wolfe(
    C: np.ndarray,
    a: np.ndarray,
    b: np.ndarray,
    start: np.ndarray,
    max_iter: int = 200,
    tol: float = 1e-12,
) -> tuple[float, np.ndarray]:
    """Local minimiser of vec(P)^T C vec(P) over couplings of a and b.

    C must be symmetric. Each step linearises, solves the transport LP and
    takes the exact line-search step of the quadratic along the segment.
    """
    n, m = len(a), len(b)
    plan = start.copy()
    value = quadratic_value(C, plan)
    for _ in range(max_iter):
        grad = 2.0 * (C @ plan.ravel()).reshape(n, m)
        target = solve_transport(grad, a, b)
        direction = target - plan
        gap = -float(np.sum(grad * direction))
        if gap <= tol:
            break
        d = direction.ravel()
        lin = float(plan.ravel() @ C @ d)
        quad = float(d @ C @ d)
        # f(P + t D) = f(P) + 2 t lin + t^2 quad on t in [0, 1]
        if quad > 0:
            step = min(1.0, max(0.0, -lin / quad))
        else:
            step = 1.0 if 2 * lin + quad < 0 else 0.0
        if step == 0.0:
            break
        plan = plan + step * direction
        new_value = quadratic_value(C, plan)
        if value - new_value <= tol * max(1.0, abs(value)):
            value = min(value, new_value)
            break
        value = new_value
    return value, plan


def swap_descent(
    C: np.ndarray, a: np.ndarray, b: np.ndarray, plan: np.ndarray, max_rounds: int = 50, tol: float = 1e-12
) -> tuple[float, np.ndarray]:
    """Greedy exchange of two rows (or two columns) of equal mass while the value drops.

    Such a swap keeps both marginals, so it moves between couplings that a
    Frank-Wolfe step, stuck at a vertex, cannot reach.
    """
    n, m = len(a), len(b)
    plan = plan.copy()
    value = quadratic_value(C, plan)
    row_pairs = [(i, k) for i in range(n) for k in range(i + 1, n) if abs(a[i] - a[k]) <= POSITIVE_TOL]
    col_pairs = [(j, l) for j in range(m) for l in range(j + 1, m) if abs(b[j] - b[l]) <= POSITIVE_TOL]
    for _ in range(max_rounds):
        best_value, best_plan = value, None
        for axis, pairs in ((0, row_pairs), (1, col_pairs)):
            for i, k in pairs:
                cand = plan.copy()
                if axis == 0:
                    cand[[i, k]] = cand[[k, i]]
                else:
                    cand[:, [i, k]] = cand[:, [k, i]]
                v = quadratic_value(C, cand)
                if v < best_value - tol * max(1.0, abs(value)):
                    best_value, best_plan = v, cand
        if best_plan is None:
            break
        value, plan = best_value, best_plan
    return value, plan


def _local_search(C: np.ndarray, a: np.ndarray, b: np.ndarray, start: np.ndarray, max_iter: int):
    value, plan = frank_wolfe(C, a, b, start, max_iter)
    swapped_value, swapped = swap_descent(C, a, b, plan)
    if swapped_value >= value:
        return value, plan
    polished = frank_wolfe(C, a, b, swapped, max_iter)
    return polished if polished[0] <= swapped_value else (swapped_value, swapped)


def starting_plans(a: np.ndarray, b: np.ndarray, restarts: int, seed: int) -> list[np.ndarray]:
    """Product coupling, then northwest-corner vertices.

    The first vertex uses the natural order (the monotone coupling); later ones
    use orders shuffled by a generator seeded with ``seed``.
    """
    plans = [np.outer(a, b)]
    rng = np.random.default_rng(seed)
    for k in range(max(0, restarts - 1)):
        if k == 0:
            plans.append(northwest_corner(a, b))
        else:
            plans.append(northwest_corner(a, b, rng.permutation(len(a)), rng.permutation(len(b))))
    return plans


def minimise_quadratic(
    C: np.ndarray, a: np.ndarray, b: np.ndarray, restarts: int = 5, seed: int = 0, max_iter: int = 200
) -> tuple[float, np.ndarray]:
    """Best local search result (Frank-Wolfe, then equal-mass swaps) over the deterministic starting plans."""
    starts = starting_plans(np.asarray(a, float), np.asarray(b, float), restarts, seed)
    workers = min(worker_count(), len(starts))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda s: _local_search(C, a, b, s, max_iter), starts))
    else:
        results = [_local_search(C, a, b, s, max_iter) for s in starts]
    # ties resolved by restart index so the output never depends on scheduling
    best = min(range(len(results)), key=lambda k: (results[k][0], k))
    return results[best]
