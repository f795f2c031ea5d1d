"""The acceptance suite: reproductions of the worked examples and randomised
checks of the structural identities and inequalities."""
from __future__ import annotations

import contextlib
import io
import json
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .diagram import (
    PersistenceDiagram,
    WeightedPersistenceDiagram,
    flip_measure,
    intervals,
    interval_leq,
    interval_values,
    mobius_invert,
    pd_mobius,
    same_off_diagonal,
    unflip,
    weighted_pd,
)
from .distances import bottleneck, d_defo_exact, d_defo_inf_weighted, d_defo_p_weighted
from .examples import example_pair
from .filtration import CriticalGrid, gdd, vr_filtration, weighted_vr
from .homology import pd_reduction_oracle
from .metric import gh_exact, gw_inf_exact, wasserstein_1d
from .sampling import random_diagram_pair, random_grid_measure, random_planar_space, random_uniform_mm_space
from .stability import flipped_gw_inf

TOL = 1e-9


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    values: dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} {self.name}: {self.detail}"


def mobius_matches_reduction(n_spaces: int = 100, seed: int = 0) -> CheckResult:
    """Moebius diagrams equal the column-reduction diagrams off the diagonal."""
    rng = np.random.default_rng(seed)
    mismatches = []
    for k in range(n_spaces):
        X = random_planar_space(rng, 4, 7)
        F = vr_filtration(X, max_dim=2)
        for d in (0, 1):
            if pd_mobius(F, d).off_diagonal() != pd_reduction_oracle(F, d):
                mismatches.append((k, d))
    return CheckResult(
        "mobius-vs-reduction",
        not mismatches,
        f"{2 * n_spaces - len(mismatches)}/{2 * n_spaces} diagrams agree exactly",
        {"mismatches": mismatches},
    )


UMS_GDD_X = {0.0: 0.25, 1.0: 0.25, 2.0: 0.5}
UMS_GDD_Y = {0.0: 0.25, 1.0: 0.375, 2.0: 0.375}


def ums_reproduction() -> CheckResult:
    X, Y = example_pair("ums")
    wX, wY = weighted_vr(X), weighted_vr(Y)
    same_pd = all(same_off_diagonal(pd_mobius(wX.filtration, d), pd_mobius(wY.filtration, d)) for d in (0, 1))
    gx, gy = gdd(X).as_dict(), gdd(Y).as_dict()
    gdd_ok = all(
        set(got) == set(want) and all(abs(got[k] - want[k]) <= 1e-12 for k in want)
        for got, want in ((gx, UMS_GDD_X), (gy, UMS_GDD_Y))
    )
    w1 = wasserstein_1d(gdd(X), gdd(Y), 1)
    weighted = d_defo_inf_weighted(weighted_pd(wX, 0), weighted_pd(wY, 0))
    passed = same_pd and gdd_ok and abs(w1 - 0.125) <= 1e-12 and weighted.value > 0 and weighted.mode == "exact"
    return CheckResult(
        "ums-reproduction",
        passed,
        f"PD equal={same_pd}, GDD ok={gdd_ok}, W1={w1!r}, weighted inf-distance={weighted.value:.6g} ({weighted.mode})",
        {"w1": w1, "weighted": weighted.value, "same_pd": same_pd, "gdd_ok": gdd_ok},
    )


def boutin_kemper_reproduction() -> CheckResult:
    X, Y = example_pair("boutin-kemper")
    dx, dy = np.sort(X.space.pair_distances()), np.sort(Y.space.pair_distances())
    same_dist = len(dx) == len(dy) and bool(np.all(np.abs(dx - dy) <= TOL))
    w = wasserstein_1d(gdd(X), gdd(Y), 1)
    a, b = pd_mobius(vr_filtration(X), 0), pd_mobius(vr_filtration(Y), 0)
    differ = not same_off_diagonal(a, b)
    dist = d_defo_exact(a, b).value
    passed = same_dist and w <= TOL and differ and dist > 0
    return CheckResult(
        "boutin-kemper-reproduction",
        passed,
        f"distance multisets equal={same_dist}, W(GDD)={w:.3g}, PD0 differ={differ}, d_defo={dist:.6g}",
        {"w": w, "d_defo": dist, "same_distances": same_dist, "pd_differ": differ},
    )


def _support_values(wpd: WeightedPersistenceDiagram) -> set[tuple[float, float]]:
    return {tuple(round(v, 9) for v in interval_values(wpd.grid, I)) for I in wpd.weights}


def hexagon_reproduction() -> CheckResult:
    X, Y = example_pair("hexagon")
    a, b = weighted_pd(weighted_vr(X), 1), weighted_pd(weighted_vr(Y), 1)
    same_pd1 = same_off_diagonal(a.diagram, b.diagram, TOL)
    supports_differ = _support_values(a) != _support_values(b)
    weighted = d_defo_inf_weighted(a, b)
    passed = same_pd1 and supports_differ and weighted.value > 0 and weighted.mode == "exact"
    return CheckResult(
        "hexagon-reproduction",
        passed,
        f"PD1 equal={same_pd1}, weight supports differ={supports_differ}, weighted inf-distance={weighted.value:.6g}",
        {"weighted": weighted.value, "same_pd1": same_pd1, "supports_differ": supports_differ},
    )


def bottleneck_sandwich(n_pairs: int = 200, seed: int = 0) -> CheckResult:
    """bottleneck <= d_defo <= 2 * bottleneck on diagrams sharing a midpoint-closed grid."""
    rng = np.random.default_rng(seed)
    failures = []
    worst = 0.0
    for k in range(n_pairs):
        s, t = random_diagram_pair(rng, 5)
        db = bottleneck(s, t)
        dd = d_defo_exact(s, t).value
        if not (db <= dd + TOL and dd <= 2 * db + TOL):
            failures.append((k, db, dd))
        if db > 0:
            worst = max(worst, dd / db)
    return CheckResult(
        "bottleneck-sandwich",
        not failures,
        f"{n_pairs - len(failures)}/{n_pairs} pairs inside the sandwich, largest ratio {worst:.3g}",
        {"failures": failures, "max_ratio": worst},
    )


def stability_sample(n_pairs: int = 50, seed: int = 0) -> CheckResult:
    """Unweighted and weighted stability plus the flipped-GDD lower bound on random small spaces."""
    rng = np.random.default_rng(seed)
    failures = []
    exact_flips = 0
    for k in range(n_pairs):
        X, Y = random_uniform_mm_space(rng, 3, 4), random_uniform_mm_space(rng, 3, 4)
        gh = gh_exact(X.space, Y.space)
        gw = gw_inf_exact(X, Y)
        wX, wY = weighted_vr(X), weighted_vr(Y)
        flip_lhs = None
        for d in (0, 1):
            a, b = weighted_pd(wX, d), weighted_pd(wY, d)
            unweighted = d_defo_exact(a.diagram, b.diagram).value
            weighted = d_defo_inf_weighted(a, b)
            if flip_lhs is None or flip_lhs.mode != "exact":
                # the flipped spaces do not depend on the degree, but a bound read off a certificate does
                flip_lhs = flipped_gw_inf(a, b, weighted)
                exact_flips += flip_lhs.mode == "exact"
            if unweighted > 4 * gh + TOL:
                failures.append((k, d, "d_defo <= 4 GH", unweighted, 4 * gh))
            if weighted.mode != "exact" or weighted.value > 4 * gw + TOL:
                failures.append((k, d, "weighted <= 4 GW_inf", weighted.value, 4 * gw))
            if flip_lhs.value > weighted.value + TOL:
                failures.append((k, d, "GW_inf(flipped) <= weighted", flip_lhs.value, weighted.value))
    return CheckResult(
        "stability",
        not failures,
        f"{n_pairs} pairs x 2 degrees x 3 inequalities, {len(failures)} violations, "
        f"flipped GW_inf exact for {exact_flips} pairs",
        {"failures": failures, "exact_flips": exact_flips},
    )


def finite_p_insensitivity(p: float = 2.0) -> CheckResult:
    """Equal weights, diagrams differing in one bar: the finite-p weighted distance is negligible."""
    X, _ = example_pair("ums")
    a = weighted_pd(weighted_vr(X), 0)
    moved = dict(a.diagram.bars)
    moved[(0, 2)] -= 1
    moved[(1, 2)] = moved.get((1, 2), 0) + 1
    b = WeightedPersistenceDiagram(PersistenceDiagram(a.grid, moved, 0), a.weights)
    bk_x, bk_y = example_pair("boutin-kemper")
    c, e = weighted_pd(weighted_vr(bk_x), 0), weighted_pd(weighted_vr(bk_y), 0)
    values = {
        "ums-one-bar-moved": d_defo_p_weighted(a, b, p).value,
        "boutin-kemper": d_defo_p_weighted(c, e, p).value,
    }
    passed = all(v <= 1e-6 for v in values.values())
    return CheckResult(
        "finite-p-insensitivity",
        passed,
        ", ".join(f"{k}={v:.3g}" for k, v in values.items()),
        values,
    )


def round_trips(n: int = 100, seed: int = 0) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n):
        grid, mu = random_grid_measure(rng)
        worst = max(worst, float(np.max(np.abs(unflip(grid, flip_measure(grid, mu)) - mu))))
    resum_fail = 0
    for _ in range(n):
        k = int(rng.integers(1, 7))
        grid = CriticalGrid(tuple(float(v) for v in range(k)))
        elems = intervals(grid)
        m = {I: int(rng.integers(-5, 6)) for I in elems}
        dm = mobius_invert(elems, interval_leq, m)
        if any(sum(dm[J] for J in elems if interval_leq(J, I)) != m[I] for I in elems):
            resum_fail += 1
    passed = worst <= 1e-12 and resum_fail == 0
    return CheckResult(
        "round-trips",
        passed,
        f"unflip(flip) max error {worst:.3g}, Moebius re-summation failures {resum_fail}/{n}",
        {"flip_error": worst, "resum_failures": resum_fail},
    )


def cli_edit_labels() -> CheckResult:
    """The compare command reports edit distances as exactly 2*GH and 2*GW_p."""
    from .cli import main

    problems = []
    for p in ("inf", "2"):
        buf = io.StringIO()
        with contextlib.redirect_stdout(buf):
            code = main(["compare", "--example", "ums", "--p", p, "--degree", "0"])
        if code != 0:
            problems.append(f"compare --p {p} exited with {code}")
            continue
        report = json.loads(buf.getvalue())
        base = {r["metric"]: r for r in report["distances"]}
        for e in report["edit_distances"]:
            ref = base.get(e["base_metric"])
            if ref is None or e["factor"] != 2 or e["value"] != 2 * ref["value"] or e["mode"] != ref["mode"]:
                problems.append(f"{e['metric']} inconsistent with {e['base_metric']}")
        labels = sorted(e["relation"] for e in report["edit_distances"])
        want = sorted(["2*GH", "2*GW_inf" if p == "inf" else "2*GW_p"])
        if labels != want:
            problems.append(f"labels {labels} != {want}")
    return CheckResult("cli-edit-labels", not problems, "; ".join(problems) or "2*GH and 2*GW_p consistent", {"problems": problems})


SUITE: dict[str, Callable[[], CheckResult]] = {
    "mobius-vs-reduction": mobius_matches_reduction,
    "ums-reproduction": ums_reproduction,
    "boutin-kemper-reproduction": boutin_kemper_reproduction,
    "hexagon-reproduction": hexagon_reproduction,
    "bottleneck-sandwich": bottleneck_sandwich,
    "stability": stability_sample,
    "finite-p-insensitivity": finite_p_insensitivity,
    "round-trips": round_trips,
    "cli-edit-labels": cli_edit_labels,
}

EXAMPLE_CHECKS = {
    "ums": ums_reproduction,
    "boutin-kemper": boutin_kemper_reproduction,
    "hexagon": hexagon_reproduction,
}


def run(check: Callable[[], CheckResult]) -> CheckResult:
    start = time.perf_counter()
    res = check()
    res.seconds = time.perf_counter() - start
    return res
