"""Checks of the stability inequalities relating diagram distances to
Gromov-type distances between the underlying spaces."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .diagram import WeightedPersistenceDiagram, flipped_gdd_space, weighted_pd
from .distances import d_defo_exact, d_defo_inf_weighted, d_defo_p_weighted
from .errors import CapExceededError
from .filtration import DEFAULT_MAX_DIM, EPS_EQ, gdd, weighted_vr
from .metric import MMSpace, gh_exact, gw_inf_coupling, gw_p_upper, p_distortion, wasserstein_1d

HOLDS = "HOLDS"
VACUOUS = "HOLDS-VACUOUSLY"
VIOLATED = "VIOLATED"
TOL = 1e-9
FLIPPED_CELL_CAP = 100


@dataclass(frozen=True)
class Bound:
    """A computed quantity: exact, or an upper bound with an optional certified lower bound."""

    value: float
    mode: str = "exact"
    lower: float | None = None

    def scaled(self, factor: float) -> Bound:
        low = None if self.lower is None else factor * self.lower
        return Bound(factor * self.value, self.mode, low)

    @property
    def certified_lower(self) -> float | None:
        return self.value if self.mode == "exact" else self.lower


@dataclass(frozen=True)
class InequalityCheck:
    name: str
    lhs: Bound
    rhs: Bound
    status: str


def judge(lhs: Bound, rhs: Bound, tol: float = TOL) -> str:
    """HOLDS when certified, VIOLATED when certified false, HOLDS-VACUOUSLY when the bounds cannot decide."""
    rhs_low = rhs.certified_lower
    if rhs_low is not None and lhs.value <= rhs_low + tol:
        return HOLDS
    lhs_low = lhs.certified_lower
    if lhs_low is not None and lhs_low > rhs.value + tol:
        return VIOLATED
    return VACUOUS


def check(name: str, lhs: Bound, rhs: Bound, tol: float = TOL) -> InequalityCheck:
    return InequalityCheck(name, lhs, rhs, judge(lhs, rhs, tol))


@dataclass(frozen=True)
class StabilityReport:
    degree: int
    p: float
    checks: tuple[InequalityCheck, ...]

    @property
    def ok(self) -> bool:
        return all(c.status != VIOLATED for c in self.checks)


def stability_report(
    X: MMSpace,
    Y: MMSpace,
    degree: int,
    p: float = np.inf,
    max_dim: int = DEFAULT_MAX_DIM,
    eps_eq: float = EPS_EQ,
    gromov_cap: int | None = 20,
    restarts: int = 5,
    seed: int = 0,
) -> StabilityReport:
    """Evaluate every stability inequality for one pair of spaces and one degree."""
    max_dim = max(max_dim, degree + 1)
    wX, wY = weighted_vr(X, max_dim, eps_eq), weighted_vr(Y, max_dim, eps_eq)
    a, b = weighted_pd(wX, degree), weighted_pd(wY, degree)
    checks = []
    unweighted = d_defo_exact(a.diagram, b.diagram)
    try:
        gh = Bound(gh_exact(X.space, Y.space, gromov_cap))
        checks.append(check("d_defo(PD) <= 4*GH", Bound(unweighted.value), gh.scaled(4.0)))
    except CapExceededError:
        pass
    if np.isinf(p):
        weighted = d_defo_inf_weighted(a, b)
        wb = Bound(weighted.value, weighted.mode, weighted.lower_bound)
        checks.append(check("d_defo(PD) <= d_wdefo_inf(WPD)", Bound(unweighted.value), wb))
        try:
            gw = Bound(gw_inf_coupling(X, Y, gromov_cap)[0])
            checks.append(check("d_wdefo_inf(WPD) <= 4*GW_inf", wb, gw.scaled(4.0)))
        except CapExceededError:
            pass
        checks.append(check("GW_inf(flipped GDD) <= d_wdefo_inf(WPD)", flipped_gw_inf(a, b, weighted), wb))
    else:
        weighted = d_defo_p_weighted(a, b, p, restarts=restarts, seed=seed)
        wb = Bound(weighted.value, weighted.mode)
        gw_val, _ = gw_p_upper(X, Y, p, restarts=restarts, seed=seed)
        # half the Wasserstein distance of the distance distributions never exceeds GW_p
        gw = Bound(gw_val, "upper_bound", 0.5 * wasserstein_1d(gdd(X, eps_eq), gdd(Y, eps_eq), p))
        checks.append(check("d_wdefo_p(WPD) <= 4^((p+1)/p)*GW_p", wb, gw.scaled(4.0 ** ((p + 1) / p))))
        FX, _ = flipped_gdd_space(a)
        FY, _ = flipped_gdd_space(b)
        flip_val, _ = gw_p_upper(FX, FY, p, restarts=restarts, seed=seed)
        checks.append(check("GW_p(flipped GDD) <= d_wdefo_p(WPD)", Bound(flip_val, "upper_bound"), wb))
    return StabilityReport(degree, p, tuple(checks))


def flipped_gw_inf(a: WeightedPersistenceDiagram, b: WeightedPersistenceDiagram, weighted=None, cap: int | None = FLIPPED_CELL_CAP) -> Bound:
    """GW_inf between the flipped distance distributions of two weighted diagrams.

    Exact within ``cap`` cells. Beyond it, the coupling of a weighted matching
    certificate gives an upper bound: half its inf-distortion. That bound never
    exceeds half the matching cost, since the change in ell_inf distance between
    two cells is at most the spread of their displacements.
    """
    FX, sx = flipped_gdd_space(a)
    FY, sy = flipped_gdd_space(b)
    if cap is None or FX.n * FY.n <= cap:
        return Bound(gw_inf_coupling(FX, FY, cap=None)[0])
    if weighted is None or weighted.certificate is None:
        return Bound(float("inf"), "upper_bound")
    rx = {I: k for k, I in enumerate(sx)}
    ry = {J: k for k, J in enumerate(sy)}
    plan = np.zeros((FX.n, FY.n))
    for (I, J), w in weighted.certificate.eta.items():
        plan[rx[I], ry[J]] += w
    return Bound(p_distortion(plan, FX, FY, np.inf) / 2.0, "upper_bound")
