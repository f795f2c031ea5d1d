from __future__ import annotations

from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wpdkit.errors import ValidationError
from wpdkit.examples import example_pair
from wpdkit.filtration import (
    CriticalGrid,
    SimplicialComplex,
    critical_grid,
    gdd,
    level_indices,
    vr_complex,
    vr_filtration,
    weighted_vr,
)
from wpdkit.metric import FiniteMetricSpace, MMSpace
from wpdkit.sampling import random_planar_space

seeds = st.integers(0, 2**32 - 1)


def one_point():
    return MMSpace.uniform(FiniteMetricSpace([[0.0]]))


def test_critical_grid_examples():
    assert critical_grid(one_point()).values == (0.0,)
    X, _ = example_pair("ums")
    assert critical_grid(X).values == (0.0, 1.0, 2.0)
    bk, _ = example_pair("boutin-kemper")
    assert critical_grid(bk).values == pytest.approx((0, np.sqrt(2), 2, np.sqrt(10), 4), abs=1e-12)


def test_grid_groups_values_within_eps():
    g = CriticalGrid.from_values([1.0, 1.0 + 1e-12, 2.0, 2.0 - 1e-12], eps=1e-9)
    assert g.values == (0.0, 1.0, 2.0 - 1e-12)
    assert g.index(1.0 + 5e-10) == 1
    with pytest.raises(ValidationError, match="not on the grid"):
        g.index(1.5)
    assert list(level_indices(g, np.array([0.0, 1.0 + 1e-12, 2.0]))) == [0, 1, 2]


def test_grid_validation():
    with pytest.raises(ValidationError, match="start at 0"):
        CriticalGrid((1.0, 2.0))
    with pytest.raises(ValidationError, match="increasing"):
        CriticalGrid((0.0, 2.0, 1.0))


def test_complex_must_be_closed_under_faces():
    with pytest.raises(ValidationError, match="face"):
        SimplicialComplex(frozenset({(0,), (0, 1)}))
    K = SimplicialComplex(frozenset({(1, 0), (0,), (1,)}))
    assert K.of_dim(1) == [(0, 1)]


def test_vr_complex_examples():
    bk, _ = example_pair("boutin-kemper")
    assert vr_complex(bk.space, 0.0).simplices == {(0,), (1,), (2,), (3,)}
    X, _ = example_pair("ums")
    K = vr_complex(X.space, 1.0)
    assert K.of_dim(1) == [(0, 1), (2, 3)]
    assert len(K.of_dim(0)) == 4 and not K.of_dim(2)
    full = vr_complex(X.space, 2.0, max_dim=3)
    assert len(full.simplices) == 2**4 - 1


def test_vr_filtration_examples():
    F = vr_filtration(one_point())
    assert F.grid.values == (0.0,) and F.simplices == ((0,),)
    F = vr_filtration(FiniteMetricSpace([[0, 3], [3, 0]]))
    assert F.grid.values == (0.0, 3.0)
    assert F.complex_at(0).simplices == {(0,), (1,)}
    assert F.complex_at(1).simplices == {(0,), (1,), (0, 1)}
    _, Y = example_pair("ums")
    F = vr_filtration(Y, max_dim=3)
    assert F.complex_at(0).simplices == {(0,), (1,), (2,), (3,)}
    at_one = F.complex_at(1).simplices
    assert (0, 1, 2) in at_one and (0, 1, 2, 3) not in at_one
    assert {s for s in at_one if len(s) > 1} == {(0, 1), (0, 2), (1, 2), (0, 1, 2)}
    assert len(F.complex_at(2).simplices) == 15
    assert F.diameter((2, 1, 0)) == 1.0


def test_max_dim_is_clamped_to_point_count():
    F = vr_filtration(FiniteMetricSpace([[0, 3], [3, 0]]), max_dim=5)
    assert F.max_dim == 1
    with pytest.raises(ValidationError):
        vr_filtration(FiniteMetricSpace([[0.0]]), max_dim=-1)


def test_filtration_order():
    X, _ = example_pair("hexagon")
    F = vr_filtration(X)
    keys = [(lv, len(s), s) for s, lv in zip(F.simplices, F.levels)]
    assert keys == sorted(keys)


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_vr_membership_is_the_diameter_test(seed):
    X = random_planar_space(np.random.default_rng(seed), 4, 6)
    F = vr_filtration(X, max_dim=3)
    grid = F.grid.values
    for i, r in enumerate(grid):
        K = F.complex_at(i)
        assert K == vr_complex(X, r, max_dim=3)
        for size in range(1, min(X.n, 4) + 1):
            for s in combinations(range(X.n), size):
                diam = max((X.d[a, b] for a, b in combinations(s, 2)), default=0.0)
                assert (s in K.simplices) == (diam <= r + 1e-9)
        if i:
            assert F.complex_at(i - 1).simplices <= K.simplices
    assert len(F.complex_at(len(grid) - 1).simplices) == sum(
        len(list(combinations(range(X.n), k))) for k in range(1, min(X.n, 4) + 1)
    )


def test_zero_distance_gives_an_edge_at_zero():
    X = FiniteMetricSpace([[0, 0, 1], [0, 0, 1], [1, 1, 0]])
    assert (0, 1) in vr_complex(X, 0.0).simplices
    F = vr_filtration(X)
    assert F.diameter((0, 1)) == 0.0


def test_gdd_examples():
    g = gdd(one_point())
    assert g.as_dict() == {0.0: 1.0}
    X, Y = example_pair("ums")
    assert gdd(X).as_dict() == pytest.approx({0.0: 0.25, 1.0: 0.25, 2.0: 0.5}, abs=1e-12)
    assert gdd(Y).as_dict() == pytest.approx({0.0: 0.25, 1.0: 0.375, 2.0: 0.375}, abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_gdd_conserves_mass_on_the_grid(seed):
    rng = np.random.default_rng(seed)
    space = random_planar_space(rng, 3, 6)
    mu = rng.random(space.n) + 0.1
    X = MMSpace(space, mu / mu.sum())
    g = gdd(X)
    assert tuple(g.support) == critical_grid(X).values
    assert g.masses.sum() == pytest.approx(1.0, abs=1e-12)
    assert g.masses[0] >= np.sum(X.mu**2) - 1e-15
    # count ordered pairs directly
    for v, m in zip(g.support, g.masses):
        ref = sum(X.mu[i] * X.mu[j] for i in range(X.n) for j in range(X.n) if abs(X.d[i, j] - v) <= 1e-9)
        assert m == pytest.approx(ref, abs=1e-12)


def test_weighted_vr_examples():
    wF = weighted_vr(one_point())
    assert wF.weights == (1.0,)
    X, _ = example_pair("ums")
    wF = weighted_vr(X)
    assert wF.grid.values == (0.0, 1.0, 2.0)
    assert wF.weights == pytest.approx((0.25, 0.25, 0.5), abs=1e-12)
    bx, by = example_pair("boutin-kemper")
    wx, wy = weighted_vr(bx), weighted_vr(by)
    assert wx.weights == pytest.approx(wy.weights, abs=1e-12)
    assert wx.grid.values == pytest.approx(wy.grid.values, abs=1e-12)
    assert wx.filtration.simplices != wy.filtration.simplices or wx.filtration.levels != wy.filtration.levels
