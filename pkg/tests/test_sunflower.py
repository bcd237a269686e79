import itertools
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from malab.sunflower import (
    SearchBudgetExceeded,
    erdos_rado_bounds,
    find_nonces,
    has_nonce,
    is_sunflower,
    per_exact,
    per_monte_carlo,
    per_threshold,
    sun_number,
    water_inequality_check,
    water_kernel,
)


def brute_sunflower(members):
    """Oracle: try every candidate core inside the common intersection."""
    members = [frozenset(m) for m in members]
    if len(members) == 1:
        return True
    common = frozenset.intersection(*members)
    for size in range(len(common) + 1):
        for core in itertools.combinations(sorted(common), size):
            core = frozenset(core)
            petals = [m - core for m in members]
            if all(not (a & b) for a, b in itertools.combinations(petals, 2)):
                return True
    return False


def test_nonce_examples():
    assert find_nonces([{1, 2}, {1, 3}, {2, 4}]) == {3, 4}
    assert find_nonces([{1, 2}, {1, 3}, {2, 3}]) == frozenset()
    assert not has_nonce([{1, 2}, {1, 2}])
    assert has_nonce([{1}, set()])


def test_sunflower_examples():
    assert is_sunflower([{1, 2}, {1, 3}, {1, 4}]) == {1}
    assert is_sunflower([{1, 2}, {1, 3}, {2, 3}]) is None
    assert is_sunflower([{1, 2}] * 3) == {1, 2}
    assert is_sunflower([{5}]) == {5}
    assert is_sunflower([set(), {1}]) == frozenset()
    with pytest.raises(ValueError):
        is_sunflower([])


families = st.lists(st.frozensets(st.integers(1, 6), max_size=6), min_size=1, max_size=4)


@given(families)
@settings(max_examples=300, deadline=None)
def test_sunflower_matches_core_search(fam):
    assert (is_sunflower(fam) is not None) == brute_sunflower(fam)


@given(families)
def test_nonces_are_single_position(fam):
    nonces = find_nonces(fam)
    for s in set().union(*fam):
        assert (s in nonces) == (sum(s in A for A in fam) == 1)


def test_erdos_rado():
    assert erdos_rado_bounds(2, 3) == (4, 9)
    assert erdos_rado_bounds(1, 2) == (1, 2)
    assert erdos_rado_bounds(3, 2) == (1, 7)


@pytest.mark.parametrize("r", [1, 2, 3, 4])
def test_sun_singletons(r):
    assert sun_number(1, r) == r


@pytest.mark.parametrize("k", [1, 2, 3])
def test_sun_pairs(k):
    assert sun_number(k, 2) == 2


def test_sun_2_3():
    # witness: two disjoint triangles are 3-sunflower-free, so Sun(2,3) >= 7
    witness = [{1, 2}, {1, 3}, {2, 3}, {4, 5}, {4, 6}, {5, 6}]
    assert all(is_sunflower(c) is None for c in itertools.combinations(witness, 3))
    value = sun_number(2, 3)
    low, up = erdos_rado_bounds(2, 3)
    assert low <= value <= up
    assert value == 7


def test_sun_budget():
    with pytest.raises(SearchBudgetExceeded):
        sun_number(2, 3, budget=10)


def test_per_exact_examples():
    tri = {frozenset(s): Fraction(1, 3) for s in ({1, 2}, {1, 3}, {2, 3})}
    assert per_exact(tri, 3) == Fraction(1, 9)
    disjoint = {frozenset(s): Fraction(1, 4) for s in ({1, 2}, {3, 4}, {5, 6}, {7, 8})}
    assert per_exact(disjoint, 2) == 1
    assert per_exact({frozenset({1, 2}): Fraction(1)}, 4) == 1
    assert Fraction(1, 9) >= Fraction(1, 36**3)


def test_per_threshold():
    assert per_threshold(2, 3) == pytest.approx(36.0**-3)
    assert per_threshold(1, 2) == pytest.approx(1 / 64)


def test_per_monte_carlo_against_exact():
    tri = {frozenset(s): Fraction(1, 3) for s in ({1, 2}, {1, 3}, {2, 3})}
    res = per_monte_carlo(tri, 3, 100_000, seed=7)
    assert abs(res.empirical - 1 / 9) <= 5 * res.se
    assert res.ci_low <= res.empirical <= res.ci_high
    assert res.margin_ok
    assert res.to_json()["ci"] == [res.ci_low, res.ci_high]


def test_per_point_mass():
    res = per_monte_carlo({frozenset({1, 2}): 1}, 3, 10_000, seed=0)
    assert res.empirical == 1.0 and res.margin_ok


def test_per_validation():
    with pytest.raises(ValueError):
        per_monte_carlo({frozenset({1}): Fraction(1, 2), frozenset({1, 2}): Fraction(1, 2)}, 2, 10, 0)
    with pytest.raises(ValueError):
        per_monte_carlo({frozenset({1}): Fraction(1, 2)}, 2, 10, 0)
    with pytest.raises(ValueError):
        per_monte_carlo({frozenset({1}): 2, frozenset({2}): -1}, 2, 10, 0)


def test_per_reproducible():
    w = {frozenset(c): 1 / 15 for c in itertools.combinations(range(1, 7), 2)}
    assert per_monte_carlo(w, 2, 5000, 3) == per_monte_carlo(w, 2, 5000, 3)


def _weights(draw_ints, ground, k):
    sets = [frozenset(c) for c in itertools.combinations(ground, k)]
    return {A: Fraction(w) for A, w in zip(sets, draw_ints)}


def test_water_single_weight():
    res = water_inequality_check({frozenset({1, 2}): 1}, 2, [1, 2, 3, 4], 2)
    assert res.lhs == 1 and res.rhs_lower >= 1 and res.passed


def test_water_r1_canonical_vs_literal():
    ground = [1, 2, 3, 4, 5]
    w = {frozenset(c): Fraction(i + 1) for i, c in enumerate(itertools.combinations(ground, 2))}
    total = sum(w.values())
    assert water_kernel(w, 1, ground, 2) == total
    assert water_kernel(w, 1, ground, 2, core="literal") == 4 * total


def test_water_uniform():
    ground = [1, 2, 3, 4, 5]
    w = {frozenset(c): Fraction(1) for c in itertools.combinations(ground, 2)}
    res = water_inequality_check(w, 2, ground, 2)
    assert res.passed
    # kernel counts ordered sunflower pairs: 10 equal pairs + 90 distinct pairs
    assert res.rhs_lower == 100 and res.lhs == 100


@given(st.lists(st.integers(0, 9), min_size=10, max_size=10), st.integers(1, 3))
@settings(max_examples=60, deadline=None)
def test_water_kernel_is_sunflower_mass(ints, r):
    ground = [1, 2, 3, 4, 5]
    w = _weights(ints, ground, 2)
    total = sum(w.values())
    res = water_inequality_check(w, r, ground, 2)
    assert res.converse and res.forward
    if total:
        probs = {A: v / total for A, v in w.items() if v}
        assert res.rhs_lower == per_exact(probs, r) * total**r
    else:
        assert res.rhs_lower == 0


def test_water_validation():
    with pytest.raises(ValueError):
        water_inequality_check({frozenset({1}): 1}, 2, [1, 2], 2)
    with pytest.raises(SearchBudgetExceeded):
        water_inequality_check({frozenset({1, 2}): 1}, 3, list(range(1, 13)), 2, budget=100)
