import itertools
import math
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from malab.arcs import (
    MajorArcParams,
    SigmaSet,
    brute_min_separation,
    good_threshold,
    in_sigma_leq,
    is_good,
    largest_below,
    largest_good_eps,
    min_separation,
    q_of_subset,
    sigma_complement,
    sigma_exact,
    sigma_leq,
    sigma_subset,
    stratum_of,
    subsets_upto,
    verify_crt_sum,
    verify_inclusion,
    verify_partition,
)
from malab.exact import CapExceededError, TorusPoint, torsion_points


def P(S, k=1, d=1, eps="1/101", **kw):
    return MajorArcParams(d, k, tuple(S), eps, **kw)


def set_subtraction_exact(params, A):
    """Oracle: Sigma_{<=A} minus every Sigma_{<=B} for B strictly inside A."""
    whole = set(torsion_points(math.prod(A), params.d))
    for size in range(len(A)):
        for B in itertools.combinations(sorted(A), size):
            whole -= set(torsion_points(math.prod(B), params.d))
    return whole


def test_validation():
    with pytest.raises(ValueError):
        P([3, 6])
    with pytest.raises(ValueError):
        P([1, 3])
    with pytest.raises(ValueError):
        P([3, 3])
    with pytest.raises(ValueError):
        P([3, 5], eps="0")
    with pytest.raises(ValueError):
        P([3, 5], q_max=4)
    with pytest.raises(ValueError):
        P([3, 5], eps="0.01")


def test_q_of_subset():
    p = P([3, 5])
    assert q_of_subset(p, []) == 1
    assert q_of_subset(p, [3, 5]) == 15
    assert q_of_subset(P([5, 7, 72]), [72, 5, 7]) == 2520
    with pytest.raises(ValueError):
        q_of_subset(p, [7])


def test_sigma_leq_small_example():
    pts = sigma_leq(P([3, 5], k=1))
    expected = {TorusPoint.of(x) for x in ["0", "1/3", "2/3", "1/5", "2/5", "3/5", "4/5"]}
    assert set(pts) == expected and len(pts) == 7


def test_sigma_exact_empty_is_zero():
    assert list(sigma_exact(P([3, 5]), [])) == [TorusPoint.zero(1)]


def test_complement_example():
    p = P([3, 5, 7], k=2, d=1)
    comp = set(sigma_complement(p, [3]))
    assert comp == set(torsion_points(5, 1)) | set(torsion_points(7, 1))
    assert set(sigma_complement(p, [3, 5])) == {TorusPoint.zero(1)}
    assert set(sigma_complement(p, [])) == set(sigma_leq(p))


@pytest.mark.parametrize("S", [(3, 5, 7), (4, 9, 5)])
@pytest.mark.parametrize("d", [1, 2])
def test_exact_stratum_matches_set_subtraction(S, d):
    p = P(S, k=len(S), d=d)
    for A in subsets_upto(S, len(S)):
        assert set(sigma_exact(p, A)) == set_subtraction_exact(p, A)


@pytest.mark.parametrize("S", [(3, 5, 7), (4, 9, 5), (2, 3, 5, 7)])
def test_partition_and_sizes(S):
    p = P(S, k=len(S))
    for A in subsets_upto(S, len(S)):
        assert verify_partition(p, A)
        assert len(sigma_subset(p, A)) == q_of_subset(p, A)


def test_crt_pairs_count_and_truth():
    S = (3, 5, 7)
    p = P(S, k=3)
    subsets = subsets_upto(S, 3)
    pairs = [(a, b) for a in subsets for b in subsets if not a & b]
    # 3^|S| ordered disjoint pairs; 19 of them have a nonempty first member
    assert len(pairs) == 27
    assert sum(1 for a, _ in pairs if a) == 19
    assert all(verify_crt_sum(p, a, b) for a, b in pairs)
    with pytest.raises(ValueError):
        verify_crt_sum(p, [3], [3, 5])


def test_crt_explicit_sumset():
    p = P([3, 5], k=2)
    lhs = {a + b for a in sigma_exact(p, [3]) for b in sigma_exact(p, [5])}
    assert lhs == set(sigma_exact(p, [3, 5]))
    assert all(x.denominator == 15 for x in lhs) and len(lhs) == 8


@pytest.mark.parametrize("A0", [[], [3], [3, 5], [5, 7]])
def test_inclusion(A0):
    assert verify_inclusion(P([3, 5, 7], k=2), A0)


def test_goodness_boundary():
    p = P([3, 5], k=1)
    assert good_threshold(p, 1, Fraction(1, 2)) == Fraction(1, 100)
    assert is_good(p, 1, Fraction(1, 2))
    assert not is_good(p.with_eps("1/100"), 1, Fraction(1, 2))
    assert not is_good(p.with_eps("1/4"), 3, Fraction(1, 2))
    with pytest.raises(ValueError):
        is_good(p, 1, 1)


def test_largest_good_eps_frozen():
    # oracle: threshold 1/100, scan of all denominators below 10^6 done in test_largest_below_oracle
    p = P([3, 5], k=1)
    eps = largest_good_eps(p, 1, Fraction(1, 2))
    assert eps == Fraction(9999, 999901)
    assert eps < Fraction(1, 100)


def _largest_below_scan(x, max_den):
    best = Fraction(0)
    for q in range(1, max_den + 1):
        a = math.ceil(x * q) - 1
        if Fraction(a, q) > best:
            best = Fraction(a, q)
    return best


@given(st.fractions(min_value=Fraction(1, 500), max_value=3, max_denominator=500), st.integers(2, 300))
@settings(max_examples=80, deadline=None)
def test_largest_below_oracle(x, max_den):
    expected = _largest_below_scan(x, max_den)
    if expected <= 0:
        with pytest.raises(ValueError):
            largest_below(x, max_den)
    else:
        assert largest_below(x, max_den) == expected


def test_min_separation_examples():
    assert min_separation(P([3, 5], k=1)) == Fraction(1, 15)
    assert min_separation(P([2], k=1)) == Fraction(1, 2)
    assert min_separation(P([3, 5], k=2)) == Fraction(1, 15)
    assert min_separation(P([3, 5, 7], k=2, d=2)) == Fraction(1, 105)


@pytest.mark.parametrize("S,k,d", [((3, 5), 1, 1), ((3, 5, 7), 2, 1), ((3, 5), 1, 2), ((4, 9, 5), 2, 1)])
def test_min_separation_matches_bruteforce(S, k, d):
    p = P(S, k=k, d=d)
    assert min_separation(p) == brute_min_separation(list(sigma_leq(p)))


@pytest.mark.parametrize("S,k,r", [((3, 5), 1, 1), ((3, 5), 2, 1), ((3, 5, 7), 2, 1), ((3, 5), 1, 2)])
def test_goodness_implies_separation(S, k, r):
    c = Fraction(1, 2)
    p = P(S, k=k)
    p = p.with_eps(largest_good_eps(p, r, c))
    assert is_good(p, r, c)
    assert min_separation(p) >= 2 * p.eps / c


def test_denominator_bound():
    p = P([3, 5, 7], k=2)
    assert all(x.denominator <= p.q_max**p.k for x in sigma_leq(p))


def test_stratum_and_membership():
    p = P([3, 5, 7], k=2)
    assert stratum_of(p, TorusPoint.of("1/15")) == frozenset({3, 5})
    assert stratum_of(p, TorusPoint.of("1/2")) is None
    assert in_sigma_leq(p, TorusPoint.of("2/35"))
    assert not in_sigma_leq(p, TorusPoint.of("1/105"))


def test_cap():
    with pytest.raises(CapExceededError):
        sigma_leq(P([3, 5, 7], k=3, d=3, cap=1000))


def test_sigma_json_round_trip():
    s = sigma_exact(P([3, 5], k=2), [3, 5])
    back = SigmaSet.from_json(s.to_json())
    assert back == s
    assert s.to_json()["points"][0] == ["1/15"]


coprime_sets = st.sampled_from([(2, 3), (3, 5), (2, 5, 7), (3, 4, 5), (4, 9, 5), (2, 3, 5, 7)])


@given(coprime_sets, st.integers(1, 2), st.data())
@settings(max_examples=40, deadline=None)
def test_crt_sumset_property(S, d, data):
    p = P(S, k=len(S), d=d)
    labels = data.draw(st.lists(st.integers(0, 2), min_size=len(S), max_size=len(S)))
    A1 = [q for q, l in zip(S, labels) if l == 1]
    A2 = [q for q, l in zip(S, labels) if l == 2]
    assert verify_crt_sum(p, A1, A2)


@given(coprime_sets, st.integers(1, 3))
@settings(max_examples=30, deadline=None)
def test_union_is_union_of_strata(S, k):
    p = P(S, k=k)
    strata = set()
    for A in subsets_upto(S, k):
        part = set(sigma_exact(p, A))
        assert not strata & part
        strata |= part
    assert strata == set(sigma_leq(p))
    assert all(TorusPoint.from_residues(x.residues(p.Q_S), p.Q_S) == x for x in strata)
