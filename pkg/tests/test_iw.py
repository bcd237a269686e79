import itertools
import math
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from malab.iw import (
    build_iw_set,
    classical_params,
    covering_elements,
    element_bound_report,
    level_for_rho,
    max_exponent,
    primes_upto,
    verify_farey_coverage,
    verify_lcm_bound,
)


def trial_division_primes(n):
    return [p for p in range(2, n + 1) if all(p % d for d in range(2, math.isqrt(p) + 1))]


def brute_cover_size(S, q):
    """Fewest elements of S whose product is divisible by q."""
    for size in range(len(S) + 1):
        for combo in itertools.combinations(S, size):
            if math.prod(combo) % q == 0:
                return size
    return None


def test_primes_match_trial_division():
    assert primes_upto(1000) == trial_division_primes(1000)
    assert primes_upto(1) == []


def test_max_exponent():
    assert max_exponent(2, 10) == 3
    assert max_exponent(3, 10) == 2
    assert max_exponent(7, 6) == 0


def test_level():
    assert level_for_rho(1) == 3
    assert level_for_rho(Fraction(1, 2)) == 5
    with pytest.raises(ValueError):
        level_for_rho(0)
    with pytest.raises(ValueError):
        level_for_rho("3/2")


def test_n10_rho1():
    c = build_iw_set(10, 1)
    assert c.S == (5, 7, 72)
    assert c.q_total == 2520 == math.lcm(*range(1, 11))
    assert c.k == 3
    m, C = element_bound_report(c)
    assert m == 72
    assert C == pytest.approx(72 ** (1 / (3 * 10**0.5)), rel=1e-12)


def test_frozen_heads():
    # head element = product of maximal prime powers of the small primes
    assert max(build_iw_set(100, 1).S) == 2**6 * 3**4 * 5**2 * 7**2 == 6350400
    c = build_iw_set(100, "1/2")
    assert c.k == 5
    assert 2**6 * 3**4 in c.S and 5184 in c.S


def test_size_condition():
    with pytest.raises(ValueError):
        build_iw_set(8, "1/2")
    assert build_iw_set(8, "1/2", require_bound=False).k == 5
    with pytest.raises(ValueError):
        build_iw_set(1, 1)


@pytest.mark.parametrize("N", [8, 16, 50, 100, 500, 1000])
@pytest.mark.parametrize("rho", ["1", "1/2"])
def test_matrix(N, rho):
    c = build_iw_set(N, rho, require_bound=False)
    assert all(math.gcd(a, b) == 1 for a, b in itertools.combinations(c.S, 2))
    assert c.q_total == math.lcm(*range(1, N + 1))
    assert c.q_total <= 3**N
    assert verify_lcm_bound(c) == (True, True)
    assert verify_farey_coverage(c)


@pytest.mark.parametrize("N,rho", [(10, 1), (30, 1), (30, "1/2"), (60, "1/2")])
def test_coverage_matches_bruteforce(N, rho):
    c = build_iw_set(N, rho, require_bound=False)
    for q in range(1, N + 1):
        cover = covering_elements(c, q)
        assert len(cover) == brute_cover_size(c.S, q) <= c.k


def test_json():
    data = build_iw_set(10, 1).to_json()
    assert data == {"N": 10, "rho": "1/1", "k": 3, "S": [5, 7, 72], "q_total": "2520", "q_total_digits": 4}


def test_classical_params():
    cp = classical_params(1, 10, 2, 1)
    assert (cp.r, cp.k, cp.S) == (1, 3, (5, 7, 72))
    assert cp.eps_threshold == Fraction(1, 2) / (2 * 72**6) == Fraction(1, 4 * 72**6)
    assert classical_params(1, 10, "4/3", 1).r == 2
    with pytest.raises(ValueError):
        classical_params(1, 10, 1, 1)


@given(st.integers(2, 400), st.sampled_from(["1", "1/2", "2/3", "1/3"]))
@settings(max_examples=40, deadline=None)
def test_construction_properties(N, rho):
    c = build_iw_set(N, rho, require_bound=False)
    assert c.q_total == math.lcm(*range(1, N + 1))
    assert all(math.gcd(a, b) == 1 for a, b in itertools.combinations(c.S, 2))
    assert verify_farey_coverage(c)
