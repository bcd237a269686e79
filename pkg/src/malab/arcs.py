"""Major arc parameter sets and the lattice of Sigma-sets.

A parameter set ``(d, k, S, eps)`` determines the torsion subgroups
``Sigma_{<=A} = T^d[Q_A]``, their exact-denominator strata ``Sigma_A``, the
union ``Sigma_{<=k}`` and the complementary unions ``Sigma_{(A0)}``.  All sets
are materialized eagerly as sorted tuples of :class:`TorusPoint`.

Internally points are handled as integer residue vectors modulo ``Q_S``
(every point of every Sigma-set has denominator dividing ``Q_S``), which keeps
sumsets and distance computations exact and fast.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .exact import (
    DEFAULT_CAP,
    CapExceededError,
    TorusPoint,
    format_rational,
    parse_rational,
    torus_dist_linf,
)

__all__ = [
    "MajorArcParams",
    "SigmaSet",
    "q_of_subset",
    "subsets_upto",
    "sigma_subset",
    "sigma_exact",
    "sigma_leq",
    "sigma_complement",
    "in_sigma_leq",
    "stratum_of",
    "is_good",
    "good_threshold",
    "largest_good_eps",
    "largest_below",
    "min_separation",
    "verify_crt_sum",
    "verify_inclusion",
    "verify_partition",
]


def _pairwise_coprime(values: Sequence[int]) -> bool:
    return all(math.gcd(a, b) == 1 for a, b in itertools.combinations(values, 2))


@dataclass(frozen=True)
class MajorArcParams:
    """The quadruplet (d, k, S, eps) together with the bound q_max >= max(S)."""

    d: int
    k: int
    S: tuple[int, ...]
    eps: Fraction
    q_max: int | None = None
    cap: int = field(default=DEFAULT_CAP, compare=False)

    def __post_init__(self):
        S = tuple(sorted(int(q) for q in self.S))
        object.__setattr__(self, "S", S)
        object.__setattr__(self, "eps", parse_rational(self.eps) if isinstance(self.eps, str) else Fraction(self.eps))
        if self.d < 1 or self.k < 1:
            raise ValueError("d and k must be positive integers")
        if not S:
            raise ValueError("S must be nonempty")
        if any(q < 2 for q in S):
            raise ValueError(f"elements of S must be >= 2: {S}")
        if len(set(S)) != len(S):
            raise ValueError(f"elements of S must be distinct: {S}")
        if not _pairwise_coprime(S):
            raise ValueError(f"elements of S must be pairwise coprime: {S}")
        if self.eps <= 0:
            raise ValueError("eps must be positive")
        q_max = max(S) if self.q_max is None else int(self.q_max)
        if q_max < max(S):
            raise ValueError(f"q_max={q_max} is smaller than max(S)={max(S)}")
        object.__setattr__(self, "q_max", q_max)

    @property
    def Q_S(self) -> int:
        return math.prod(self.S)

    def with_eps(self, eps) -> "MajorArcParams":
        return MajorArcParams(self.d, self.k, self.S, eps, self.q_max, self.cap)

    def to_json(self) -> dict:
        return {
            "d": self.d,
            "k": self.k,
            "S": list(self.S),
            "eps": format_rational(self.eps),
            "q_max": self.q_max,
        }

    @classmethod
    def from_json(cls, data: dict, cap: int = DEFAULT_CAP) -> "MajorArcParams":
        return cls(
            d=int(data["d"]),
            k=int(data["k"]),
            S=tuple(int(q) for q in data["S"]),
            eps=parse_rational(data["eps"]),
            q_max=data.get("q_max"),
            cap=cap,
        )


@dataclass(frozen=True)
class SigmaSet:
    """A materialized Sigma-set: ``kind`` is one of subset, exact, union, complement."""

    kind: str
    index: object
    points: tuple[TorusPoint, ...]

    def __len__(self) -> int:
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    def __contains__(self, x: TorusPoint) -> bool:
        return x in self.as_set()

    def as_set(self) -> frozenset[TorusPoint]:
        return frozenset(self.points)

    def to_json(self) -> dict:
        if isinstance(self.index, (frozenset, set, tuple, list)):
            index = sorted(self.index)
        else:
            index = self.index
        return {
            "kind": self.kind,
            "index": index,
            "points": [p.to_json() for p in self.points],
        }

    @classmethod
    def from_json(cls, data: dict) -> "SigmaSet":
        index = data["index"]
        if isinstance(index, list):
            index = frozenset(index)
        pts = tuple(sorted(TorusPoint.from_json(p) for p in data["points"]))
        return cls(data["kind"], index, pts)


def _as_subset(params: MajorArcParams, A: Iterable[int]) -> frozenset[int]:
    A = frozenset(int(q) for q in A)
    if not A <= set(params.S):
        raise ValueError(f"{sorted(A)} is not a subset of S={list(params.S)}")
    return A


def q_of_subset(params: MajorArcParams, A: Iterable[int]) -> int:
    return math.prod(_as_subset(params, A))


def subsets_upto(ground: Sequence[int], k: int) -> list[frozenset[int]]:
    """All subsets of ``ground`` with at most k elements, ordered by size then lexicographically."""
    ground = sorted(ground)
    out = []
    for size in range(0, min(k, len(ground)) + 1):
        out.extend(frozenset(c) for c in itertools.combinations(ground, size))
    return out


# --- integer residue machinery (points as residue vectors mod Q_S) ---------


def _subgroup_residues(Q_A: int, Q_S: int, d: int, cap: int) -> set[tuple[int, ...]]:
    if Q_A**d > cap:
        raise CapExceededError(f"|T^{d}[{Q_A}]| = {Q_A**d} exceeds cap {cap}")
    step = Q_S // Q_A
    return {tuple(step * a for a in v) for v in itertools.product(range(Q_A), repeat=d)}


def _residue_denominator(v: tuple[int, ...], Q_S: int) -> int:
    g = Q_S
    for a in v:
        g = math.gcd(g, a)
    return Q_S // g


def _exact_residues(params: MajorArcParams, A: frozenset[int]) -> set[tuple[int, ...]]:
    Q_S = params.Q_S
    Q_A = math.prod(A)
    out = set()
    for v in _subgroup_residues(Q_A, Q_S, params.d, params.cap):
        den = _residue_denominator(v, Q_S)
        if all(math.gcd(den, q) > 1 for q in A):
            out.add(v)
    return out


def _leq_residues(params: MajorArcParams, ground: Sequence[int], level: int) -> set[tuple[int, ...]]:
    # Sigma_{<=B} increases with B, so maximal subsets suffice.
    ground = sorted(ground)
    size = min(level, len(ground))
    out: set[tuple[int, ...]] = set()
    for A in itertools.combinations(ground, size):
        out |= _subgroup_residues(math.prod(A), params.Q_S, params.d, params.cap)
        if len(out) > params.cap:
            raise CapExceededError(f"Sigma-set exceeds cap {params.cap}")
    return out


def _to_points(residues: Iterable[tuple[int, ...]], Q_S: int) -> tuple[TorusPoint, ...]:
    return tuple(TorusPoint.from_residues(v, Q_S) for v in sorted(residues))


def _check_level(params: MajorArcParams, A: frozenset[int]) -> None:
    if len(A) > params.k:
        raise ValueError(f"|A|={len(A)} exceeds k={params.k}")


def sigma_subset(params: MajorArcParams, A: Iterable[int]) -> SigmaSet:
    A = _as_subset(params, A)
    _check_level(params, A)
    res = _subgroup_residues(math.prod(A), params.Q_S, params.d, params.cap)
    return SigmaSet("subset", A, _to_points(res, params.Q_S))


def sigma_exact(params: MajorArcParams, A: Iterable[int]) -> SigmaSet:
    A = _as_subset(params, A)
    _check_level(params, A)
    return SigmaSet("exact", A, _to_points(_exact_residues(params, A), params.Q_S))


def sigma_leq(params: MajorArcParams) -> SigmaSet:
    res = _leq_residues(params, params.S, params.k)
    return SigmaSet("union", params.k, _to_points(res, params.Q_S))


def sigma_complement(params: MajorArcParams, A0: Iterable[int]) -> SigmaSet:
    """Union of Sigma_A over A in S minus A0 with |A| <= k - |A0|."""
    A0 = _as_subset(params, A0)
    _check_level(params, A0)
    rest = [q for q in params.S if q not in A0]
    res = _leq_residues(params, rest, params.k - len(A0))
    return SigmaSet("complement", A0, _to_points(res, params.Q_S))


def stratum_of(params: MajorArcParams, x: TorusPoint) -> frozenset[int] | None:
    """The unique A with x in Sigma_A, or None if den(x) does not divide Q_S."""
    den = x.denominator
    A = frozenset(q for q in params.S if math.gcd(den, q) > 1)
    if math.prod(A) % den:
        return None
    return A


def in_sigma_leq(params: MajorArcParams, x: TorusPoint) -> bool:
    """Membership in Sigma_{<=k} without enumerating it."""
    A = stratum_of(params, x)
    return A is not None and len(A) <= params.k


# --- goodness and separation ----------------------------------------------


def good_threshold(params: MajorArcParams, r: int, c: Fraction) -> Fraction:
    """c / (2 r q_max^{2rk}): eps must be strictly below this."""
    if r < 1:
        raise ValueError("r must be a positive integer")
    c = Fraction(c)
    return c / (2 * r * params.q_max ** (2 * r * params.k))


def is_good(params: MajorArcParams, r: int, c) -> bool:
    c = Fraction(c)
    if not 0 < c < 1:
        raise ValueError("c must lie in (0, 1)")
    return params.eps < good_threshold(params, r, c)


def largest_below(x: Fraction, max_den: int) -> Fraction:
    """Largest fraction strictly below x (x > 0) with denominator <= max_den."""
    x = Fraction(x)
    if x <= 0:
        raise ValueError("x must be positive")
    # Stern-Brocot descent with batched steps; left < x <= right throughout.
    a = math.ceil(x) - 1
    left = (a, 1)
    right = (a + 1, 1)
    while True:
        m_num, m_den = left[0] + right[0], left[1] + right[1]
        if m_den > max_den:
            if left[0] <= 0:
                raise ValueError(f"no positive fraction below {x} has denominator <= {max_den}")
            return Fraction(*left)
        if Fraction(m_num, m_den) < x:
            # advance left towards right as far as possible: left + t*right < x
            t_hi = (max_den - left[1]) // right[1]
            lo, hi = 1, t_hi
            while lo < hi:
                mid = (lo + hi + 1) // 2
                if Fraction(left[0] + mid * right[0], left[1] + mid * right[1]) < x:
                    lo = mid
                else:
                    hi = mid - 1
            left = (left[0] + lo * right[0], left[1] + lo * right[1])
        else:
            # advance right towards left: right + t*left >= x
            t_hi = (max_den - right[1]) // left[1]
            lo, hi = 1, max(t_hi, 1)
            while lo < hi:
                mid = (lo + hi + 1) // 2
                if Fraction(right[0] + mid * left[0], right[1] + mid * left[1]) >= x:
                    lo = mid
                else:
                    hi = mid - 1
            right = (right[0] + lo * left[0], right[1] + lo * left[1])


def largest_good_eps(params: MajorArcParams, r: int, c, max_den: int = 10**6) -> Fraction:
    """Largest eps with denominator <= max_den making params (r, c)-good."""
    return largest_below(good_threshold(params, r, Fraction(c)), max_den)


def _min_sep_numerator(res: np.ndarray, Q: int) -> int:
    """min over distinct pairs of max_i min(|da_i|, Q - |da_i|), all in integers."""
    n = res.shape[0]
    best = Q
    if res.shape[1] == 1:
        a = np.sort(res[:, 0])
        gaps = np.diff(a)
        wrap = Q - (a[-1] - a[0])
        return int(min(gaps.min(), wrap))
    block = max(1, 2_000_000 // max(n, 1))
    for start in range(0, n, block):
        chunk = res[start:start + block]
        diff = np.abs(chunk[:, None, :] - res[None, :, :])
        diff = np.minimum(diff, Q - diff).max(axis=2)
        idx = np.arange(start, start + chunk.shape[0])
        diff[np.arange(chunk.shape[0]), idx] = Q
        best = min(best, int(diff.min()))
    return best


def min_separation(params: MajorArcParams) -> Fraction:
    res = _leq_residues(params, params.S, params.k)
    if len(res) < 2:
        raise ValueError("Sigma_{<=k} has fewer than two points")
    arr = np.array(sorted(res), dtype=np.int64)
    Q = params.Q_S
    return Fraction(_min_sep_numerator(arr, Q), Q)


# --- additive structure ------------------------------------------------------


def _sumset(X: set[tuple[int, ...]], Y: set[tuple[int, ...]], Q: int) -> set[tuple[int, ...]]:
    return {tuple((a + b) % Q for a, b in zip(x, y)) for x in X for y in Y}


def verify_crt_sum(params: MajorArcParams, A1: Iterable[int], A2: Iterable[int]) -> bool:
    """Sigma_{A1} + Sigma_{A2} == Sigma_{A1 u A2} for disjoint A1, A2."""
    A1 = _as_subset(params, A1)
    A2 = _as_subset(params, A2)
    if A1 & A2:
        raise ValueError(f"subsets overlap: {sorted(A1 & A2)}")
    lhs = _sumset(_exact_residues(params, A1), _exact_residues(params, A2), params.Q_S)
    rhs = _exact_residues(params, A1 | A2)
    return lhs == rhs


def verify_inclusion(params: MajorArcParams, A0: Iterable[int]) -> bool:
    """Sigma_{A0} + Sigma_{(A0)} is contained in Sigma_{<=k}."""
    A0 = _as_subset(params, A0)
    _check_level(params, A0)
    rest = [q for q in params.S if q not in A0]
    comp = _leq_residues(params, rest, params.k - len(A0))
    total = _sumset(_exact_residues(params, A0), comp, params.Q_S)
    return total <= _leq_residues(params, params.S, params.k)


def verify_partition(params: MajorArcParams, A: Iterable[int]) -> bool:
    """Sigma_{<=A} is the disjoint union of Sigma_B over B subset of A, and |Sigma_{<=A}| = Q_A^d."""
    A = _as_subset(params, A)
    whole = _subgroup_residues(math.prod(A), params.Q_S, params.d, params.cap)
    if len(whole) != math.prod(A) ** params.d:
        return False
    seen: set[tuple[int, ...]] = set()
    total = 0
    for B in subsets_upto(sorted(A), len(A)):
        part = _exact_residues(params, B)
        if seen & part:
            return False
        seen |= part
        total += len(part)
    return seen == whole and total == len(whole)


def brute_min_separation(points: Sequence[TorusPoint]) -> Fraction:
    """Pairwise minimum of torus_dist_linf by direct Fraction arithmetic."""
    return min(torus_dist_linf(x, y) for x, y in itertools.combinations(points, 2))
