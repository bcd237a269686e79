"""Nonces, sunflowers, Sun(k, r) by exhaustive search, and the sunflower-probability experiments."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.stats import binomtest

__all__ = [
    "find_nonces",
    "has_nonce",
    "is_sunflower",
    "sun_number",
    "erdos_rado_bounds",
    "SearchBudgetExceeded",
    "PerResult",
    "per_monte_carlo",
    "per_exact",
    "water_kernel",
    "water_inequality_check",
]


def _members(family: Iterable[Iterable[int]]) -> list[frozenset]:
    return [frozenset(A) for A in family]


def find_nonces(family: Iterable[Iterable[int]]) -> frozenset:
    """Elements lying in exactly one list position."""
    counts: dict = {}
    for A in _members(family):
        for s in A:
            counts[s] = counts.get(s, 0) + 1
    return frozenset(s for s, c in counts.items() if c == 1)


def has_nonce(family: Iterable[Iterable[int]]) -> bool:
    return bool(find_nonces(family))


def is_sunflower(family: Iterable[Iterable[int]]) -> frozenset | None:
    """The core if the list is a sunflower, else None.

    For two or more members the only possible core is the intersection: the
    petals of any core C are pairwise disjoint, so an element of every member
    that is not in C would lie in two petals.
    """
    members = _members(family)
    if not members:
        raise ValueError("family must be nonempty")
    if len(members) == 1:
        return members[0]
    core = frozenset.intersection(*members)
    seen: set = set()
    for A in members:
        petal = A - core
        if petal & seen:
            return None
        seen |= petal
    return core


def erdos_rado_bounds(k: int, r: int) -> tuple[int, int]:
    if k < 1 or r < 1:
        raise ValueError("k and r must be positive")
    low = (r - 1) ** k
    return low, low * math.factorial(k) + 1


class SearchBudgetExceeded(RuntimeError):
    pass


def _creates_sunflower(family: list[frozenset], new: frozenset, r: int) -> bool:
    if r == 1:
        return True
    for combo in itertools.combinations(family, r - 1):
        if is_sunflower(combo + (new,)) is not None:
            return True
    return False


def sun_number(k: int, r: int, budget: int = 2_000_000) -> int:
    """Smallest m such that every m distinct sets of size <= k contain an r-sunflower.

    Depth-first search over sunflower-free families.  A new set may use labels
    already present plus the next unused labels in order, which reaches every
    family up to relabeling.  ``budget`` caps the number of visited families.
    """
    if k < 1 or r < 1:
        raise ValueError("k and r must be positive")
    if r == 1:
        return 1
    _, upper = erdos_rado_bounds(k, r)
    best = 0
    visited: set[frozenset] = set()
    stack: list[tuple[frozenset, int]] = [(frozenset(), 0)]
    while stack:
        fam, n_labels = stack.pop()
        if fam in visited:
            continue
        visited.add(fam)
        if len(visited) > budget:
            raise SearchBudgetExceeded(f"more than {budget} families visited for Sun({k},{r})")
        best = max(best, len(fam))
        if best >= upper - 1:
            break
        members = sorted(fam, key=lambda A: (len(A), sorted(A)))
        for size in range(0, k + 1):
            for n_old in range(0, size + 1):
                n_fresh = size - n_old
                fresh = tuple(range(n_labels, n_labels + n_fresh))
                for old in itertools.combinations(range(n_labels), n_old):
                    new = frozenset(old + fresh)
                    if new in fam:
                        continue
                    if _creates_sunflower(members, new, r):
                        continue
                    child = fam | {new}
                    if child not in visited:
                        stack.append((child, n_labels + n_fresh))
    return best + 1


# --- probabilistic Erdos-Rado ----------------------------------------------


def _normalize(weights) -> tuple[list[frozenset], np.ndarray, int]:
    if isinstance(weights, Mapping):
        items = list(weights.items())
    else:
        items = [(A, w) for A, w in weights]
    if not items:
        raise ValueError("empty distribution")
    sets = [frozenset(A) for A, _ in items]
    if len(set(sets)) != len(sets):
        raise ValueError("distribution lists a set twice")
    sizes = {len(A) for A in sets}
    if len(sizes) != 1:
        raise ValueError(f"all sets must have the same cardinality, got {sorted(sizes)}")
    raw = [w for _, w in items]
    if any(w < 0 for w in raw):
        raise ValueError("negative probability")
    if all(isinstance(w, (int, Fraction)) for w in raw):
        if sum(Fraction(w) for w in raw) != 1:
            raise ValueError("probabilities must sum to 1")
    elif abs(float(sum(float(w) for w in raw)) - 1.0) > 1e-9:
        raise ValueError("probabilities must sum to 1")
    probs = np.array([float(w) for w in raw])
    return sets, probs / probs.sum(), sizes.pop()


def _sunflower_table(sets: list[frozenset], r: int) -> np.ndarray:
    n = len(sets)
    table = np.zeros((n,) * r, dtype=bool)
    for idx in itertools.product(range(n), repeat=r):
        table[idx] = is_sunflower([sets[i] for i in idx]) is not None
    return table


@dataclass(frozen=True)
class PerResult:
    empirical: float
    threshold: float
    ci_low: float
    ci_high: float
    se: float
    trials: int
    successes: int

    @property
    def margin_ok(self) -> bool:
        """empirical - 3 SE clears the threshold."""
        return self.empirical - 3 * self.se >= self.threshold

    def to_json(self) -> dict:
        return {
            "empirical": self.empirical,
            "threshold": self.threshold,
            "ci": [self.ci_low, self.ci_high],
            "se": self.se,
            "trials": self.trials,
            "successes": self.successes,
        }


def per_threshold(k: int, r: int) -> float:
    return float((4 * erdos_rado_bounds(k, r)[1]) ** (-r)) if k > 0 else 1.0


def per_monte_carlo(weights, r: int, trials: int, seed: int, confidence: float = 0.9973) -> PerResult:
    """Draw r independent sets per trial and count how often they form a sunflower."""
    if trials < 1:
        raise ValueError("trials must be positive")
    sets, probs, k = _normalize(weights)
    rng = np.random.default_rng(seed)
    draws = rng.choice(len(sets), size=(trials, r), p=probs)
    if len(sets) ** r <= 1_000_000:
        table = _sunflower_table(sets, r)
        hits = int(table[tuple(draws.T)].sum())
    else:
        hits = sum(is_sunflower([sets[i] for i in row]) is not None for row in draws)
    emp = hits / trials
    ci = binomtest(hits, trials).proportion_ci(confidence_level=confidence, method="wilson")
    threshold = per_threshold(k, r) if k > 0 else 1.0
    se = math.sqrt(emp * (1 - emp) / trials)
    return PerResult(emp, threshold, float(ci.low), float(ci.high), se, trials, hits)


def per_exact(weights, r: int) -> Fraction:
    """Exact sunflower probability by enumerating all r-tuples (rational weights)."""
    if isinstance(weights, Mapping):
        items = list(weights.items())
    else:
        items = list(weights)
    total = Fraction(0)
    for combo in itertools.product(items, repeat=r):
        if is_sunflower([A for A, _ in combo]) is not None:
            total += math.prod((Fraction(w) for _, w in combo), start=Fraction(1))
    return total


# --- pointwise square-function estimate --------------------------------------


def water_kernel(weights: Mapping, r: int, ground: Sequence[int], k: int, core: str = "canonical"):
    """Sum over cores A0 and pairwise disjoint petals of prod_i w[A0 u A_i].

    ``core="literal"`` runs over every (A0, petals) decomposition.  For r >= 2 the
    core of such a tuple is forced to be the intersection, so both readings
    agree; for r = 1 the literal reading counts each set once per subset.
    ``core="canonical"`` keeps only decompositions whose core is the intersection.
    """
    if core not in ("canonical", "literal"):
        raise ValueError(f"unknown core mode {core!r}")
    ground = sorted(ground)
    total = 0
    for size0 in range(0, k + 1):
        for A0 in itertools.combinations(ground, size0):
            A0 = frozenset(A0)
            rest = [s for s in ground if s not in A0]
            petals = [frozenset(P) for P in itertools.combinations(rest, k - size0)]
            for tup in itertools.product(petals, repeat=r):
                if r >= 2:
                    disjoint = all(not (P & Q) for P, Q in itertools.combinations(tup, 2))
                    if not disjoint:
                        continue
                elif core == "canonical" and tup[0]:
                    continue
                prod = 1
                for P in tup:
                    prod = prod * weights.get(A0 | P, 0)
                    if prod == 0:
                        break
                total += prod
    return total


@dataclass(frozen=True)
class WaterResult:
    lhs: object
    rhs_upper: object
    rhs_lower: object
    forward: bool
    converse: bool

    @property
    def passed(self) -> bool:
        return self.forward and self.converse


def water_inequality_check(weights: Mapping, r: int, ground: Sequence[int], k: int, budget: int = 10**7) -> WaterResult:
    """lhs = (sum w)^r against the sunflower kernel, in both directions.

    Weights are indexed by k-subsets of ``ground``; exact if they are rational.
    """
    weights = {frozenset(A): w for A, w in weights.items()}
    for A in weights:
        if len(A) != k or not A <= set(ground):
            raise ValueError(f"weight index {sorted(A)} is not a {k}-subset of the ground set")
    work = sum(math.comb(len(ground) - j, k - j) ** r * math.comb(len(ground), j) for j in range(k + 1))
    if work > budget:
        raise SearchBudgetExceeded(f"kernel enumeration needs {work} terms > {budget}")
    lhs = sum(weights.values()) ** r
    kernel = water_kernel(weights, r, ground, k)
    c = (4 * erdos_rado_bounds(k, r)[1]) ** r
    upper = c * kernel
    return WaterResult(lhs, upper, kernel, lhs <= upper, kernel <= lhs)
