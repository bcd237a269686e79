"""A choice of coprime moduli whose subproducts cover the Farey fractions of height N."""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .exact import parse_rational

__all__ = [
    "IWConstruction",
    "ClassicalParams",
    "primes_upto",
    "max_exponent",
    "level_for_rho",
    "build_iw_set",
    "verify_farey_coverage",
    "verify_lcm_bound",
    "element_bound_report",
    "classical_params",
]


def primes_upto(n: int) -> list[int]:
    if n < 2:
        return []
    sieve = bytearray([1]) * (n + 1)
    sieve[0] = sieve[1] = 0
    for p in range(2, math.isqrt(n) + 1):
        if sieve[p]:
            sieve[p * p :: p] = bytearray(len(range(p * p, n + 1, p)))
    return [i for i in range(n + 1) if sieve[i]]


def max_exponent(p: int, N: int) -> int:
    """Largest e with p**e <= N, by integer multiplication."""
    e, power = 0, 1
    while power * p <= N:
        power *= p
        e += 1
    return e


def _as_rho(rho) -> Fraction:
    rho = parse_rational(rho) if isinstance(rho, str) else Fraction(rho)
    if not 0 < rho <= 1:
        raise ValueError(f"rho must lie in (0, 1], got {rho}")
    return rho


def level_for_rho(rho) -> int:
    """k = floor(2 / rho) + 1."""
    rho = _as_rho(rho)
    return math.floor(2 / rho) + 1


def _is_small_prime(p: int, N: int, rho: Fraction) -> bool:
    # p <= N^(rho/2)  <=>  p^(2b) <= N^a  for rho = a/b
    return p ** (2 * rho.denominator) <= N**rho.numerator


JSON_SAFE_INT = 2**53


def _json_int(x: int):
    """Integers beyond the IEEE double range are emitted as decimal strings."""
    return int(x) if abs(x) < JSON_SAFE_INT else str(x)


@dataclass(frozen=True)
class IWConstruction:
    N: int
    rho: Fraction
    k: int
    S: tuple[int, ...]
    small_primes: tuple[int, ...]
    large_primes: tuple[int, ...]

    @property
    def q_total(self) -> int:
        return math.prod(self.S)

    @property
    def q_max(self) -> int:
        return max(self.S)

    def to_json(self) -> dict:
        return {
            "N": self.N,
            "rho": f"{self.rho.numerator}/{self.rho.denominator}",
            "k": self.k,
            "S": [_json_int(q) for q in self.S],
            "q_total": str(self.q_total),
            "q_total_digits": len(str(self.q_total)),
        }


def build_iw_set(N: int, rho, require_bound: bool = True) -> IWConstruction:
    """With ``require_bound=False`` the size condition N >= 2^k is skipped; the set is still well defined."""
    rho = _as_rho(rho)
    k = level_for_rho(rho)
    if N < 2:
        raise ValueError("N must be at least 2")
    if require_bound and N < 2**k:
        raise ValueError(f"N={N} must be at least 2^k = {2**k} (k={k})")
    primes = primes_upto(N)
    small = tuple(p for p in primes if _is_small_prime(p, N, rho))
    large = tuple(p for p in primes if not _is_small_prime(p, N, rho))
    head = math.prod(p ** max_exponent(p, N) for p in small)
    elements = [p ** max_exponent(p, N) for p in large]
    if small:
        elements.append(head)
    return IWConstruction(N, rho, k, tuple(sorted(elements)), small, large)


def _factorize(q: int) -> dict[int, int]:
    out: dict[int, int] = {}
    p = 2
    while p * p <= q:
        while q % p == 0:
            out[p] = out.get(p, 0) + 1
            q //= p
        p += 1
    if q > 1:
        out[q] = out.get(q, 0) + 1
    return out


def covering_elements(construction: IWConstruction, q: int) -> tuple[int, ...] | None:
    """Distinct elements of S whose product q divides, chosen prime by prime; None if impossible."""
    chosen = set()
    for p in _factorize(q):
        owners = [s for s in construction.S if s % p == 0]
        if not owners:
            return None
        chosen.add(owners[0])
    chosen_t = tuple(sorted(chosen))
    if math.prod(chosen_t) % q:
        return None
    return chosen_t


def verify_farey_coverage(construction: IWConstruction) -> bool:
    for q in range(1, construction.N + 1):
        cover = covering_elements(construction, q)
        if cover is None or len(cover) > construction.k:
            return False
    return True


def verify_lcm_bound(construction: IWConstruction) -> tuple[bool, bool]:
    N = construction.N
    lcm = 1
    for q in range(1, N + 1):
        lcm = lcm * q // math.gcd(lcm, q)
    q_total = construction.q_total
    return q_total == lcm, q_total <= 3**N


def element_bound_report(construction: IWConstruction) -> tuple[int, float]:
    """max(S) and the smallest C with max(S) <= C^(k N^(rho/2))."""
    m = construction.q_max
    exponent = construction.k * construction.N ** (float(construction.rho) / 2)
    return m, math.exp(math.log(m) / exponent)


@dataclass(frozen=True)
class ClassicalParams:
    d: int
    r: int
    k: int
    S: tuple[int, ...]
    eps_threshold: Fraction


def classical_params(d: int, N: int, p, rho) -> ClassicalParams:
    """r is the least integer with (2r)' <= p <= 2r; the eps threshold uses c = 1/2."""
    p = parse_rational(p) if isinstance(p, str) else Fraction(p)
    if p <= 1:
        raise ValueError(f"p must exceed 1, got {p}")
    if d < 1:
        raise ValueError("d must be positive")
    dual = p / (p - 1)
    r = math.ceil(max(p, dual) / 2)
    construction = build_iw_set(N, rho)
    k = construction.k
    threshold = Fraction(1, 2) / (2 * r * construction.q_max ** (2 * r * k))
    return ClassicalParams(d, r, k, construction.S, threshold)
