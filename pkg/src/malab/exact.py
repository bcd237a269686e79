"""Exact rational arithmetic on the torus (Q/Z)^d and Chinese-remainder helpers.

Every value in this module is an exact :class:`fractions.Fraction` or a Python
integer; no floating point is used anywhere.
"""
from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

__all__ = [
    "Rational",
    "TorusPoint",
    "CapExceededError",
    "DEFAULT_CAP",
    "parse_rational",
    "format_rational",
    "torus_add",
    "torus_dist_linf",
    "crt_combine",
    "torsion_points",
    "lcm_all",
]

Rational = Fraction

DEFAULT_CAP = 10**6

_RATIONAL_RE = re.compile(r"^\s*([+-]?\d+)(?:\s*/\s*(\d+))?\s*$")


class CapExceededError(ValueError):
    """Raised when an enumeration would exceed the configured point cap."""


def parse_rational(text: str | int | Fraction) -> Fraction:
    """Parse ``"a/b"`` or ``"a"`` into a Fraction.

    Decimal syntax such as ``"0.01"`` is rejected on purpose: every
    parameter that feeds an exact comparison must be given exactly.
    """
    if isinstance(text, Fraction):
        return text
    if isinstance(text, bool):
        raise ValueError(f"not a rational: {text!r}")
    if isinstance(text, int):
        return Fraction(text)
    if not isinstance(text, str):
        raise ValueError(f"not a rational: {text!r}")
    m = _RATIONAL_RE.match(text)
    if m is None:
        raise ValueError(f"not a rational in num/den form: {text!r}")
    num = int(m.group(1))
    den = int(m.group(2)) if m.group(2) is not None else 1
    if den == 0:
        raise ValueError(f"zero denominator: {text!r}")
    return Fraction(num, den)


def format_rational(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


def lcm_all(values: Iterable[int]) -> int:
    out = 1
    for v in values:
        out = out * v // math.gcd(out, v)
    return out


@dataclass(frozen=True, order=True)
class TorusPoint:
    """A point of (Q/Z)^d stored with every coordinate reduced into [0, 1)."""

    coords: tuple[Fraction, ...]

    def __post_init__(self):
        if len(self.coords) == 0:
            raise ValueError("torus dimension must be positive")
        reduced = tuple(_reduce(Fraction(c)) for c in self.coords)
        object.__setattr__(self, "coords", reduced)

    @classmethod
    def of(cls, *coords) -> "TorusPoint":
        return cls(tuple(parse_rational(c) if isinstance(c, str) else Fraction(c) for c in coords))

    @classmethod
    def zero(cls, d: int) -> "TorusPoint":
        return cls((Fraction(0),) * d)

    @classmethod
    def from_residues(cls, residues: Sequence[int], q: int) -> "TorusPoint":
        return cls(tuple(Fraction(a, q) for a in residues))

    @property
    def dim(self) -> int:
        return len(self.coords)

    @property
    def denominator(self) -> int:
        return lcm_all(c.denominator for c in self.coords)

    def residues(self, q: int) -> tuple[int, ...]:
        """Integer numerators a with x = a/q; q must be a multiple of the denominator."""
        if q % self.denominator:
            raise ValueError(f"denominator {self.denominator} does not divide {q}")
        return tuple(int(c * q) for c in self.coords)

    def __add__(self, other: "TorusPoint") -> "TorusPoint":
        return torus_add(self, other)

    def __neg__(self) -> "TorusPoint":
        return TorusPoint(tuple(-c for c in self.coords))

    def __sub__(self, other: "TorusPoint") -> "TorusPoint":
        return torus_add(self, -other)

    def scale(self, n: int) -> "TorusPoint":
        return TorusPoint(tuple(n * c for c in self.coords))

    def to_json(self) -> list[str]:
        return [format_rational(c) for c in self.coords]

    @classmethod
    def from_json(cls, data: Sequence[str]) -> "TorusPoint":
        return cls(tuple(parse_rational(s) for s in data))

    def __repr__(self) -> str:
        return "TorusPoint(" + ", ".join(str(c) for c in self.coords) + ")"


def _reduce(c: Fraction) -> Fraction:
    return c - (c.numerator // c.denominator)


def _check_dims(x: TorusPoint, y: TorusPoint) -> None:
    if x.dim != y.dim:
        raise ValueError(f"dimension mismatch: {x.dim} != {y.dim}")


def torus_add(x: TorusPoint, y: TorusPoint) -> TorusPoint:
    _check_dims(x, y)
    return TorusPoint(tuple(a + b for a, b in zip(x.coords, y.coords)))


def torus_dist_linf(x: TorusPoint, y: TorusPoint) -> Fraction:
    """The l-infinity distance on the torus, exact."""
    _check_dims(x, y)
    best = Fraction(0)
    for a, b in zip(x.coords, y.coords):
        delta = abs(a - b)
        best = max(best, min(delta, 1 - delta))
    return best


def crt_combine(residues: Sequence[tuple[int, int]]) -> tuple[int, int]:
    """Combine ``[(r_i, m_i), ...]`` into ``(r, prod m_i)`` with r = r_i mod m_i."""
    r, m = 0, 1
    for ri, mi in residues:
        if mi < 1:
            raise ValueError(f"modulus must be >= 1, got {mi}")
        if math.gcd(m, mi) != 1:
            raise ValueError(f"moduli not pairwise coprime: {m} and {mi}")
        # r + m*t = ri (mod mi)
        t = ((ri - r) * pow(m, -1, mi)) % mi if mi > 1 else 0
        r = r + m * t
        m = m * mi
        r %= m
    return r, m


def torsion_points(Q: int, d: int, cap: int = DEFAULT_CAP) -> list[TorusPoint]:
    """All Q^d points of T^d[Q] in sorted order."""
    if Q < 1 or d < 1:
        raise ValueError("Q and d must be positive")
    if Q**d > cap:
        raise CapExceededError(f"|T^{d}[{Q}]| = {Q**d} exceeds cap {cap}")
    return [
        TorusPoint.from_residues(a, Q)
        for a in itertools.product(range(Q), repeat=d)
    ]
