"""Type II superorthogonal hypersystems, Khintchine ratios, k-wise independent sources and tail experiments.

A hypersystem stores its functions as one array ``values`` of shape
``(n_index, n_points, hdim)`` together with point masses ``weights``.  In exact
mode values and weights are integers, the measure is ``weights / mass_den``, and
every superorthogonality integral is computed as an exact integer.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np
from scipy.stats import binomtest

from .sunflower import has_nonce

__all__ = [
    "FiniteMeasureSpace",
    "Hypersystem",
    "SuperorthoResult",
    "KWiseSource",
    "check_superortho",
    "nonce_mask",
    "khintchine_ratio",
    "multinomial_check",
    "partitions_of",
    "polyrand_hypersystem",
    "partial_sum_system",
    "hoeffding_experiment",
    "sharpness_product",
    "sharpness_product_bruteforce",
    "sharpness_polynomial",
    "lagrange_bijection",
    "wiener_chaos_experiment",
    "mz_vector_check",
]

_INT_LIMIT = 2**62


@dataclass(frozen=True)
class FiniteMeasureSpace:
    weights: np.ndarray
    mass_den: int = 1

    def __post_init__(self):
        w = np.asarray(self.weights)
        if w.ndim != 1 or w.size == 0:
            raise ValueError("weights must be a nonempty vector")
        if np.any(w <= 0):
            raise ValueError("point masses must be positive")
        object.__setattr__(self, "weights", w)

    @property
    def exact(self) -> bool:
        return self.weights.dtype.kind in "iu" or self.weights.dtype == object

    @property
    def n_points(self) -> int:
        return self.weights.size

    @classmethod
    def uniform(cls, n: int, exact: bool = True) -> "FiniteMeasureSpace":
        if exact:
            return cls(np.ones(n, dtype=np.int64), n)
        return cls(np.full(n, 1.0 / n))

    def float_weights(self) -> np.ndarray:
        return self.weights.astype(float) / self.mass_den


@dataclass(frozen=True)
class Hypersystem:
    index: tuple[frozenset, ...]
    values: np.ndarray
    space: FiniteMeasureSpace

    def __post_init__(self):
        index = tuple(frozenset(A) for A in self.index)
        object.__setattr__(self, "index", index)
        vals = np.asarray(self.values)
        if vals.ndim == 2:
            vals = vals[:, :, None]
        if vals.ndim != 3 or vals.shape[0] != len(index):
            raise ValueError("values must have shape (n_index, n_points, hdim)")
        if vals.shape[1] != self.space.n_points:
            raise ValueError("values and space disagree on the number of points")
        if self.space.exact and vals.dtype.kind not in "iuO":
            raise ValueError("exact measure requires integer values")
        object.__setattr__(self, "values", vals)

    @property
    def exact(self) -> bool:
        return self.space.exact and self.values.dtype.kind in "iuO"

    @property
    def hdim(self) -> int:
        return self.values.shape[2]

    @property
    def ground(self) -> frozenset:
        return frozenset().union(*self.index) if self.index else frozenset()

    def total(self) -> np.ndarray:
        return self.values.sum(axis=0)

    def float_values(self) -> np.ndarray:
        if self.values.dtype == object:
            return self.values.astype(complex)
        return self.values


# --- nonce bookkeeping -------------------------------------------------------


def _bitmasks(index: Sequence[frozenset]) -> np.ndarray:
    ground = sorted(frozenset().union(*index)) if index else []
    if len(ground) > 63:
        raise ValueError("ground set too large for bitmask nonce test")
    pos = {s: i for i, s in enumerate(ground)}
    return np.array([sum(1 << pos[s] for s in A) for A in index], dtype=np.uint64)


def nonce_mask(index: Sequence[frozenset], r: int) -> np.ndarray:
    """Boolean array of shape (n,)*2r: does the tuple of index sets contain a nonce."""
    masks = _bitmasks(index)
    n = len(index)
    total = 2 * r
    once = np.zeros((n,) * total, dtype=np.uint64)
    twice = np.zeros((n,) * total, dtype=np.uint64)
    for j in range(total):
        shape = [1] * total
        shape[j] = n
        m = masks.reshape(shape)
        twice = twice | (once & m)
        once = once | m
    return (once & ~twice) != 0


# --- superorthogonality --------------------------------------------------------


@dataclass(frozen=True)
class SuperorthoResult:
    max_violation: float
    max_abs: object
    n_tuples: int
    passed: bool
    worst_tuple: tuple | None = None


def _pair_products(system: Hypersystem) -> np.ndarray:
    """P[a, b, x] = <f_a(x), f_b(x)>, linear in the first slot."""
    v = system.values
    if system.exact:
        if v.dtype != object and int(np.abs(v).max(initial=0)) ** 2 * v.shape[2] < _INT_LIMIT:
            return np.einsum("axh,bxh->abx", v.astype(np.int64), v.astype(np.int64))
        return np.einsum("axh,bxh->abx", v.astype(object), v.astype(object))
    v = system.float_values()
    return np.einsum("axh,bxh->abx", v, v.conj())


def _lp_norms(system: Hypersystem, q: float) -> np.ndarray:
    w = system.space.float_weights()
    mags = np.linalg.norm(system.float_values(), axis=2)
    return (mags**q * w).sum(axis=1) ** (1.0 / q)


def _exact_dtype(P: np.ndarray, weights: np.ndarray, r: int):
    if P.dtype == object or weights.dtype == object:
        return object
    bound = int(np.abs(P).max(initial=0)) ** r * int(weights.sum())
    return np.int64 if bound < _INT_LIMIT else object


def check_superortho(system: Hypersystem, r: int, tol: float = 1e-9, budget: int = 10**7) -> SuperorthoResult:
    """Evaluate every nonce-containing 2r-fold integral and compare with prod of L^{2r} norms."""
    if r < 1:
        raise ValueError("r must be positive")
    n = len(system.index)
    if n ** (2 * r) > budget:
        raise ValueError(f"{n}^{2 * r} tuples exceed the enumeration budget {budget}")
    mask = nonce_mask(system.index, r)
    n_tuples = int(mask.sum())
    if n_tuples == 0:
        return SuperorthoResult(0.0, 0, 0, True)
    P = _pair_products(system)
    norms = _lp_norms(system, 2 * r)
    w = system.space.weights
    if system.exact:
        dtype = _exact_dtype(P, w, r)
        P = P.astype(dtype)
        w = w.astype(dtype)
    else:
        w = system.space.float_weights()
    if r == 1:
        integrals = (P * w).sum(axis=2)
    elif r == 2:
        flat = P.reshape(n * n, -1)
        integrals = (flat * w) @ flat.T
        integrals = integrals.reshape(n, n, n, n).transpose(0, 2, 1, 3)
    else:
        integrals = np.zeros((n,) * (2 * r), dtype=P.dtype if system.exact else complex)
        for tup in zip(*np.nonzero(mask)):
            prod = w.copy()
            for j in range(r):
                prod = prod * P[tup[j], tup[r + j]]
            integrals[tup] = prod.sum()
    # integrals[a_1..a_r, b_1..b_r] with pairing <f_{a_j}, f_{b_j}>
    scale = np.ones((n,) * (2 * r))
    for j in range(2 * r):
        shape = [1] * (2 * r)
        shape[j] = n
        scale = scale * norms.reshape(shape)
    vals = integrals[mask]
    if system.exact:
        abs_vals = [abs(int(x)) for x in vals]
        max_abs = max(abs_vals)
        scl = scale[mask]
        mass = Fraction(1, system.space.mass_den)
        rel = np.array(abs_vals, dtype=float) * float(mass) / np.where(scl > 0, scl, 1.0)
        worst = int(np.argmax(rel))
        max_abs_f = Fraction(max_abs) * mass
        passed = max_abs == 0
    else:
        a = np.abs(vals)
        scl = scale[mask]
        rel = np.where(scl > 0, a / np.where(scl > 0, scl, 1.0), a)
        worst = int(np.argmax(rel))
        max_abs_f = float(a.max())
        passed = bool(rel.max() <= tol)
    tuples = np.argwhere(mask)
    worst_tuple = tuple(sorted(system.index[i]) for i in tuples[worst])
    return SuperorthoResult(float(rel.max()), max_abs_f, n_tuples, passed, worst_tuple)


def khintchine_ratio(system: Hypersystem, r: int) -> tuple[float, float, float]:
    """(||sum f_A||_{2r}, ||(sum ||f_A||^2)^{1/2}||_{2r}, ratio)."""
    w = system.space.float_weights()
    v = system.float_values()
    tot = np.linalg.norm(v.sum(axis=0), axis=1)
    sq = (np.abs(v) ** 2).sum(axis=(0, 2))
    lhs = float((w * tot ** (2 * r)).sum() ** (1 / (2 * r)))
    rhs = float((w * sq**r).sum() ** (1 / (2 * r)))
    return lhs, rhs, (lhs / rhs if rhs > 0 else 0.0)


def khintchine_power_exact(system: Hypersystem, r: int) -> tuple[Fraction, Fraction]:
    """Exact (||sum f_A||_{2r}^{2r}, ||square function||_{2r}^{2r}) for integer systems."""
    if not system.exact:
        raise ValueError("exact mode requires an integer system")
    v = system.values.astype(object)
    w = system.space.weights.astype(object)
    tot = v.sum(axis=0)
    tot_sq = (tot * tot).sum(axis=1)
    sq = (v * v).sum(axis=(0, 2))
    den = system.space.mass_den
    lhs = Fraction(int((w * tot_sq**r).sum()), den)
    rhs = Fraction(int((w * sq**r).sum()), den)
    return lhs, rhs


def _multinomial(total: int, parts: Sequence[int]) -> int:
    out = math.factorial(total)
    for j in parts:
        out //= math.factorial(j)
    return out


def multinomial_check(r: int, parts: Sequence[int]) -> bool:
    """binom(2r; 2j_1..2j_n) <= (2r)^r binom(r; j_1..j_n), exact."""
    if any(j < 0 for j in parts) or sum(parts) != r:
        raise ValueError(f"parts {tuple(parts)} do not sum to r={r}")
    lhs = _multinomial(2 * r, [2 * j for j in parts])
    rhs = (2 * r) ** r * _multinomial(r, parts)
    return lhs <= rhs


def partitions_of(r: int, n: int):
    """All tuples of n nonnegative integers summing to r."""
    if n == 1:
        yield (r,)
        return
    for first in range(r + 1):
        for rest in partitions_of(r - first, n - 1):
            yield (first,) + rest


# --- k-wise independent sources ----------------------------------------------------


@dataclass(frozen=True)
class KWiseSource:
    p: int
    R: int
    mode: str = "random-polynomial"

    def __post_init__(self):
        if self.mode not in ("random-polynomial", "bernoulli-grid"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.R < 1:
            raise ValueError("R must be positive")
        if self.mode == "random-polynomial":
            if self.p < 2 or any(self.p % q == 0 for q in range(2, math.isqrt(self.p) + 1)):
                raise ValueError(f"p={self.p} is not prime")
            if self.p <= self.R:
                raise ValueError(f"need p > R, got p={self.p}, R={self.R}")

    @property
    def alphabet(self) -> np.ndarray:
        if self.mode == "bernoulli-grid":
            return np.array([-1, 1])
        return np.arange(self.p)

    def space_size(self, n_vars: int) -> int:
        if self.mode == "bernoulli-grid":
            return 2**n_vars
        return self.p**self.R

    def variables(self, S: Sequence[int], samples: int | None = None, rng=None) -> np.ndarray:
        """Alphabet indices of X_s, shape (n_points, |S|), exhaustive unless ``samples`` is given."""
        S = list(S)
        if self.mode == "bernoulli-grid":
            if samples is None:
                grid = np.array(list(itertools.product(range(2), repeat=len(S))), dtype=np.int64)
                return grid.reshape(-1, len(S))
            return rng.integers(0, 2, size=(samples, len(S)))
        pts = [int(s) % self.p for s in S]
        if len(set(pts)) != len(pts):
            raise ValueError("elements of S must be distinct modulo p")
        if samples is None:
            coeffs = np.array(list(itertools.product(range(self.p), repeat=self.R)), dtype=np.int64)
        else:
            coeffs = rng.integers(0, self.p, size=(samples, self.R))
        vander = np.array([[pow(x, j, self.p) for x in pts] for j in range(self.R)], dtype=np.int64)
        return (coeffs @ vander) % self.p


def _mean_zero_table(raw: np.ndarray) -> np.ndarray:
    # alphabet_size * h(t) - sum_u h(u): integer and exactly mean zero
    return raw.shape[-1] * raw - raw.sum(axis=-1, keepdims=True)


def polyrand_hypersystem(
    S: Sequence[int],
    k: int,
    source: KWiseSource,
    spec: Mapping | None = None,
    seed: int = 0,
    r: int | None = None,
    allow_violation: bool = False,
) -> Hypersystem:
    """f_A = sum_j c_{A,j} prod_{s in A} g_{A,s,j}(X_s) with every g of exact mean zero.

    spec keys: hdim (1), terms (2), coeff_range (3), value_range (3), constant (0),
    levels (all of 0..k), samples (None, meaning exhaustive), exact (True),
    tables ("random" or "identity"; identity gives g(t) = centred t).
    """
    spec = dict(spec or {})
    if r is not None and 2 * r * k > source.R and not allow_violation:
        raise ValueError(f"2rk = {2 * r * k} exceeds R = {source.R}")
    hdim = int(spec.get("hdim", 1))
    terms = int(spec.get("terms", 2))
    coeff_range = int(spec.get("coeff_range", 3))
    value_range = int(spec.get("value_range", 3))
    constant = spec.get("constant", 0)
    levels = spec.get("levels", list(range(0, k + 1)))
    samples = spec.get("samples")
    exact = bool(spec.get("exact", True)) and samples is None
    tables_mode = spec.get("tables", "random")
    rng = np.random.default_rng(seed)
    S = sorted(S)
    X = source.variables(S, samples=samples, rng=rng)
    n_points = X.shape[0]
    alpha = source.alphabet
    col = {s: i for i, s in enumerate(S)}
    index = [frozenset(A) for size in sorted(levels) for A in itertools.combinations(S, size)]
    dtype = np.int64 if exact else complex
    values = np.zeros((len(index), n_points, hdim), dtype=dtype)
    for a, A in enumerate(index):
        if not A:
            if exact:
                values[a] = np.int64(constant)
            else:
                values[a] = complex(constant)
            continue
        for _ in range(terms if tables_mode == "random" else 1):
            if exact:
                c = rng.integers(-coeff_range, coeff_range + 1, size=hdim)
            else:
                c = rng.standard_normal(hdim) + 1j * rng.standard_normal(hdim)
            prod = np.ones(n_points, dtype=dtype)
            for s in sorted(A):
                if tables_mode == "identity":
                    raw = alpha.astype(np.int64)
                elif exact:
                    raw = rng.integers(-value_range, value_range + 1, size=alpha.size)
                else:
                    raw = rng.standard_normal(alpha.size)
                g = _mean_zero_table(raw) if exact else raw - raw.mean()
                prod = prod * g[X[:, col[s]]]
            values[a] += prod[:, None] * c[None, :]
    if exact:
        space = FiniteMeasureSpace.uniform(n_points, exact=True)
    else:
        space = FiniteMeasureSpace.uniform(n_points, exact=False)
    return Hypersystem(tuple(index), values, space)


def partial_sum_system(system: Hypersystem, assignment: Mapping, level: int) -> Hypersystem:
    """The system indexed by s in S_level used in the k-fold iteration.

    ``assignment`` maps each ground element to a class 1..k; only index sets
    with exactly one element in each class contribute.  The function attached to
    s in S_level is the vector (sum over later coordinates of f_A) indexed by the
    earlier coordinates, so it takes values in H^(S_1 x ... x S_{level-1}).
    """
    k = max(assignment.values())
    if not 1 <= level <= k:
        raise ValueError("level out of range")
    classes = {i: sorted(s for s, c in assignment.items() if c == i) for i in range(1, k + 1)}
    transversal = {}
    for a, A in enumerate(system.index):
        if len(A) == k and sorted(assignment[s] for s in A) == list(range(1, k + 1)):
            by_class = {assignment[s]: s for s in A}
            transversal[tuple(by_class[i] for i in range(1, k + 1))] = a
    earlier = list(itertools.product(*(classes[i] for i in range(1, level))))
    n_pts, hdim = system.values.shape[1], system.values.shape[2]
    index, blocks = [], []
    for s in classes[level]:
        block = np.zeros((len(earlier), n_pts, hdim), dtype=system.values.dtype)
        for e, prefix in enumerate(earlier):
            for key, a in transversal.items():
                if key[: level - 1] == prefix and key[level - 1] == s:
                    block[e] += system.values[a]
        index.append(frozenset([s]))
        blocks.append(block.transpose(1, 0, 2).reshape(n_pts, len(earlier) * hdim))
    return Hypersystem(tuple(index), np.stack(blocks), system.space)


# --- tail experiments -----------------------------------------------------------


def _wilson(hits: int, n: int, confidence: float) -> tuple[float, float]:
    ci = binomtest(hits, n).proportion_ci(confidence_level=confidence, method="wilson")
    return float(ci.low), float(ci.high)


def hoeffding_experiment(
    S: Sequence[int],
    k: int,
    source: KWiseSource,
    spec: Mapping | None,
    lambda_grid: Sequence[float],
    trials: int | None,
    seed: int,
    C: float = 3.0,
    c: float = 0.1,
    confidence: float = 0.95,
) -> list[dict]:
    """Tail probabilities of |sum_A f_A - f_empty| against the configured bound.

    The normalizer sigma^2 is the exact maximum of sum_{A nonempty} |f_A|^2 over
    the exhaustive sample space.  With ``trials`` set, the tail is estimated from
    that many uniform draws of sample points; otherwise it is computed exactly.
    The Markov column uses the measured 2r-th moment with r = floor(R / 2k).
    """
    spec = dict(spec or {})
    spec.pop("samples", None)
    system = polyrand_hypersystem(S, k, source, spec, seed)
    v = system.float_values()
    nonempty = np.array([bool(A) for A in system.index])
    centred = np.linalg.norm(v[nonempty].sum(axis=0), axis=1)
    sq = (np.abs(v[nonempty]) ** 2).sum(axis=(0, 2))
    sigma = float(np.sqrt(sq.max()))
    if sigma <= 0:
        raise ValueError("sigma unavailable: the non-constant part vanishes identically")
    r_markov = max(1, source.R // (2 * k)) if k > 0 else 1
    moment = float(np.mean(centred ** (2 * r_markov)))
    rng = np.random.default_rng(seed + 1)
    if trials is not None:
        draws = rng.integers(0, centred.size, size=trials)
        sample = centred[draws]
        n = trials
    else:
        sample = centred
        n = centred.size
    rows = []
    for lam in lambda_grid:
        hits = int((sample >= lam * sigma * (1 - 1e-12)).sum())
        low, high = _wilson(hits, n, confidence)
        bound = C**k * (math.exp(-c * k * lam ** (2 / k)) + math.exp(-c * source.R))
        markov = moment / (lam * sigma) ** (2 * r_markov) if lam > 0 else math.inf
        rows.append(
            {
                "lambda": float(lam),
                "empirical": hits / n,
                "bound": bound,
                "ci_low": low,
                "ci_high": high,
                "markov": markov,
                "sigma": sigma,
            }
        )
    return rows


def sharpness_product(n: int, k: int) -> Fraction:
    """P(|prod_i sum_j X_ij| >= n^k) for independent signs, via the exact law of each factor."""
    if n < 1 or k < 1:
        raise ValueError("n and k must be positive")
    if n * k > 24:
        raise ValueError("n*k exceeds 24")
    factor: dict[int, Fraction] = {}
    for ones in range(n + 1):
        factor[2 * ones - n] = Fraction(math.comb(n, ones), 2**n)
    law = {1: Fraction(1)}
    for _ in range(k):
        nxt: dict[int, Fraction] = {}
        for a, pa in law.items():
            for b, pb in factor.items():
                nxt[a * b] = nxt.get(a * b, Fraction(0)) + pa * pb
        law = nxt
    return sum((p for v, p in law.items() if abs(v) >= n**k), Fraction(0))


def sharpness_product_bruteforce(n: int, k: int) -> Fraction:
    """The same probability by walking all 2^(nk) sign patterns."""
    if n * k > 20:
        raise ValueError("n*k exceeds 20 for brute force")
    hits = 0
    for signs in itertools.product((-1, 1), repeat=n * k):
        prod = 1
        for i in range(k):
            prod *= sum(signs[i * n : (i + 1) * n])
        hits += abs(prod) >= n**k
    return Fraction(hits, 2 ** (n * k))


def _poly_values(p: int, R: int, points: Sequence[int]) -> np.ndarray:
    coeffs = np.array(list(itertools.product(range(p), repeat=R)), dtype=np.int64)
    vander = np.array([[pow(x, j, p) for x in points] for j in range(R)], dtype=np.int64)
    return (coeffs @ vander) % p


def sharpness_polynomial(p: int, R: int, budget: int = 10**6) -> tuple[Fraction, Fraction]:
    """(P(|sum_i (1_{P(i)=0} - 1/p)| = p - 1), P(P = 0)) over uniform polynomials of degree < R."""
    KWiseSource(p, R)
    if p**R > budget:
        raise ValueError(f"p^R = {p**R} exceeds budget {budget}")
    vals = _poly_values(p, R, list(range(1, p + 1)))
    zeros = (vals == 0).sum(axis=1)
    # |Z - 1| = p - 1 with Z zeros, multiplied through by p
    event = np.abs(p * zeros - p) == p * (p - 1)
    total = p**R
    return Fraction(int(event.sum()), total), Fraction(int((zeros == p).sum()), total)


def lagrange_bijection(p: int, R: int, points: Sequence[int] | None = None) -> bool:
    """Evaluation at R distinct points is a bijection from polynomials of degree < R onto F_p^R."""
    KWiseSource(p, R)
    choices = [tuple(points)] if points is not None else list(itertools.combinations(range(1, p + 1), R))
    for pts in choices:
        if len({x % p for x in pts}) != R:
            raise ValueError("evaluation points must be distinct modulo p")
        vals = _poly_values(p, R, pts)
        codes = (vals * (p ** np.arange(R))).sum(axis=1)
        if np.unique(codes).size != p**R:
            return False
    return True


def wiener_chaos_experiment(
    S: Sequence[int], coeffs: Mapping, p: float, trials: int, seed: int, C: float = 1.0
) -> dict:
    """Monte Carlo E||sum_A c_A prod_{s in A} g_s||^p with independent standard gaussians."""
    if p < 2:
        raise ValueError("p must be at least 2")
    S = sorted(S)
    col = {s: i for i, s in enumerate(S)}
    items = [(frozenset(A), np.atleast_1d(np.asarray(c, dtype=complex))) for A, c in coeffs.items()]
    k = max((len(A) for A, _ in items), default=0)
    energy = float(sum(np.sum(np.abs(c) ** 2) for _, c in items))
    bound = (C * p) ** (k * p / 2) * energy ** (p / 2)
    if k == 0:
        total = sum(c for _, c in items)
        moment = float(np.linalg.norm(total) ** p)
        return {"moment": moment, "se": 0.0, "bound": bound, "ratio": moment / bound if bound else 0.0,
                "measured_C": 0.0, "k": 0, "energy": energy}
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((trials, len(S)))
    hdim = items[0][1].size
    F = np.zeros((trials, hdim), dtype=complex)
    for A, c in items:
        mono = np.ones(trials)
        for s in A:
            mono = mono * g[:, col[s]]
        F += mono[:, None] * c[None, :]
    samples = np.linalg.norm(F, axis=1) ** p
    moment = float(samples.mean())
    se = float(samples.std(ddof=1) / math.sqrt(trials))
    measured = (moment / energy ** (p / 2)) ** (2 / (k * p)) / p if energy > 0 else 0.0
    return {"moment": moment, "se": se, "bound": bound, "ratio": moment / bound if bound else 0.0,
            "measured_C": measured, "k": k, "energy": energy}


# --- vector-valued extension ---------------------------------------------------


def _vec_norm_p(X: np.ndarray, p: float) -> np.ndarray:
    """||(sum_h |X[..., i, h]|^2)^{1/2}||_{l^p} along axis -2."""
    mags = np.sqrt((np.abs(X) ** 2).sum(axis=-1))
    return (mags**p).sum(axis=-1) ** (1.0 / p)


def _duality_map(Y: np.ndarray, p: float) -> np.ndarray:
    mags = np.sqrt((np.abs(Y) ** 2).sum(axis=-1, keepdims=True))
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(mags > 0, mags ** (p - 2) * Y, 0)
    return out


def _power_refine(T: np.ndarray, X: np.ndarray, p: float, steps: int) -> np.ndarray:
    """Nonlinear power iteration for the l^p -> l^p norm; X has shape (batch, n, hdim)."""
    q = p / (p - 1) if p > 1 else None
    best = X
    for _ in range(steps):
        if q is None:
            break
        Y = np.einsum("ij,bjh->bih", T, best)
        Z = np.einsum("ji,bjh->bih", T.conj(), _duality_map(Y, p))
        nxt = _duality_map(Z, q)
        norms = _vec_norm_p(nxt, p)
        ok = norms > 0
        nxt[ok] = nxt[ok] / norms[ok, None, None]
        nxt[~ok] = best[~ok]
        best = nxt
    return best


def _ratios(T: np.ndarray, X: np.ndarray, p: float) -> np.ndarray:
    num = _vec_norm_p(np.einsum("ij,bjh->bih", T, X), p)
    den = _vec_norm_p(X, p)
    return np.where(den > 0, num / np.where(den > 0, den, 1), 0.0)


def mz_vector_check(T, p: float, hdim: int, trials: int, seed: int, tol: float = 1e-9, refine: int = 50) -> dict:
    """Compare H-valued and scalar operator norms of T on l^p (lower bounds for p != 2)."""
    T = np.asarray(T, dtype=complex)
    if p <= 0:
        raise ValueError("p must be positive")
    rng = np.random.default_rng(seed)
    n_in = T.shape[1]
    if p == 2:
        scalar = float(np.linalg.norm(T, 2))
        vector_exact = float(np.linalg.norm(np.kron(T, np.eye(hdim)), 2))
        X = rng.standard_normal((1, n_in, hdim)) + 1j * rng.standard_normal((1, n_in, hdim))
        for _ in range(max(refine, 200)):
            X = np.einsum("ji,bjh->bih", T.conj(), np.einsum("ij,bjh->bih", T, X))
            X = X / _vec_norm_p(X, 2)[:, None, None]
        measured = float(_ratios(T, X, 2)[0])
        ok = abs(vector_exact - scalar) <= tol * max(scalar, 1) and abs(measured - scalar) <= 1e-6 * max(scalar, 1)
        return {"mode": "exact", "scalar": scalar, "vector": vector_exact, "vector_measured": measured,
                "passed": bool(ok), "trials": 1}
    batch = min(trials, 4096)
    vec_best, X_best = 0.0, None
    done = 0
    while done < trials:
        m = min(batch, trials - done)
        X = rng.standard_normal((m, n_in, hdim)) + 1j * rng.standard_normal((m, n_in, hdim))
        rat = _ratios(T, X, p)
        i = int(np.argmax(rat))
        if rat[i] > vec_best:
            vec_best, X_best = float(rat[i]), X[i : i + 1]
        done += m
    X_ref = _power_refine(T, X_best, p, refine)
    vec_best = max(vec_best, float(_ratios(T, X_ref, p)[0]))
    # scalar search: random starts, plus gaussian projections of the best vector input
    done, sc_best = 0, 0.0
    starts = []
    while done < trials:
        m = min(batch, trials - done)
        x = rng.standard_normal((m, n_in, 1)) + 1j * rng.standard_normal((m, n_in, 1))
        rat = _ratios(T, x, p)
        i = int(np.argmax(rat))
        sc_best = max(sc_best, float(rat[i]))
        starts.append(x[i : i + 1])
        done += m
    g = rng.standard_normal((2048, hdim)) + 1j * rng.standard_normal((2048, hdim))
    proj = np.einsum("jh,bh->bj", X_ref[0], g)[:, :, None]
    rat = _ratios(T, proj, p)
    starts.append(proj[int(np.argmax(rat))][None])
    sc_best = max(sc_best, float(rat.max()))
    refined = _power_refine(T, np.concatenate(starts), p, refine)
    sc_best = max(sc_best, float(_ratios(T, refined, p).max()))
    return {"mode": "empirical", "scalar": sc_best, "vector": vec_best,
            "passed": bool(vec_best <= (1 + tol) * sc_best), "trials": trials}
