"""Fourier analysis on (Z/LZ)^d, major arc multipliers and the orthogonality checks built on them.

Conventions: ``dft(f)(xi) = sum_n f(n) e(n . xi)`` on the grid xi in (1/L)Z^d/Z^d,
with inverse ``f(n) = L^-d sum_xi F(xi) e(-n . xi)``.  Space carries counting
measure, so ``sum_n |f|^2 = L^-d sum_xi |F|^2``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Mapping, Sequence

import numpy as np

from .arcs import (
    MajorArcParams,
    is_good,
    min_separation,
    sigma_complement,
    sigma_exact,
    sigma_leq,
    stratum_of,
    subsets_upto,
)
from .exact import TorusPoint
from .sunflower import is_sunflower
from .superortho import FiniteMeasureSpace, Hypersystem, SuperorthoResult, check_superortho, nonce_mask

__all__ = [
    "CyclicSignal",
    "BoxSymbol",
    "PlateauBump",
    "MajorArcSystem",
    "NotGoodError",
    "dft",
    "idft",
    "direct_dft",
    "grid_index",
    "op_grid",
    "op_m_alpha",
    "op_m_sigma",
    "op_m_sigma_adelic",
    "sigma_multiplier",
    "random_band_limited",
    "pure_tone_system",
    "verify_denominator_orthogonality",
    "verify_numerator_orthogonality",
    "representation_count",
    "ortho_apply_functionals",
    "rubio_check",
    "msw_check",
    "lp_norm",
]


class NotGoodError(ValueError):
    """The parameter set is not (r, c)-good, so the orthogonality statements do not apply."""


@dataclass(frozen=True)
class CyclicSignal:
    L: int
    d: int
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=complex)
        if vals.shape == (self.L,) * self.d:
            vals = vals[..., None]
        if vals.shape[:-1] != (self.L,) * self.d:
            raise ValueError(f"values shape {vals.shape} does not match L={self.L}, d={self.d}")
        object.__setattr__(self, "values", vals)

    @property
    def hdim(self) -> int:
        return self.values.shape[-1]

    @classmethod
    def zeros(cls, L: int, d: int, hdim: int = 1) -> "CyclicSignal":
        return cls(L, d, np.zeros((L,) * d + (hdim,), dtype=complex))

    def __add__(self, other: "CyclicSignal") -> "CyclicSignal":
        return CyclicSignal(self.L, self.d, self.values + other.values)

    def pointwise_norm(self) -> np.ndarray:
        return np.sqrt((np.abs(self.values) ** 2).sum(axis=-1))

    def norm(self, p: float = 2) -> float:
        return lp_norm(self.pointwise_norm(), p)


def lp_norm(mags: np.ndarray, p: float, weight: float = 1.0) -> float:
    if math.isinf(p):
        return float(mags.max(initial=0.0))
    return float((weight * (mags**p).sum()) ** (1.0 / p))


def _space_axes(d: int) -> tuple[int, ...]:
    return tuple(range(d))


def dft(f: CyclicSignal) -> np.ndarray:
    axes = _space_axes(f.d)
    return np.fft.ifftn(f.values, axes=axes) * f.L**f.d


def idft(F: np.ndarray, L: int, d: int) -> CyclicSignal:
    axes = _space_axes(d)
    return CyclicSignal(L, d, np.fft.fftn(F, axes=axes) / L**d)


def direct_dft(f: CyclicSignal) -> np.ndarray:
    """The defining double sum, O(L^{2d}); for checking the FFT path."""
    L, d = f.L, f.d
    pts = np.array(list(itertools.product(range(L), repeat=d)))
    phase = np.exp(2j * np.pi * (pts @ pts.T) / L)
    flat = f.values.reshape(L**d, -1)
    return (phase @ flat).reshape(f.values.shape)


def grid_index(alpha: TorusPoint, L: int) -> tuple[int, ...]:
    if L % alpha.denominator:
        raise ValueError(f"frequency {alpha} is not on the grid (1/{L})Z")
    return alpha.residues(L)


# --- symbols -------------------------------------------------------------------


@dataclass(frozen=True)
class BoxSymbol:
    """Symbol values m(t/L) for integer offsets |t_i| <= T, stored as a (2T+1)^d table."""

    L: int
    d: int
    T: int
    table: np.ndarray

    def __post_init__(self):
        tab = np.asarray(self.table, dtype=complex)
        if tab.shape != (2 * self.T + 1,) * self.d:
            raise ValueError("table shape does not match T and d")
        if 2 * self.T + 1 > self.L:
            raise ValueError("box wider than the frequency grid")
        object.__setattr__(self, "table", tab)

    @staticmethod
    def halfwidth(eps: Fraction, L: int) -> int:
        return math.floor(Fraction(eps) * L)

    @classmethod
    def from_function(cls, func: Callable, eps, L: int, d: int) -> "BoxSymbol":
        """func receives an array of shape (..., d) of offsets theta and returns values."""
        T = cls.halfwidth(Fraction(eps), L)
        grid = np.stack(np.meshgrid(*([np.arange(-T, T + 1) / L] * d), indexing="ij"), axis=-1)
        return cls(L, d, T, func(grid))

    @classmethod
    def constant(cls, value, eps, L: int, d: int) -> "BoxSymbol":
        T = cls.halfwidth(Fraction(eps), L)
        return cls(L, d, T, np.full((2 * T + 1,) * d, value, dtype=complex))

    @classmethod
    def random(cls, eps, L: int, d: int, rng) -> "BoxSymbol":
        T = cls.halfwidth(Fraction(eps), L)
        shape = (2 * T + 1,) * d
        return cls(L, d, T, rng.standard_normal(shape) + 1j * rng.standard_normal(shape))

    def conj(self) -> "BoxSymbol":
        return BoxSymbol(self.L, self.d, self.T, self.table.conj())

    def __mul__(self, other: "BoxSymbol") -> "BoxSymbol":
        if (self.L, self.d) != (other.L, other.d):
            raise ValueError("symbols live on different grids")
        T = min(self.T, other.T)
        a = self.table[(slice(self.T - T, self.T + T + 1),) * self.d]
        b = other.table[(slice(other.T - T, other.T + T + 1),) * self.d]
        return BoxSymbol(self.L, self.d, T, a * b)

    def place(self, alpha: TorusPoint) -> np.ndarray:
        """The grid multiplier equal to m(xi - alpha) on the arc around alpha, zero elsewhere."""
        centre = grid_index(alpha, self.L)
        M = np.zeros((self.L,) * self.d, dtype=complex)
        idx = np.ix_(*[(c + np.arange(-self.T, self.T + 1)) % self.L for c in centre])
        M[idx] += self.table
        return M


def op_grid(M: np.ndarray, f: CyclicSignal) -> CyclicSignal:
    """Multiply the spectrum of f by a full-grid multiplier."""
    return idft(dft(f) * M[..., None], f.L, f.d)


def op_m_alpha(m: BoxSymbol, alpha: TorusPoint, f: CyclicSignal) -> CyclicSignal:
    if (m.L, m.d) != (f.L, f.d):
        raise ValueError("symbol and signal live on different grids")
    return op_grid(m.place(alpha), f)


def op_m_sigma(m: BoxSymbol, sigma: Sequence[TorusPoint], f: CyclicSignal) -> CyclicSignal:
    out = CyclicSignal.zeros(f.L, f.d, f.hdim)
    for alpha in sigma:
        out = out + op_m_alpha(m, alpha, f)
    return out


def op_m_sigma_adelic(m_by_alpha: Mapping[TorusPoint, BoxSymbol], sigma: Sequence[TorusPoint], f: CyclicSignal) -> CyclicSignal:
    out = CyclicSignal.zeros(f.L, f.d, f.hdim)
    for alpha in sigma:
        out = out + op_m_alpha(m_by_alpha[alpha], alpha, f)
    return out


def sigma_multiplier(m, sigma: Sequence[TorusPoint], L: int, d: int) -> np.ndarray:
    """sum_alpha m_alpha(xi - alpha) as one grid array; m is a BoxSymbol or a mapping alpha -> BoxSymbol."""
    M = np.zeros((L,) * d, dtype=complex)
    for alpha in sigma:
        sym = m[alpha] if isinstance(m, Mapping) else m
        M += sym.place(alpha)
    return M


# --- bump profile ----------------------------------------------------------------


def _smooth_step(x: np.ndarray) -> np.ndarray:
    """C-infinity step: 0 for x <= 0, 1 for x >= 1."""
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", over="ignore"):
        a = np.where(x > 0, np.exp(-1.0 / np.where(x > 0, x, 1.0)), 0.0)
        b = np.where(x < 1, np.exp(-1.0 / np.where(x < 1, 1 - x, 1.0)), 0.0)
    return a / (a + b)


@dataclass(frozen=True)
class PlateauBump:
    """Even bump equal to ``height`` on [-plateau, plateau] and vanishing outside [-support, support]."""

    support: float
    plateau: float = 1.0
    height: float = 1.0
    support_exact: Fraction | None = None

    @classmethod
    def for_c(cls, c) -> "PlateauBump":
        c = Fraction(c)
        s = (1 + c) / (2 * c)
        return cls(float(s), support_exact=s)

    @classmethod
    def from_config(cls, cfg: Mapping, c) -> "PlateauBump":
        support = cfg.get("support", "auto")
        s = cls.for_c(c).support_exact if support == "auto" else Fraction(support)
        return cls(float(s), float(Fraction(cfg.get("plateau", 1))), float(Fraction(cfg.get("height", 1))), s)

    def __call__(self, t) -> np.ndarray:
        a = np.abs(np.asarray(t, dtype=float))
        if self.support <= self.plateau:
            return np.where(a <= self.plateau, self.height, 0.0)
        return self.height * _smooth_step((self.support - a) / (self.support - self.plateau))

    def problems(self, c) -> list[str]:
        """Violations of the required shape: 1 on [-1, 1], support inside [-c'/c, c'/c], values in [0, 1]."""
        limit = PlateauBump.for_c(c).support
        out = []
        t = np.linspace(-1, 1, 2001)
        if not np.allclose(self(t), 1.0, atol=0, rtol=0):
            out.append("profile is not identically 1 on [-1, 1]")
        outside = np.linspace(limit, limit + 2, 2001)
        if np.any(self(outside) != 0) or np.any(self(-outside) != 0):
            out.append(f"profile does not vanish outside [-{limit:.6g}, {limit:.6g}]")
        grid = np.linspace(-limit - 1, limit + 1, 4001)
        vals = self(grid)
        if np.any(vals < 0) or np.any(vals > 1):
            out.append("profile leaves [0, 1]")
        if not np.array_equal(vals, self(-grid)):
            out.append("profile is not even")
        return out

    def symbol(self, eps, L: int, d: int) -> BoxSymbol:
        """phi(xi) = prod_j phi0(xi_j / eps) on the grid box that holds its support."""
        eps = Fraction(eps)
        s = self.support_exact if self.support_exact is not None else Fraction(self.support)
        T = math.floor(s * eps * L)
        T = min(T, (L - 1) // 2)
        offs = np.arange(-T, T + 1) / L
        vals = self(offs / float(eps))
        table = vals
        for _ in range(d - 1):
            table = np.multiply.outer(table, vals)
        return BoxSymbol(L, d, T, table)


# --- major arc systems ---------------------------------------------------------


@dataclass
class MajorArcSystem:
    params: MajorArcParams
    L: int
    signals: dict
    amplitudes: dict | None = None

    @property
    def d(self) -> int:
        return self.params.d

    @property
    def hdim(self) -> int:
        return next(iter(self.signals.values())).hdim

    @property
    def T(self) -> int:
        return BoxSymbol.halfwidth(self.params.eps, self.L)

    def sum_over(self, points) -> CyclicSignal:
        out = np.zeros((self.L,) * self.d + (self.hdim,), dtype=complex)
        for alpha in points:
            out += self.signals[alpha].values
        return CyclicSignal(self.L, self.d, out)

    def total(self) -> CyclicSignal:
        return self.sum_over(self.signals)


def _check_grid(params: MajorArcParams, L: int) -> None:
    if L % params.Q_S:
        raise ValueError(f"L={L} is not a multiple of Q_S={params.Q_S}")
    T = BoxSymbol.halfwidth(params.eps, L)
    if 2 * T + 1 > L:
        raise ValueError("arc wider than the grid")


def random_band_limited(params: MajorArcParams, L: int, hdim: int = 1, seed: int = 0) -> MajorArcSystem:
    """Each f_alpha has random spectrum on the grid points of alpha + [-eps, eps]^d."""
    _check_grid(params, L)
    rng = np.random.default_rng(seed)
    T = BoxSymbol.halfwidth(params.eps, L)
    signals = {}
    for alpha in sigma_leq(params):
        shape = (2 * T + 1,) * params.d + (hdim,)
        coeffs = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
        F = np.zeros((L,) * params.d + (hdim,), dtype=complex)
        centre = grid_index(alpha, L)
        idx = np.ix_(*[(c + np.arange(-T, T + 1)) % L for c in centre])
        F[idx] = coeffs
        signals[alpha] = idft(F, L, params.d)
    return MajorArcSystem(params, L, signals)


def pure_tone_system(params: MajorArcParams, L: int, hdim: int = 1, seed: int = 0, amp_range: int = 3) -> MajorArcSystem:
    """f_alpha(n) = c_alpha e(-n . alpha) with integer amplitude vectors c_alpha."""
    _check_grid(params, L)
    rng = np.random.default_rng(seed)
    pts = np.stack(np.meshgrid(*([np.arange(L)] * params.d), indexing="ij"), axis=-1)
    signals, amps = {}, {}
    for alpha in sigma_leq(params):
        c = rng.integers(-amp_range, amp_range + 1, size=hdim)
        while not c.any():
            c = rng.integers(-amp_range, amp_range + 1, size=hdim)
        a = np.array(grid_index(alpha, L))
        phase = np.exp(-2j * np.pi * (pts @ a) / L)
        signals[alpha] = CyclicSignal(L, params.d, phase[..., None] * c[None, :])
        amps[alpha] = tuple(int(x) for x in c)
    return MajorArcSystem(params, L, signals, amps)


def _require_good(params: MajorArcParams, r: int, c) -> None:
    if not is_good(params, r, c):
        raise NotGoodError(f"parameters are not ({r}, {c})-good: eps={params.eps}")


def stratum_hypersystem(system: MajorArcSystem) -> Hypersystem:
    """The hypersystem (f_{Sigma_A})_{A in binom(S, <= k)} on (Z/LZ)^d with counting measure."""
    params = system.params
    index = subsets_upto(params.S, params.k)
    vals = []
    for A in index:
        f = system.sum_over(sigma_exact(params, A))
        vals.append(f.values.reshape(-1, system.hdim))
    space = FiniteMeasureSpace(np.ones(system.L**system.d))
    return Hypersystem(tuple(index), np.stack(vals), space)


def _group_ring(system: MajorArcSystem, A, B, Q: int) -> dict:
    """sum over alpha in Sigma_A, beta in Sigma_B of <c_alpha, c_beta> at the residue alpha - beta."""
    params = system.params
    out: dict = {}
    for a in sigma_exact(params, A):
        ra = a.residues(Q)
        ca = system.amplitudes[a]
        for b in sigma_exact(params, B):
            w = sum(x * y for x, y in zip(ca, system.amplitudes[b]))
            if w:
                key = tuple((x - y) % Q for x, y in zip(ra, b.residues(Q)))
                out[key] = out.get(key, 0) + w
    return out


def _convolve(u: dict, v: dict, Q: int) -> dict:
    out: dict = {}
    for ka, wa in u.items():
        for kb, wb in v.items():
            key = tuple((x + y) % Q for x, y in zip(ka, kb))
            out[key] = out.get(key, 0) + wa * wb
    return out


def _exact_denominator_check(system: MajorArcSystem, r: int) -> SuperorthoResult:
    if system.amplitudes is None:
        raise ValueError("exact mode needs a pure-tone system with integer amplitudes")
    params = system.params
    Q = params.Q_S
    index = subsets_upto(params.S, params.k)
    mask = nonce_mask(index, r)
    ring = {}
    worst, worst_tuple, count = 0, None, 0
    zero = (0,) * params.d
    for tup in zip(*np.nonzero(mask)):
        count += 1
        acc = {zero: 1}
        for j in range(r):
            key = (tup[j], tup[r + j])
            if key not in ring:
                ring[key] = _group_ring(system, index[key[0]], index[key[1]], Q)
            acc = _convolve(acc, ring[key], Q)
        value = abs(acc.get(zero, 0)) * system.L**params.d
        if value > worst:
            worst, worst_tuple = value, tuple(sorted(index[i]) for i in tup)
    return SuperorthoResult(float(worst), Fraction(worst), count, worst == 0, worst_tuple)


def verify_denominator_orthogonality(system: MajorArcSystem, r: int, c, tol: float = 1e-9, mode: str = "float") -> SuperorthoResult:
    """Superorthogonality of (f_{Sigma_A})_A; refuses parameter sets that are not (r, c)-good."""
    _require_good(system.params, r, c)
    if mode == "exact":
        return _exact_denominator_check(system, r)
    if mode != "float":
        raise ValueError(f"unknown mode {mode!r}")
    return check_superortho(stratum_hypersystem(system), r, tol)


def verify_numerator_orthogonality(system: MajorArcSystem, members: Sequence, c, tol: float = 1e-9) -> dict:
    """Pairwise orthogonality of the tensor products prod_i f_{Sigma_{A0} + alpha_i}."""
    members = [frozenset(A) for A in members]
    r = len(members)
    core = is_sunflower(members)
    if core is None:
        raise ValueError(f"{[sorted(A) for A in members]} is not a sunflower")
    params = system.params
    _require_good(params, r, c)
    base = sigma_exact(params, core)
    petal_sets = [sigma_exact(params, A - core) for A in members]
    cosets = {}
    for pts in petal_sets:
        for alpha in pts:
            if alpha not in cosets:
                cosets[alpha] = system.sum_over([alpha + a0 for a0 in base]).values.reshape(-1, system.hdim)
    tuples = list(itertools.product(*[list(p) for p in petal_sets]))
    vecs = []
    for tup in tuples:
        prod = cosets[tup[0]]
        for alpha in tup[1:]:
            prod = np.einsum("ni,nj->nij", prod, cosets[alpha]).reshape(prod.shape[0], -1)
        vecs.append(prod.ravel())
    V = np.array(vecs)
    G = V.conj() @ V.T
    diag = np.sqrt(np.abs(np.diag(G)))
    scale = np.outer(diag, diag)
    off = ~np.eye(len(tuples), dtype=bool)
    if off.any():
        rel = np.abs(G[off]) / np.where(scale[off] > 0, scale[off], 1.0)
        max_rel = float(rel.max())
    else:
        max_rel = 0.0
    return {"core": sorted(core), "n_functions": len(tuples), "max_violation": max_rel,
            "passed": max_rel <= tol}


def representation_count(params: MajorArcParams, beta: TorusPoint) -> int:
    """Number of (A0, alpha0 in Sigma_{A0}, alpha in Sigma_{(A0)}) with alpha0 + alpha = beta."""
    B = stratum_of(params, beta)
    if B is None or len(B) > params.k:
        return 0
    return 2 ** len(B)


def representation_count_bruteforce(params: MajorArcParams, beta: TorusPoint) -> int:
    count = 0
    for A0 in subsets_upto(params.S, params.k):
        comp = sigma_complement(params, A0).as_set()
        for a0 in sigma_exact(params, A0):
            if beta - a0 in comp:
                count += 1
    return count


def _coset_families(params: MajorArcParams):
    for A0 in subsets_upto(params.S, params.k):
        base = list(sigma_exact(params, A0))
        yield A0, base, list(sigma_complement(params, A0))


def ortho_apply_functionals(system: MajorArcSystem, r: int) -> dict:
    """lhs = ||f_{Sigma_{<=k}}||_{2r} and the coset square-function functional."""
    params = system.params
    lhs = system.total().norm(2 * r)
    acc = 0.0
    for A0, base, comp in _coset_families(params):
        sq = np.zeros((system.L,) * system.d)
        for alpha in comp:
            g = system.sum_over([alpha + a0 for a0 in base])
            sq += g.pointwise_norm() ** 2
        acc += float((sq**r).sum())
    mid = acc ** (1 / (2 * r))
    return {"lhs": lhs, "mid": mid,
            "lhs_over_mid": lhs / mid if mid > 0 else 0.0,
            "mid_over_lhs": mid / lhs if lhs > 0 else 0.0}


def rubio_check(params: MajorArcParams, c, profile: PlateauBump, p: float, f: CyclicSignal) -> dict:
    """Coset square function of Op_{phi; alpha + Sigma_{A0}} f against ||f||_p."""
    if not (p >= 2):
        raise ValueError("p must lie in [2, inf]")
    problems = profile.problems(c)
    if problems:
        raise ValueError("invalid bump profile: " + "; ".join(problems))
    _check_grid(params, f.L)
    phi = profile.symbol(params.eps, f.L, params.d)
    pts = sigma_leq(params)
    # widened arcs must stay disjoint on the grid
    if len(pts) > 1 and 2 * phi.T >= min_separation(params) * f.L:
        raise ValueError("widened arcs overlap on the grid")
    F = dft(f)
    total = 0.0
    sup = 0.0
    for A0, base, comp in _coset_families(params):
        sq = np.zeros((f.L,) * f.d)
        for alpha in comp:
            M = sigma_multiplier(phi, [alpha + a0 for a0 in base], f.L, f.d)
            g = idft(F * M[..., None], f.L, f.d)
            sq += g.pointwise_norm() ** 2
        mags = np.sqrt(sq)
        if math.isinf(p):
            sup = max(sup, float(mags.max()))
        else:
            total += float((mags**p).sum())
    lhs = sup if math.isinf(p) else total ** (1 / p)
    rhs = f.norm(p)
    out = {"lhs": lhs, "rhs": rhs, "ratio": lhs / rhs if rhs > 0 else 0.0}
    if p == 2:
        out["bound"] = 2 ** (params.k / 2)
        out["passed"] = lhs <= out["bound"] * rhs * (1 + 1e-12)
    return out


def _circulant_norm(M: np.ndarray, L: int, d: int) -> float:
    n = L**d
    basis = np.eye(n, dtype=complex).reshape((n,) + (L,) * d).transpose(tuple(range(1, d + 1)) + (0,))
    cols = op_grid(M, CyclicSignal(L, d, basis)).values.reshape(n, n)
    return float(np.linalg.norm(cols, 2))


def _boyd_lower_bound(apply, apply_adj, n_shape, p: float, trials: int, rng, steps: int = 30) -> float:
    best = 0.0
    q = p / (p - 1) if p > 1 else None
    for _ in range(trials):
        x = rng.standard_normal(n_shape) + 1j * rng.standard_normal(n_shape)
        for _ in range(steps if q else 0):
            y = apply(x)
            z = apply_adj(np.abs(y) ** (p - 2) * y)
            nxt = np.abs(z) ** (q - 2) * z
            nn = np.linalg.norm(nxt.ravel(), p)
            if nn == 0:
                break
            x = nxt / nn
        num = np.linalg.norm(apply(x).ravel(), p)
        den = np.linalg.norm(x.ravel(), p)
        if den > 0:
            best = max(best, num / den)
    return float(best)


def msw_check(m: BoxSymbol, p: float, trials: int, seed: int, oversample: int = 8) -> dict:
    """Operator norms of Op_{m;0} on l^p(Z/LZ) and of Op_m on a refined model of L^p(R)."""
    if m.T / m.L > 0.5:
        raise ValueError("symbol support leaves the box [-1/2, 1/2]^d")
    L, d = m.L, m.d
    zero = TorusPoint.zero(d)
    M = m.place(zero)
    grid_max = float(np.abs(m.table).max(initial=0.0))
    if p == 2:
        disc = _circulant_norm(M, L, d) if L**d <= 2048 else float(np.abs(M).max())
        return {"p": 2, "discrete": disc, "grid_max": grid_max, "continuum": grid_max,
                "passed": abs(disc - grid_max) <= 1e-12 * max(1.0, grid_max)}
    rng = np.random.default_rng(seed)

    def apply(x):
        return np.fft.fftn(np.fft.ifftn(x) * M)

    def apply_adj(x):
        return np.fft.fftn(np.fft.ifftn(x) * M.conj())

    disc = _boyd_lower_bound(apply, apply_adj, (L,) * d, p, trials, rng)
    # refined model: spacing 1/oversample on a period-L box, same frequency grid spacing 1/L
    Lf = L * oversample
    Mf = np.zeros((Lf,) * d, dtype=complex)
    idx = np.ix_(*[np.arange(-m.T, m.T + 1) % Lf for _ in range(d)])
    Mf[idx] = m.table

    def apply_f(x):
        return np.fft.fftn(np.fft.ifftn(x) * Mf)

    def apply_f_adj(x):
        return np.fft.fftn(np.fft.ifftn(x) * Mf.conj())

    cont = _boyd_lower_bound(apply_f, apply_f_adj, (Lf,) * d, p, trials, rng)
    return {"p": p, "discrete_lower": disc, "continuum_lower": cont, "grid_max": grid_max,
            "ratio": disc / cont if cont > 0 else 0.0, "trials": trials}
