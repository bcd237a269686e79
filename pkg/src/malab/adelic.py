"""Finite model of the adelic integers: (Z/WZ)^d x (Z/QZ)^d with the sampling and interpolation maps.

Measure: counting on the first factor, Q^-d times counting on the second.
Spectrum: ``G(theta, alpha) = Q^-d sum_{x,y} F(x,y) e(x.theta + y.alpha)`` with
inverse ``F(x,y) = W^-d sum G(theta, alpha) e(-x.theta - y.alpha)``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from .arcs import MajorArcParams, sigma_leq
from .exact import TorusPoint, format_rational, parse_rational, torsion_points, torus_dist_linf
from .harmonic import (
    BoxSymbol,
    CyclicSignal,
    MajorArcSystem,
    PlateauBump,
    _boyd_lower_bound,
    _require_good,
    dft,
    grid_index,
    idft,
    op_m_sigma,
    op_m_sigma_adelic,
    ortho_apply_functionals,
    sigma_multiplier,
)

__all__ = [
    "AdelicSignal",
    "FreqBox",
    "AliasingError",
    "SupportError",
    "pi_project",
    "sample",
    "interpolate",
    "adelic_dft",
    "adelic_idft",
    "adelic_op",
    "random_adelic",
    "random_admissible",
    "verify_unitarity",
    "qss_ratio",
    "sam_identity_check",
    "arith_limit_functionals",
    "projection_norm_probe",
    "adelic_factorization_check",
    "zhat_pairing",
    "zmod_pairing",
]


class AliasingError(ValueError):
    pass


class SupportError(ValueError):
    pass


@dataclass(frozen=True)
class AdelicSignal:
    W: int
    Q: int
    d: int
    values: np.ndarray

    def __post_init__(self):
        if self.W % self.Q:
            raise ValueError(f"Q={self.Q} must divide W={self.W}")
        vals = np.asarray(self.values, dtype=complex)
        shape = (self.W,) * self.d + (self.Q,) * self.d
        if vals.shape == shape:
            vals = vals[..., None]
        if vals.shape[:-1] != shape:
            raise ValueError(f"values shape {vals.shape} does not match W={self.W}, Q={self.Q}, d={self.d}")
        object.__setattr__(self, "values", vals)

    @property
    def hdim(self) -> int:
        return self.values.shape[-1]

    def norm(self, p: float = 2) -> float:
        mags = np.sqrt((np.abs(self.values) ** 2).sum(axis=-1))
        if math.isinf(p):
            return float(mags.max(initial=0.0))
        return float((mags**p).sum() / self.Q**self.d) ** (1.0 / p)


@dataclass(frozen=True)
class FreqBox:
    """The set [-eps, eps]^d x sigma of continuous and arithmetic frequencies."""

    eps: Fraction
    sigma: tuple[TorusPoint, ...]

    def __post_init__(self):
        eps = parse_rational(self.eps) if isinstance(self.eps, str) else Fraction(self.eps)
        if eps <= 0:
            raise ValueError("eps must be positive")
        sigma = tuple(sorted(set(self.sigma)))
        if not sigma:
            raise ValueError("sigma must be nonempty")
        if len({a.dim for a in sigma}) != 1:
            raise ValueError("sigma mixes dimensions")
        object.__setattr__(self, "eps", eps)
        object.__setattr__(self, "sigma", sigma)

    @property
    def d(self) -> int:
        return self.sigma[0].dim

    @property
    def Q(self) -> int:
        return math.lcm(*(a.denominator for a in self.sigma))

    def is_nonaliasing(self) -> bool:
        """Distinct frequencies are more than 2 eps apart and eps < 1/2."""
        if 2 * self.eps >= 1:
            return False
        return all(torus_dist_linf(a, b) > 2 * self.eps for a, b in itertools.combinations(self.sigma, 2))

    def halfwidth(self, W: int) -> int:
        return math.floor(self.eps * W)

    def require_nonaliasing(self) -> None:
        if not self.is_nonaliasing():
            raise AliasingError(f"frequency box with eps={format_rational(self.eps)} aliases")

    def to_json(self) -> dict:
        return {"eps": format_rational(self.eps), "sigma": [a.to_json() for a in self.sigma]}

    @classmethod
    def from_json(cls, data: Mapping) -> "FreqBox":
        return cls(parse_rational(data["eps"]), tuple(TorusPoint.from_json(a) for a in data["sigma"]))

    @classmethod
    def for_params(cls, params: MajorArcParams, eps=None) -> "FreqBox":
        return cls(params.eps if eps is None else Fraction(eps), tuple(sigma_leq(params)))

    @classmethod
    def shannon(cls, Q: int, c, d: int = 1) -> "FreqBox":
        return cls(Fraction(c) / Q, tuple(torsion_points(Q, d)))


def pi_project(theta: TorusPoint, alpha: TorusPoint) -> TorusPoint:
    return alpha + theta


def _offsets(T: int, d: int) -> np.ndarray:
    return np.array(list(itertools.product(range(-T, T + 1), repeat=d)), dtype=np.int64).reshape(-1, d)


def _box_index(box: FreqBox, W: int, Q: int):
    """Grid indices (theta index mod W, alpha residues mod Q, image index mod W) of every point of the box."""
    T = box.halfwidth(W)
    if 2 * T + 1 > W:
        raise ValueError("continuous box wider than the grid")
    offs = _offsets(T, box.d)
    alphas = np.array([a.residues(Q) for a in box.sigma], dtype=np.int64)
    step = W // Q
    th = np.repeat(offs[None, :, :], len(alphas), axis=0) % W
    al = np.repeat(alphas[:, None, :], len(offs), axis=1)
    img = (al * step + th) % W
    return th.reshape(-1, box.d), al.reshape(-1, box.d), img.reshape(-1, box.d)


def _check_box(box: FreqBox, W: int, Q: int) -> None:
    if Q % box.Q:
        raise ValueError(f"arithmetic frequencies need denominators dividing Q={Q}")
    if W % Q:
        raise ValueError(f"Q={Q} must divide W={W}")


def adelic_dft(F: AdelicSignal) -> np.ndarray:
    axes = tuple(range(2 * F.d))
    return np.fft.ifftn(F.values, axes=axes) * F.W**F.d


def adelic_idft(G: np.ndarray, W: int, Q: int, d: int) -> AdelicSignal:
    axes = tuple(range(2 * d))
    return AdelicSignal(W, Q, d, np.fft.fftn(G, axes=axes) / W**d)


def sample(F: AdelicSignal) -> CyclicSignal:
    """f(n) = F(n mod W, n mod Q)."""
    n = np.arange(F.W)
    grids = np.meshgrid(*([n] * F.d), indexing="ij")
    idx = tuple(grids) + tuple(g % F.Q for g in grids)
    return CyclicSignal(F.W, F.d, F.values[idx])


def _support_mask(box: FreqBox, W: int, Q: int) -> np.ndarray:
    _, _, img = _box_index(box, W, Q)
    mask = np.zeros((W,) * box.d, dtype=bool)
    mask[tuple(img.T)] = True
    return mask


def interpolate(f: CyclicSignal, box: FreqBox, Q: int | None = None, project: bool = False, tol: float = 1e-12) -> AdelicSignal:
    """The adelic signal with spectrum f^(alpha + theta) on the box and zero elsewhere."""
    Q = box.Q if Q is None else Q
    W = f.L
    _check_box(box, W, Q)
    box.require_nonaliasing()
    spec = dft(f)
    mask = _support_mask(box, W, Q)
    outside = np.abs(spec[~mask]).max(initial=0.0)
    scale = np.abs(spec).max(initial=0.0)
    if outside > tol * max(scale, 1e-300) and not project:
        raise SupportError("signal has Fourier mass outside the frequency box; pass project=True to discard it")
    th, al, img = _box_index(box, W, Q)
    G = np.zeros((W,) * box.d + (Q,) * box.d + (f.hdim,), dtype=complex)
    G[tuple(th.T) + tuple(al.T)] = spec[tuple(img.T)]
    return adelic_idft(G, W, Q, box.d)


def adelic_op(F: AdelicSignal, m, sigma: Sequence[TorusPoint]) -> AdelicSignal:
    """Multiply the adelic spectrum by m_alpha(theta) 1_{alpha in sigma}; m is a BoxSymbol or a mapping alpha -> BoxSymbol."""
    G = adelic_dft(F)
    mult = np.zeros((F.W,) * F.d + (F.Q,) * F.d, dtype=complex)
    for alpha in sigma:
        sym = m[alpha] if isinstance(m, Mapping) else m
        if sym.L != F.W:
            raise ValueError("symbol grid does not match W")
        a = alpha.residues(F.Q)
        offs = _offsets(sym.T, F.d)
        idx = tuple((offs % F.W).T) + tuple(np.full(len(offs), ai) for ai in a)
        mult[idx] += sym.table[tuple((offs + sym.T).T)]
    return adelic_idft(G * mult[..., None], F.W, F.Q, F.d)


def random_adelic(W: int, Q: int, d: int, box: FreqBox | None, hdim: int = 1, seed=0, theta_max=None) -> AdelicSignal:
    """Random adelic signal with spectrum on a frequency box, or on [-theta_max, theta_max]^d x (Z/QZ)^d."""
    rng = np.random.default_rng(seed)
    G = np.zeros((W,) * d + (Q,) * d + (hdim,), dtype=complex)
    if box is not None:
        th, al, _ = _box_index(box, W, Q)
    else:
        T = math.floor(Fraction(theta_max) * W)
        offs = _offsets(T, d) % W
        res = np.array(list(itertools.product(range(Q), repeat=d)), dtype=np.int64).reshape(-1, d)
        th = np.repeat(offs, len(res), axis=0)
        al = np.tile(res, (len(offs), 1))
    n = len(th)
    G[tuple(th.T) + tuple(al.T)] = rng.standard_normal((n, hdim)) + 1j * rng.standard_normal((n, hdim))
    return adelic_idft(G, W, Q, d)


def random_admissible(box: FreqBox, W: int, Q: int | None = None, hdim: int = 1, seed=0) -> CyclicSignal:
    """Random signal on Z/WZ with Fourier support in pi(box)."""
    Q = box.Q if Q is None else Q
    _check_box(box, W, Q)
    rng = np.random.default_rng(seed)
    _, _, img = _box_index(box, W, Q)
    spec = np.zeros((W,) * box.d + (hdim,), dtype=complex)
    n = len(img)
    spec[tuple(img.T)] = rng.standard_normal((n, hdim)) + 1j * rng.standard_normal((n, hdim))
    return idft(spec, W, box.d)


def verify_unitarity(box: FreqBox, W: int, trials: int, seed: int, Q: int | None = None, hdim: int = 1) -> float:
    """Largest relative deviation | ||interpolate f|| - ||f|| | / ||f|| over random admissible f."""
    box.require_nonaliasing()
    Q = box.Q if Q is None else Q
    worst = 0.0
    rng = np.random.default_rng(seed)
    for _ in range(trials):
        f = random_admissible(box, W, Q, hdim, rng)
        F = interpolate(f, box, Q)
        nf = f.norm(2)
        worst = max(worst, abs(F.norm(2) - nf) / nf)
    return worst


def qss_ratio(Q: int, c, p: float, d: int = 1, trials: int = 100, seed: int = 0, W: int | None = None, hdim: int = 1) -> dict:
    """||sample F||_p / ||F||_p over random F with spectrum in [-c/Q, c/Q]^d x (Z/QZ)^d."""
    c = Fraction(c)
    if not 0 < c < Fraction(1, 2):
        raise ValueError("c must lie in (0, 1/2)")
    if not (p >= 1):
        raise ValueError("p must lie in [1, inf]")
    W = 20 * Q if W is None else W
    box = FreqBox.shannon(Q, c, d)
    rng = np.random.default_rng(seed)
    ratios = []
    for _ in range(trials):
        F = random_adelic(W, Q, d, box, hdim, rng)
        ratios.append(sample(F).norm(p) / F.norm(p))
    arr = np.array(ratios)
    return {"p": p, "Q": Q, "c": format_rational(c), "d": d, "W": W, "trials": trials,
            "min": float(arr.min()), "max": float(arr.max()), "mean": float(arr.mean())}


def _spectral_theta_bound(F: AdelicSignal, tol: float) -> Fraction:
    """Largest |theta| (sup norm, in units of 1/W) carrying spectral mass above tol relative."""
    G = adelic_dft(F)
    mags = np.abs(G).max(axis=tuple(range(F.d, 2 * F.d)) + (-1,))
    cutoff = tol * max(mags.max(initial=0.0), 1e-300)
    idx = np.argwhere(mags > cutoff)
    if idx.size == 0:
        return Fraction(0)
    centred = np.minimum(idx, F.W - idx)
    return Fraction(int(centred.max()), F.W)


def sam_identity_check(m: BoxSymbol, sigma: Sequence[TorusPoint], F: AdelicSignal, tol: float = 1e-9) -> dict:
    """Compare Op_{m;sigma}(sample F) with sample(Op_{m x 1_sigma} F).

    Holds when the continuous spectrum of F sits in |theta| < 1/(2Q), so that
    adelic frequencies do not alias under sampling.
    """
    box = FreqBox(Fraction(max(m.T, 1), m.L), tuple(sigma))
    box.require_nonaliasing()
    if F.Q % box.Q:
        raise ValueError("sigma denominators must divide Q")
    if _spectral_theta_bound(F, 1e-12) >= Fraction(1, 2 * F.Q):
        raise AliasingError("continuous spectrum of F reaches 1/(2Q); sampling aliases")
    lhs = op_m_sigma(m, sigma, sample(F))
    rhs = sample(adelic_op(F, m, sigma))
    err = float(np.abs(lhs.values - rhs.values).max(initial=0.0))
    scale = float(np.abs(F.values).max(initial=0.0))
    rel = err / scale if scale > 0 else err
    return {"max_error": err, "relative": rel, "passed": rel <= tol}


def sam_identity_raw(m: BoxSymbol, sigma: Sequence[TorusPoint], F: AdelicSignal) -> float:
    """Unguarded max error of the identity; used to exhibit the aliased failure."""
    lhs = op_m_sigma(m, sigma, sample(F))
    rhs = sample(adelic_op(F, m, sigma))
    return float(np.abs(lhs.values - rhs.values).max(initial=0.0))


# --- arithmetic model ------------------------------------------------------------


def _arith_system(params: MajorArcParams, amplitudes: Mapping, Q: int) -> MajorArcSystem:
    if Q % params.Q_S:
        raise ValueError(f"Q={Q} is not a multiple of Q_S={params.Q_S}")
    d = params.d
    pts = np.stack(np.meshgrid(*([np.arange(Q)] * d), indexing="ij"), axis=-1)
    hdim = len(next(iter(amplitudes.values())))
    signals = {}
    for alpha in sigma_leq(params):
        c = np.asarray(amplitudes.get(alpha, np.zeros(hdim)), dtype=complex)
        a = np.array(grid_index(alpha, Q))
        signals[alpha] = CyclicSignal(Q, d, np.exp(-2j * np.pi * (pts @ a) / Q)[..., None] * c)
    for alpha in amplitudes:
        if alpha not in signals:
            raise ValueError(f"{alpha} is not in Sigma_<=k")
    return MajorArcSystem(params, Q, signals)


def arith_limit_functionals(params: MajorArcParams, amplitudes: Mapping, r: int, Q: int | None = None) -> dict:
    """Both sides of the arithmetic-limit comparison on (Z/QZ)^d with normalized counting measure."""
    Q = params.Q_S if Q is None else Q
    system = _arith_system(params, amplitudes, Q)
    raw = ortho_apply_functionals(system, r)
    scale = Q ** (-params.d / (2 * r))
    return {"lhs": raw["lhs"] * scale, "mid": raw["mid"] * scale,
            "lhs_over_mid": raw["lhs_over_mid"], "mid_over_lhs": raw["mid_over_lhs"]}


def projection_norm_probe(params: MajorArcParams, p: float, trials: int, seed: int, Q: int | None = None) -> dict:
    """Norm of the Fourier projection onto Sigma_<=k on L^p((Z/QZ)^d); exact at p = 2, lower bounds otherwise."""
    Q = params.Q_S if Q is None else Q
    d = params.d
    M = np.zeros((Q,) * d)
    for alpha in sigma_leq(params):
        M[grid_index(alpha, Q)] = 1.0
    if p == 2:
        return {"p": 2, "norm": float(M.max()), "exact": True}

    def apply(x):
        return np.fft.fftn(np.fft.ifftn(x) * M)

    rng = np.random.default_rng(seed)
    low = _boyd_lower_bound(apply, apply, (Q,) * d, p, trials, rng)
    return {"p": p, "lower_bound": low, "exact": False, "trials": trials}


def adelic_factorization_check(m: Mapping, params: MajorArcParams, r: int, c, f: CyclicSignal, tol: float = 1e-9) -> dict:
    """Op_{m;Sigma_<=k} f against sample(Op_m(interpolate(Op_{phi;Sigma_<=k} f, widened box)))."""
    _require_good(params, r, c)
    sigma = tuple(sigma_leq(params))
    W = f.L
    T = math.floor(params.eps * W)
    for alpha in sigma:
        if m[alpha].T > T:
            raise ValueError("adelic symbol exceeds the arc [-eps, eps]^d")
    bump = PlateauBump.for_c(c)
    phi = bump.symbol(params.eps, W, params.d)
    widened = FreqBox(params.eps * bump.support_exact, sigma)
    lhs = op_m_sigma_adelic(m, sigma, f)
    g = idft(dft(f) * sigma_multiplier(phi, sigma, W, params.d)[..., None], W, params.d)
    G = interpolate(g, widened, params.Q_S)
    rhs = sample(adelic_op(G, m, sigma))
    err = float(np.abs(lhs.values - rhs.values).max(initial=0.0))
    scale = float(np.abs(f.values).max(initial=0.0))
    rel = err / scale if scale > 0 else err
    return {"max_error": err, "relative": rel, "passed": rel <= tol}


def zhat_pairing(x: int, alpha: Fraction) -> Fraction:
    """x . (a/q) in Q/Z for an integer x viewed in the profinite integers."""
    alpha = Fraction(alpha)
    return Fraction((x * alpha.numerator) % alpha.denominator, alpha.denominator)


def zmod_pairing(y: int, alpha: Fraction, Q: int) -> Fraction:
    """The same pairing computed on Z/QZ after reducing x mod Q."""
    alpha = Fraction(alpha)
    if Q % alpha.denominator:
        raise ValueError("denominator must divide Q")
    a = alpha.numerator * (Q // alpha.denominator)
    return Fraction((y % Q) * a % Q, Q)
