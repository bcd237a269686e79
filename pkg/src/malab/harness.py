"""Experiment configuration, suite dispatch and report assembly."""
from __future__ import annotations

import csv
import io
import itertools
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Callable

import numpy as np

from . import __version__
from . import adelic as ad
from . import arcs
from . import harmonic as hm
from . import iw
from . import sunflower as sf
from . import superortho as so
from .exact import DEFAULT_CAP, format_rational, lcm_all, parse_rational

SCHEMA_VERSION = 1

# Check names carry a stable anchor naming the statement they exercise.
ANCHORS = {
    "iw": "coprime moduli covering Farey fractions",
    "sigma": "Sigma-set lattice and CRT sumsets",
    "separation": "goodness implies separation",
    "denominator": "denominator orthogonality",
    "numerator": "numerator orthogonality",
    "khintchine": "Khintchine equality for r = 1 and multinomial inequality",
    "polyrand": "superorthogonality of polynomials of R-wise independent variables",
    "sunflower": "sunflower numbers, sunflower probability and the square-function kernel",
    "sharpness": "finite field and product Bernoulli sharpness",
    "sampling": "sampling and interpolation on the adelic model",
    "unitarity": "unitarity of interpolation",
    "rubio": "coset square function at p = 2",
    "envelope": "empirical envelopes",
}

RANDOMIZED = {"denominator", "numerator", "khintchine", "sunflower", "sampling", "unitarity", "rubio", "envelope"}


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    suite: str
    params: dict = field(default_factory=dict)
    seed: int | None = None
    trials: int | None = None
    tolerances: dict = field(default_factory=dict)
    cap: int = DEFAULT_CAP

    def validate(self) -> "ExperimentConfig":
        if self.suite not in SUITES:
            raise ConfigError(f"unknown suite {self.suite!r}")
        if self.suite in RANDOMIZED and self.seed is None:
            raise ConfigError(f"suite {self.suite!r} is randomized and needs a seed")
        for name, tol in self.tolerances.items():
            if not float(tol) > 0:
                raise ConfigError(f"tolerance {name} must be positive")
        if self.trials is not None and self.trials < 1:
            raise ConfigError("trials must be positive")
        if self.cap < 1:
            raise ConfigError("cap must be positive")
        _check_rationals(self.params)
        return self

    def tol(self, name: str, default: float) -> float:
        return float(self.tolerances.get(name, default))

    def to_json(self) -> dict:
        return {"suite": self.suite, "params": self.params, "seed": self.seed, "trials": self.trials,
                "tolerances": self.tolerances, "cap": self.cap}

    @classmethod
    def from_json(cls, data: dict) -> "ExperimentConfig":
        unknown = set(data) - {"suite", "params", "seed", "trials", "tolerances", "cap"}
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")
        if "suite" not in data:
            raise ConfigError("config needs a suite name")
        return cls(data["suite"], dict(data.get("params", {})), data.get("seed"), data.get("trials"),
                   dict(data.get("tolerances", {})), int(data.get("cap", DEFAULT_CAP))).validate()


_RATIONAL_KEYS = {"eps", "rho", "c", "p_exp"}


def _check_rationals(params) -> None:
    """Every eps/rho/c value must parse as an exact rational."""
    if isinstance(params, dict):
        for k, v in params.items():
            if k in _RATIONAL_KEYS:
                vals = v if isinstance(v, list) else [v]
                for x in vals:
                    try:
                        parse_rational(x)
                    except (ValueError, TypeError) as exc:
                        raise ConfigError(f"{k}={x!r}: {exc}") from None
            else:
                _check_rationals(v)
    elif isinstance(params, list):
        for v in params:
            _check_rationals(v)


def load_config(data) -> list[ExperimentConfig]:
    """A config file holds one suite or {"schema": 1, "suites": [...]}; suite entries inherit top-level seed and cap."""
    if isinstance(data, (str, Path)):
        data = json.loads(Path(data).read_text())
    schema = data.get("schema", SCHEMA_VERSION)
    if schema != SCHEMA_VERSION:
        raise ConfigError(f"unsupported config schema {schema}")
    if "suites" in data:
        out = []
        for entry in data["suites"]:
            entry = dict(entry)
            for key in ("seed", "cap"):
                if key in data and key not in entry:
                    entry[key] = data[key]
            out.append(ExperimentConfig.from_json(entry))
        return out
    entry = {k: v for k, v in data.items() if k != "schema"}
    return [ExperimentConfig.from_json(entry)]


def bundled_config(name: str = "acceptance.json") -> dict:
    return json.loads(resources.files("malab").joinpath("configs", name).read_text())


# --- check records ---------------------------------------------------------------


def _jsonable(x):
    if isinstance(x, Fraction):
        return format_rational(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, frozenset):
        return sorted(x)
    if isinstance(x, float) and not math.isfinite(x):
        return repr(x)
    return x


class Recorder:
    def __init__(self, suite: str):
        self.suite = suite
        self.checks: list[dict] = []
        self.tables: dict[str, list[dict]] = {}

    def exact(self, name: str, passed: bool, value=None, threshold=None, **extra) -> bool:
        rec = {"name": f"{self.suite}.{name}", "kind": "exact", "anchor": ANCHORS[self.suite],
               "value": _jsonable(value), "threshold": _jsonable(threshold),
               "status": "pass" if passed else "fail"}
        rec.update(_jsonable(extra))
        self.checks.append(rec)
        return bool(passed)

    def empirical(self, name: str, value, **extra) -> None:
        rec = {"name": f"{self.suite}.{name}", "kind": "empirical", "anchor": ANCHORS[self.suite],
               "value": _jsonable(value), "threshold": None, "status": "reported"}
        rec.update(_jsonable(extra))
        self.checks.append(rec)

    def error(self, name: str, exc: Exception) -> None:
        self.checks.append({"name": f"{self.suite}.{name}", "kind": "exact", "anchor": ANCHORS[self.suite],
                            "value": f"{type(exc).__name__}: {exc}", "threshold": None, "status": "fail"})


def _rng_seed(cfg: ExperimentConfig, stream: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(cfg.seed or 0), stream])


def _params(cfg: ExperimentConfig, spec: dict) -> arcs.MajorArcParams:
    return arcs.MajorArcParams(int(spec.get("d", 1)), int(spec["k"]), tuple(spec["S"]),
                               parse_rational(spec.get("eps", "1")), spec.get("q_max"), cfg.cap)


def _good_eps_params(cfg: ExperimentConfig, spec: dict, r: int, c: Fraction) -> arcs.MajorArcParams:
    base = _params(cfg, spec)
    if "eps" in spec:
        return base
    return base.with_eps(arcs.largest_good_eps(base, r, c, int(spec.get("max_den", 10**6))))


def _label(spec: dict) -> str:
    parts = []
    for key in ("S", "k", "r", "d", "N", "rho", "p", "R", "Q", "W", "L"):
        if key in spec:
            v = spec[key]
            parts.append(f"{key}={'-'.join(map(str, v)) if isinstance(v, list) else v}")
    return ",".join(parts)


# --- suites ----------------------------------------------------------------------


def suite_iw(cfg: ExperimentConfig, rec: Recorder) -> None:
    p = cfg.params
    for N, rho in itertools.product(p.get("N", [8, 16, 50, 100, 500, 1000]), p.get("rho", ["1", "1/2"])):
        tag = f"N={N},rho={rho}"
        c = iw.build_iw_set(int(N), parse_rational(rho), require_bound=False)
        rec.exact(f"coprime[{tag}]", all(math.gcd(a, b) == 1 for a, b in itertools.combinations(c.S, 2)))
        oracle = lcm_all(range(1, int(N) + 1))
        rec.exact(f"product_is_lcm[{tag}]", c.q_total == oracle, str(c.q_total), str(oracle))
        rec.exact(f"product_below_3^N[{tag}]", c.q_total <= 3 ** int(N), len(str(c.q_total)), f"3^{N}")
        rec.exact(f"farey_coverage[{tag}]", iw.verify_farey_coverage(c), c.k, "k")
        m, C = iw.element_bound_report(c)
        rec.empirical(f"element_bound[{tag}]", {"max_S": str(m), "C": C})
    for case in p.get("expect", [{"N": 10, "rho": "1", "S": [5, 7, 72], "q_total": 2520}]):
        c = iw.build_iw_set(int(case["N"]), parse_rational(case["rho"]))
        rec.exact(f"expected_set[N={case['N']},rho={case['rho']}]",
                  list(c.S) == sorted(case["S"]) and c.q_total == case["q_total"],
                  {"S": list(c.S), "q_total": c.q_total}, {"S": sorted(case["S"]), "q_total": case["q_total"]})


def suite_sigma(cfg: ExperimentConfig, rec: Recorder) -> None:
    for spec in cfg.params.get("sets", [{"S": [3, 5, 7]}, {"S": [4, 9, 5]}]):
        for d in cfg.params.get("d", [1, 2]):
            S = tuple(spec["S"])
            full = arcs.MajorArcParams(d, len(S), S, Fraction(1), cap=cfg.cap)
            tag = f"S={'-'.join(map(str, sorted(S)))},d={d}"
            parts = sizes = True
            for A in arcs.subsets_upto(S, len(S)):
                parts &= arcs.verify_partition(full, A)
                sizes &= len(arcs.sigma_subset(full, A)) == arcs.q_of_subset(full, A) ** d
            rec.exact(f"partition[{tag}]", parts)
            rec.exact(f"subgroup_size[{tag}]", sizes)
            pairs = [(A1, A2) for A1 in arcs.subsets_upto(S, len(S)) for A2 in arcs.subsets_upto(S, len(S))
                     if not A1 & A2]
            crt = all(arcs.verify_crt_sum(full, A1, A2) for A1, A2 in pairs)
            rec.exact(f"crt_sumset[{tag}]", crt, len(pairs), "all ordered disjoint pairs")
            k = int(spec.get("k", 2))
            pk = arcs.MajorArcParams(d, k, S, Fraction(1), cap=cfg.cap)
            inc = all(arcs.verify_inclusion(pk, A0) for A0 in arcs.subsets_upto(S, k))
            rec.exact(f"inclusion[{tag},k={k}]", inc)


def suite_separation(cfg: ExperimentConfig, rec: Recorder) -> None:
    c = parse_rational(cfg.params.get("c", "1/2"))
    for spec in cfg.params["matrix"]:
        r = int(spec["r"])
        par = _good_eps_params(cfg, spec, r, c)
        sep = arcs.min_separation(par)
        ok = arcs.is_good(par, r, c) and sep >= 2 * par.eps / c
        rec.exact(f"separation[{_label(spec)}]", ok, sep, 2 * par.eps / c, eps=par.eps)
        den_ok = all(x.denominator <= par.q_max**par.k for x in arcs.sigma_leq(par))
        rec.exact(f"denominator_bound[{_label(spec)}]", den_ok)


def _matrix_L(spec: dict, par: arcs.MajorArcParams) -> int:
    return int(spec.get("L", 3 * par.Q_S))


def suite_denominator(cfg: ExperimentConfig, rec: Recorder) -> None:
    c = parse_rational(cfg.params.get("c", "1/2"))
    tol = cfg.tol("orthogonality", 1e-9)
    for i, spec in enumerate(cfg.params["matrix"]):
        r = int(spec["r"])
        par = _good_eps_params(cfg, spec, r, c)
        L = _matrix_L(spec, par)
        hdim = int(spec.get("hdim", 2))
        tag = _label(spec)
        for t in range(int(cfg.params.get("random_systems", 2))):
            ss = _rng_seed(cfg, 100 * i + t)
            sysf = hm.random_band_limited(par, L, hdim, ss)
            res = hm.verify_denominator_orthogonality(sysf, r, c, tol)
            rec.exact(f"float[{tag},system={t}]", res.passed, res.max_violation, tol, stream=100 * i + t,
                      halfwidth=sysf.T, eps=par.eps)
        pt = hm.pure_tone_system(par, L, hdim, _rng_seed(cfg, 100 * i + 99))
        res = hm.verify_denominator_orthogonality(pt, r, c, mode="exact")
        rec.exact(f"exact[{tag}]", res.passed, res.max_abs, 0, n_tuples=res.n_tuples)


def suite_numerator(cfg: ExperimentConfig, rec: Recorder) -> None:
    p = cfg.params
    c = parse_rational(p.get("c", "1/2"))
    r = int(p.get("r", 2))
    tol = cfg.tol("orthogonality", 1e-9)
    par = _good_eps_params(cfg, p, r, c)
    L = _matrix_L(p, par)
    systems = [("pure_tone", hm.pure_tone_system(par, L, int(p.get("hdim", 2)), _rng_seed(cfg, 0)))]
    for t in range(int(p.get("random_systems", 1))):
        systems.append((f"random{t}", hm.random_band_limited(par, L, int(p.get("hdim", 2)), _rng_seed(cfg, 1 + t))))
    index = arcs.subsets_upto(par.S, par.k)
    for name, system in systems:
        worst, count, ok = 0.0, 0, True
        for members in itertools.product(index, repeat=r):
            if sf.is_sunflower(members) is None:
                continue
            out = hm.verify_numerator_orthogonality(system, members, c, tol)
            worst = max(worst, out["max_violation"])
            ok &= out["passed"]
            count += 1
        rec.exact(f"sunflowers[{name}]", ok, worst, tol, n_sunflowers=count)


def suite_khintchine(cfg: ExperimentConfig, rec: Recorder) -> None:
    p = cfg.params
    tol = cfg.tol("ratio", 1e-9)
    for i, spec in enumerate(p.get("systems", [])):
        src = so.KWiseSource(int(spec["p"]), int(spec["R"]))
        k = int(spec["k"])
        S = spec.get("S", list(range(1, int(spec.get("n", 3)) + 1)))
        for t in range(int(spec.get("count", 3))):
            seed = _rng_seed(cfg, 10 * i + t)
            system = so.polyrand_hypersystem(S, k, src, spec.get("spec"), seed, r=1)
            ortho = so.check_superortho(system, 1)
            lhs, rhs, ratio = so.khintchine_ratio(system, 1)
            el, er = so.khintchine_power_exact(system, 1)
            rec.exact(f"r1_ratio[{_label(spec)},system={t}]", ortho.passed and abs(ratio - 1) <= tol and el == er,
                      ratio, f"1 +- {tol}", stream=10 * i + t)
    r_max, n_max = int(p.get("multinomial_r", 6)), int(p.get("multinomial_n", 6))
    ok, count = True, 0
    for r in range(1, r_max + 1):
        for n in range(1, n_max + 1):
            for parts in so.partitions_of(r, n):
                ok &= so.multinomial_check(r, parts)
                count += 1
    rec.exact("multinomial", ok, count, f"r<={r_max}, n<={n_max}")


def suite_polyrand(cfg: ExperimentConfig, rec: Recorder) -> None:
    for spec in cfg.params["configs"]:
        pp, R, k, r = (int(spec[x]) for x in ("p", "R", "k", "r"))
        src = so.KWiseSource(pp, R)
        S = spec.get("S", list(range(1, int(spec.get("n", 3)) + 1)))
        worst, ok = Fraction(0), True
        for seed in spec.get("seeds", [0]):
            system = so.polyrand_hypersystem(S, k, src, spec.get("spec"), seed, r=r)
            res = so.check_superortho(system, r)
            ok &= res.passed and system.exact
            worst = max(worst, Fraction(res.max_abs))
        rec.exact(f"exact_superortho[{_label(spec)}]", ok, worst, 0)


def _random_weights(rng, sets, exact: bool):
    raw = rng.integers(1, 20, size=len(sets))
    if exact:
        tot = int(raw.sum())
        return {A: Fraction(int(w), tot) for A, w in zip(sets, raw)}
    return {A: float(w) / raw.sum() for A, w in zip(sets, raw)}


def suite_sunflower(cfg: ExperimentConfig, rec: Recorder) -> None:
    p = cfg.params
    for k, r in [tuple(x) for x in p.get("sun", [[1, 1], [1, 2], [1, 3], [1, 4], [2, 2], [2, 3]])]:
        low, up = sf.erdos_rado_bounds(k, r)
        val = sf.sun_number(k, r)
        expected = p.get("sun_expected", {}).get(f"{k},{r}")
        ok = low <= val <= up and (expected is None or val == expected)
        rec.exact(f"sun[k={k},r={r}]", ok, val, [low, up] if expected is None else expected)
    trials = int(cfg.trials or p.get("trials", 100_000))
    dists = [("point_mass", {frozenset({1, 2}): Fraction(1)}, 2),
             ("triangle", {frozenset(s): Fraction(1, 3) for s in ({1, 2}, {1, 3}, {2, 3})}, 3),
             ("disjoint_pairs", {frozenset(s): Fraction(1, 4) for s in ({1, 2}, {3, 4}, {5, 6}, {7, 8})}, 2)]
    rng = np.random.default_rng(_rng_seed(cfg, 0))
    sets = [frozenset(c) for c in itertools.combinations(range(1, 7), 2)]
    for i in range(int(p.get("random_distributions", 100))):
        w = _random_weights(rng, sets, exact=False)
        for r in p.get("per_r", [2, 3]):
            dists.append((f"random{i}", w, int(r)))
    ok, worst_margin = True, math.inf
    for j, (name, w, r) in enumerate(dists):
        res = sf.per_monte_carlo(w, r, trials, _rng_seed(cfg, 1000 + j))
        ci_ok = res.ci_low <= res.empirical <= res.ci_high
        ok &= res.margin_ok and ci_ok
        worst_margin = min(worst_margin, res.empirical - 3 * res.se - res.threshold)
        if not name.startswith("random"):
            rec.exact(f"per[{name},r={r}]", res.margin_ok and ci_ok, res.to_json(), res.threshold, stream=1000 + j)
    rec.exact("per[random distributions]", ok, worst_margin, 0, count=len(dists), trials=trials)
    ground = list(range(1, int(p.get("water_ground", 5)) + 1))
    kw = int(p.get("water_k", 2))
    wsets = [frozenset(c) for c in itertools.combinations(ground, kw)]
    fwd = conv = True
    for i in range(int(p.get("water_vectors", 100))):
        w = _random_weights(rng, wsets, exact=True)
        for r in p.get("water_r", [1, 2, 3]):
            res = sf.water_inequality_check(w, int(r), ground, kw)
            fwd &= res.forward
            conv &= res.converse
            if int(r) == 1:
                conv &= res.lhs == res.rhs_lower
    rec.exact("water_forward", fwd)
    rec.exact("water_converse", conv)


def suite_sharpness(cfg: ExperimentConfig, rec: Recorder) -> None:
    p = cfg.params
    for pp, R in [tuple(x) for x in p.get("polynomial", [[3, 2], [5, 2], [5, 3], [7, 2]])]:
        event, zero = so.sharpness_polynomial(pp, R)
        rec.exact(f"zero_polynomial[p={pp},R={R}]", zero == Fraction(1, pp**R) and event == zero, zero,
                  Fraction(1, pp**R))
    for pp, R in [tuple(x) for x in p.get("bijection", [[3, 2]])]:
        ok = all(so.lagrange_bijection(pp, R, pts) for pts in itertools.combinations(range(pp), R))
        rec.exact(f"lagrange_bijection[p={pp},R={R}]", ok)
    limit = int(p.get("nk_max", 12))
    ok, discrepancies = True, []
    for n in range(1, limit + 1):
        for k in range(1, limit // n + 1):
            exact = so.sharpness_product(n, k)
            brute = so.sharpness_product_bruteforce(n, k)
            ok &= exact == brute == Fraction(2 ** k, 2 ** (n * k))
            if exact != Fraction(1, 2 ** (n * k)):
                discrepancies.append(f"n={n},k={k}")
    rec.exact("product_bernoulli", ok, "2^(k-nk)", "enumeration")
    rec.empirical("product_bernoulli_vs_2^-nk", {"differs_at": len(discrepancies)})


def _shannon_boxes(p):
    for Q in p.get("Q", [5, 15]):
        yield f"Q={Q}", ad.FreqBox.shannon(int(Q), parse_rational(p.get("c", "1/3"))), int(p.get("W", 300)), int(Q)


def _arc_boxes(cfg, p):
    for k in p.get("arc_k", [1, 2]):
        par = arcs.MajorArcParams(1, int(k), tuple(p.get("S", [3, 5])), parse_rational(p.get("eps", "1/101")),
                                  cap=cfg.cap)
        yield f"S={'-'.join(map(str, par.S))},k={k}", ad.FreqBox.for_params(par), int(p.get("W_arc", 1260)), par.Q_S


def suite_unitarity(cfg: ExperimentConfig, rec: Recorder) -> None:
    p = cfg.params
    tol = cfg.tol("unitarity", 1e-10)
    trials = int(cfg.trials or p.get("trials", 20))
    boxes = list(_shannon_boxes(p))
    if p.get("arcs", False):
        boxes += list(_arc_boxes(cfg, p))
    for j, (tag, box, W, Q) in enumerate(boxes):
        rec.exact(f"nonaliasing[{tag}]", box.is_nonaliasing())
        dev = ad.verify_unitarity(box, W, trials, _rng_seed(cfg, j), Q)
        rec.exact(f"deviation[{tag},W={W}]", dev <= tol, dev, tol, stream=j, trials=trials)


def suite_sampling(cfg: ExperimentConfig, rec: Recorder) -> None:
    p = cfg.params
    utol = cfg.tol("unitarity", 1e-10)
    itol = cfg.tol("identity", 1e-9)
    trials = int(p.get("round_trips", 100))
    boxes = list(_shannon_boxes(p)) + list(_arc_boxes(cfg, p))
    for j, (tag, box, W, Q) in enumerate(boxes):
        rng = np.random.default_rng(_rng_seed(cfg, j))
        dev = ad.verify_unitarity(box, W, int(p.get("unitarity_trials", 20)), rng, Q)
        rec.exact(f"unitarity[{tag}]", dev <= utol, dev, utol)
        e1 = e2 = 0.0
        for _ in range(trials):
            f = ad.random_admissible(box, W, Q, seed=rng)
            back = ad.sample(ad.interpolate(f, box, Q)).values
            e1 = max(e1, float(np.abs(back - f.values).max() / np.abs(f.values).max()))
            G = ad.random_adelic(W, Q, box.d, box, seed=rng)
            again = ad.interpolate(ad.sample(G), box, Q).values
            e2 = max(e2, float(np.abs(again - G.values).max() / np.abs(G.values).max()))
        rec.exact(f"sample_after_interpolate[{tag}]", e1 <= utol, e1, utol, trials=trials)
        rec.exact(f"interpolate_after_sample[{tag}]", e2 <= utol, e2, utol, trials=trials)
    for Q in p.get("Q", [5, 15]):
        st = ad.qss_ratio(int(Q), parse_rational(p.get("c", "1/3")), 2, 1, int(p.get("qss_trials", 50)),
                          _rng_seed(cfg, 200 + int(Q)), int(p.get("W", 300)))
        dev = max(abs(st["min"] - 1), abs(st["max"] - 1))
        rec.exact(f"qss_p2[Q={Q}]", dev <= utol, dev, utol)
    instances = int(p.get("instances", 50))
    par = arcs.MajorArcParams(1, int(p.get("sam_k", 1)), tuple(p.get("S", [3, 5])), parse_rational(p.get("eps", "1/101")),
                              cap=cfg.cap)
    W = int(p.get("W_arc", 1260))
    sigma = tuple(arcs.sigma_leq(par))
    rng = np.random.default_rng(_rng_seed(cfg, 300))
    worst, ok = 0.0, True
    for _ in range(instances):
        m = hm.BoxSymbol.random(par.eps, W, 1, rng)
        F = ad.random_adelic(W, par.Q_S, 1, None, seed=rng, theta_max=Fraction(1, 2 * par.Q_S + 1))
        out = ad.sam_identity_check(m, sigma, F, itol)
        worst = max(worst, out["relative"])
        ok &= out["passed"]
    rec.exact("sam_identity", ok, worst, itol, instances=instances)
    c = parse_rational(p.get("c_fact", "1/2"))
    worst, ok = 0.0, True
    for _ in range(instances):
        m = {a: hm.BoxSymbol.random(par.eps, W, 1, rng) for a in sigma}
        f = hm.CyclicSignal(W, 1, rng.standard_normal((W, 2)) + 1j * rng.standard_normal((W, 2)))
        out = ad.adelic_factorization_check(m, par, 1, c, f, itol)
        worst = max(worst, out["relative"])
        ok &= out["passed"]
    rec.exact("factorization", ok, worst, itol, instances=instances)
    Qmax = int(p.get("pairing_Q", 60))
    pairing = all(ad.zhat_pairing(x, Fraction(a, q)) == ad.zmod_pairing(x, Fraction(a, q), Q)
                  for Q in range(1, Qmax + 1) for q in range(1, Q + 1) if Q % q == 0
                  for a in range(q) for x in range(Q))
    rec.exact("zhat_pairing", pairing, Qmax, "Q <= bound")


def suite_rubio(cfg: ExperimentConfig, rec: Recorder) -> None:
    p = cfg.params
    c = parse_rational(p.get("c", "1/2"))
    profile = hm.PlateauBump.from_config(p.get("profile", {}), c)
    problems = profile.problems(c)
    if not rec.exact("profile", not problems, problems or "valid", "plateau 1 on [-1,1], support within c'/c"):
        return
    for i, spec in enumerate(p["configs"]):
        par = arcs.MajorArcParams(int(spec.get("d", 1)), int(spec["k"]), tuple(spec["S"]),
                                  parse_rational(spec["eps"]), cap=cfg.cap)
        L = int(spec["L"])
        rng = np.random.default_rng(_rng_seed(cfg, i))
        ok, worst = True, 0.0
        phi = profile.symbol(par.eps, L, par.d)
        pts = list(arcs.sigma_leq(par))
        for _ in range(int(spec.get("trials", 5))):
            f = hm.CyclicSignal(L, par.d, rng.standard_normal((L,) * par.d + (1,)))
            out = hm.rubio_check(par, c, profile, 2, f)
            ok &= out["passed"]
            worst = max(worst, out["ratio"])
            F = hm.dft(f)
            oracle = sum(hm.representation_count(par, b) * hm.idft(F * phi.place(b)[..., None], L, par.d).norm(2) ** 2
                         for b in pts)
            ok &= abs(out["lhs"] ** 2 - oracle) <= 1e-9 * max(oracle, 1e-300)
        rec.exact(f"p2_bound[{_label(spec)}]", ok, worst, 2 ** (par.k / 2))
        for pe in spec.get("p_report", [4, "inf"]):
            pv = math.inf if pe == "inf" else float(pe)
            f = hm.CyclicSignal(L, par.d, rng.standard_normal((L,) * par.d + (1,)))
            rec.empirical(f"ratio[{_label(spec)},p={pe}]", hm.rubio_check(par, c, profile, pv, f)["ratio"])


def _ci_ok(low, est, high) -> bool:
    return low <= est <= high and 0 <= low and high <= 1


def suite_envelope(cfg: ExperimentConfig, rec: Recorder) -> None:
    p = cfg.params
    # Khintchine ratios
    for i, spec in enumerate(p.get("khintchine", [])):
        src = so.KWiseSource(int(spec["p"]), int(spec["R"]))
        k, r = int(spec["k"]), int(spec["r"])
        S = list(range(1, int(spec.get("n", 3)) + 1))
        ratios = []
        for t in range(int(spec.get("count", 20))):
            system = so.polyrand_hypersystem(S, k, src, spec.get("spec"), _rng_seed(cfg, 10 * i + t), r=r)
            ratios.append(so.khintchine_ratio(system, r)[2])
        rec.empirical(f"khintchine[{_label(spec)}]", {"max": max(ratios), "min": min(ratios), "count": len(ratios)})
    # coset functionals
    for i, spec in enumerate(p.get("functionals", [])):
        r = int(spec["r"])
        c = Fraction(1, 2)
        par = _good_eps_params(cfg, spec, r, c)
        L = _matrix_L(spec, par)
        lo, hi = [], []
        for t in range(int(spec.get("count", 50))):
            out = hm.ortho_apply_functionals(hm.random_band_limited(par, L, 1, _rng_seed(cfg, 500 + 100 * i + t)), r)
            lo.append(out["lhs_over_mid"])
            hi.append(out["mid_over_lhs"])
        med = float(np.median(lo))
        spread = float(max(abs(x / med - 1) for x in lo)) if med else 0.0
        rec.empirical(f"functionals[{_label(spec)}]", {"lhs_over_mid_max": max(lo), "mid_over_lhs_max": max(hi),
                                                        "relative_spread": spread})
    pt_par = arcs.MajorArcParams(1, 1, (3, 5), Fraction(1, 101), cap=cfg.cap)
    pt = hm.pure_tone_system(pt_par, 1260, 2, _rng_seed(cfg, 900))
    out = hm.ortho_apply_functionals(pt, 1)
    pyth = sum(s.norm(2) ** 2 for s in pt.signals.values())
    rec.exact("pythagoras_r1", abs(out["lhs"] ** 2 - pyth) <= 1e-9 * pyth, out["lhs"] ** 2, pyth)
    for spec in p.get("arith", []):
        par = _params(cfg, {**spec, "eps": "1/1000000"})
        rng = np.random.default_rng(_rng_seed(cfg, 950))
        amps = {a: rng.standard_normal(1) for a in arcs.sigma_leq(par)}
        out = ad.arith_limit_functionals(par, amps, int(spec["r"]))
        rec.empirical(f"arith_functionals[{_label(spec)}]", out)
        proj2 = ad.projection_norm_probe(par, 2, 1, 0)
        rec.exact(f"projection_p2[{_label(spec)}]", proj2["norm"] == 1.0, proj2["norm"], 1)
        rec.empirical(f"projection_p{2 * int(spec['r'])}[{_label(spec)}]",
                      ad.projection_norm_probe(par, 2 * int(spec["r"]), 20, _rng_seed(cfg, 960)))
    # quantitative sampling ratios
    qss_rows = []
    for j, pe in enumerate(p.get("qss_p", [1, 4, "inf"])):
        pv = math.inf if pe == "inf" else float(pe)
        st = ad.qss_ratio(int(p.get("qss_Q", 5)), parse_rational(p.get("qss_c", "1/3")), pv, 1,
                          int(p.get("qss_trials", 200)), _rng_seed(cfg, 970 + j))
        ok = 0 < st["min"] <= st["max"] < math.inf
        rec.exact(f"qss_positive[p={pe}]", ok, [st["min"], st["max"]], "(0, inf)")
        qss_rows.append({"p": str(pe), "statistic": "min", "value": st["min"]})
        qss_rows.append({"p": str(pe), "statistic": "max", "value": st["max"]})
    rec.tables["qss"] = qss_rows
    # Hoeffding curves
    rows_all = []
    for i, spec in enumerate(p.get("hoeffding", [])):
        src = so.KWiseSource(int(spec["p"]), int(spec["R"]))
        rows = so.hoeffding_experiment(list(range(1, int(spec.get("n", 3)) + 1)), int(spec["k"]), src,
                                       spec.get("spec"), spec.get("lambdas", [0.5, 1, 2, 3]), spec.get("trials"),
                                       int(np.random.SeedSequence([int(cfg.seed or 0), 980 + i]).generate_state(1)[0]))
        ci = all(_ci_ok(row["ci_low"], row["empirical"], row["ci_high"]) for row in rows)
        rec.exact(f"hoeffding_ci[{_label(spec)}]", ci)
        for row in rows:
            rows_all.append({"config": _label(spec), **{k: row[k] for k in ("lambda", "empirical", "bound", "ci_low", "ci_high")}})
    rec.tables["hoeffding"] = rows_all
    # Wiener chaos fourth moment
    wc = so.wiener_chaos_experiment([1], {frozenset({1}): 1.0}, 4, int(p.get("wiener_trials", 200_000)),
                                    int(np.random.SeedSequence([int(cfg.seed or 0), 990]).generate_state(1)[0]))
    rec.exact("wiener_fourth_moment", abs(wc["moment"] - 3) <= 3 * wc["se"], wc["moment"], f"3 +- {3 * wc['se']:.4g}")
    # MSW sampling at p = 2 and p = 4
    rng = np.random.default_rng(_rng_seed(cfg, 995))
    m = hm.BoxSymbol.random(Fraction(1, 5), 30, 1, rng)
    m2 = hm.msw_check(m, 2, 1, 0)
    rec.exact("msw_p2", m2["passed"], m2["discrete"], m2["grid_max"])
    m4 = hm.msw_check(m, 4, int(p.get("msw_trials", 10)), int(cfg.seed or 0))
    rec.empirical("msw_p4", m4)


SUITES: dict[str, Callable] = {
    "iw": suite_iw,
    "sigma": suite_sigma,
    "separation": suite_separation,
    "denominator": suite_denominator,
    "numerator": suite_numerator,
    "khintchine": suite_khintchine,
    "polyrand": suite_polyrand,
    "sunflower": suite_sunflower,
    "sharpness": suite_sharpness,
    "unitarity": suite_unitarity,
    "sampling": suite_sampling,
    "rubio": suite_rubio,
    "envelope": suite_envelope,
}


def run_suite(cfg: ExperimentConfig) -> dict:
    cfg.validate()
    rec = Recorder(cfg.suite)
    t0 = time.perf_counter()
    try:
        SUITES[cfg.suite](cfg, rec)
    except (ValueError, RuntimeError, ArithmeticError) as exc:
        rec.error("suite", exc)
    wall = time.perf_counter() - t0
    exact_ok = all(c["status"] != "fail" for c in rec.checks)
    return {"suite": cfg.suite, "config": _jsonable(cfg.to_json()), "checks": rec.checks, "tables": rec.tables,
            "passed": exact_ok, "seed": cfg.seed, "version": __version__, "wall_time": wall}


def _run_one(cfg_json: dict) -> dict:
    return run_suite(ExperimentConfig.from_json(cfg_json))


def run_all(configs: list[ExperimentConfig], filter_name: str | None = None, jobs: int = 1) -> dict:
    selected = [c for c in configs if filter_name is None or filter_name in c.suite]
    if jobs > 1 and len(selected) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            reports = list(pool.map(_run_one, [c.to_json() for c in selected]))
    else:
        reports = [run_suite(c) for c in selected]
    failing = [c["name"] for r in reports for c in r["checks"] if c["status"] == "fail"]
    return {"schema": SCHEMA_VERSION, "version": __version__, "suites": reports,
            "passed": not failing, "failing": failing}


def report_json(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=1)


def strip_wall_time(report: dict) -> dict:
    out = json.loads(json.dumps(report))
    for s in out.get("suites", [out]):
        s.pop("wall_time", None)
    return out


def write_outputs(report: dict, out_dir) -> list[Path]:
    """report.json plus one CSV per table (one row per parameter point and statistic)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = [out / "report.json"]
    paths[0].write_text(report_json(report))
    for suite in report["suites"]:
        for name, rows in suite.get("tables", {}).items():
            if not rows:
                continue
            path = out / f"{suite['suite']}_{name}.csv"
            buf = io.StringIO()
            writer = csv.DictWriter(buf, fieldnames=list(rows[0]))
            writer.writeheader()
            writer.writerows(rows)
            path.write_text(buf.getvalue())
            paths.append(path)
    return paths


def summary_lines(report: dict) -> list[str]:
    lines = []
    for suite in report["suites"]:
        n_fail = sum(c["status"] == "fail" for c in suite["checks"])
        n_exact = sum(c["kind"] == "exact" for c in suite["checks"])
        state = "PASS" if suite["passed"] else "FAIL"
        lines.append(f"{state} {suite['suite']}: {n_exact - n_fail}/{n_exact} exact checks, "
                     f"{len(suite['checks']) - n_exact} reported, {suite['wall_time']:.2f}s")
        for c in suite["checks"]:
            if c["status"] == "fail":
                lines.append(f"  failed: {c['name']} value={c['value']} threshold={c['threshold']}")
    return lines
