"""Command line entry point: ``malab <command> ...``."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import adelic as ad
from . import harness
from . import io as mio
from .arcs import MajorArcParams
from .exact import DEFAULT_CAP, parse_rational


def _emit(data) -> None:
    print(json.dumps(harness._jsonable(data), sort_keys=True, indent=1))


def cmd_run(args) -> int:
    configs = harness.load_config(args.config)
    for cfg in configs:
        if args.seed is not None:
            cfg.seed = args.seed
        if args.cap is not None:
            cfg.cap = args.cap
    report = harness.run_all(configs, args.filter, args.jobs)
    if args.out:
        harness.write_outputs(report, args.out)
    for line in harness.summary_lines(report):
        print(line)
    return 0 if report["passed"] else 1


def cmd_acceptance(args) -> int:
    if args.config_dir:
        data = json.loads((Path(args.config_dir) / "acceptance.json").read_text())
    else:
        data = harness.bundled_config()
    configs = harness.load_config(data)
    if args.cap is not None:
        for cfg in configs:
            cfg.cap = args.cap
    report = harness.run_all(configs, args.filter, args.jobs)
    if args.out:
        harness.write_outputs(report, args.out)
    for line in harness.summary_lines(report):
        print(line)
    if not report["passed"]:
        print("failing checks: " + ", ".join(report["failing"]), file=sys.stderr)
    return 0 if report["passed"] else 1


def cmd_iw_build(args) -> int:
    from .iw import build_iw_set, element_bound_report, verify_farey_coverage, verify_lcm_bound

    c = build_iw_set(args.N, parse_rational(args.rho), require_bound=not args.no_bound)
    data = c.to_json()
    eq, below = verify_lcm_bound(c)
    data["checks"] = {"product_is_lcm": eq, "product_below_3^N": below, "farey_coverage": verify_farey_coverage(c),
                      "element_bound_C": element_bound_report(c)[1]}
    if args.json:
        _emit(data)
    else:
        print(f"k={data['k']} S={data['S']} digits(Q)={data['q_total_digits']}")
    return 0


def cmd_sun(args) -> int:
    from .sunflower import erdos_rado_bounds, sun_number

    low, up = erdos_rado_bounds(args.k, args.r)
    _emit({"k": args.k, "r": args.r, "sun": sun_number(args.k, args.r, args.budget), "bounds": [low, up]})
    return 0


def _read_weights(path) -> tuple[dict, int | None]:
    data = json.loads(Path(path).read_text())
    items = data["weights"] if isinstance(data, dict) else data
    weights = {}
    for A, w in items:
        weights[frozenset(A)] = parse_rational(w) if isinstance(w, str) else w
    return weights, (data.get("r") if isinstance(data, dict) else None)


def cmd_per(args) -> int:
    from .sunflower import per_monte_carlo

    weights, r = _read_weights(args.spec)
    r = args.r if args.r is not None else r
    if r is None:
        raise SystemExit("r must be given in the weights file or with --r")
    _emit(per_monte_carlo(weights, int(r), args.trials, args.seed).to_json())
    return 0


def cmd_verify_ortho(args) -> int:
    from . import harmonic as hm
    from .arcs import largest_good_eps

    params = MajorArcParams.from_json(json.loads(Path(args.params).read_text()), cap=args.cap or DEFAULT_CAP)
    c = parse_rational(args.c)
    if args.good_eps:
        params = params.with_eps(largest_good_eps(params, args.r, c))
    L = args.L or 3 * params.Q_S
    results = []
    ok = True
    for t in range(args.trials):
        system = hm.random_band_limited(params, L, args.hdim, [args.seed, t])
        res = hm.verify_denominator_orthogonality(system, args.r, c, args.tol)
        ok &= res.passed
        results.append({"trial": t, "max_violation": res.max_violation, "passed": res.passed})
    pt = hm.pure_tone_system(params, L, args.hdim, [args.seed, args.trials])
    exact = hm.verify_denominator_orthogonality(pt, args.r, c, mode="exact")
    ok &= exact.passed
    _emit({"params": params.to_json(), "L": L, "r": args.r, "float": results,
           "exact": {"max_abs": exact.max_abs, "n_tuples": exact.n_tuples, "passed": exact.passed}, "passed": ok})
    return 0 if ok else 1


def _read_box(path) -> ad.FreqBox:
    return ad.FreqBox.from_json(json.loads(Path(path).read_text()))


def _write(path, kind, values, L, d, Q=0) -> None:
    if str(path).endswith(".json"):
        Path(path).write_text(mio.to_json(kind, values, L, d, Q))
    else:
        mio.write(path, kind, values, L, d, Q)


def cmd_adelic_sample(args) -> int:
    data = mio.load_any(args.inp)
    if data["kind"] != "adelic":
        raise SystemExit("sample needs an adelic container")
    F = ad.AdelicSignal(data["L"], data["Q"], data["d"], data["values"])
    f = ad.sample(F)
    _write(args.out, "signal", f.values, f.L, f.d)
    return 0


def cmd_adelic_interpolate(args) -> int:
    from .harmonic import CyclicSignal

    data = mio.load_any(args.inp)
    if data["kind"] != "signal":
        raise SystemExit("interpolate needs a signal container")
    box = _read_box(args.omega)
    f = CyclicSignal(data["L"], data["d"], data["values"])
    F = ad.interpolate(f, box, args.Q, project=args.project)
    _write(args.out, "adelic", F.values, F.W, F.d, F.Q)
    return 0


def cmd_adelic_verify(args) -> int:
    box = _read_box(args.omega)
    out = {"omega": box.to_json(), "nonaliasing": box.is_nonaliasing()}
    if not out["nonaliasing"]:
        _emit(out)
        return 1
    W = args.W
    if args.inp:
        data = mio.load_any(args.inp)
        from .harmonic import CyclicSignal

        f = CyclicSignal(data["L"], data["d"], data["values"])
        F = ad.interpolate(f, box, args.Q, project=args.project)
        out["norm_signal"] = f.norm(2)
        out["norm_adelic"] = F.norm(2)
        if not args.project:
            out["round_trip_error"] = float(abs(ad.sample(F).values - f.values).max())
        W = f.L
    out["W"] = W
    out["unitarity_deviation"] = ad.verify_unitarity(box, W, args.trials, args.seed, args.Q)
    out["passed"] = out["unitarity_deviation"] <= args.tol
    if args.out:
        Path(args.out).write_text(json.dumps(harness._jsonable(out), sort_keys=True, indent=1))
    _emit(out)
    return 0 if out["passed"] else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="malab")
    ap.add_argument("--cap", type=int, default=None, help="enumeration cap for Sigma-sets")
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run suites from a config file")
    run.add_argument("--config", required=True)
    run.add_argument("--filter")
    run.add_argument("--seed", type=int)
    run.add_argument("--out")
    run.add_argument("--jobs", type=int, default=1)
    run.set_defaults(func=cmd_run)

    acc = sub.add_parser("acceptance", help="run the bundled acceptance matrix")
    acc.add_argument("--config-dir")
    acc.add_argument("--filter")
    acc.add_argument("--out")
    acc.add_argument("--jobs", type=int, default=1)
    acc.set_defaults(func=cmd_acceptance)

    iwp = sub.add_parser("iw").add_subparsers(dest="iw_command", required=True)
    b = iwp.add_parser("build")
    b.add_argument("--N", type=int, required=True)
    b.add_argument("--rho", default="1")
    b.add_argument("--json", action="store_true")
    b.add_argument("--no-bound", action="store_true", help="skip the N >= 2^k size condition")
    b.set_defaults(func=cmd_iw_build)

    sfp = sub.add_parser("sunflower").add_subparsers(dest="sf_command", required=True)
    s = sfp.add_parser("sun")
    s.add_argument("--k", type=int, required=True)
    s.add_argument("--r", type=int, required=True)
    s.add_argument("--budget", type=int, default=2_000_000)
    s.set_defaults(func=cmd_sun)
    pr = sfp.add_parser("per")
    pr.add_argument("--spec", required=True)
    pr.add_argument("--trials", type=int, default=100_000)
    pr.add_argument("--seed", type=int, required=True)
    pr.add_argument("--r", type=int)
    pr.set_defaults(func=cmd_per)

    hp = sub.add_parser("harmonic").add_subparsers(dest="h_command", required=True)
    vo = hp.add_parser("verify-ortho")
    vo.add_argument("--params", required=True)
    vo.add_argument("--r", type=int, required=True)
    vo.add_argument("--trials", type=int, default=1)
    vo.add_argument("--seed", type=int, required=True)
    vo.add_argument("--c", default="1/2")
    vo.add_argument("--L", type=int)
    vo.add_argument("--hdim", type=int, default=1)
    vo.add_argument("--tol", type=float, default=1e-9)
    vo.add_argument("--good-eps", action="store_true", help="replace eps by the largest good eps")
    vo.set_defaults(func=cmd_verify_ortho)

    adp = sub.add_parser("adelic").add_subparsers(dest="a_command", required=True)
    sa = adp.add_parser("sample")
    sa.add_argument("--in", dest="inp", required=True)
    sa.add_argument("--out", required=True)
    sa.set_defaults(func=cmd_adelic_sample)
    it = adp.add_parser("interpolate")
    it.add_argument("--in", dest="inp", required=True)
    it.add_argument("--omega", required=True)
    it.add_argument("--out", required=True)
    it.add_argument("--Q", type=int)
    it.add_argument("--project", action="store_true")
    it.set_defaults(func=cmd_adelic_interpolate)
    ve = adp.add_parser("verify")
    ve.add_argument("--omega", required=True)
    ve.add_argument("--in", dest="inp")
    ve.add_argument("--out")
    ve.add_argument("--W", type=int, default=300)
    ve.add_argument("--Q", type=int)
    ve.add_argument("--trials", type=int, default=20)
    ve.add_argument("--seed", type=int, default=0)
    ve.add_argument("--tol", type=float, default=1e-10)
    ve.add_argument("--project", action="store_true")
    ve.set_defaults(func=cmd_adelic_verify)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
