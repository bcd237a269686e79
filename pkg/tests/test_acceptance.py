"""Acceptance matrix: runs the bundled configuration once and gates each criterion on its records."""
import math
from fractions import Fraction
import time

import pytest

from malab import harness
from malab.exact import parse_rational
from malab.iw import build_iw_set
from malab.superortho import sharpness_polynomial

from conftest import ACCEPTANCE_LINES

TOTAL_BUDGET_S = 600.0


@pytest.fixture(scope="module")
def report():
    cfgs = harness.load_config(harness.bundled_config())
    t0 = time.perf_counter()
    rep = harness.run_all(cfgs)
    rep["total_wall"] = time.perf_counter() - t0
    return rep


def suite(report, name):
    (s,) = [s for s in report["suites"] if s["suite"] == name]
    return s


def checks(report, name, prefix=""):
    return [c for c in suite(report, name)["checks"] if c["name"].startswith(f"{name}.{prefix}")]


def gate(number, label, ok, detail):
    line = f"criterion {number:>2} {'PASS' if ok else 'FAIL'}: {label} [{detail}]"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def all_pass(recs):
    return bool(recs) and all(c["status"] == "pass" for c in recs)


def test_c01_iw(report):
    s = suite(report, "iw")
    recs = [c for c in s["checks"] if c["kind"] == "exact"]
    tags = {c["name"].split("[", 1)[1] for c in recs if "product_is_lcm" in c["name"]}
    grid = {f"N={N},rho={rho}]" for N in (8, 16, 50, 100, 500, 1000) for rho in ("1", "1/2")}
    c = build_iw_set(10, 1)
    ok = all_pass(recs) and grid <= tags and list(c.S) == [5, 7, 72] and c.q_total == 2520 \
        and s["wall_time"] < 5.0
    gate(1, "IW construction", ok, f"tolerance 0, {len(recs)} checks, {s['wall_time']:.2f}s < 5s")


def test_c02_sigma(report):
    s = suite(report, "sigma")
    recs = s["checks"]
    names = {c["name"].split("[")[0] for c in recs}
    dims = {c["name"].split("d=")[1][0] for c in recs if "S=3-5-7" in c["name"]}
    ok = all_pass(recs) and {"sigma.partition", "sigma.subgroup_size", "sigma.crt_sumset", "sigma.inclusion"} <= names \
        and dims == {"1", "2"} and s["wall_time"] < 10.0
    gate(2, "Sigma-lattice exactness", ok, f"tolerance 0, {len(recs)} checks, {s['wall_time']:.2f}s < 10s")


def test_c03_separation(report):
    recs = checks(report, "separation", "separation")
    ok = all_pass(recs) and len(recs) == 5
    gate(3, "goodness implies separation", ok, "exact rational comparison, tolerance 0")


def test_c04_denominator(report):
    s = suite(report, "denominator")
    fl = checks(report, "denominator", "float")
    ex = checks(report, "denominator", "exact")
    tol = 1e-9
    ok = all_pass(fl) and all_pass(ex) and all(c["threshold"] == tol and c["value"] <= tol for c in fl) \
        and all(parse_rational(c["value"]) == 0 for c in ex) and len(ex) == 4 and s["wall_time"] < 60.0
    gate(4, "denominator orthogonality", ok, f"exact 0 and float <= {tol:g} relative, {s['wall_time']:.2f}s < 60s")


def test_c05_numerator(report):
    recs = checks(report, "numerator", "sunflowers")
    tol = 1e-9
    ok = all_pass(recs) and all(c["value"] <= tol and c["n_sunflowers"] > 0 for c in recs)
    counts = sorted({c["n_sunflowers"] for c in recs})
    gate(5, "numerator orthogonality", ok, f"<= {tol:g} relative, sunflowers per system {counts}")


def test_c06_khintchine(report):
    ratio = checks(report, "khintchine", "r1_ratio")
    multi = checks(report, "khintchine", "multinomial")
    tol = 1e-9
    ok = all_pass(ratio) and all(abs(c["value"] - 1) <= tol for c in ratio) and all_pass(multi) \
        and multi[0]["threshold"] == "r<=6, n<=6"
    gate(6, "Khintchine r = 1 equality and multinomial inequality", ok, f"ratio 1 +- {tol:g}, multinomial exact")


def test_c07_polyrand(report):
    recs = checks(report, "polyrand", "exact_superortho")
    seen = set()
    for c in recs:
        tag = dict(x.split("=") for x in c["name"].split("[")[1].rstrip("]").split(","))
        seen.add(tuple(int(tag[key]) for key in ("p", "R", "k", "r")))
    ok = all_pass(recs) and all(parse_rational(c["value"]) == 0 for c in recs) and {(5, 4, 1, 2), (7, 4, 2, 1), (7, 6, 2, 1)} <= seen
    gate(7, "polynomial hypersystems superorthogonal", ok, "violation exactly 0")


def test_c08_sunflower(report):
    s = suite(report, "sunflower")
    sun = {c["name"]: c for c in checks(report, "sunflower", "sun[")}
    targets = {"k=1,r=1": 1, "k=1,r=2": 2, "k=1,r=3": 3, "k=1,r=4": 4, "k=2,r=2": 2}
    sun_ok = all(sun[f"sunflower.sun[{t}]"]["value"] == v for t, v in targets.items()) and all_pass(list(sun.values()))
    per = checks(report, "sunflower", "per[")
    per_all = [c for c in per if c["name"] == "sunflower.per[random distributions]"]
    per_ok = all_pass(per) and per_all[0]["trials"] == 100_000 and per_all[0]["value"] >= 0
    water = checks(report, "sunflower", "water")
    ok = sun_ok and per_ok and all_pass(water) and len(water) == 2 and s["wall_time"] < 300.0
    gate(8, "sunflower suite", ok, f"emp - 3 SE >= threshold over {per_all[0]['count']} configs at 1e5 trials, "
                                   f"water exact, {s['wall_time']:.2f}s < 300s")


def test_c09_sharpness(report):
    recs = [c for c in suite(report, "sharpness")["checks"] if c["kind"] == "exact"]
    disc = checks(report, "sharpness", "product_bernoulli_vs")
    direct = all(sharpness_polynomial(p, R)[1] == Fraction(1, p**R)
                 for p, R in ((3, 2), (5, 2), (5, 3)))
    ok = all_pass(recs) and direct and disc and disc[0]["value"]["differs_at"] > 0
    gate(9, "finite-field and product-Bernoulli sharpness", ok,
         f"tolerance 0, 2^(k-nk) differs from 2^-nk at {disc[0]['value']['differs_at']} points")


def test_c10_sampling(report):
    s1, s2 = suite(report, "unitarity"), suite(report, "sampling")
    utol, itol = 1e-10, 1e-9
    uni = [c for c in s1["checks"] + s2["checks"] if "unitarity[" in c["name"] or "deviation[" in c["name"]]
    tags = {c["name"] for c in uni}
    boxes_ok = any("Q=5" in t for t in tags) and any("Q=15" in t for t in tags) \
        and any("k=1" in t for t in tags) and any("k=2" in t for t in tags)
    trips = [c for c in s2["checks"] if "sample_after" in c["name"] or "interpolate_after" in c["name"]]
    qss = [c for c in s2["checks"] if "qss_p2" in c["name"]]
    ident = [c for c in s2["checks"] if c["name"] in ("sampling.sam_identity", "sampling.factorization")]
    ok = all_pass(uni) and boxes_ok and all(c["value"] <= utol for c in uni + trips + qss) and all_pass(trips) \
        and all_pass(qss) and all_pass(ident) and all(c["instances"] == 50 and c["value"] <= itol for c in ident) \
        and len(ident) == 2 and s1["wall_time"] + s2["wall_time"] < 180.0
    gate(10, "sampling and interpolation", ok, f"unitarity and round trips <= {utol:g}, qss p=2 1 +- {utol:g}, "
                                             f"identities <= {itol:g} on 50 instances")


def test_c11_envelope(report):
    s = suite(report, "envelope")
    exact = [c for c in s["checks"] if c["kind"] == "exact"]
    reported = {c["name"].split("[")[0] for c in s["checks"] if c["kind"] == "empirical"}
    need = {"envelope.khintchine", "envelope.functionals", "envelope.arith_functionals"}
    wiener = [c for c in exact if c["name"] == "envelope.wiener_fourth_moment"]
    qss_ps = {row["p"] for row in s["tables"]["qss"]}
    hoeff = s["tables"]["hoeffding"]
    ok = all_pass(exact) and need <= reported and wiener and qss_ps == {"1", "4", "inf"} and hoeff \
        and s["seed"] is not None
    gate(11, "empirical envelope archive", ok, f"CI well-formed, Wiener E|g|^4 = {wiener[0]['value']:.4f} "
                                             f"within 3 SE of 3, p=2 anchors exact")


def test_total_runtime_and_exit(report):
    ok = report["passed"] and report["total_wall"] < TOTAL_BUDGET_S
    line = f"acceptance total {'PASS' if ok else 'FAIL'}: {report['total_wall']:.1f}s < {TOTAL_BUDGET_S:.0f}s"
    ACCEPTANCE_LINES.append(line)
    assert ok, report["failing"]


def test_every_record_has_anchor(report):
    for s in report["suites"]:
        for c in s["checks"]:
            assert c["anchor"] == harness.ANCHORS[s["suite"]]
            assert c["kind"] in ("exact", "empirical") and c["status"] in ("pass", "fail", "reported")
    assert math.isfinite(report["total_wall"])
