from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from malab.adelic import (
    AdelicSignal,
    AliasingError,
    FreqBox,
    SupportError,
    adelic_dft,
    adelic_factorization_check,
    adelic_idft,
    arith_limit_functionals,
    interpolate,
    pi_project,
    projection_norm_probe,
    qss_ratio,
    random_adelic,
    random_admissible,
    sam_identity_check,
    sam_identity_raw,
    sample,
    verify_unitarity,
    zhat_pairing,
    zmod_pairing,
)
from malab.arcs import MajorArcParams, largest_good_eps, sigma_leq
from malab.exact import TorusPoint
from malab.harmonic import BoxSymbol, CyclicSignal, dft, representation_count

HALF = Fraction(1, 2)


def F_(x):
    return TorusPoint.of(Fraction(x))


def good(S, k, r):
    p = MajorArcParams(1, k, tuple(S), HALF)
    return p.with_eps(largest_good_eps(p, r, HALF))


def test_pi_project():
    assert pi_project(F_(Fraction(1, 60)), F_(Fraction(1, 3))) == F_(Fraction(7, 20))
    assert pi_project(F_(Fraction(1, 2)), F_(Fraction(3, 4))) == F_(Fraction(1, 4))


def test_adelic_transform_round_trip():
    F = random_adelic(12, 4, 1, None, hdim=2, seed=0, theta_max=Fraction(1, 2) - Fraction(1, 12))
    back = adelic_idft(adelic_dft(F), 12, 4, 1)
    assert np.allclose(back.values, F.values, atol=1e-10)


def test_sample_of_character():
    W, Q = 60, 4
    for t, a in [(1, 1), (2, 3), (-3, 0)]:
        x = np.arange(W)[:, None]
        y = np.arange(Q)[None, :]
        F = AdelicSignal(W, Q, 1, np.exp(-2j * np.pi * (x * t / W + y * a / Q)))
        spec = dft(sample(F))[:, 0]
        img = pi_project(F_(Fraction(t, W)), F_(Fraction(a, Q)))
        peak = int(np.argmax(np.abs(spec)))
        assert Fraction(peak, W) == img.coords[0]
        assert abs(spec[peak]) == pytest.approx(W)


def test_adelic_norm_weighting():
    F = AdelicSignal(6, 3, 1, np.ones((6, 3)))
    assert F.norm(2) == pytest.approx(np.sqrt(6))
    assert F.norm(float("inf")) == 1.0


def test_signal_shape_checks():
    with pytest.raises(ValueError):
        AdelicSignal(10, 3, 1, np.zeros((10, 3)))
    with pytest.raises(ValueError):
        AdelicSignal(12, 3, 1, np.zeros((12, 4)))


@pytest.mark.parametrize("trial", range(100))
def test_interpolate_sample_round_trip(trial):
    rng = np.random.default_rng(trial)
    Q = int(rng.choice([2, 3, 4, 6]))
    W = Q * int(rng.integers(5, 15))
    box = FreqBox.shannon(Q, Fraction(int(rng.integers(1, 5)), 10))
    f = random_admissible(box, W, seed=trial, hdim=2)
    F = interpolate(f, box)
    assert np.allclose(sample(F).values, f.values, atol=1e-9)
    assert F.norm(2) == pytest.approx(f.norm(2), rel=1e-10)
    G = random_adelic(W, Q, 1, box, seed=trial + 1000)
    assert np.allclose(interpolate(sample(G), box).values, G.values, atol=1e-9)


def test_unitarity_boxes():
    assert verify_unitarity(FreqBox.shannon(6, Fraction(1, 3)), 120, 10, 0) <= 1e-12
    assert verify_unitarity(FreqBox.shannon(3, Fraction(1, 4), d=2), 24, 5, 1) <= 1e-12
    params = good((3, 5), 1, 1)
    box = FreqBox.for_params(params)
    assert verify_unitarity(box, 1500, 10, 2) <= 1e-12


def test_aliasing_detection():
    box = FreqBox(Fraction(1, 4), (F_(0), F_(Fraction(1, 3))))
    assert not box.is_nonaliasing()
    with pytest.raises(AliasingError):
        verify_unitarity(box, 60, 1, 0)
    assert not FreqBox(HALF, (F_(0),)).is_nonaliasing()
    assert FreqBox(Fraction(1, 7), (F_(0), F_(Fraction(1, 3)))).is_nonaliasing()


def test_freqbox_json_round_trip():
    box = FreqBox(Fraction(1, 40), (F_(Fraction(1, 3)), F_(0)))
    assert FreqBox.from_json(box.to_json()) == box
    assert box.to_json()["eps"] == "1/40"


def test_support_error_and_projection():
    box = FreqBox.shannon(3, Fraction(1, 4))
    rng = np.random.default_rng(0)
    f = CyclicSignal(60, 1, rng.standard_normal(60))
    with pytest.raises(SupportError):
        interpolate(f, box)
    F = interpolate(f, box, project=True)
    g = sample(F)
    assert g.norm(2) < f.norm(2)
    assert np.allclose(interpolate(g, box).values, F.values, atol=1e-10)


def test_qss_ratios():
    two = qss_ratio(4, Fraction(1, 3), 2, trials=20, seed=0)
    assert two["min"] == pytest.approx(1, rel=1e-10) and two["max"] == pytest.approx(1, rel=1e-10)
    sup = qss_ratio(4, Fraction(1, 3), float("inf"), trials=20, seed=1)
    assert sup["max"] <= 1 + 1e-12
    W, Q = 40, 4
    tone = AdelicSignal(W, Q, 1, np.exp(-2j * np.pi * np.arange(Q) / Q)[None, :].repeat(W, 0))
    assert sample(tone).norm(float("inf")) / tone.norm(float("inf")) == pytest.approx(1)
    with pytest.raises(ValueError):
        qss_ratio(4, HALF, 2)


def test_sam_identity_alias_free():
    W, Q = 120, 6
    rng = np.random.default_rng(5)
    m = BoxSymbol.random(Fraction(1, 20), W, 1, rng)
    sigma = [F_(0), F_(Fraction(1, 3)), F_(Fraction(1, 2))]
    F = random_adelic(W, Q, 1, None, hdim=2, seed=6, theta_max=Fraction(1, 2 * Q) - Fraction(1, W))
    res = sam_identity_check(m, sigma, F, tol=1e-9)
    assert res["passed"], res


def test_sam_identity_counterexample():
    W = Q = 15
    x = np.arange(W)[:, None]
    y = np.arange(Q)[None, :]
    F = AdelicSignal(W, Q, 1, np.exp(-2j * np.pi * (x / 15 + 14 * y / 15)))
    m = BoxSymbol.constant(1, Fraction(1, 15), W, 1)
    assert sam_identity_raw(m, [F_(0)], F) == pytest.approx(1, abs=1e-9)
    with pytest.raises(AliasingError):
        sam_identity_check(m, [F_(0)], F)


@pytest.mark.parametrize("kind", ["one", "constant", "random"])
def test_factorization(kind):
    params = good((3, 5), 1, 1)
    W = 1500
    rng = np.random.default_rng(1)
    sigma = list(sigma_leq(params))
    if kind == "one":
        m = {a: BoxSymbol.constant(1, params.eps, W, 1) for a in sigma}
    elif kind == "constant":
        m = {a: BoxSymbol.constant(complex(rng.standard_normal()), params.eps, W, 1) for a in sigma}
    else:
        m = {a: BoxSymbol.random(params.eps, W, 1, rng) for a in sigma}
    f = CyclicSignal(W, 1, rng.standard_normal((W, 2)))
    res = adelic_factorization_check(m, params, 1, HALF, f)
    assert res["passed"], res


def test_factorization_rejects_wide_symbol():
    params = good((3, 5), 1, 1)
    W = 1500
    m = {a: BoxSymbol.constant(1, 2 * params.eps, W, 1) for a in sigma_leq(params)}
    with pytest.raises(ValueError):
        adelic_factorization_check(m, params, 1, HALF, CyclicSignal.zeros(W, 1))


@pytest.mark.parametrize("r", [1, 2, 3])
def test_arith_single_tone(r):
    params = MajorArcParams(1, 2, (3, 5), Fraction(1, 1000))
    for a in (0, Fraction(1, 3), Fraction(4, 15)):
        alpha = F_(a)
        out = arith_limit_functionals(params, {alpha: [2.0, -1.0]}, r)
        norm = np.sqrt(5)
        assert out["lhs"] == pytest.approx(norm)
        assert out["mid"] == pytest.approx(representation_count(params, alpha) ** (1 / (2 * r)) * norm)


def test_arith_rejects_foreign_frequency():
    params = MajorArcParams(1, 1, (3, 5), Fraction(1, 1000))
    with pytest.raises(ValueError):
        arith_limit_functionals(params, {F_(Fraction(1, 15)): [1.0]}, 1)


def test_projection_norms():
    params = MajorArcParams(1, 1, (3, 5), Fraction(1, 1000))
    assert projection_norm_probe(params, 2, 1, 0)["norm"] == 1.0
    out = projection_norm_probe(params, 4, 5, 0)
    assert out["lower_bound"] >= 1 - 1e-9


def test_pairings_agree():
    for Q in range(1, 61):
        for a in range(Q):
            alpha = Fraction(a, Q)
            for x in (-7, 0, 1, 13, 10**6 + 3):
                assert zhat_pairing(x, alpha) == zmod_pairing(x % Q, alpha, Q)


@given(st.integers(-10**9, 10**9), st.integers(1, 60), st.integers(0, 59))
def test_pairing_is_additive(x, q, a):
    alpha = Fraction(a % q, q)
    assert zhat_pairing(x + 1, alpha) == (zhat_pairing(x, alpha) + zhat_pairing(1, alpha)) % 1
