import math

import pytest

import levy_default as lv


def test_version():
    assert lv.__version__ == lv.version()


def test_tilde_f_value():
    assert lv.tilde_f(2.0, 1.0, -1.0) == pytest.approx(0.0148663, abs=1e-7)


def test_survival_and_defect():
    assert lv.tilde_defect(1.0, -1.0) == pytest.approx(1 - math.exp(-2.0), abs=1e-12)
    assert lv.tilde_survival(0.0, 1.0, 0.0) == pytest.approx(1.0)


def test_lambda_zero_density_matches_closed_form():
    p = lv.Params(0.0, 0.0, lv.JumpLaw.point_mass(0.0), 1.0)
    e = lv.estimate_f(p, 1.0, 100, 0.01, 7)
    assert e["value"] == pytest.approx(lv.tilde_f(1.0, 1.0, 0.0), rel=1e-12)
    assert e["std_error"] == 0.0


def test_estimate_G_range_and_determinism():
    p = lv.Params(0.0, 1.0, lv.JumpLaw.exponential(1.0), 2.0)
    a = lv.estimate_G(p, 0.5, 10.0, 2000, 0.01, 3)
    b = lv.estimate_G(p, 0.5, 10.0, 2000, 0.01, 3)
    assert a == b
    assert 0.0 < a["value"] < 1.0


def test_f_at_zero():
    p = lv.Params(0.0, 1.0, lv.JumpLaw.exponential(1.0), 2.0)
    assert lv.f_at_zero(p) == pytest.approx(math.exp(-2.0))


def test_invalid_barrier_raises():
    with pytest.raises(ValueError, match="NonPositiveBarrier"):
        lv.Params(0.0, 0.0, lv.JumpLaw.point_mass(0.0), -1.0)


def test_sample_tau():
    p = lv.Params(1.0, 0.0, lv.JumpLaw.point_mass(0.0), 1.0)
    tau, at_jump = lv.sample_tau(p, 50.0, 0.01, 11)
    assert 0.0 < tau < 50.0
    assert not at_jump


def test_bounds_suite_passes():
    p = lv.Params(0.0, 1.0, lv.JumpLaw.exponential(1.0), 2.0)
    checks = lv.bounds_suite(p, 5)
    assert checks and all(c["passed"] for c in checks)


def test_lemma5_bound():
    value, bound = lv.lemma5_A(0.3, 0.5, 0.2, 0.5)
    assert 0.0 <= value <= bound
