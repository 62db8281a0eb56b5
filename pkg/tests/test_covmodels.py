import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gaussmax import covmodels as cm


# --- eval and constructors ----------------------------------------------------

def test_weak_at_zero_is_one():
    assert cm.make_weak(1).eval(0.0) == 1.0


def test_weak_closed_form_at_one():
    assert cm.make_weak(1).eval(1.0) == pytest.approx(0.36787944117144233, rel=1e-15)


def test_b1_log_product_near_target():
    v = cm.make_b1(1, 0.5).eval(100.0) * math.log(100.0)
    assert v == pytest.approx(0.4971, abs=5e-4)
    assert abs(v - 0.5) / 0.5 < 0.02


def test_weak_alpha2_taylor():
    m = cm.make_weak(2)
    assert m.eval(0.1) == pytest.approx(0.9900498337491681, rel=1e-14)
    assert (1 - m.eval(0.1)) / 0.01 == pytest.approx(1.0, abs=0.01)


def test_weak_half_decays_fast():
    assert cm.make_weak(0.5).eval(1e6) * math.log(1e6) < 1e-3


@pytest.mark.parametrize("alpha", [0.0, -1.0, 2.5])
def test_weak_rejects_bad_alpha(alpha):
    with pytest.raises(ValueError):
        cm.make_weak(alpha)


def test_b1_second_differences_nonnegative():
    r = cm.make_b1(1, 0.5).eval(np.arange(0, 50.0001, 0.25))
    assert np.diff(r, 2).min() >= -1e-12


def test_b1_local_branch():
    assert 1 - cm.make_b1(1, 0.5).eval(0.001) == pytest.approx(0.001, rel=1e-12)


@pytest.mark.parametrize("alpha,r", [(1.5, 0.5), (1.0, 1.0), (1.0, 0.0), (1.0, 1.2)])
def test_b1_rejects(alpha, r):
    with pytest.raises(ValueError):
        cm.make_b1(alpha, r)


def test_b2_log_product_at_e16():
    t = math.exp(16) - math.e
    assert cm.make_b2(1).eval(t) * math.log(t) == pytest.approx(4.0, abs=2e-3)


def test_b2_local_branch_at_half():
    m = cm.make_b2(1)
    # the local branch 1 - t beats the tail branch at t = 0.5
    assert 1 - 0.5 >= math.log(cm.B2_LOG_SHIFT + 0.5) ** -0.5
    assert m.eval(0.5) == pytest.approx(0.5, abs=1e-15)


def test_b2_second_differences_nonnegative():
    r = cm.make_b2(1).eval(np.arange(0, 100.0001, 0.25))
    assert np.diff(r, 2).min() >= -1e-12


def test_b2_rejects_alpha_above_one():
    with pytest.raises(ValueError):
        cm.make_b2(1.2)


def test_eval_mirrors_negative_lags_and_vectorises():
    m = cm.make_b1(0.7, 0.3)
    t = np.array([0.3, 2.0, 40.0])
    np.testing.assert_array_equal(m.eval(-t), m.eval(t))
    assert m.eval(t).shape == (3,)


# --- residual correlation ----------------------------------------------------

def test_residual_endpoints():
    m = cm.make_b2(1)
    assert cm.residual_correlation(m, 0.0, 100.0) == pytest.approx(1.0, abs=1e-15)
    assert cm.residual_correlation(m, 100.0, 100.0) == 0.0


def test_residual_two_ways():
    m = cm.make_b2(1)
    direct = (m.eval(1.0) - m.eval(100.0)) / (1 - m.eval(100.0))
    assert abs(cm.residual_correlation(m, 1.0, 100.0) - direct) <= 1e-14


def test_residual_rejects_t_beyond_T():
    with pytest.raises(ValueError):
        cm.residual_correlation(cm.make_weak(1), 11.0, 10.0)


def test_residual_in_unit_interval_for_polya_families():
    t = np.linspace(0, 500, 2001)
    for m in (cm.make_b1(1, 0.5), cm.make_b2(1), cm.make_b2(0.5)):
        v = cm.residual_correlation(m, t, 500.0)
        assert v.min() >= -1e-15 and v.max() <= 1 + 1e-15


# --- regime diagnostics ------------------------------------------------------

def test_regimes_of_shipped_families():
    assert cm.regime_diagnostics(cm.make_weak(1)).classification == cm.BERMAN
    rep = cm.regime_diagnostics(cm.make_b1(1, 0.5))
    assert rep.classification == cm.STRONG_FINITE
    assert abs(rep.limit_estimate - 0.5) / 0.5 < 0.05
    assert cm.regime_diagnostics(cm.make_b2(1)).classification == cm.STRONG_INFINITE


def test_classification_is_function_of_probes():
    rep = cm.regime_diagnostics(cm.make_b1(0.5, 0.2), t_max=1e6, n_probes=10)
    assert cm.classify_probes(rep.probe_values) == (rep.limit_estimate, rep.classification)
    assert len(rep.probe_values) == 10


def test_classify_thresholds():
    assert cm.classify_probes([(10, 0.001), (100, 0.002), (1000, 0.003)])[1] == cm.BERMAN
    assert cm.classify_probes([(10, 11), (100, 12), (1000, 13)])[1] == cm.STRONG_INFINITE
    assert cm.classify_probes([(10, 1.0), (100, 1.02), (1000, 1.01)])[1] == cm.STRONG_FINITE
    assert cm.classify_probes([(10, 1.0), (100, 2.0), (1000, 1.0)])[1] == cm.UNDETERMINED


def test_regime_preconditions():
    with pytest.raises(ValueError):
        cm.regime_diagnostics(cm.make_weak(1), t_max=5)
    with pytest.raises(ValueError):
        cm.regime_diagnostics(cm.make_weak(1), n_probes=2)


# --- Polya validation --------------------------------------------------------

def test_polya_b1_passes():
    assert cm.validate_polya(cm.make_b1(1, 0.5), 0.25, 50.0).passed


def test_polya_cosine_fails_monotonicity():
    rep = cm.validate_polya(cm.from_function(np.cos, name="cos"), 0.1, 10.0)
    assert not rep.passed
    assert rep.reason == "not nonincreasing"
    assert rep.first_violation_lag == pytest.approx(math.pi, abs=0.11)


def test_polya_gaussian_is_correlation_but_not_polya():
    rep = cm.validate_polya(cm.make_weak(2), 0.1, 10.0)
    assert rep.status == "not-polya" and rep.is_correlation
    assert rep.reason == "not convex"
    assert rep.first_violation_lag <= 0.8


def test_polya_non_psd_table():
    m = cm.from_table([0, 1, 2, 3], [1, -0.9, -0.9, -0.9])
    rep = cm.validate_polya(m, 1.0, 3.0)
    assert rep.status == "not-a-correlation" and not rep.is_correlation


# --- invariants --------------------------------------------------------------

SHIPPED = [cm.make_weak(0.5), cm.make_weak(1), cm.make_weak(2), cm.make_b1(1, 0.5),
           cm.make_b1(0.5, 0.9), cm.make_b2(1), cm.make_b2(0.3)]


@pytest.mark.parametrize("model", SHIPPED, ids=lambda m: f"{m.family}-{m.alpha}")
def test_bounded_and_below_one(model):
    # below t**alpha ~ 1e-16 the value rounds to 1.0 in double precision
    t = np.concatenate([np.geomspace(1e-6, 1e9, 4000), np.linspace(0, 100, 4001)[1:]])
    v = model.eval(t)
    assert model.eval(0.0) == 1.0
    assert np.all(np.abs(v) <= 1.0) and np.all(v < 1.0)


LOCAL_OK = [cm.make_weak(1), cm.make_weak(2), cm.make_b1(1, 0.5), cm.make_b2(1), cm.make_b2(0.3)]


@pytest.mark.parametrize("model", LOCAL_OK, ids=lambda m: f"{m.family}-{m.alpha}")
def test_local_condition(model):
    k = np.arange(4, 15)
    t = 2.0 ** -k
    ratio = (1 - model.eval(t)) / t ** model.alpha
    assert np.all(np.abs(ratio - 1) <= 0.05)
    dev = np.abs(ratio - 1)
    assert dev[-1] <= dev[0] + 1e-12


@pytest.mark.parametrize("model", [cm.make_weak(0.5), cm.make_b1(0.5, 0.9)],
                         ids=lambda m: f"{m.family}-{m.alpha}")
def test_local_condition_small_alpha_is_asymptotic(model):
    # 1 - exp(-x) = x (1 - x/2 + ...) with x = t**alpha: at alpha = 1/2 and
    # t = 1/16 the ratio is 0.885; for B1 with r near 1 the tail branch
    # dominates until t**alpha is small.  Only the limit is guaranteed.
    t = 2.0 ** -np.arange(4, 41)
    dev = np.abs((1 - model.eval(t)) / t ** model.alpha - 1)
    assert dev[-1] <= 0.05 and dev[-1] < dev[0]
    # cancellation in 1 - r(t) leaves noise of order 1e-16 / t**alpha
    assert np.all(np.diff(dev[-20:]) <= 1e-8)


@pytest.mark.parametrize("model", [m for m in SHIPPED if m.family != "weak"] + [cm.make_weak(1)],
                         ids=lambda m: f"{m.family}-{m.alpha}")
@pytest.mark.parametrize("h", [1.0, 0.25, 1 / 16])
def test_polya_second_differences(model, h):
    r = model.eval(np.arange(0, 200 + h / 2, h))
    assert np.diff(r, 2).min() >= -cm.CONVEXITY_TOL


@settings(max_examples=60, deadline=None)
@given(alpha=st.floats(0.05, 1.0), r=st.floats(0.01, 0.99),
       t=st.one_of(st.just(0.0), st.floats(1e-6, 1e12)))
def test_b1_property_bounds(alpha, r, t):
    m = cm.make_b1(alpha, r)
    v = m.eval(t)
    assert 0.0 < v <= 1.0
    assert (v < 1.0) or t == 0.0


# --- tables ------------------------------------------------------------------

def test_table_roundtrip_csv(tmp_path):
    p = tmp_path / "tab.csv"
    lags = np.arange(0, 5.0, 0.5)
    p.write_text("lag,value\n" + "".join(f"{a},{math.exp(-a)!r}\n" for a in lags))
    m = cm.load_table_csv(p)
    assert m.family == "table"
    assert m.eval(1.0) == pytest.approx(math.exp(-1), rel=1e-15)
    assert m.eval(0.25) == pytest.approx((1 + math.exp(-0.5)) / 2, rel=1e-15)


def test_table_rejects_bad_lag0():
    with pytest.raises(ValueError):
        cm.from_table([0, 1, 2], [1 - 1e-9, 0.5, 0.2])
    cm.from_table([0, 1, 2], [1 - 1e-13, 0.5, 0.2])


def test_table_rejects_nonuniform_and_header(tmp_path):
    with pytest.raises(ValueError):
        cm.from_table([0, 1, 3], [1, 0.5, 0.2])
    p = tmp_path / "bad.csv"
    p.write_text("t,r\n0,1\n1,0.5\n")
    with pytest.raises(ValueError):
        cm.load_table_csv(p)


def test_model_key_stable_and_distinct():
    assert cm.make_b1(1, 0.5).key() == cm.make_b1(1, 0.5).key()
    assert cm.make_b1(1, 0.5).key() != cm.make_b1(1, 0.4).key()
    assert cm.make_weak(1).key() != cm.make_b2(1).key()
