import math

import numpy as np
import pytest

from casebias import (
    MeasurementModel,
    PERFECT_TEST,
    SelectionModel,
    adjustment_factors,
    contaminated_prevalence,
    corrected_prevalence,
    d_m,
    imperfect_error,
    make_population,
    mc_expectation,
    meas_adjustment,
    meas_adjustment_rel,
    selection_error,
    rho_ipz_from_rho_iy,
    sigma_pz_analytic,
    trial_effect_bias,
)

MEAS_REF = MeasurementModel(fp=0.005, fn=0.172)


def test_selection_error_zero_rho():
    assert selection_error(0.0, 0.3, 0.5) == 0.0


def test_selection_error_direct_evaluation():
    # 0.043 * sqrt(0.974/0.026) * sqrt(0.091*0.909), recomputed by hand
    value = selection_error(0.043, 0.026, math.sqrt(0.091 * 0.909))
    expected = 0.043 * math.sqrt(0.974 / 0.026) * math.sqrt(0.091 * 0.909)
    assert value == pytest.approx(expected, rel=1e-14)
    assert value == pytest.approx(0.0756944, abs=1e-6)


def test_selection_error_census_limit():
    assert selection_error(0.5, 1 - 1e-12, 0.5) == pytest.approx(0.0, abs=1e-5)
    with pytest.raises(ValueError):
        selection_error(0.5, 1.0, 0.5)
    with pytest.raises(ValueError):
        selection_error(0.5, 0.0, 0.5)


def test_selection_error_matches_mc_mean():
    pop = make_population(100_000, 0.091, seed=9)
    sel = SelectionModel.from_relative_rate(0.026, 2.0, 0.091)
    est = mc_expectation(pop, sel, PERFECT_TEST, "error", 1200, seed=21)
    rho = sel.delta * math.sqrt(0.091 * 0.909 / (0.026 * 0.974))
    assert abs(est.mean - selection_error(rho, 0.026, pop.sigma_y)) < 3 * est.std_error


def test_imperfect_error_reduces_to_selection_error():
    dec = imperfect_error(ybar=0.2, f=0.05, rho_iy=0.03, rho_ipz=0.0, sigma_pz=0.0, fp=0.0, fn=0.0)
    assert dec.interaction_term == 0.0
    assert dec.bias_term == 0.0
    assert dec.total_error == pytest.approx(selection_error(0.03, 0.05, math.sqrt(0.16)), rel=1e-12)


def test_imperfect_error_total_is_scaled_bracket_sum():
    dec = imperfect_error(ybar=0.1, f=0.02, rho_iy=0.04, rho_ipz=-0.01, sigma_pz=0.05, fp=0.01, fn=0.1)
    bracket = dec.data_quality_term + dec.interaction_term + dec.bias_term
    assert dec.total_error == pytest.approx(math.sqrt(0.98 / 0.02) * bracket, rel=1e-12)
    with pytest.raises(ValueError):
        imperfect_error(ybar=0.1, f=1.0, rho_iy=0.0, rho_ipz=0.0, sigma_pz=0.0, fp=0.0, fn=0.0)


def test_sigma_pz_closed_form():
    # sqrt(2*0.1*(0.005*0.9 + 0.172*0.1)) by direct evaluation
    assert sigma_pz_analytic(0.1, MEAS_REF) == pytest.approx(0.0658787, abs=1e-6)


def test_sigma_pz_exact_matches_population_moment():
    mix = 0.005 * 0.9 + 0.172 * 0.1
    mean_pz = 0.005 * 0.9 - 0.172 * 0.1
    assert sigma_pz_analytic(0.1, MEAS_REF, exact=True) == pytest.approx(
        math.sqrt(mix - mean_pz**2), rel=1e-12
    )


def test_rho_ipz_zero_cases():
    sel = SelectionModel(0.05, 0.05)
    assert rho_ipz_from_rho_iy(0.0, sel, MEAS_REF, 0.1) == 0.0
    assert rho_ipz_from_rho_iy(0.04, SelectionModel(0.02, 0.05), PERFECT_TEST, 0.1) == 0.0


def test_rho_ipz_sign_opposite():
    sel = SelectionModel(0.02, 0.05)
    for fp, fn in ((0.005, 0.172), (0.05, 0.05), (0.2, 0.1)):
        value = rho_ipz_from_rho_iy(0.04, sel, MeasurementModel(fp, fn), 0.1)
        assert value < 0.0


def test_rho_ipz_matches_mc_expectation():
    pop = make_population(100_000, 0.15, seed=102)
    sel = SelectionModel.from_relative_rate(0.026, 2.0, pop.prevalence)
    est_rho = mc_expectation(pop, sel, MEAS_REF, "rho_iy", 600, seed=1002)
    est_ipz = mc_expectation(pop, sel, MEAS_REF, "rho_ipz", 600, seed=2002)
    predicted = rho_ipz_from_rho_iy(est_rho.mean, sel, MEAS_REF, pop.prevalence)
    assert abs(est_ipz.mean - predicted) < 3 * est_ipz.std_error


def test_meas_adjustment_identity_cases():
    assert meas_adjustment(SelectionModel(0.02, 0.02), MEAS_REF, 0.091) == pytest.approx(1.0)
    assert meas_adjustment(SelectionModel(0.02, 0.05), PERFECT_TEST, 0.091) == pytest.approx(1.0)


def test_meas_adjustment_parameterizations_agree():
    sel = SelectionModel.from_relative_rate(0.026, 2.0, 0.091)
    delta_form = meas_adjustment(sel, MEAS_REF, 0.091)
    rel_form = meas_adjustment_rel(2.0, MEAS_REF, 0.091)
    assert delta_form == pytest.approx(rel_form, rel=1e-12)
    assert delta_form == pytest.approx(0.9981467, abs=1e-6)


def test_meas_adjustment_sign_law():
    rng = np.random.default_rng(7)
    for _ in range(200):
        ybar = rng.uniform(0.01, 0.99)
        f0 = rng.uniform(0.01, 0.4)
        f1 = rng.uniform(f0 + 1e-4, min(1.0, f0 + 0.5))
        meas = MeasurementModel(fp=rng.uniform(0.001, 0.4), fn=rng.uniform(0.001, 0.4))
        assert meas_adjustment(SelectionModel(f0, f1), meas, ybar) < 1.0


def test_adjustments_invariant_under_rate_rescaling():
    # (f0, f1) -> (c f0, c f1) moves Delta and f together; the brackets only
    # see Delta/f, so they cannot move.
    sel = SelectionModel(0.02, 0.05)
    scaled = SelectionModel(0.04, 0.10)
    for meas in (MEAS_REF, MeasurementModel(0.05, 0.05)):
        assert meas_adjustment(sel, meas, 0.2) == pytest.approx(
            meas_adjustment(scaled, meas, 0.2), rel=1e-12
        )
        assert d_m(sel, meas, 0.2) == pytest.approx(d_m(scaled, meas, 0.2), rel=1e-12)


def test_rel_form_depends_only_on_rate_ratio():
    values = {
        meas_adjustment_rel(1.5, MEAS_REF, 0.1)
        for _ in range(3)
    }
    assert len(values) == 1
    a = meas_adjustment(SelectionModel(0.01, 0.015), MEAS_REF, 0.1)
    b = meas_adjustment(SelectionModel(0.2, 0.3), MEAS_REF, 0.1)
    assert a == pytest.approx(b, rel=1e-12)


def test_d_m_identity_cases():
    assert d_m(SelectionModel(0.02, 0.05), PERFECT_TEST, 0.1) == pytest.approx(1.0)
    assert d_m(SelectionModel(0.02, 0.02), MEAS_REF, 0.1) == pytest.approx(1.0 + 0.005 + 0.172)


def test_adjustment_factors_bundle():
    sel = SelectionModel.from_relative_rate(0.026, 2.0, 0.091)
    factors = adjustment_factors(sel, MEAS_REF, 0.091)
    assert factors.meas_adjustment == pytest.approx(meas_adjustment(sel, MEAS_REF, 0.091))
    assert factors.d_m == pytest.approx(d_m(sel, MEAS_REF, 0.091))


def test_corrected_prevalence_reference_values():
    assert round(corrected_prevalence(0.139, MEAS_REF), 3) == 0.159
    assert round(corrected_prevalence(0.139, MeasurementModel(0.008, 0.116)), 3) == 0.148
    assert round(corrected_prevalence(0.139, MeasurementModel(0.003, 0.240)), 3) == 0.170


def test_corrected_prevalence_perfect_test_identity():
    assert corrected_prevalence(0.37, PERFECT_TEST) == 0.37


def test_corrected_prevalence_clamps_and_warns():
    with pytest.warns(RuntimeWarning):
        value = corrected_prevalence(0.001, MeasurementModel(0.05, 0.0))
    assert value == 0.0


def test_corrected_prevalence_inverse_round_trip():
    meas = MeasurementModel(0.03, 0.2)
    for ybar in (0.01, 0.2, 0.7):
        observed = contaminated_prevalence(ybar, meas)
        assert corrected_prevalence(observed, meas, method="inverse") == pytest.approx(
            ybar, rel=1e-12
        )
    with pytest.raises(ValueError):
        corrected_prevalence(0.5, meas, method="bogus")


def test_trial_effect_bias():
    assert trial_effect_bias(0.0, 0.1, 0.3, 1.0) == 0.0
    assert trial_effect_bias(2.0, 0.0, 0.3, 1.0) == 0.0
    assert trial_effect_bias(1.0, 0.1, 0.5, 1.0) == pytest.approx(0.1, rel=1e-12)
    with pytest.raises(ValueError):
        trial_effect_bias(1.0, 0.1, 0.0, 1.0)
