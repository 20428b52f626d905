"""Analytic error decompositions for selectively tested binary outcomes.

The observed positive fraction decomposes exactly, realization by
realization, into a data-quality term, an interaction term between selection
and misclassification, and a pure misclassification bias term:

    ybar* - Ybar = sqrt((1-f)/f) * [ rho_IY * sigma_Y
                                     + rho_IPZ * sigma_PZ
                                     + sqrt(f/(1-f)) * (FP - (FP+FN)*Ybar) ]

with Z = 1 - 2Y.  Plugging realized rates and correlations into the right
hand side reproduces the left to machine precision; plugging model rates
gives the expectation-level prediction.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .population import (
    EmpiricalStats,
    FinitePopulation,
    MeasurementModel,
    SelectionModel,
)

__all__ = [
    "ErrorDecomposition",
    "AdjustmentFactors",
    "selection_error",
    "imperfect_error",
    "decompose_realization",
    "sigma_pz_analytic",
    "rho_ipz_from_rho_iy",
    "meas_adjustment",
    "meas_adjustment_rel",
    "d_m",
    "adjustment_factors",
    "corrected_prevalence",
    "contaminated_prevalence",
    "trial_effect_bias",
]


@dataclass(frozen=True)
class ErrorDecomposition:
    """Three labeled bracket terms and the total error they imply.

    The terms are the in-bracket quantities; the total is the bracket sum
    scaled by sqrt((1-f)/f).
    """

    data_quality_term: float
    interaction_term: float
    bias_term: float
    total_error: float
    f: float


@dataclass(frozen=True)
class AdjustmentFactors:
    """Both measurement-error brackets for a scenario.

    ``meas_adjustment`` multiplies rho*sigma in the error of the raw observed
    fraction; ``d_m`` is the bracket used with the corrected estimator.
    """

    meas_adjustment: float
    d_m: float


def _check_fraction(f: float) -> None:
    if not 0.0 < f < 1.0:
        raise ValueError(f"sampling fraction must lie strictly in (0, 1), got {f}")


def selection_error(rho_iy: float, f: float, sigma_y: float) -> float:
    """Error of the sample mean: data quality x data quantity x difficulty."""
    _check_fraction(f)
    return rho_iy * np.sqrt((1.0 - f) / f) * sigma_y


def imperfect_error(
    ybar: float,
    f: float,
    rho_iy: float,
    rho_ipz: float,
    sigma_pz: float,
    fp: float,
    fn: float,
    sigma_y: float | None = None,
) -> ErrorDecomposition:
    """Three-term decomposition of ybar* - Ybar from analytic inputs.

    Parameters
    ----------
    ybar : true prevalence.
    f : sampling fraction in (0, 1).
    rho_iy, rho_ipz : data quality and observed data quality.
    sigma_pz : standard deviation of P*Z (see ``sigma_pz_analytic``).
    fp, fn : misclassification rates (model or realized).
    sigma_y : optional override of sqrt(ybar*(1-ybar)); used with empirical
        inputs where the population difficulty is known exactly.
    """
    _check_fraction(f)
    if sigma_y is None:
        sigma_y = float(np.sqrt(ybar * (1.0 - ybar)))
    dq = rho_iy * sigma_y
    inter = rho_ipz * sigma_pz
    bias = np.sqrt(f / (1.0 - f)) * (fp - (fp + fn) * ybar)
    total = np.sqrt((1.0 - f) / f) * (dq + inter + bias)
    return ErrorDecomposition(
        data_quality_term=float(dq),
        interaction_term=float(inter),
        bias_term=float(bias),
        total_error=float(total),
        f=f,
    )


def decompose_realization(pop: FinitePopulation, stats: EmpiricalStats) -> ErrorDecomposition:
    """Decomposition with realized rates; total_error equals ybar* - Ybar exactly."""
    return imperfect_error(
        ybar=pop.prevalence,
        f=stats.f_hat,
        rho_iy=stats.rho_iy,
        rho_ipz=stats.rho_ipz,
        sigma_pz=stats.sigma_pz,
        fp=stats.fp_hat,
        fn=stats.fn_hat,
        sigma_y=pop.sigma_y,
    )


def sigma_pz_analytic(ybar: float, meas: MeasurementModel, exact: bool = False) -> float:
    """Standard deviation of the flip variable P*Z for binary outcomes.

    The default is the scenario closed form sqrt(2*Ybar*(FP(1-Ybar)+FN*Ybar)),
    the convention the scenario brackets are built on.  ``exact=True`` returns
    the true population moment sqrt(mix - mean_PZ^2) with
    mix = FP(1-Ybar)+FN*Ybar and mean_PZ = FP(1-Ybar)-FN*Ybar, which is what
    the empirical standard deviation converges to.
    """
    mix = meas.fp * (1.0 - ybar) + meas.fn * ybar
    if exact:
        mean_pz = meas.fp * (1.0 - ybar) - meas.fn * ybar
        return float(np.sqrt(mix - mean_pz ** 2))
    return float(np.sqrt(2.0 * ybar * mix))


def rho_ipz_from_rho_iy(
    rho_iy: float,
    sel: SelectionModel,
    meas: MeasurementModel,
    ybar: float,
) -> float:
    """Observed data quality implied by the true data quality.

    From Cov(I, PZ) = -Delta * Ybar(1-Ybar) * (FP+FN) and
    Cov(I, Y) = Delta * Ybar(1-Ybar):

        rho_IPZ = -rho_IY * (FP+FN) * sigma_Y / sigma_PZ

    with the exact sigma_PZ moment.  The sign is always opposite to rho_IY:
    flips are concentrated where selection is concentrated and push the
    observed mean the other way.  The selection design enters only through
    rho_IY itself; ``sel`` is kept for validation and interface symmetry.
    Verified against the Monte Carlo expectation of the empirical correlation
    (the scenario brackets ``meas_adjustment``/``d_m`` follow a different,
    scenario-level convention and are not consistent with this coefficient).
    """
    if not 0.0 < ybar < 1.0:
        raise ValueError("prevalence must lie strictly in (0, 1)")
    f = sel.overall_fraction(ybar)
    if f <= 0.0:
        raise ValueError("overall sampling fraction must be positive")
    sigma_pz = sigma_pz_analytic(ybar, meas, exact=True)
    if sigma_pz == 0.0:
        # No misclassification anywhere: PZ is identically zero.
        return 0.0
    sigma_y = np.sqrt(ybar * (1.0 - ybar))
    return float(-rho_iy * (meas.fp + meas.fn) * sigma_y / sigma_pz)


def meas_adjustment(sel: SelectionModel, meas: MeasurementModel, ybar: float) -> float:
    """Bracket multiplying rho*sigma after folding the interaction term in.

    1 - Delta * (Ybar/(1-Ybar)) * (FP(1-Ybar)+FN*Ybar) / f.  The equivalent
    parameterization through the relative rate is cross-checked whenever it is
    defined.
    """
    if ybar >= 1.0:
        raise ValueError("prevalence must be < 1")
    f = sel.overall_fraction(ybar)
    if f <= 0.0:
        raise ValueError("overall sampling fraction must be positive")
    mix = meas.fp * (1.0 - ybar) + meas.fn * ybar
    value = 1.0 - sel.delta * (ybar / (1.0 - ybar)) * mix / f
    if sel.f0 > 0.0:
        alt = meas_adjustment_rel(sel.relative_rate, meas, ybar)
        assert np.isclose(value, alt, rtol=1e-10), (value, alt)
    return float(value)


def meas_adjustment_rel(rel_rate: float, meas: MeasurementModel, ybar: float) -> float:
    """Relative-rate form of the adjustment; depends only on (M, Ybar, FP, FN)."""
    if ybar >= 1.0:
        raise ValueError("prevalence must be < 1")
    mix = meas.fp * (1.0 - ybar) + meas.fn * ybar
    return float(
        1.0
        - (rel_rate - 1.0) * (ybar / (1.0 - ybar)) * mix / ((1.0 - ybar) + rel_rate * ybar)
    )


def d_m(sel: SelectionModel, meas: MeasurementModel, ybar: float) -> float:
    """Measurement adjustment for the corrected estimator.

    1 + FP + FN - Delta * (Ybar/(1-Ybar)) * (FP(1-Ybar)+FN*Ybar) / f.  Reduces
    to 1 for a perfect test and to 1 + FP + FN under equal testing rates.
    """
    if ybar >= 1.0:
        raise ValueError("prevalence must be < 1")
    f = sel.overall_fraction(ybar)
    if f <= 0.0:
        raise ValueError("overall sampling fraction must be positive")
    mix = meas.fp * (1.0 - ybar) + meas.fn * ybar
    return float(1.0 + meas.fp + meas.fn - sel.delta * (ybar / (1.0 - ybar)) * mix / f)


def adjustment_factors(sel: SelectionModel, meas: MeasurementModel, ybar: float) -> AdjustmentFactors:
    return AdjustmentFactors(
        meas_adjustment=meas_adjustment(sel, meas, ybar),
        d_m=d_m(sel, meas, ybar),
    )


def corrected_prevalence(
    ybar_star: float,
    meas: MeasurementModel,
    method: str = "linear",
) -> float:
    """Adjust an observed positive fraction for known test error rates.

    ``linear`` applies ybar* + FN*ybar* - FP*(1-ybar*), the first-order
    correction; ``inverse`` applies the exact inversion
    (ybar* - FP) / (1 - FP - FN), which is unbiased under equal-probability
    sampling.  Results outside [0, 1] are clamped and flagged with a warning
    rather than silently truncated.
    """
    if method == "linear":
        value = ybar_star + meas.fn * ybar_star - meas.fp * (1.0 - ybar_star)
    elif method == "inverse":
        value = (ybar_star - meas.fp) / (1.0 - meas.fp - meas.fn)
    else:
        raise ValueError(f"unknown correction method {method!r}")
    if not 0.0 <= value <= 1.0:
        warnings.warn(
            f"corrected prevalence {value:.6g} outside [0, 1]; clamping",
            RuntimeWarning,
            stacklevel=2,
        )
        value = min(1.0, max(0.0, value))
    return float(value)


def contaminated_prevalence(ybar: float, meas: MeasurementModel) -> float:
    """Expected observed fraction under equal-probability sampling."""
    return ybar * (1.0 - meas.fn) + (1.0 - ybar) * meas.fp


def trial_effect_bias(beta1: float, exp_rho_iu: float, f: float, sigma_u: float) -> float:
    """Bias of a marginal treatment effect under selective recruitment.

    beta1 * E[rho_IU] * sqrt(f/(1-f)) * sigma_U.  Caution: the quantity factor
    here is sqrt(f/(1-f)), the reciprocal of the sqrt((1-f)/f) factor in
    ``selection_error``; under this convention the bias grows with the recruited
    fraction.
    """
    _check_fraction(f)
    return float(beta1 * exp_rho_iu * np.sqrt(f / (1.0 - f)) * sigma_u)
