"""Observed-data estimators and their analytic bias predictors.

Covers the two-period ratio estimator for rates of change, the log-ratio
estimator of the effective reproduction number, bias curves along an SIR
trajectory, exponential smoothing of reported series, and the inversion that
recovers the relative testing rate from a survey-anchored prevalence error.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import brentq

from .population import MeasurementModel, SelectionModel
from .decomposition import corrected_prevalence, d_m
from .effsize import binary_rho
from .epidemic import SirTrajectory

__all__ = [
    "InfeasibleScenarioError",
    "PeriodStats",
    "TwoPeriodContext",
    "error_level",
    "ratio_bias",
    "rt_estimate",
    "rt_error",
    "period_stats_analytic",
    "BiasCurves",
    "bias_curves",
    "bias_curves_csv",
    "exp_smooth",
    "SensitivityResult",
    "forward_rho_dm",
    "solve_delta",
    "estimate_relative_sampling",
    "survey_interval",
]


class InfeasibleScenarioError(RuntimeError):
    """The requested scenario leaves the domain of the estimator algebra."""


@dataclass(frozen=True)
class PeriodStats:
    """Per-period ingredients of the two-period bias formulas."""

    rho: float
    d_m: float
    f: float
    cv: float
    ybar: float

    def __post_init__(self):
        if not 0.0 < self.f < 1.0:
            raise ValueError("f must lie strictly in (0, 1)")
        if self.cv < 0.0:
            raise ValueError("cv must be nonnegative")


@dataclass(frozen=True)
class TwoPeriodContext:
    prev: PeriodStats
    curr: PeriodStats


def error_level(p: PeriodStats) -> float:
    """Relative error level rho * D_M * sqrt((1-f)/f) * CV of one period."""
    return p.rho * p.d_m * math.sqrt((1.0 - p.f) / p.f) * p.cv


def ratio_bias(ctx: TwoPeriodContext) -> float:
    """Second-order bias of the observed rate of change ybar_t / ybar_{t-1}.

    (Ybar_t/Ybar_{t-1}) * [e_t - e_{t-1}] * [1 - e_{t-1}] with e_j the period
    error levels.  Zero exactly when data quality, quantity, difficulty and
    measurement adjustment all repeat across periods.
    """
    if ctx.prev.ybar <= 0.0:
        raise ValueError("previous-period prevalence must be positive")
    e_prev = error_level(ctx.prev)
    e_curr = error_level(ctx.curr)
    return (ctx.curr.ybar / ctx.prev.ybar) * (e_curr - e_prev) * (1.0 - e_prev)


def rt_estimate(ybar_t: float, ybar_prev: float, serial_interval: float) -> float:
    """Reproduction-number estimate 1 + log(ybar_t/ybar_{t-1}) / serial_interval."""
    if ybar_t <= 0.0 or ybar_prev <= 0.0:
        raise ValueError("both inputs must be positive")
    if serial_interval <= 0.0:
        raise ValueError("serial interval must be positive")
    return 1.0 + math.log(ybar_t / ybar_prev) / serial_interval


def rt_error(ctx: TwoPeriodContext, s_ratio: float, serial_interval: float) -> float:
    """Error of the estimated reproduction number at one step.

    (1/serial_interval) * [log(1 + e) - log(S_t/S_{t-1})] where
    e = (e_t - e_{t-1}) * (1 - e_{t-1}) from the per-period error levels over
    the new-case series.  e <= -1 means the log-scale algebra breaks down and
    raises InfeasibleScenarioError.
    """
    if not 0.0 < s_ratio <= 1.0:
        raise ValueError("s_ratio must lie in (0, 1]")
    if serial_interval <= 0.0:
        raise ValueError("serial interval must be positive")
    e_prev = error_level(ctx.prev)
    e_curr = error_level(ctx.curr)
    e = (e_curr - e_prev) * (1.0 - e_prev)
    if e <= -1.0:
        raise InfeasibleScenarioError(f"combined error {e:.6g} <= -1")
    return (math.log1p(e) - math.log(s_ratio)) / serial_interval


def period_stats_analytic(
    ybar: float,
    f: float,
    rel_rate: float,
    meas: MeasurementModel,
) -> PeriodStats:
    """Analytic period ingredients for a binary share ``ybar`` under (f, M).

    rho comes from the binary closed form with Delta implied by (f, M, ybar),
    D_M from the measurement adjustment, and CV from the binary standard
    deviation, sqrt((1-ybar)/ybar).
    """
    if not 0.0 < ybar < 1.0:
        raise ValueError("ybar must lie strictly in (0, 1)")
    sel = SelectionModel.from_relative_rate(f, rel_rate, ybar)
    rho = binary_rho(sel.delta, ybar, f)
    adj = d_m(sel, meas, ybar)
    cv = math.sqrt((1.0 - ybar) / ybar)
    return PeriodStats(rho=rho, d_m=adj, f=f, cv=cv, ybar=ybar)


@dataclass(frozen=True)
class BiasCurves:
    """Per-step bias predictions along a trajectory, one row per step.

    ``ratio_bias`` and ``rt_bias`` have shape (len(rel_rates), n_steps); NaN
    marks skipped steps (nonpositive driving share or log-domain failures),
    with the step indices collected in ``flagged``.
    """

    steps: np.ndarray
    rel_rates: tuple
    ratio_bias: np.ndarray
    rt_bias: np.ndarray
    flagged: tuple


def bias_curves(
    traj: SirTrajectory,
    f: float,
    meas: MeasurementModel,
    rel_rates: Sequence[float],
    serial_interval: float,
    driver: str = "cases",
    exact_susceptible: bool = False,
) -> BiasCurves:
    """Ratio-of-change and reproduction-number bias curves along a trajectory.

    Both curves are driven by the new-case fraction series by default
    (``driver="cases"``); ``driver="prevalence"`` switches the ratio curve to
    the infected fraction.  The reproduction-number curve always follows the
    new-case series, with the susceptible ratio set to 1 unless
    ``exact_susceptible`` pulls it from the trajectory.
    """
    if driver not in ("cases", "prevalence"):
        raise ValueError(f"unknown driver {driver!r}")
    k_frac = traj.new_case_fraction
    if driver == "cases":
        ratio_series = k_frac
    else:
        ratio_series = traj.prevalence[: k_frac.size]
    n_steps = k_frac.size
    rel_rates = tuple(rel_rates)
    ratio_out = np.full((len(rel_rates), n_steps), np.nan)
    rt_out = np.full((len(rel_rates), n_steps), np.nan)
    flagged = set()

    for m_idx, m in enumerate(rel_rates):
        for t in range(1, n_steps):
            s_ratio = 1.0
            if exact_susceptible:
                s_ratio = traj.susceptible[t] / traj.susceptible[t - 1]
            ok_ratio = ratio_series[t - 1] > 0.0 and ratio_series[t] > 0.0
            ok_rt = k_frac[t - 1] > 0.0 and k_frac[t] > 0.0
            if ok_ratio:
                ctx = TwoPeriodContext(
                    prev=period_stats_analytic(ratio_series[t - 1], f, m, meas),
                    curr=period_stats_analytic(ratio_series[t], f, m, meas),
                )
                ratio_out[m_idx, t] = ratio_bias(ctx)
            else:
                flagged.add(t)
            if ok_rt:
                ctx_k = TwoPeriodContext(
                    prev=period_stats_analytic(k_frac[t - 1], f, m, meas),
                    curr=period_stats_analytic(k_frac[t], f, m, meas),
                )
                try:
                    rt_out[m_idx, t] = rt_error(ctx_k, s_ratio, serial_interval)
                except InfeasibleScenarioError:
                    flagged.add(t)
            else:
                flagged.add(t)

    if flagged:
        warnings.warn(
            f"{len(flagged)} steps flagged (zero shares or log-domain failures)",
            RuntimeWarning,
            stacklevel=2,
        )
    return BiasCurves(
        steps=np.arange(n_steps),
        rel_rates=rel_rates,
        ratio_bias=ratio_out,
        rt_bias=rt_out,
        flagged=tuple(sorted(flagged)),
    )


def bias_curves_csv(curves: BiasCurves) -> str:
    """CSV rows step,M,ratio_bias,rt_bias (NaN cells rendered as nan)."""
    lines = ["step,M,ratio_bias,rt_bias"]
    for m_idx, m in enumerate(curves.rel_rates):
        for t in curves.steps:
            lines.append(
                f"{t},{m:g},{curves.ratio_bias[m_idx, t]:.6g},{curves.rt_bias[m_idx, t]:.6g}"
            )
    return "\n".join(lines) + "\n"


def exp_smooth(series: Sequence[float], alpha: float) -> np.ndarray:
    """Exponential smoothing s_0 = x_0, s_t = alpha*x_t + (1-alpha)*s_{t-1}."""
    if not 0.0 < alpha <= 1.0:
        raise ValueError("alpha must lie in (0, 1]")
    arr = np.asarray(series, dtype=np.float64)
    if arr.size == 0:
        raise ValueError("series must be nonempty")
    out = np.empty_like(arr)
    out[0] = arr[0]
    for t in range(1, arr.size):
        out[t] = alpha * arr[t] + (1.0 - alpha) * out[t - 1]
    return out


@dataclass(frozen=True)
class SensitivityResult:
    """Outputs of the survey-anchored data-quality inversion."""

    rho_dm: float
    delta: float
    rel_rate: float
    f0: float
    f1: float
    ci_low: float
    ci_high: float


def forward_rho_dm(delta: float, ybar: float, f: float, meas: MeasurementModel) -> float:
    """Forward map Delta -> rho(Delta) * D_M(Delta) at fixed (ybar, f, FP, FN).

    Uses f0 = f - Delta*ybar, the testing rate pair consistent with the
    overall fraction.
    """
    f0 = f - delta * ybar
    sel = SelectionModel(f0=f0, f1=f0 + delta)
    return binary_rho(delta, ybar, f) * d_m(sel, meas, ybar)


def solve_delta(target_rho_dm: float, ybar: float, f: float, meas: MeasurementModel) -> float:
    """Invert the forward map for the testing differential Delta.

    Brackets the root inside the feasible region (both implied testing rates
    in (0, 1)), restricted to the branch below the vertex of the quadratic so
    the map is monotone; monotonicity is verified on a grid before solving.
    """
    if target_rho_dm == 0.0:
        return 0.0
    eps = 1e-12
    hi = f / ybar * (1.0 - eps)          # keeps f0 > 0
    hi = min(hi, (1.0 - f) / (1.0 - ybar) * (1.0 - eps))  # keeps f1 < 1
    lo = -f / (1.0 - ybar) * (1.0 - eps)  # keeps f1 > 0
    lo = max(lo, (f - 1.0) / ybar * (1.0 - eps))  # keeps f0 < 1
    # rho*D_M is a downward quadratic in Delta; stay on its increasing branch.
    mix = meas.fp * (1.0 - ybar) + meas.fn * ybar
    curv = (ybar / (1.0 - ybar)) * mix / f
    if curv > 0.0:
        vertex = (1.0 + meas.fp + meas.fn) / (2.0 * curv)
        hi = min(hi, vertex)
    grid = np.linspace(lo, hi, 33)
    values = np.array([forward_rho_dm(d, ybar, f, meas) for d in grid])
    if not (np.diff(values) > 0.0).all():
        raise InfeasibleScenarioError("forward map not monotone on the feasible bracket")
    g_lo = forward_rho_dm(lo, ybar, f, meas)
    g_hi = forward_rho_dm(hi, ybar, f, meas)
    if not g_lo <= target_rho_dm <= g_hi:
        raise InfeasibleScenarioError(
            f"no feasible differential: target {target_rho_dm:.6g} outside "
            f"[{g_lo:.6g}, {g_hi:.6g}]"
        )
    return float(
        brentq(
            lambda d: forward_rho_dm(d, ybar, f, meas) - target_rho_dm,
            lo,
            hi,
            xtol=1e-16,
            rtol=8.9e-16,
        )
    )


def _invert_once(error: float, ybar: float, f: float, meas: MeasurementModel):
    """Solve for (rho_dm, delta, M, f0, f1) given a prevalence error."""
    sigma_y = math.sqrt(ybar * (1.0 - ybar))
    rho_dm = math.sqrt(f / (1.0 - f)) * error / sigma_y
    delta = solve_delta(rho_dm, ybar, f, meas)
    f0 = f - delta * ybar
    f1 = f0 + delta
    return rho_dm, delta, f1 / f0, f0, f1


def estimate_relative_sampling(
    survey_prev_adjusted: float,
    observed_prev_adjusted: float,
    f: float,
    meas: MeasurementModel,
    ybar_anchor: Optional[float] = None,
    meas_ranges: Optional[tuple] = None,
) -> SensitivityResult:
    """Relative testing rate implied by a survey-anchored prevalence error.

    The error is the adjusted case-count prevalence minus the adjusted survey
    prevalence; the survey value anchors the true prevalence (override with
    ``ybar_anchor``).  Solving rho*D_M = sqrt(f/(1-f)) * error / sigma_Y for
    the testing differential gives Delta and M = f1/f0.

    ``meas_ranges`` is ((fp_low, fp_high), (fn_low, fn_high)).  When given,
    the interval on M re-solves the whole chain at the four rate corners: the
    raw survey share is recovered by inverting the central correction, then
    re-adjusted at each corner, which moves the error, the anchor, and the
    adjustment together.  The observed adjusted prevalence is held as given.
    """
    if not 0.0 < f < 1.0:
        raise ValueError("f must lie strictly in (0, 1)")
    for name, v in (("survey", survey_prev_adjusted), ("observed", observed_prev_adjusted)):
        if not 0.0 < v < 1.0:
            raise ValueError(f"{name} prevalence must lie strictly in (0, 1)")
    anchor = survey_prev_adjusted if ybar_anchor is None else ybar_anchor
    error = observed_prev_adjusted - survey_prev_adjusted

    rho_dm, delta, rel_rate, f0, f1 = _invert_once(error, anchor, f, meas)

    ci_low = ci_high = rel_rate
    if meas_ranges is not None:
        (fp_lo, fp_hi), (fn_lo, fn_hi) = meas_ranges
        survey_raw = (survey_prev_adjusted + meas.fp) / (1.0 + meas.fp + meas.fn)
        for fp_c in (fp_lo, fp_hi):
            for fn_c in (fn_lo, fn_hi):
                meas_c = MeasurementModel(fp=fp_c, fn=fn_c)
                survey_c = corrected_prevalence(survey_raw, meas_c)
                error_c = observed_prev_adjusted - survey_c
                _, _, m_c, _, _ = _invert_once(error_c, survey_c, f, meas_c)
                ci_low = min(ci_low, m_c)
                ci_high = max(ci_high, m_c)

    return SensitivityResult(
        rho_dm=rho_dm,
        delta=delta,
        rel_rate=rel_rate,
        f0=f0,
        f1=f1,
        ci_low=ci_low,
        ci_high=ci_high,
    )


def survey_interval(p_raw: float, n: int, z: float = 2.0) -> tuple:
    """Sampling interval p +- z*sqrt(p(1-p)/n) for a raw survey share."""
    if not 0.0 < p_raw < 1.0:
        raise ValueError("survey share must lie strictly in (0, 1)")
    if n < 2:
        raise ValueError("survey size must be >= 2")
    half = z * math.sqrt(p_raw * (1.0 - p_raw) / n)
    return (p_raw - half, p_raw + half)
