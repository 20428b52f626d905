"""Cross-population comparison statistics under selective testing.

Z-scores for prevalence differences, the population adjustment that makes
them scale with the smaller population, effective-sample-size-aware Z-scores,
error decompositions for raw and per-capita count differences, and two-country
reproduction-number gap trajectories.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .population import MeasurementModel
from .epidemic import SirTrajectory, true_rt
from .estimators import (
    InfeasibleScenarioError,
    TwoPeriodContext,
    period_stats_analytic,
    rt_error,
)

__all__ = [
    "PopulationSummary",
    "ZScore",
    "prevalence_z",
    "starred_z",
    "population_adjustment",
    "delta_diff_threshold",
    "z_eff",
    "DiffError",
    "count_diff_error",
    "percapita_diff_error",
    "RtGap",
    "rt_gap",
    "rt_gap_csv",
]


@dataclass(frozen=True)
class PopulationSummary:
    """One population's size, design and error ingredients."""

    size: float
    f: float
    ybar_hat: float
    rho: float
    d_m: float
    sigma_y: float

    def __post_init__(self):
        if self.size < 2:
            raise ValueError("population size must be >= 2")
        if not 0.0 < self.f < 1.0:
            raise ValueError("f must lie strictly in (0, 1)")

    @property
    def n(self) -> float:
        return self.f * self.size

    @property
    def quantity(self) -> float:
        return math.sqrt((1.0 - self.f) / self.f)


@dataclass(frozen=True)
class ZScore:
    """Observed Z-score plus the analytic form of its numerator error."""

    z: float
    z_analytic: float


def prevalence_z(
    a: PopulationSummary,
    b: PopulationSummary,
    sigma_null: Optional[float] = None,
) -> ZScore:
    """Z-score of a prevalence difference against its equal-probability variance.

    Under the null the two difficulties coincide; ``sigma_null`` defaults to
    the pooled binary standard deviation.  ``z`` divides the observed gap by
    sqrt(V_SRS); ``z_analytic`` replaces the gap with its selection-error form
    rho*D*sqrt((1-f)/f) per population, which isolates what the statistic
    actually measures when both true prevalences are equal.
    """
    if sigma_null is None:
        pooled = 0.5 * (a.ybar_hat + b.ybar_hat)
        sigma_null = math.sqrt(pooled * (1.0 - pooled))
    var_srs = (
        (1.0 - a.f) / a.f / (a.size - 1.0) + (1.0 - b.f) / b.f / (b.size - 1.0)
    ) * sigma_null ** 2
    denom = math.sqrt(var_srs)
    gap = a.ybar_hat - b.ybar_hat
    analytic_gap = sigma_null * (
        a.rho * a.d_m * a.quantity - b.rho * b.d_m * b.quantity
    )
    return ZScore(z=gap / denom, z_analytic=analytic_gap / denom)


def starred_z(rho1: float, rho2: float, n1: float, n2: float) -> float:
    """Equal-f, unit-D simplification of the analytic Z-score.

    sqrt((N1-1)(N2-1)/(N1+N2-2)) * (rho1 - rho2); the exact denominator is
    N1+N2-2, which ``population_adjustment`` approximates by N1+N2.
    """
    return math.sqrt((n1 - 1.0) * (n2 - 1.0) / (n1 + n2 - 2.0)) * (rho1 - rho2)


def population_adjustment(n1: float, n2: float) -> float:
    """sqrt((N1-1)(N2-1)/(N1+N2)); about sqrt(min(N)-1) for lopsided sizes."""
    if n1 < 2 or n2 < 2:
        raise ValueError("population sizes must be >= 2")
    return math.sqrt((n1 - 1.0) * (n2 - 1.0) / (n1 + n2))


def delta_diff_threshold(n1: float, n2: float, f: float, ybar: float) -> float:
    """Differential gap |Delta_1 - Delta_2| keeping |Z| below 1 at equal f.

    From |Z| = adjustment * |rho1 - rho2| and the binary closed form for rho:
    threshold = sqrt(f(1-f)/(Ybar(1-Ybar))) / adjustment (exact N1+N2-2
    form).  Around 10% prevalence and a few-percent f the rho factor is close
    to 2, so the threshold is roughly 1/(2 * adjustment).
    """
    if not 0.0 < f < 1.0 or not 0.0 < ybar < 1.0:
        raise ValueError("f and ybar must lie strictly in (0, 1)")
    rho_factor = math.sqrt(ybar * (1.0 - ybar) / (f * (1.0 - f)))
    adj_exact = math.sqrt((n1 - 1.0) * (n2 - 1.0) / (n1 + n2 - 2.0))
    return 1.0 / (rho_factor * adj_exact)


def z_eff(
    ybar1: float,
    ybar2: float,
    neff1: float,
    neff2: float,
    f: float,
    sigma_y: float,
) -> float:
    """Z-score built on effective rather than nominal sample sizes.

    (ybar1 - ybar2) / [ ((1-f)/f) * sigma * sqrt(1/(neff1-1) + 1/(neff2-1)) ].
    """
    if neff1 <= 1.0 or neff2 <= 1.0:
        raise ValueError("effective sample sizes must exceed 1")
    if not 0.0 < f < 1.0:
        raise ValueError("f must lie strictly in (0, 1)")
    denom = (1.0 - f) / f * sigma_y * math.sqrt(
        1.0 / (neff1 - 1.0) + 1.0 / (neff2 - 1.0)
    )
    return (ybar1 - ybar2) / denom


@dataclass(frozen=True)
class DiffError:
    """Selection-driven and scale-driven parts of a two-population difference."""

    selection_term: float
    scale_term: float


def count_diff_error(
    a: PopulationSummary,
    b: PopulationSummary,
    n1: Optional[float] = None,
    n2: Optional[float] = None,
) -> DiffError:
    """Error decomposition of a raw case-count difference y1 - y2.

    selection = n1*sigma1*rho1*sqrt((1-f1)/f1)*D1 - (same for 2);
    scale = f1*Y1 - f2*Y2 with Y_j the total counts.  With matched designs the
    selection term is proportional to n1 - n2, so it scales with the relative
    population sizes.
    """
    n1 = a.n if n1 is None else n1
    n2 = b.n if n2 is None else n2
    selection = (
        n1 * a.sigma_y * a.rho * a.quantity * a.d_m
        - n2 * b.sigma_y * b.rho * b.quantity * b.d_m
    )
    scale = a.f * (a.ybar_hat * a.size) - b.f * (b.ybar_hat * b.size)
    return DiffError(selection_term=float(selection), scale_term=float(scale))


def percapita_diff_error(a: PopulationSummary, b: PopulationSummary) -> DiffError:
    """Error decomposition of a per-capita difference y1/N1 - y2/N2.

    selection = sigma1*rho1*sqrt(f1(1-f1))*D1 - (same for 2); scale =
    f1*Ybar1 - f2*Ybar2.  Matched designs cancel the selection term exactly,
    independent of the population sizes.
    """
    selection = (
        a.sigma_y * a.rho * math.sqrt(a.f * (1.0 - a.f)) * a.d_m
        - b.sigma_y * b.rho * math.sqrt(b.f * (1.0 - b.f)) * b.d_m
    )
    scale = a.f * a.ybar_hat - b.f * b.ybar_hat
    return DiffError(selection_term=float(selection), scale_term=float(scale))


@dataclass(frozen=True)
class RtGap:
    """Aligned two-country reproduction-number gap trajectories."""

    steps: np.ndarray
    true_a: np.ndarray
    true_b: np.ndarray
    est_a: np.ndarray
    est_b: np.ndarray
    flagged: tuple

    @property
    def true_gap(self) -> np.ndarray:
        return self.true_a - self.true_b

    @property
    def est_gap(self) -> np.ndarray:
        return self.est_a - self.est_b


def _first_case_step(traj: SirTrajectory) -> int:
    pos = np.nonzero(traj.new_cases > 0.0)[0]
    if pos.size == 0:
        raise ValueError("trajectory has no cases")
    return int(pos[0])


def rt_gap(
    traj_a: SirTrajectory,
    traj_b: SirTrajectory,
    f: float,
    meas: MeasurementModel,
    rel_rate: float,
    serial_interval: float,
    exact_susceptible: bool = False,
) -> RtGap:
    """True and estimated reproduction-number gaps between two countries.

    Series are aligned so step 0 is each country's first case.  Each country's
    estimated value adds its own log-scale error, driven by its own new-case
    fraction; by construction est_gap - true_gap equals
    (1/serial) * log((1+e_A)/(1+e_B)).
    """
    offsets = (_first_case_step(traj_a), _first_case_step(traj_b))
    k_a = traj_a.new_case_fraction[offsets[0]:]
    k_b = traj_b.new_case_fraction[offsets[1]:]
    n_steps = min(k_a.size, k_b.size)

    rts = []
    for traj, off in zip((traj_a, traj_b), offsets):
        rt_full = true_rt(traj, serial_interval)
        rts.append(rt_full[off:off + n_steps])
    true_a, true_b = rts

    est_a = np.full(n_steps, np.nan)
    est_b = np.full(n_steps, np.nan)
    flagged = set()
    for name, k, traj, off, true_vals, est in (
        ("A", k_a, traj_a, offsets[0], true_a, est_a),
        ("B", k_b, traj_b, offsets[1], true_b, est_b),
    ):
        for t in range(1, n_steps):
            if not (k[t - 1] > 0.0 and k[t] > 0.0) or math.isnan(true_vals[t]):
                flagged.add(t)
                continue
            s_ratio = 1.0
            if exact_susceptible:
                s_ratio = traj.susceptible[off + t] / traj.susceptible[off + t - 1]
            ctx = TwoPeriodContext(
                prev=period_stats_analytic(k[t - 1], f, rel_rate, meas),
                curr=period_stats_analytic(k[t], f, rel_rate, meas),
            )
            try:
                est[t] = true_vals[t] + rt_error(ctx, s_ratio, serial_interval)
            except InfeasibleScenarioError:
                flagged.add(t)
    flagged.add(0)
    return RtGap(
        steps=np.arange(n_steps),
        true_a=true_a,
        true_b=true_b,
        est_a=est_a,
        est_b=est_b,
        flagged=tuple(sorted(flagged)),
    )


def rt_gap_csv(gap: RtGap) -> str:
    """CSV rows step,true_rt_A,true_rt_B,est_rt_A,est_rt_B,true_gap,est_gap."""
    lines = ["step,true_rt_A,true_rt_B,est_rt_A,est_rt_B,true_gap,est_gap"]
    tg = gap.true_gap
    eg = gap.est_gap
    for t in gap.steps:
        lines.append(
            f"{t},{gap.true_a[t]:.6g},{gap.true_b[t]:.6g},{gap.est_a[t]:.6g},"
            f"{gap.est_b[t]:.6g},{tg[t]:.6g},{eg[t]:.6g}"
        )
    return "\n".join(lines) + "\n"
