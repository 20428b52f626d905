"""Deterministic SIR integration and trajectory-level summaries.

Fixed-step fourth-order Runge-Kutta on

    dS/dt = -beta*S*I/N,   dI/dt = beta*S*I/N - gamma*I,   dR/dt = +gamma*I.

The removal rate ``gamma_rec`` is a model parameter; the serial interval used
by reproduction-number estimators is a separate quantity and is never
defaulted from it.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

__all__ = [
    "SirParams",
    "SirTrajectory",
    "sir_simulate",
    "new_cases_instant",
    "true_rt",
    "PeakTimes",
    "peak_time",
    "trajectory_csv",
]


@dataclass(frozen=True)
class SirParams:
    beta: float
    gamma_rec: float
    size: float
    s0: float
    i0: float
    r0: float = 0.0
    dt: float = 0.1
    horizon: int = 400

    def __post_init__(self):
        if self.beta <= 0.0 or self.gamma_rec <= 0.0:
            raise ValueError("beta and gamma_rec must be positive")
        if self.dt <= 0.0:
            raise ValueError("dt must be positive")
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if min(self.s0, self.i0, self.r0) < 0.0:
            raise ValueError("initial compartments must be nonnegative")
        if not np.isclose(self.s0 + self.i0 + self.r0, self.size, rtol=1e-9):
            raise ValueError("s0 + i0 + r0 must equal the population size")

    @property
    def basic_reproduction(self) -> float:
        return self.beta / self.gamma_rec


@dataclass(frozen=True)
class SirTrajectory:
    """Compartment paths on a fixed grid plus the per-step new-case series.

    ``new_cases[t]`` counts infections during step t -> t+1, computed as
    S[t] - S[t+1]; the state arrays have one more entry than ``new_cases``.
    """

    times: np.ndarray
    susceptible: np.ndarray
    infected: np.ndarray
    removed: np.ndarray
    new_cases: np.ndarray
    size: float

    def __post_init__(self):
        for name in ("times", "susceptible", "infected", "removed", "new_cases"):
            getattr(self, name).flags.writeable = False

    @property
    def prevalence(self) -> np.ndarray:
        return self.infected / self.size

    @property
    def new_case_fraction(self) -> np.ndarray:
        return self.new_cases / self.size


def _rhs(state: np.ndarray, beta: float, gamma: float, size: float) -> np.ndarray:
    s, i, _ = state
    force = beta * s * i / size
    return np.array([-force, force - gamma * i, gamma * i])


# Internal RK4 substeps per reported step: keeps the reported grid at dt while
# pushing the truncation error well under the 1e-6 * N step-halving budget.
_SUBSTEPS = 4


def sir_simulate(params: SirParams) -> SirTrajectory:
    """Integrate the SIR system with classical RK4 on a fixed ``dt`` grid.

    Each reported step is integrated with fixed internal substeps.
    Conservation S+I+R = N is a property of the vector field (the stage
    derivatives sum to zero), so it is checked, not enforced by projection.
    Negative compartments flag a too-large step.
    """
    n_steps = params.horizon
    state = np.array([params.s0, params.i0, params.r0], dtype=np.float64)
    path = np.empty((n_steps + 1, 3), dtype=np.float64)
    path[0] = state
    h = params.dt / _SUBSTEPS
    for t in range(n_steps):
        for _ in range(_SUBSTEPS):
            k1 = _rhs(state, params.beta, params.gamma_rec, params.size)
            k2 = _rhs(state + 0.5 * h * k1, params.beta, params.gamma_rec, params.size)
            k3 = _rhs(state + 0.5 * h * k2, params.beta, params.gamma_rec, params.size)
            k4 = _rhs(state + h * k3, params.beta, params.gamma_rec, params.size)
            state = state + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        path[t + 1] = state

    if not np.isfinite(path).all() or path.min() < 0.0:
        warnings.warn(
            "negative or nonfinite compartment encountered; decrease dt",
            RuntimeWarning,
            stacklevel=2,
        )
    drift = np.abs(path.sum(axis=1) - params.size).max()
    if not drift <= 1e-9 * params.size:
        warnings.warn(
            f"conservation drift {drift:.3g} exceeds 1e-9 * N",
            RuntimeWarning,
            stacklevel=2,
        )
    times = np.arange(n_steps + 1) * params.dt
    susceptible = path[:, 0]
    return SirTrajectory(
        times=times,
        susceptible=susceptible,
        infected=path[:, 1],
        removed=path[:, 2],
        new_cases=susceptible[:-1] - susceptible[1:],
        size=params.size,
    )


def new_cases_instant(traj: SirTrajectory, beta: float, dt: float) -> np.ndarray:
    """Instantaneous-rate variant beta*S_t*I_t/N * dt of the new-case series."""
    return beta * traj.susceptible[:-1] * traj.infected[:-1] / traj.size * dt


def true_rt(traj: SirTrajectory, serial_interval: float) -> np.ndarray:
    """Reproduction number 1 + log(K_t / K_{t-1}) / serial_interval per step.

    Aligned with ``new_cases``: entry t uses steps t and t-1; entry 0 and any
    step adjoining a nonpositive count are NaN (skipped, with a warning when
    zeros were present).
    """
    if serial_interval <= 0.0:
        raise ValueError("serial interval must be positive")
    k = traj.new_cases
    out = np.full(k.size, np.nan)
    valid = (k[1:] > 0.0) & (k[:-1] > 0.0)
    out[1:][valid] = 1.0 + np.log(k[1:][valid] / k[:-1][valid]) / serial_interval
    if not valid.all():
        warnings.warn(
            f"{int((~valid).sum())} steps skipped: nonpositive new-case counts",
            RuntimeWarning,
            stacklevel=2,
        )
    return out


class PeakTimes(NamedTuple):
    prevalence_peak: int
    incidence_peak: int


def peak_time(traj: SirTrajectory) -> PeakTimes:
    """Step indices of the prevalence (I) and incidence (K) maxima.

    Ties resolve to the earliest index, so a flat disease-free run reports 0.
    """
    return PeakTimes(
        prevalence_peak=int(np.argmax(traj.infected)),
        incidence_peak=int(np.argmax(traj.new_cases)),
    )


def trajectory_csv(traj: SirTrajectory) -> str:
    """CSV rows time,S,I,R,K,prevalence for steps 0..horizon-1.

    Each row carries the state at the start of the step and the new cases
    produced during it.
    """
    lines = ["time,S,I,R,K,prevalence"]
    prev = traj.prevalence
    for t in range(traj.new_cases.size):
        lines.append(
            f"{traj.times[t]:.6g},{traj.susceptible[t]:.6g},{traj.infected[t]:.6g},"
            f"{traj.removed[t]:.6g},{traj.new_cases[t]:.6g},{prev[t]:.6g}"
        )
    return "\n".join(lines) + "\n"
