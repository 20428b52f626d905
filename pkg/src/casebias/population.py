"""Finite populations, selective testing draws, and Monte Carlo expectations.

The sampling model is Bernoulli selection with status-dependent rates: a
positive individual enters the tested sample with probability ``f1``, a
negative one with probability ``f0``.  Misclassification flips are drawn for
every individual but consumed only where the selection indicator is 1; the
population-wide flip vector is what makes the three-term error identity exact
realization by realization.

All moments are population moments (1/N normalization).  The exact identities
checked elsewhere hold only under that convention.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

__all__ = [
    "DegenerateSampleError",
    "FinitePopulation",
    "SelectionModel",
    "MeasurementModel",
    "PERFECT_TEST",
    "Realization",
    "EmpiricalStats",
    "MCEstimate",
    "make_population",
    "realize",
    "empirical_stats",
    "mc_expectation",
]

SeedLike = Union[int, np.random.SeedSequence, np.random.Generator]


class DegenerateSampleError(RuntimeError):
    """A realization cannot support the requested statistic (n=0, n=N, ...)."""


@dataclass(frozen=True)
class FinitePopulation:
    """Fixed binary disease indicators for N individuals."""

    outcomes: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.outcomes, dtype=np.int8)
        if arr.ndim != 1 or arr.size < 2:
            raise ValueError("population needs a 1-d outcome vector of length >= 2")
        if not np.isin(arr, (0, 1)).all():
            raise ValueError("outcomes must be 0/1")
        arr.flags.writeable = False
        object.__setattr__(self, "outcomes", arr)

    @property
    def size(self) -> int:
        return int(self.outcomes.size)

    @property
    def total(self) -> int:
        """Number of positive individuals."""
        return int(self.outcomes.sum())

    @property
    def prevalence(self) -> float:
        return self.total / self.size

    @property
    def sigma_y(self) -> float:
        """Population standard deviation sqrt(prev * (1 - prev))."""
        p = self.prevalence
        return float(np.sqrt(p * (1.0 - p)))


@dataclass(frozen=True)
class SelectionModel:
    """Status-dependent testing rates.

    ``f0`` is the probability a negative individual gets tested, ``f1`` the
    probability a positive individual does.
    """

    f0: float
    f1: float

    def __post_init__(self):
        for name in ("f0", "f1"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")

    @property
    def delta(self) -> float:
        """Testing-rate differential f1 - f0."""
        return self.f1 - self.f0

    @property
    def relative_rate(self) -> float:
        """f1 / f0; undefined for f0 = 0."""
        if self.f0 == 0.0:
            raise ValueError("relative rate undefined when f0 = 0")
        return self.f1 / self.f0

    def overall_fraction(self, prevalence: float) -> float:
        """Expected tested fraction f = f1*prev + f0*(1 - prev)."""
        return self.f1 * prevalence + self.f0 * (1.0 - prevalence)

    @classmethod
    def from_relative_rate(cls, f: float, rel_rate: float, prevalence: float) -> "SelectionModel":
        """Build (f0, f1) from the overall fraction f and the ratio f1/f0.

        Inverts f = f1*prev + f0*(1-prev) with f1 = rel_rate * f0, i.e.
        f0 = f / (prev*(rel_rate - 1) + 1).
        """
        if rel_rate <= 0.0:
            raise ValueError("relative rate must be positive")
        f0 = f / (prevalence * (rel_rate - 1.0) + 1.0)
        return cls(f0=f0, f1=rel_rate * f0)


@dataclass(frozen=True)
class MeasurementModel:
    """False-positive / false-negative rates of the test."""

    fp: float
    fn: float

    def __post_init__(self):
        for name in ("fp", "fn"):
            v = getattr(self, name)
            if not 0.0 <= v < 1.0:
                raise ValueError(f"{name} must lie in [0, 1), got {v}")
        if self.fp + self.fn >= 1.0:
            # fp + fn < 1 keeps the test more informative than a coin flip and
            # the linear correction invertible.
            raise ValueError("fp + fn must be < 1")

    @property
    def is_perfect(self) -> bool:
        return self.fp == 0.0 and self.fn == 0.0


PERFECT_TEST = MeasurementModel(0.0, 0.0)


@dataclass(frozen=True)
class Realization:
    """One draw of selection indicators and flip indicators.

    ``observed`` holds Y* = Y(1-P) + (1-Y)P for every individual; it is
    meaningful only where ``selected`` is True, but the flip vector is kept
    population-wide because the error identity sums P*Z against the selection
    indicator over the whole population.
    """

    selected: np.ndarray
    flipped: np.ndarray
    observed: np.ndarray

    def __post_init__(self):
        for name in ("selected", "flipped", "observed"):
            arr = getattr(self, name)
            arr.flags.writeable = False

    @property
    def n(self) -> int:
        """Realized sample size."""
        return int(np.count_nonzero(self.selected))


@dataclass(frozen=True)
class EmpiricalStats:
    """Population-level statistics of one realization (1/N moments)."""

    f_hat: float
    ybar_star: float
    rho_iy: float
    rho_ipz: float
    sigma_pz: float
    fp_hat: float
    fn_hat: float
    f0_hat: float
    f1_hat: float


@dataclass(frozen=True)
class MCEstimate:
    """Monte Carlo mean with its standard error."""

    mean: float
    std_error: float
    replications: int
    degenerate: int = 0


def make_population(size: int, prevalence: float, seed: SeedLike) -> FinitePopulation:
    """Population with an exact count of positives, round(prevalence * size).

    The count is deterministic so that the prevalence and problem difficulty
    are known constants; only the placement of positives is randomized.
    """
    if size < 2:
        raise ValueError("size must be >= 2")
    if not 0.0 <= prevalence <= 1.0:
        raise ValueError("prevalence must lie in [0, 1]")
    ones = int(round(prevalence * size))
    rng = np.random.default_rng(seed)
    outcomes = np.zeros(size, dtype=np.int8)
    if ones > 0:
        outcomes[rng.choice(size, size=ones, replace=False)] = 1
    return FinitePopulation(outcomes)


def realize(
    pop: FinitePopulation,
    sel: SelectionModel,
    meas: MeasurementModel,
    seed: SeedLike,
) -> Realization:
    """Draw selection and flip indicators for every individual.

    Selection uniforms are drawn before flip uniforms, so a given seed fixes
    the realization exactly.
    """
    rng = np.random.default_rng(seed)
    y = pop.outcomes
    pos = y == 1
    p_select = np.where(pos, sel.f1, sel.f0)
    selected = rng.random(pop.size) < p_select
    p_flip = np.where(pos, meas.fn, meas.fp)
    flipped = rng.random(pop.size) < p_flip
    observed = (pos ^ flipped).astype(np.int8)
    return Realization(selected=selected, flipped=flipped, observed=observed)


def empirical_stats(pop: FinitePopulation, r: Realization) -> EmpiricalStats:
    """Finite-population statistics of a realization.

    Raises DegenerateSampleError when the sample is empty, when everyone is
    selected (selection variance zero), or when the population itself has no
    outcome variance, since the correlations are undefined in those cases.
    ``rho_ipz`` is reported as 0.0 when no flips occurred anywhere (the
    covariance is exactly zero as well, so the identity is unaffected).
    """
    y = pop.outcomes
    n_pop = pop.size
    sel = r.selected
    n = r.n
    if n == 0:
        raise DegenerateSampleError("empty sample: observed mean undefined")
    if n == n_pop:
        raise DegenerateSampleError("census: selection variance is zero, rho undefined")
    ybar = pop.prevalence
    sigma_y = pop.sigma_y
    if sigma_y == 0.0:
        raise DegenerateSampleError("population outcomes are constant, rho undefined")

    # Every statistic below is a function of eight joint counts over
    # (Y, selected, flipped); integer counting keeps them exact and fast.
    pos = y == 1
    flip = r.flipped
    n_pos = pop.total
    n_neg = n_pop - n_pos
    sel_pos = int(np.count_nonzero(sel & pos))
    flip_pos = int(np.count_nonzero(flip & pos))
    flip_neg = int(np.count_nonzero(flip)) - flip_pos
    sel_flip = sel & flip
    sel_flip_pos = int(np.count_nonzero(sel_flip & pos))
    sel_flip_neg = int(np.count_nonzero(sel_flip)) - sel_flip_pos

    f_hat = n / n_pop
    sigma_i = np.sqrt(f_hat * (1.0 - f_hat))
    # Observed positives: unflipped true positives plus flipped negatives.
    ybar_star = ((sel_pos - sel_flip_pos) + sel_flip_neg) / n

    cov_iy = sel_pos / n_pop - f_hat * ybar
    rho_iy = cov_iy / (sigma_i * sigma_y)

    # PZ = P * (1 - 2Y) is +1 on flipped negatives, -1 on flipped positives.
    mean_pz = (flip_neg - flip_pos) / n_pop
    var_pz = (flip_neg + flip_pos) / n_pop - mean_pz ** 2
    sigma_pz = float(np.sqrt(var_pz))
    cov_ipz = (sel_flip_neg - sel_flip_pos) / n_pop - f_hat * mean_pz
    rho_ipz = cov_ipz / (sigma_i * sigma_pz) if sigma_pz > 0.0 else 0.0

    fn_hat = flip_pos / n_pos if n_pos else 0.0
    fp_hat = flip_neg / n_neg if n_neg else 0.0
    f1_hat = sel_pos / n_pos if n_pos else 0.0
    f0_hat = (n - sel_pos) / n_neg if n_neg else 0.0

    return EmpiricalStats(
        f_hat=f_hat,
        ybar_star=float(ybar_star),
        rho_iy=float(rho_iy),
        rho_ipz=float(rho_ipz),
        sigma_pz=sigma_pz,
        fp_hat=fp_hat,
        fn_hat=fn_hat,
        f0_hat=f0_hat,
        f1_hat=f1_hat,
    )


Functional = Union[str, Callable[[FinitePopulation, EmpiricalStats], float]]

FUNCTIONALS = {
    "rho_iy": lambda pop, s: s.rho_iy,
    "rho_iy_sq": lambda pop, s: s.rho_iy ** 2,
    "rho_ipz": lambda pop, s: s.rho_ipz,
    "ybar_star": lambda pop, s: s.ybar_star,
    "f_hat": lambda pop, s: s.f_hat,
    "error": lambda pop, s: s.ybar_star - pop.prevalence,
    "sq_error": lambda pop, s: (s.ybar_star - pop.prevalence) ** 2,
}


def mc_expectation(
    pop: FinitePopulation,
    sel: SelectionModel,
    meas: MeasurementModel,
    functional: Functional,
    replications: int,
    seed: SeedLike,
) -> MCEstimate:
    """Monte Carlo expectation of a statistic over independent realizations.

    Per-replication seeds are spawned deterministically from the master seed,
    so the result does not depend on evaluation order.  Degenerate
    realizations are skipped and counted; more than 50% degenerate is an
    error.

    Parameters
    ----------
    functional : str or callable
        Either a key of ``FUNCTIONALS`` or a callable ``(pop, stats) -> float``.
    """
    if replications < 2:
        raise ValueError("replications must be >= 2")
    if isinstance(functional, str):
        try:
            func = FUNCTIONALS[functional]
        except KeyError:
            raise ValueError(
                f"unknown functional {functional!r}; choose from {sorted(FUNCTIONALS)}"
            ) from None
    else:
        func = functional

    master = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    children = master.spawn(replications)
    values = np.empty(replications, dtype=np.float64)
    used = 0
    degenerate = 0
    for child in children:
        r = realize(pop, sel, meas, child)
        try:
            stats = empirical_stats(pop, r)
        except DegenerateSampleError:
            degenerate += 1
            continue
        values[used] = func(pop, stats)
        used += 1
    if degenerate > replications // 2:
        raise DegenerateSampleError(
            f"{degenerate}/{replications} replications degenerate"
        )
    sample = values[:used]
    mean = float(sample.mean())
    std_error = float(sample.std(ddof=1) / np.sqrt(used))
    return MCEstimate(mean=mean, std_error=std_error, replications=used, degenerate=degenerate)
