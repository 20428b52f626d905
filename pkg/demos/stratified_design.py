#!/usr/bin/env python3
"""Designing a prevalence survey when risk varies across the population.

With low overall prevalence, uniform random sampling wastes most swabs on
groups where nearly everyone is negative.  Allocating by share times
within-stratum standard deviation concentrates the sample where the outcome
is actually uncertain.
"""
from casebias import (
    Stratum,
    design_variance,
    neyman_allocation,
    proportional_allocation,
    srs_variance,
)

STRATA = [
    ("low-contact remote", Stratum(0.55, 0.005)),
    ("general community", Stratum(0.30, 0.030)),
    ("service workers", Stratum(0.10, 0.120)),
    ("outbreak facilities", Stratum(0.05, 0.350)),
]


def main():
    strata = [s for _, s in STRATA]
    n = 2000
    ney = neyman_allocation(strata, n)
    prop = proportional_allocation(strata, n)

    print(f"{'stratum':<22}{'share':>7}{'prev':>7}{'sd':>8}{'neyman':>8}{'prop':>7}")
    for (name, s), n_h, p_h in zip(STRATA, ney, prop):
        print(f"{name:<22}{s.share:>7.2f}{s.prevalence:>7.3f}{s.sd:>8.4f}{n_h:>8d}{p_h:>7d}")
    print(f"{'total':<22}{'':>7}{'':>7}{'':>8}{int(ney.sum()):>8d}{int(prop.sum()):>7d}")

    v_ney = design_variance(strata, ney)
    v_prop = design_variance(strata, prop)
    pooled = sum(s.share * s.prevalence for s in strata)
    v_srs = srs_variance(pooled, n, 0, fpc=False)
    print(f"\npooled prevalence: {pooled:.4f}")
    print(f"estimator standard errors with n = {n}:")
    print(f"  simple random sampling  {v_srs ** 0.5:.5f}")
    print(f"  proportional allocation {v_prop ** 0.5:.5f}")
    print(f"  Neyman allocation       {v_ney ** 0.5:.5f}")
    print(f"variance saved vs SRS: {1 - v_ney / v_srs:.0%}")


if __name__ == "__main__":
    main()
