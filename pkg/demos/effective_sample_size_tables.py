#!/usr/bin/env python3
"""Effective sample sizes for selectively tested populations.

How many random swabs would buy the same mean squared error as millions of
self-selected tests?  The script prints the bound for a 2020-US-sized
scenario (f = 2.6% tested, prevalence around 9%), sweeps a grid of
prevalences and relative testing rates with and without assay error, and
finishes with the capacity tradeoff: what doubling testing volume buys when
test quality slips at the same time.
"""
import math

from casebias import (
    EffSizeScenario,
    MeasurementModel,
    binary_rho,
    capacity_tradeoff,
    format_neff_table,
    neff_bound,
    neff_table,
)

YBARS = [0.016, 0.036, 0.056, 0.076, 0.096]
RATES = [1.2, 1.4, 1.6, 1.8, 2.0]
ASSAY = MeasurementModel(fp=0.005, fn=0.172)


def main():
    sc = EffSizeScenario(ybar=0.091, rel_rate=2.0, f=0.026)
    rho = binary_rho(sc.delta, sc.ybar, sc.f)
    print("Scenario: 2.6% of the population tested, positives 2x more likely")
    print(f"  implied rates f0={sc.selection.f0:.4f}, f1={sc.selection.f1:.4f}")
    print(f"  data quality rho = {rho:.4f}")
    print(f"  effective sample size <= {neff_bound(sc):.2f}")
    sc_err = EffSizeScenario(ybar=0.091, rel_rate=2.0, f=0.026, meas=ASSAY)
    print(f"  with FP=0.5%, FN=17.2%:  {neff_bound(sc_err):.2f}")
    mild = EffSizeScenario(ybar=0.096, rel_rate=1.2, f=0.026)
    mild_err = EffSizeScenario(ybar=0.096, rel_rate=1.2, f=0.026, meas=ASSAY)
    print(f"  milder selection (M=1.2): {neff_bound(mild):.1f} -> {neff_bound(mild_err):.1f}")

    print("\nFloored bounds, perfect test (rows = prevalence, columns = M):")
    print(format_neff_table(neff_table(YBARS, RATES, 0.026), YBARS, RATES))
    print("Same grid with the imperfect assay:")
    print(format_neff_table(neff_table(YBARS, RATES, 0.026, ASSAY), YBARS, RATES))

    print("Capacity tradeoff: f 5% -> 10% while FP 0.5%->5% and FN 5%->20%")
    result = capacity_tradeoff(
        0.05, 0.10, MeasurementModel(0.005, 0.05), MeasurementModel(0.05, 0.20), 0.091, 1.5
    )
    print(f"  naive effective-size gain  {result.neff_factor_naive:.2f}x")
    print(f"  actual effective-size gain {result.neff_factor:.2f}x")
    print(f"  naive MSE reduction  {result.mse_reduction_naive:.0%}")
    print(f"  actual MSE reduction {result.mse_reduction:.0%}")
    worst = capacity_tradeoff(
        0.05, 0.10, MeasurementModel(0.005, 0.05), MeasurementModel(0.10, 0.30), 0.091, 1.5
    )
    print(f"  worst case (FP 10%, FN 30%): gain only {worst.neff_factor:.2f}x")


if __name__ == "__main__":
    main()
