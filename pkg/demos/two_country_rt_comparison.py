#!/usr/bin/env python3
"""Comparing reproduction-number trajectories across two countries.

Country A (beta = 1.4) and country B (beta = 0.9) share initial conditions
and recovery rate, so A peaks weeks earlier.  Both report case counts through
the same selective-testing pipeline (f = 2%, positives 4x more likely tested,
FP 1% / FN 20%).  The script tracks the true and estimated R_t gap, shows the
over/under-estimation pattern flipping at each country's own peak, and writes
rt_gap.csv for plotting.
"""
from pathlib import Path

import numpy as np

from casebias import (
    MeasurementModel,
    SirParams,
    peak_time,
    rt_gap,
    rt_gap_csv,
    sir_simulate,
)


def main():
    shared = dict(gamma_rec=0.2, size=1e6, s0=1e6 - 100, i0=100.0, dt=0.1, horizon=400)
    traj_a = sir_simulate(SirParams(beta=1.4, **shared))
    traj_b = sir_simulate(SirParams(beta=0.9, **shared))
    kp_a = peak_time(traj_a).incidence_peak
    kp_b = peak_time(traj_b).incidence_peak
    print(f"new-case peaks: country A step {kp_a}, country B step {kp_b}")

    gap = rt_gap(
        traj_a, traj_b, f=0.02, meas=MeasurementModel(fp=0.01, fn=0.2),
        rel_rate=4.0, serial_interval=7.0,
    )
    err_a = gap.est_a - gap.true_a
    err_b = gap.est_b - gap.true_b
    overshoot = gap.est_gap - gap.true_gap

    def window(label, lo, hi):
        vals = overshoot[lo:hi]
        vals = vals[~np.isnan(vals)]
        print(f"  {label:<34} mean gap error {vals.mean():+.4f}")

    print("\nestimated minus true gap, by phase:")
    window("A rising, B rising slowly", 1, kp_a - 1)
    window("A past peak, B still rising", kp_a + 2, kp_b - 1)
    window("both declining", kp_b + 2, 360)
    print("\nper-country error sign flips at the country's own peak:")
    print(f"  A: {np.nanmean(err_a[1:kp_a-1]):+.4f} before, {np.nanmean(err_a[kp_a+2:360]):+.4f} after")
    print(f"  B: {np.nanmean(err_b[1:kp_b-1]):+.4f} before, {np.nanmean(err_b[kp_b+2:360]):+.4f} after")
    print("\nReading only the estimated curves, A's recovery looks stronger and")
    print("B's surge milder than either truly is while the phases overlap.")

    out = Path(__file__).with_name("rt_gap.csv")
    out.write_text(rt_gap_csv(gap))
    print(f"\nwrote {out}")


if __name__ == "__main__":
    main()
