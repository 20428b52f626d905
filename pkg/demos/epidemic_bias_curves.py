#!/usr/bin/env python3
"""Bias of growth-rate and reproduction-number estimates along an epidemic.

A deterministic SIR wave (R0 = 7, one million people, 100 seed infections)
is observed through selective testing: 2% of the population tested per step,
positives M times more likely to be swabbed, assay FP 1% / FN 15%.  The
script reports where each estimator over- and under-shoots and writes the
per-step curves to bias_curves.csv for plotting.
"""
from pathlib import Path

import numpy as np

from casebias import (
    MeasurementModel,
    SirParams,
    bias_curves,
    bias_curves_csv,
    peak_time,
    sir_simulate,
)


def main():
    params = SirParams(
        beta=1.4, gamma_rec=0.2, size=1e6, s0=1e6 - 100, i0=100, dt=0.1, horizon=400
    )
    traj = sir_simulate(params)
    peaks = peak_time(traj)
    print(f"SIR with R0 = {params.basic_reproduction:.1f}")
    print(f"  new-case peak at step {peaks.incidence_peak} "
          f"(t = {traj.times[peaks.incidence_peak]:.1f} days)")
    print(f"  prevalence peak at step {peaks.prevalence_peak} "
          f"(I/N = {traj.prevalence[peaks.prevalence_peak]:.2f})")

    meas = MeasurementModel(fp=0.01, fn=0.15)
    curves = bias_curves(traj, f=0.02, meas=meas, rel_rates=[2.0, 4.0], serial_interval=7.0)
    kp = peaks.incidence_peak
    for idx, m in enumerate(curves.rel_rates):
        rb = curves.ratio_bias[idx]
        rise = rb[1:kp]
        decline = rb[kp + 2:]
        decline = decline[~np.isnan(decline)]
        print(f"\nM = {m:g}:")
        print(f"  growth-rate bias during the rise:    mean {np.nanmean(rise):+.5f}")
        print(f"  at the new-case peak:                {rb[kp]:+.2e}")
        print(f"  through the decline:                 mean {decline.mean():+.5f}")
        rt = curves.rt_bias[idx]
        print(f"  reproduction-number bias range:      [{np.nanmin(rt):+.4f}, {np.nanmax(rt):+.4f}]")
    print("\nThe estimated trend runs hot while cases climb and hot-cold flips at")
    print("the peak: optimism arrives exactly when restraint still matters.")

    out = Path(__file__).with_name("bias_curves.csv")
    out.write_text(bias_curves_csv(curves))
    print(f"\nwrote {out}")


if __name__ == "__main__":
    main()
