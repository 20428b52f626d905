#!/usr/bin/env python3
"""How much more likely were positives to be tested?  A survey can tell.

Scenario modeled on a spring-2020 state serosurvey: 3,000 randomly sampled
residents, 13.9% testing positive on an assay with FP 0.5% (range 0.3-0.8%)
and FN 17.2% (range 11.6-24.0%).  The same day's smoothed case-count data
showed a 32.5% positive share after the same adjustment, with 0.1% of the
state tested.  Treating the survey as the anchor, the gap between the two
adjusted prevalences is pure selection error, and inverting the error
calculus yields the relative testing rate M = f1/f0.
"""
from casebias import (
    MeasurementModel,
    corrected_prevalence,
    estimate_relative_sampling,
    exp_smooth,
    survey_interval,
)

ASSAY = MeasurementModel(fp=0.005, fn=0.172)
ASSAY_RANGES = ((0.003, 0.008), (0.116, 0.240))


def main():
    survey_raw = 0.139
    survey_adj = corrected_prevalence(survey_raw, ASSAY)
    print(f"survey: raw {survey_raw:.1%} -> adjusted {survey_adj:.1%}")
    lo, hi = survey_interval(survey_raw, 3000)
    print(f"  sampling interval (2 SE): {lo:.3f} .. {hi:.3f} raw")
    for fp, fn in ((0.008, 0.116), (0.003, 0.240)):
        v = corrected_prevalence(survey_raw, MeasurementModel(fp, fn))
        print(f"  adjusted at FP={fp:.3f}, FN={fn:.3f}: {v:.1%}")

    observed_adj = 0.325
    result = estimate_relative_sampling(
        survey_prev_adjusted=round(survey_adj, 3),
        observed_prev_adjusted=observed_adj,
        f=0.001,
        meas=ASSAY,
        meas_ranges=ASSAY_RANGES,
    )
    print(f"\ncase counts: adjusted share {observed_adj:.1%}, tested fraction f = 0.001")
    print(f"prevalence error to explain: {observed_adj - round(survey_adj, 3):.3f}")
    print(f"  rho * D_M = {result.rho_dm:.4f}")
    print(f"  testing differential delta = {result.delta:.2e}")
    print(f"  relative testing rate M = {result.rel_rate:.2f}")
    print(f"  M over the assay-rate ranges: ({result.ci_low:.2f}, {result.ci_high:.2f})")

    swapped = MeasurementModel(fp=0.05, fn=0.005)
    swapped_result = estimate_relative_sampling(
        corrected_prevalence(survey_raw, swapped), observed_adj, 0.001, swapped
    )
    print(f"\nif the assay were instead FP=5%, FN=0.5%: M = {swapped_result.rel_rate:.2f}")
    print("conclusions about who got tested lean heavily on assumed assay rates.")

    print("\nsmoothing reminder: spiky daily shares are smoothed before anchoring,")
    smoothed = exp_smooth([0.31, 0.26, 0.35, 0.29, 0.33, 0.27], alpha=0.3)
    print(f"  e.g. {[round(v, 3) for v in smoothed]}")


if __name__ == "__main__":
    main()
