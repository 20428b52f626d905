"""Ingestion and validation of daily case-count series."""
from __future__ import annotations

import csv
import datetime as dt
import warnings
from dataclasses import dataclass

import numpy as np

__all__ = ["CaseCountSeries", "ingest", "series_csv"]


@dataclass(frozen=True)
class CaseCountSeries:
    """Daily totals and positives on strictly increasing dates."""

    dates: tuple
    total_tests: np.ndarray
    positive_tests: np.ndarray

    def __post_init__(self):
        self.total_tests.flags.writeable = False
        self.positive_tests.flags.writeable = False

    @property
    def positive_fraction(self) -> np.ndarray:
        out = np.full(self.total_tests.size, np.nan)
        nonzero = self.total_tests > 0
        out[nonzero] = self.positive_tests[nonzero] / self.total_tests[nonzero]
        return out

    def gap_days(self) -> list:
        """Dates straddling a jump larger than one day."""
        gaps = []
        for prev, curr in zip(self.dates, self.dates[1:]):
            if (curr - prev).days > 1:
                gaps.append((prev, curr))
        return gaps


def ingest(path, cumulative: bool = False) -> CaseCountSeries:
    """Read and validate a date,total_tests,positive_tests CSV.

    Dates must be ISO-8601 and strictly increasing; duplicates are rejected by
    name.  ``cumulative`` first-differences both count columns, and a negative
    daily value after differencing is a hard error naming the date.  Calendar
    gaps are allowed but flagged with a warning.
    """
    dates = []
    totals = []
    positives = []
    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError("no data rows") from None
        if [h.strip() for h in header] != ["date", "total_tests", "positive_tests"]:
            raise ValueError(
                f"expected header date,total_tests,positive_tests, got {header}"
            )
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != 3:
                raise ValueError(f"line {lineno}: expected 3 fields, got {len(row)}")
            try:
                day = dt.date.fromisoformat(row[0].strip())
            except ValueError:
                raise ValueError(f"line {lineno}: bad ISO date {row[0]!r}") from None
            try:
                total = int(row[1])
                positive = int(row[2])
            except ValueError:
                raise ValueError(f"line {lineno}: counts must be integers") from None
            if total < 0 or positive < 0:
                raise ValueError(f"line {lineno}: negative count")
            if positive > total:
                raise ValueError(
                    f"line {lineno}: positive_tests {positive} exceeds total_tests {total}"
                )
            dates.append(day)
            totals.append(total)
            positives.append(positive)

    if not dates:
        raise ValueError("no data rows")
    for prev, curr in zip(dates, dates[1:]):
        if curr == prev:
            raise ValueError(f"duplicate date {curr.isoformat()}")
        if curr < prev:
            raise ValueError(f"dates not increasing at {curr.isoformat()}")

    totals = np.array(totals, dtype=np.int64)
    positives = np.array(positives, dtype=np.int64)
    if cumulative:
        if len(dates) < 2:
            raise ValueError("cumulative input needs at least 2 rows")
        d_tot = np.diff(totals)
        d_pos = np.diff(positives)
        for offset, (a, b) in enumerate(zip(d_tot, d_pos)):
            if a < 0 or b < 0:
                raise ValueError(
                    f"negative daily value after differencing at {dates[offset + 1].isoformat()}"
                )
        dates = dates[1:]
        totals, positives = d_tot, d_pos
        for day, total, positive in zip(dates, totals, positives):
            if positive > total:
                raise ValueError(
                    f"positive_tests exceed total_tests after differencing at {day.isoformat()}"
                )

    series = CaseCountSeries(
        dates=tuple(dates),
        total_tests=totals,
        positive_tests=positives,
    )
    gaps = series.gap_days()
    if gaps:
        spans = ", ".join(f"{a.isoformat()}..{b.isoformat()}" for a, b in gaps)
        warnings.warn(f"calendar gaps: {spans}", RuntimeWarning, stacklevel=2)
    return series


def series_csv(series: CaseCountSeries) -> str:
    """Render a series back to its ingestion schema."""
    lines = ["date,total_tests,positive_tests"]
    for day, total, positive in zip(series.dates, series.total_tests, series.positive_tests):
        lines.append(f"{day.isoformat()},{int(total)},{int(positive)}")
    return "\n".join(lines) + "\n"
