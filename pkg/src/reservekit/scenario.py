"""Scenario scaling and sizing-interval resolution sweeps.

Historical error samples are projected onto a future scenario by linear
scaling (growth ratio x forecast-quality factor per driver); subhourly
sizing runs synthesize interval-resolution forecasts from the actual
series, since historical forecasts only exist at the hourly horizon.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .errors import ConfigurationError, ParameterError
from .imbalance import (
    ErrorSampleSet,
    compute_forecast_errors,
    compute_noise_errors,
)
from .sizing import DynamicReserveSizer, mean_requirement
from .timeseries import SeriesFrame, resample_to_interval

log = logging.getLogger(__name__)

ANCHOR_MODES = ("persistence", "mean")

#: the hourly baseline every reduction is quoted against
BASE_INTERVAL_MINUTES = 60


@dataclass(frozen=True)
class ScenarioSpec:
    """A future sizing scenario.

    ``growth`` maps each driver to its installed-capacity / peak-demand
    ratio (future over base); ``forecast_improvement`` to a multiplicative
    forecast-quality factor (1 = unchanged skill, < 1 = better forecasts).
    ``intervals`` lists the sizing-interval lengths swept, in minutes.
    """

    growth: Mapping[str, float] = field(default_factory=dict)
    forecast_improvement: Mapping[str, float] = field(default_factory=dict)
    margin: float = 0.99
    intervals: tuple[int, ...] = (60, 30, 15, 5)

    def __post_init__(self):
        object.__setattr__(self, "growth", dict(self.growth))
        object.__setattr__(self, "forecast_improvement", dict(self.forecast_improvement))
        for name, mapping in (("growth", self.growth), ("forecast_improvement", self.forecast_improvement)):
            for driver, factor in mapping.items():
                if factor <= 0:
                    raise ParameterError(
                        f"{name}[{driver!r}] must be positive, got {factor}"
                    )
        if not (0.0 < self.margin < 1.0):
            raise ParameterError(f"margin must lie in (0, 1), got {self.margin}")
        if not self.intervals:
            raise ParameterError("intervals must not be empty")
        for interval in self.intervals:
            if interval <= 0 or 60 % interval != 0:
                raise ParameterError(
                    f"sizing intervals must divide 60, got {interval}"
                )
        if len(set(self.intervals)) != len(self.intervals):
            raise ParameterError("intervals must be distinct")


def scale_samples(sample_set: ErrorSampleSet, spec: ScenarioSpec) -> ErrorSampleSet:
    """Project an error set onto the scenario: every sample is multiplied
    by the driver's growth ratio times its forecast-quality factor.

    Scaling acts value-wise, so it commutes with clustering; timestamps
    are carried through unchanged.
    """
    if sample_set.driver not in spec.growth:
        raise ConfigurationError(
            f"scenario growth does not cover driver {sample_set.driver!r}"
        )
    factor = spec.growth[sample_set.driver] * spec.forecast_improvement.get(
        sample_set.driver, 1.0
    )
    scaled = {key: values * factor for key, values in sample_set.samples.items()}
    return ErrorSampleSet(sample_set.driver, sample_set.kind, scaled, sample_set.minutes)


def synthesize_subhourly_forecasts(
    actual: SeriesFrame, interval_minutes: int, anchor: str = "persistence"
) -> SeriesFrame:
    """Build an interval-resolution forecast series from the actual series.

    ``anchor="persistence"``: each interval is forecast to hold the last
    actual sample observed before it starts (the value at interval start
    minus one resolution step). The very first interval has no anchor and
    is dropped. ``anchor="mean"``: the idealized perfect forecast — each
    interval's own mean — which collapses forecast errors to zero and
    leaves noise only.
    """
    if anchor not in ANCHOR_MODES:
        raise ParameterError(f"anchor must be one of {ANCHOR_MODES}, got {anchor!r}")
    if interval_minutes <= 0 or 60 % interval_minutes != 0:
        raise ParameterError(f"interval_minutes must divide 60, got {interval_minutes}")
    if actual.resolution_minutes > interval_minutes:
        raise ParameterError(
            f"actual resolution {actual.resolution_minutes} min is coarser than "
            f"the {interval_minutes}-minute interval"
        )
    if anchor == "mean":
        mean_frame = resample_to_interval(actual, interval_minutes)
        return SeriesFrame(
            signal_id=actual.signal_id,
            kind="forecast",
            resolution_minutes=interval_minutes,
            minutes=mean_frame.minutes,
            values=mean_frame.values,
        )

    resolution = actual.resolution_minutes
    first_start = -(-(actual.start_minute + resolution) // interval_minutes) * interval_minutes
    last_start = (actual.minutes[-1] // interval_minutes) * interval_minutes
    starts = np.arange(first_start, last_start + 1, interval_minutes, dtype=np.int64)
    anchors = starts - resolution
    position = np.searchsorted(actual.minutes, anchors)
    present = (position < len(actual)) & (actual.minutes[np.minimum(position, len(actual) - 1)] == anchors)
    return SeriesFrame(
        signal_id=actual.signal_id,
        kind="forecast",
        resolution_minutes=interval_minutes,
        minutes=starts[present],
        values=actual.values[position[present]],
    )


@dataclass(frozen=True)
class SweepRow:
    """Fleet-average total requirement at one sizing-interval length."""

    interval_minutes: int
    mean_down_mw: float
    down_reduction_pct: float
    mean_up_mw: float
    up_reduction_pct: float


def reduction_pct(mean_mw: float, base_mean_mw: float) -> float:
    """Percent change of a mean requirement against the hourly baseline."""
    if base_mean_mw == 0:
        raise ParameterError("baseline mean requirement is zero; reduction undefined")
    return 100.0 * (mean_mw - base_mean_mw) / base_mean_mw


def run_resolution_sweep(
    actuals: Mapping[str, SeriesFrame],
    spec: ScenarioSpec,
    outage=None,
    *,
    anchor: str = "persistence",
    grid_step_mw: float = 0.5,
    max_workers: int | None = None,
) -> list[SweepRow]:
    """Size total reserves at each interval length and quote reductions
    against the 60-minute baseline.

    ``actuals`` maps each driver to its fine-resolution actual series;
    forecasts at every interval are synthesized (see
    :func:`synthesize_subhourly_forecasts`), errors recomputed, scaled by
    the scenario and sized dynamically. Interval runs are independent and
    fan out on a thread pool. The interval set must include 60 minutes —
    reductions are defined relative to the hourly result.
    """
    if BASE_INTERVAL_MINUTES not in spec.intervals:
        raise ParameterError(
            "the sweep needs the 60-minute baseline interval to quote reductions against"
        )
    for driver, frame in actuals.items():
        if frame.resolution_minutes >= min(spec.intervals):
            raise ParameterError(
                f"actual series for {driver!r} must be finer than the smallest "
                f"sizing interval ({min(spec.intervals)} min)"
            )

    def size_one(interval: int) -> tuple[float, float]:
        error_sets = []
        for driver, frame in actuals.items():
            forecast = synthesize_subhourly_forecasts(frame, interval, anchor)
            forecast_errors = compute_forecast_errors(forecast, frame, interval)
            noise_errors = compute_noise_errors(frame, interval)
            error_sets.append(scale_samples(forecast_errors, spec))
            error_sets.append(scale_samples(noise_errors, spec))
        sizer = DynamicReserveSizer(margin=spec.margin, grid_step_mw=grid_step_mw)
        sizer.fit(error_sets, outage)
        return mean_requirement(sizer.requirements_, "total")

    intervals = sorted(spec.intervals, reverse=True)
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        means = dict(zip(intervals, pool.map(size_one, intervals)))

    base_up, base_down = means[BASE_INTERVAL_MINUTES]
    rows = []
    for interval in intervals:
        up, down = means[interval]
        rows.append(
            SweepRow(
                interval_minutes=interval,
                mean_down_mw=down,
                down_reduction_pct=reduction_pct(down, base_down),
                mean_up_mw=up,
                up_reduction_pct=reduction_pct(up, base_up),
            )
        )
    return rows
