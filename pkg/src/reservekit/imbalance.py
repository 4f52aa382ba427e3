"""Imbalance error extraction: forecast errors, noise errors, hour-of-week
clustering and sign-convention diagnostics.

Sign convention
---------------
Errors are emitted raw, in the direction of the underlying signal:

* forecast error = mean(actual over interval) - forecast value
* noise error    = actual sample - mean(actual over its interval)

For demand a positive raw error means consumption above expectation (a
system shortage); for wind/solar it means production above expectation (a
surplus). The sizing layer therefore negates wind/solar samples before
density estimation so that on the reserve axis positive always means
shortage (upward activation). :data:`DRIVER_SIGNS` is that orientation map.
"""

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .errors import InsufficientDataError, NoOverlapError, ParameterError
from .timeseries import SeriesFrame, group_by_interval, hour_of_week

DRIVERS = ("load", "wind", "solar")
ERROR_KINDS = ("forecast", "noise")

#: multiplier taking a driver's raw error onto the shortage-positive axis
DRIVER_SIGNS = {"load": 1.0, "wind": -1.0, "solar": -1.0}

SIGN_CONVENTION = (
    "raw errors follow the signal (positive = more consumption/production "
    "than expected); the sizing layer multiplies by DRIVER_SIGNS so that "
    "positive = system shortage"
)


@dataclass(frozen=True)
class ErrorSampleSet:
    """Clustered error samples for one (driver, kind) pair.

    ``samples`` maps hour-of-week cluster keys to 1-D arrays of error
    values in MW. ``minutes`` optionally carries the per-sample timestamps
    (parallel arrays), which CSV export needs; sets built synthetically may
    omit it.
    """

    driver: str
    kind: str  # "forecast" | "noise"
    samples: Mapping[int, np.ndarray]
    minutes: Mapping[int, np.ndarray] | None = None

    def __post_init__(self):
        if self.kind not in ERROR_KINDS:
            raise ParameterError(f"kind must be one of {ERROR_KINDS}, got {self.kind!r}")
        frozen = {}
        for key, values in self.samples.items():
            key = int(key)
            if not 1 <= key <= 168:
                raise ParameterError(f"cluster key {key} outside [1, 168]")
            arr = np.array(values, dtype=np.float64)
            arr.setflags(write=False)
            frozen[key] = arr
        object.__setattr__(self, "samples", frozen)
        if self.minutes is not None:
            stamped = {}
            for key, values in self.minutes.items():
                arr = np.array(values, dtype=np.int64)
                arr.setflags(write=False)
                stamped[int(key)] = arr
            object.__setattr__(self, "minutes", stamped)

    @property
    def clusters(self) -> list[int]:
        return sorted(self.samples)

    @property
    def total_count(self) -> int:
        return sum(arr.size for arr in self.samples.values())

    def pooled(self) -> np.ndarray:
        """All samples concatenated across clusters (cluster-key order)."""
        if not self.samples:
            return np.array([], dtype=np.float64)
        return np.concatenate([self.samples[k] for k in self.clusters])


def _cluster_split(cluster_keys, values, minutes):
    """Partition parallel arrays by cluster key into two dicts."""
    order = np.argsort(cluster_keys, kind="stable")
    keys_sorted = cluster_keys[order]
    uniq, starts = np.unique(keys_sorted, return_index=True)
    bounds = np.append(starts, keys_sorted.size)
    values_sorted = values[order]
    minutes_sorted = minutes[order]
    samples = {}
    stamps = {}
    for i, key in enumerate(uniq):
        lo, hi = bounds[i], bounds[i + 1]
        samples[int(key)] = values_sorted[lo:hi]
        stamps[int(key)] = minutes_sorted[lo:hi]
    return samples, stamps


def compute_forecast_errors(
    forecast: SeriesFrame, actual: SeriesFrame, interval_minutes: int
) -> ErrorSampleSet:
    """Per-interval forecast errors (interval mean of actual minus forecast).

    The forecast series must be issued at exactly the sizing-interval
    resolution; the actual series must be at least as fine and nest inside
    the interval. One error sample is produced per complete interval for
    which both a forecast value and full actual coverage exist.
    """
    if forecast.resolution_minutes != interval_minutes:
        raise ParameterError(
            f"forecast resolution {forecast.resolution_minutes} min must equal the "
            f"{interval_minutes}-minute sizing interval"
        )
    if actual.resolution_minutes > interval_minutes:
        raise ParameterError(
            f"actual resolution {actual.resolution_minutes} min is coarser than the "
            f"{interval_minutes}-minute sizing interval"
        )
    if forecast.driver != actual.driver:
        raise ParameterError(
            f"forecast driver {forecast.driver!r} != actual driver {actual.driver!r}"
        )
    if not len(forecast) or not len(actual):
        raise NoOverlapError(
            f"no overlapping span between forecast and actual for {actual.driver!r}"
        )

    groups = group_by_interval(actual, interval_minutes)
    complete_starts = groups.start_minutes[groups.complete]
    means = (groups.sums[groups.complete]) / groups.expected_count

    matched = np.intersect1d(complete_starts, forecast.minutes, assume_unique=True)
    if matched.size == 0:
        raise NoOverlapError(
            f"no overlapping span between forecast and actual for {actual.driver!r}"
        )
    errors = (
        means[np.searchsorted(complete_starts, matched)]
        - forecast.values[np.searchsorted(forecast.minutes, matched)]
    )
    samples, stamps = _cluster_split(hour_of_week(matched), errors, matched)
    return ErrorSampleSet(actual.driver, "forecast", samples, stamps)


def compute_noise_errors(actual: SeriesFrame, interval_minutes: int) -> ErrorSampleSet:
    """Per-sample deviations of the actual series from its interval mean.

    Requires the actual resolution to be strictly finer than the interval
    (otherwise no intra-interval variation exists). Every sample of every
    complete interval yields one error, clustered by the interval's start.
    """
    if actual.resolution_minutes >= interval_minutes:
        raise ParameterError(
            f"noise errors need sub-interval data: actual resolution "
            f"{actual.resolution_minutes} min >= interval {interval_minutes} min"
        )
    if not len(actual):
        raise NoOverlapError(f"actual series for {actual.driver!r} is empty")

    groups = group_by_interval(actual, interval_minutes)
    per_sample_mean = np.repeat(groups.sums / groups.counts, groups.counts)
    keep = np.repeat(groups.complete, groups.counts)
    if not np.any(keep):
        raise NoOverlapError(
            f"no complete {interval_minutes}-minute interval in {actual.driver!r} series"
        )
    errors = (actual.values - per_sample_mean)[keep]
    interval_start = np.repeat(groups.start_minutes, groups.counts)[keep]
    sample_minutes = actual.minutes[keep]
    samples, stamps = _cluster_split(hour_of_week(interval_start), errors, sample_minutes)
    return ErrorSampleSet(actual.driver, "noise", samples, stamps)


@dataclass(frozen=True)
class ClusterStats:
    cluster: int
    count: int
    mean_mw: float
    std_mw: float
    skewness: float


@dataclass(frozen=True)
class SignConventionReport:
    """Distributional diagnostics for one error sample set."""

    driver: str
    kind: str
    count: int
    mean_mw: float
    std_mw: float
    skewness: float
    flags: tuple[str, ...]
    per_cluster: tuple[ClusterStats, ...]
    convention: str = SIGN_CONVENTION

    def __str__(self) -> str:
        head = (
            f"{self.driver}/{self.kind}: n={self.count} mean={self.mean_mw:+.3f} MW "
            f"std={self.std_mw:.3f} MW skew={self.skewness:+.3f}"
        )
        if self.flags:
            head += " [" + "; ".join(self.flags) + "]"
        return head


def _skewness(values: np.ndarray) -> float:
    """Fisher skewness m3 / m2^1.5; zero for degenerate spread."""
    centred = values - values.mean()
    m2 = np.mean(centred**2)
    if m2 == 0:
        return 0.0
    return float(np.mean(centred**3) / m2**1.5)


def sign_convention_check(sample_set: ErrorSampleSet) -> SignConventionReport:
    """Summarize an error set's mean/skew and flag systematic bias.

    A mean more than two standard errors from zero is flagged (for demand a
    positive mean reads "systematic under-forecast"; for VRE, "systematic
    over-delivery"). Empty clusters are omitted from the per-cluster rows.
    """
    pooled = sample_set.pooled()
    if pooled.size == 0:
        raise InsufficientDataError(
            f"no samples in {sample_set.driver}/{sample_set.kind} set"
        )
    mean = float(pooled.mean())
    std = float(pooled.std(ddof=1)) if pooled.size > 1 else 0.0
    sem = std / np.sqrt(pooled.size)
    flags = []
    if mean > 2 * sem and mean > 0:
        flags.append(
            "systematic under-forecast"
            if sample_set.driver == "load"
            else "systematic over-delivery"
        )
    elif mean < -2 * sem and mean < 0:
        flags.append(
            "systematic over-forecast"
            if sample_set.driver == "load"
            else "systematic under-delivery"
        )
    rows = tuple(
        ClusterStats(
            cluster=key,
            count=arr.size,
            mean_mw=float(arr.mean()),
            std_mw=float(arr.std(ddof=1)) if arr.size > 1 else 0.0,
            skewness=_skewness(arr),
        )
        for key in sample_set.clusters
        if (arr := sample_set.samples[key]).size > 0
    )
    return SignConventionReport(
        driver=sample_set.driver,
        kind=sample_set.kind,
        count=int(pooled.size),
        mean_mw=mean,
        std_mw=std,
        skewness=_skewness(pooled),
        flags=tuple(flags),
        per_cluster=rows,
    )
