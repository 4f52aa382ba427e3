"""Ex-post coverage evaluation of sized reserves against realized imbalances.

An imbalance observation is a ``(cluster_key, imbalance_mw)`` pair on the
shortage-positive axis. Reserves cover it when
``-down_mw <= imbalance <= up_mw``; achieved coverage is the fraction of
observations covered, compared against the target margin.
"""

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import ConfigurationError, InsufficientDataError, ParameterError
from .imbalance import (
    DRIVER_SIGNS,
    compute_forecast_errors,
    compute_noise_errors,
)
from .sizing import RESERVE_CLASSES, ReserveRequirement
from .timeseries import SeriesFrame


@dataclass(frozen=True)
class ClassCoverage:
    """Coverage outcome for one reserve class."""

    reserve_class: str
    intervals_evaluated: int
    upward_shortages: int
    downward_shortages: int
    achieved_coverage: float


@dataclass(frozen=True)
class CoverageReport:
    """Per-class coverage against the sizing margin."""

    target_margin: float
    classes: tuple[ClassCoverage, ...]

    def for_class(self, reserve_class: str) -> ClassCoverage:
        for row in self.classes:
            if row.reserve_class == reserve_class:
                return row
        raise ParameterError(f"no coverage entry for class {reserve_class!r}")

    def __str__(self) -> str:
        lines = [f"target margin: {self.target_margin}"]
        for row in self.classes:
            lines.append(
                f"{row.reserve_class}: achieved {row.achieved_coverage:.4f} over "
                f"{row.intervals_evaluated} intervals "
                f"({row.upward_shortages} up / {row.downward_shortages} down shortages)"
            )
        return "\n".join(lines)


def _requirement_lookup(
    requirements: Sequence[ReserveRequirement],
) -> dict[str, dict[int | None, ReserveRequirement]]:
    lookup: dict[str, dict[int | None, ReserveRequirement]] = {}
    for requirement in requirements:
        per_class = lookup.setdefault(requirement.reserve_class, {})
        if requirement.cluster in per_class:
            raise ConfigurationError(
                f"duplicate {requirement.reserve_class} requirement for "
                f"cluster {requirement.cluster}"
            )
        per_class[requirement.cluster] = requirement
    return lookup


def evaluate_coverage(
    requirements: Sequence[ReserveRequirement],
    imbalances,
    target_margin: float,
) -> CoverageReport:
    """Count reserve shortfalls over realized imbalance observations.

    ``imbalances`` is either a sequence of ``(cluster_key, imbalance_mw)``
    pairs applied to every reserve class present in ``requirements``, or a
    mapping from reserve class to such a sequence. Clusterless (static)
    requirements act as a fallback for any cluster; an observation whose
    cluster has no applicable requirement is a configuration error.
    """
    if not (0.0 < target_margin < 1.0):
        raise ParameterError(f"target_margin must lie in (0, 1), got {target_margin}")
    lookup = _requirement_lookup(requirements)
    if not lookup:
        raise ParameterError("no requirements to evaluate")

    if isinstance(imbalances, Mapping):
        per_class = {cls: imbalances[cls] for cls in lookup if cls in imbalances}
        missing = set(lookup) - set(per_class)
        if missing:
            raise ConfigurationError(
                f"no imbalance series for classes: {', '.join(sorted(missing))}"
            )
    else:
        observations = list(imbalances)
        per_class = {cls: observations for cls in lookup}

    rows = []
    for reserve_class in RESERVE_CLASSES:
        if reserve_class not in lookup:
            continue
        by_cluster = lookup[reserve_class]
        observations = per_class[reserve_class]
        if not len(observations):
            raise InsufficientDataError(
                f"no imbalance observations for class {reserve_class!r}"
            )
        up_short = down_short = 0
        for cluster, value in observations:
            requirement = by_cluster.get(int(cluster), by_cluster.get(None))
            if requirement is None:
                raise ConfigurationError(
                    f"no {reserve_class} requirement applies to cluster {cluster}"
                )
            if value > requirement.up_mw:
                up_short += 1
            elif value < -requirement.down_mw:
                down_short += 1
        total = len(observations)
        rows.append(
            ClassCoverage(
                reserve_class=reserve_class,
                intervals_evaluated=total,
                upward_shortages=up_short,
                downward_shortages=down_short,
                achieved_coverage=1.0 - (up_short + down_short) / total,
            )
        )
    return CoverageReport(target_margin=target_margin, classes=tuple(rows))


def realized_imbalances(
    forecasts: Mapping[str, SeriesFrame],
    actuals: Mapping[str, SeriesFrame],
    interval_minutes: int,
) -> dict[str, list[tuple[int, float]]]:
    """Per-sample system imbalances of a holdout period, on the reserve axis.

    For every sample instant of the actual series, the total imbalance is
    the sum over drivers of (forecast error of the enclosing interval +
    noise error at the sample), each flipped onto the shortage-positive
    axis; the secondary imbalance keeps only the fast noise part and the
    tertiary imbalance only the slow interval part. Instants where any
    driver lacks a matched forecast or a complete interval are skipped, so
    the sums always span all drivers. Returns observation lists keyed
    ``"total"`` / ``"secondary"`` / ``"tertiary"``.

    Outage events are not part of series-derived imbalances — sized
    distributions do include the outage block, so coverage measured here
    is conservative for the sized side.
    """
    if set(forecasts) != set(actuals):
        raise ConfigurationError(
            f"forecast drivers {sorted(forecasts)} != actual drivers {sorted(actuals)}"
        )
    if not forecasts:
        raise ParameterError("realized_imbalances needs at least one driver")

    slow_acc: dict[int, float] = {}
    noise_acc: dict[int, float] = {}
    cluster_of: dict[int, int] = {}
    contributors: dict[int, int] = {}

    for driver in sorted(forecasts):
        sign = DRIVER_SIGNS.get(driver)
        if sign is None:
            raise ConfigurationError(f"unknown driver {driver!r}")
        forecast_errors = compute_forecast_errors(
            forecasts[driver], actuals[driver], interval_minutes
        )
        noise_errors = compute_noise_errors(actuals[driver], interval_minutes)

        interval_error = {}
        for cluster, minutes in forecast_errors.minutes.items():
            for minute, value in zip(minutes, forecast_errors.samples[cluster]):
                interval_error[int(minute)] = sign * float(value)

        for cluster, minutes in noise_errors.minutes.items():
            values = noise_errors.samples[cluster]
            for minute, value in zip(minutes, values):
                minute = int(minute)
                start = minute - minute % interval_minutes
                if start not in interval_error:
                    continue  # interval lacks a matching forecast
                noise_acc[minute] = noise_acc.get(minute, 0.0) + sign * float(value)
                slow_acc[minute] = slow_acc.get(minute, 0.0) + interval_error[start]
                cluster_of[minute] = int(cluster)
                contributors[minute] = contributors.get(minute, 0) + 1

    n_drivers = len(forecasts)
    minutes_sorted = [m for m in sorted(slow_acc) if contributors[m] == n_drivers]
    if not minutes_sorted:
        raise InsufficientDataError("holdout period yields no imbalance observations")
    return {
        "total": [(cluster_of[m], slow_acc[m] + noise_acc[m]) for m in minutes_sorted],
        "secondary": [(cluster_of[m], noise_acc[m]) for m in minutes_sorted],
        "tertiary": [(cluster_of[m], slow_acc[m]) for m in minutes_sorted],
    }
