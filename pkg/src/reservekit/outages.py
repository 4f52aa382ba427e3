"""Forced-outage statistics and capacity-outage distributions.

Each generating unit is reduced to a forced-outage probability (FOP), the
chance of observing the unit down in any given dispatch interval:

    FOR = forced-outage hours / observed hours
    FOP = FOR / MTTR

On the shortage-positive reserve axis a unit contributes a two-point
distribution (mass FOP at its rated capacity lost, 1 - FOP at zero); the
fleet-level distribution is the convolution across units.
"""

import logging
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .distribution import DiscreteDistribution, convolve, point_mass
from .errors import (
    DataInconsistencyError,
    InsufficientDataError,
    ParameterError,
)
from .timeseries import OutageRecord

log = logging.getLogger(__name__)

CONVENTIONS = ("lost", "available")


@dataclass(frozen=True)
class GeneratorOutageStats:
    """Reliability statistics of one unit over an observation window.

    ``mttr_hours`` is ``None`` for units that never had a forced outage in
    the window; such units carry ``fop == 0``.
    """

    unit_id: str
    rated_mw: float
    for_rate: float
    mttr_hours: float | None
    fop: float
    observed_hours: float

    def __post_init__(self):
        if self.rated_mw <= 0:
            raise ParameterError(f"unit {self.unit_id!r}: rated_mw must be positive")
        if not 0.0 <= self.for_rate <= 1.0:
            raise DataInconsistencyError(
                f"unit {self.unit_id!r}: FOR {self.for_rate} outside [0, 1]"
            )
        if self.mttr_hours is not None and self.mttr_hours <= 0:
            raise ParameterError(f"unit {self.unit_id!r}: MTTR must be positive")
        if not 0.0 <= self.fop <= 1.0:
            raise DataInconsistencyError(
                f"unit {self.unit_id!r}: FOP {self.fop} outside [0, 1]"
            )


def _merged_forced_minutes(records: Iterable[OutageRecord], lo: int, hi: int) -> int:
    """Total minutes covered by the union of forced outages, clipped to [lo, hi)."""
    spans = sorted(
        (max(r.start_minute, lo), min(r.end_minute, hi))
        for r in records
        if r.cause == "forced" and r.end_minute > lo and r.start_minute < hi
    )
    covered = 0
    current_lo = current_hi = None
    for start, end in spans:
        if current_hi is None or start > current_hi:
            if current_hi is not None:
                covered += current_hi - current_lo
            current_lo, current_hi = start, end
        else:
            current_hi = max(current_hi, end)
    if current_hi is not None:
        covered += current_hi - current_lo
    return covered


def compute_for(records: Sequence[OutageRecord], observation: tuple[int, int]) -> float:
    """Forced-outage rate: fraction of the observation window spent down.

    Overlapping records count once (the union of forced intervals is
    measured), and outages are clipped to the window.
    """
    lo, hi = observation
    if hi <= lo:
        raise ParameterError("observation window must have positive length")
    return _merged_forced_minutes(records, lo, hi) / (hi - lo)


def compute_mttr(records: Sequence[OutageRecord]) -> float:
    """Mean time to repair: average duration (hours) of forced outages."""
    durations = [r.duration_hours for r in records if r.cause == "forced"]
    if not durations:
        raise InsufficientDataError("no forced outages to average")
    return float(np.mean(durations))


def compute_fop(for_rate: float, mttr_hours: float, unit_id: str = "") -> float:
    """Forced-outage probability per dispatch interval, FOR / MTTR."""
    if for_rate == 0.0:
        return 0.0
    if mttr_hours <= 0:
        raise ParameterError("mttr_hours must be positive")
    fop = for_rate / mttr_hours
    if fop > 1.0:
        label = f" for unit {unit_id!r}" if unit_id else ""
        raise DataInconsistencyError(
            f"FOP {fop:.4g}{label} exceeds 1 (FOR {for_rate}, MTTR {mttr_hours} h); "
            "check the outage records"
        )
    return fop


def build_outage_stats(
    records: Sequence[OutageRecord],
    observation: tuple[int, int],
    fop_floor: float = 0.0,
) -> list[GeneratorOutageStats]:
    """Per-unit statistics from raw outage records over an observation window.

    Units with no forced outage in the window get FOP 0 (with a warning) so
    that a clean operating history never inflates the requirement;
    ``fop_floor`` can lift those units for sensitivity runs.
    """
    if not 0.0 <= fop_floor < 1.0:
        raise ParameterError(f"fop_floor must lie in [0, 1), got {fop_floor}")
    lo, hi = observation
    if hi <= lo:
        raise ParameterError("observation window must have positive length")
    observed_hours = (hi - lo) / 60.0

    by_unit: dict[str, list[OutageRecord]] = {}
    for record in records:
        by_unit.setdefault(record.unit_id, []).append(record)

    stats = []
    for unit_id in sorted(by_unit):
        unit_records = by_unit[unit_id]
        rated = {r.rated_mw for r in unit_records}
        if len(rated) != 1:
            raise DataInconsistencyError(
                f"unit {unit_id!r} has conflicting rated capacities {sorted(rated)}"
            )
        for_rate = compute_for(unit_records, observation)
        forced = [
            r for r in unit_records
            if r.cause == "forced" and r.end_minute > lo and r.start_minute < hi
        ]
        if not forced or for_rate == 0.0:
            log.warning(
                "unit %r has no forced outage inside the observation window; "
                "treating FOP as %g", unit_id, fop_floor,
            )
            mttr = None
            fop = fop_floor
        else:
            # repair times are intrinsic to the events, so durations are not
            # clipped to the window even though the outage rate is
            mttr = compute_mttr(forced)
            fop = max(compute_fop(for_rate, mttr, unit_id), fop_floor)
        stats.append(
            GeneratorOutageStats(
                unit_id=unit_id,
                rated_mw=float(rated.pop()),
                for_rate=for_rate,
                mttr_hours=mttr,
                fop=fop,
                observed_hours=observed_hours,
            )
        )
    return stats


def unit_outage_distribution(
    stats: GeneratorOutageStats, grid_step_mw: float, convention: str = "lost"
) -> DiscreteDistribution:
    """Two-point capacity distribution of a single unit on the MW lattice.

    ``convention="lost"`` (the sizing axis) puts mass FOP at the unit's
    rated capacity — the MW suddenly missing when it trips — and 1 - FOP at
    zero. ``convention="available"`` is the mirrored reading (remaining
    available capacity: mass FOP at zero, 1 - FOP at rated). The rated
    capacity is snapped to the grid.
    """
    if convention not in CONVENTIONS:
        raise ParameterError(f"convention must be one of {CONVENTIONS}, got {convention!r}")
    if grid_step_mw <= 0:
        raise ParameterError("grid_step_mw must be positive")
    steps = round(stats.rated_mw / grid_step_mw)
    if steps == 0 or stats.fop == 0.0:
        anchor = 0.0 if convention == "lost" else steps * grid_step_mw
        return point_mass(anchor, grid_step_mw)
    masses = np.zeros(steps + 1)
    if convention == "lost":
        masses[0] = 1.0 - stats.fop
        masses[steps] = stats.fop
    else:
        masses[0] = stats.fop
        masses[steps] = 1.0 - stats.fop
    return DiscreteDistribution(0.0, grid_step_mw, masses)


def total_outage_distribution(
    stats: Sequence[GeneratorOutageStats], grid_step_mw: float, convention: str = "lost"
) -> DiscreteDistribution:
    """Fleet-level capacity-outage distribution: the convolution of all
    units' two-point distributions (units trip independently)."""
    if not stats:
        raise ParameterError("total_outage_distribution needs at least one unit")
    result = unit_outage_distribution(stats[0], grid_step_mw, convention)
    for unit in stats[1:]:
        result = convolve(result, unit_outage_distribution(unit, grid_step_mw, convention))
    return result
