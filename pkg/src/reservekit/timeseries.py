"""Time-series data model: minute-precision timestamps, series frames,
CSV ingestion, interval resampling and hour-of-week clustering.

All timestamps are naive calendar date-times with minute precision,
represented internally as integer minutes since 1970-01-01T00:00 so that
calendar arithmetic stays timezone-free and vectorizes cleanly.
"""

import csv
import math
from dataclasses import dataclass
from datetime import datetime, timedelta
from typing import NamedTuple, Sequence

import numpy as np

from .errors import (
    DataQualityError,
    InsufficientDataError,
    NoOverlapError,
    OrderingError,
    ParameterError,
    RecordValidationError,
    SchemaError,
)

_EPOCH = datetime(1970, 1, 1)
_MINUTE = timedelta(minutes=1)
MINUTES_PER_DAY = 1440

#: weekday index of the epoch (1970-01-01 was a Thursday; Monday == 0)
_EPOCH_WEEKDAY = 3

_WEEKDAY_NAMES = ("Mon", "Tue", "Wed", "Thu", "Fri", "Sat", "Sun")

SERIES_HEADER = ("timestamp", "value_mw")
OUTAGE_HEADER = ("unit_id", "rated_mw", "start", "end", "cause")

VALID_KINDS = ("forecast", "actual")
OUTAGE_CAUSES = ("forced", "planned")


def parse_minute(text: str) -> int:
    """Parse an ISO-8601 date-time with minute precision into epoch minutes.

    Accepts ``YYYY-MM-DDTHH:MM`` (a space separator also works); seconds
    are tolerated only when zero. Timezone-aware stamps are rejected so
    that all arithmetic stays naive and deterministic.
    """
    try:
        dt = datetime.fromisoformat(text.strip())
    except ValueError as exc:
        raise RecordValidationError(f"unparseable timestamp {text!r}") from exc
    if dt.tzinfo is not None:
        raise RecordValidationError(f"timezone-aware timestamp {text!r} not supported")
    if dt.second or dt.microsecond:
        raise RecordValidationError(f"timestamp {text!r} has sub-minute precision")
    return (dt - _EPOCH) // _MINUTE


def format_minute(minute: int) -> str:
    """Format epoch minutes back to ``YYYY-MM-DDTHH:MM``."""
    return (_EPOCH + timedelta(minutes=int(minute))).isoformat(timespec="minutes")


def day_label(minute: int) -> str:
    """Calendar date (``YYYY-MM-DD``) of the day containing `minute`."""
    return (_EPOCH + timedelta(minutes=int(minute))).date().isoformat()


def hour_of_week(minutes):
    """Map epoch minutes to 1-based hour-of-week cluster keys.

    Monday 00:00-00:59 is cluster 1, Sunday 23:00-23:59 is cluster 168.
    Accepts a scalar or an integer array and vectorizes accordingly.
    """
    m = np.asarray(minutes, dtype=np.int64)
    day = (m // MINUTES_PER_DAY + _EPOCH_WEEKDAY) % 7
    hour = (m % MINUTES_PER_DAY) // 60
    key = day * 24 + hour + 1
    return int(key) if np.isscalar(minutes) else key


def cluster_label(key: int) -> str:
    """Human-readable name of a cluster key, e.g. ``'Mon 13:00'``."""
    if not 1 <= key <= 168:
        raise ParameterError(f"cluster key {key} outside [1, 168]")
    return f"{_WEEKDAY_NAMES[(key - 1) // 24]} {(key - 1) % 24:02d}:00"


@dataclass(frozen=True)
class SeriesSchema:
    """Declared identity of a series file: what the values mean and how
    densely they are sampled."""

    signal_id: str
    kind: str  # "forecast" | "actual"
    resolution_minutes: int

    def __post_init__(self):
        if self.kind not in VALID_KINDS:
            raise ParameterError(f"kind must be one of {VALID_KINDS}, got {self.kind!r}")
        if self.resolution_minutes <= 0:
            raise ParameterError("resolution_minutes must be positive")


@dataclass(frozen=True)
class SeriesFrame:
    """An ordered, regularly-addressed MW time series.

    ``minutes`` holds epoch minutes (strictly increasing, aligned to the
    declared resolution); ``values`` the MW readings. Gaps are simply
    absent rows. Instances are immutable; the arrays are write-protected.
    """

    signal_id: str
    kind: str
    resolution_minutes: int
    minutes: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        if self.kind not in VALID_KINDS:
            raise ParameterError(f"kind must be one of {VALID_KINDS}, got {self.kind!r}")
        if self.resolution_minutes <= 0:
            raise ParameterError("resolution_minutes must be positive")
        m = np.array(self.minutes, dtype=np.int64)
        v = np.array(self.values, dtype=np.float64)
        if m.shape != v.shape or m.ndim != 1:
            raise ParameterError("minutes and values must be 1-D arrays of equal length")
        if m.size:
            if np.any(np.diff(m) <= 0):
                raise OrderingError(f"timestamps of {self.signal_id!r} not strictly increasing")
            if np.any(m % self.resolution_minutes != 0):
                raise RecordValidationError(
                    f"timestamps of {self.signal_id!r} not aligned to "
                    f"{self.resolution_minutes}-minute resolution"
                )
            if not np.all(np.isfinite(v)):
                raise RecordValidationError(f"non-finite value in {self.signal_id!r}")
        m.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "minutes", m)
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return self.minutes.size

    @property
    def driver(self) -> str:
        """Driver name: the signal id up to an optional ``:`` qualifier."""
        return self.signal_id.split(":", 1)[0]

    @property
    def start_minute(self) -> int:
        if not len(self):
            raise InsufficientDataError(f"series {self.signal_id!r} is empty")
        return int(self.minutes[0])

    @property
    def end_minute(self) -> int:
        """Exclusive end: one resolution step past the last sample."""
        if not len(self):
            raise InsufficientDataError(f"series {self.signal_id!r} is empty")
        return int(self.minutes[-1]) + self.resolution_minutes


@dataclass(frozen=True)
class OutageRecord:
    """One generator outage event with minute-precision start/end."""

    unit_id: str
    rated_mw: float
    start_minute: int
    end_minute: int
    cause: str  # "forced" | "planned"

    def __post_init__(self):
        if self.cause not in OUTAGE_CAUSES:
            raise RecordValidationError(
                f"cause must be one of {OUTAGE_CAUSES}, got {self.cause!r}"
            )
        if not (math.isfinite(self.rated_mw) and self.rated_mw > 0):
            raise RecordValidationError(f"rated_mw must be positive, got {self.rated_mw}")
        if self.end_minute <= self.start_minute:
            raise RecordValidationError(
                f"outage of {self.unit_id!r} ends at or before its start"
            )

    @property
    def duration_hours(self) -> float:
        return (self.end_minute - self.start_minute) / 60.0


def _read_rows(path, expected_header):
    """Open a CSV, check the header, and yield (row_number, row) pairs."""
    try:
        handle = open(path, newline="")
    except FileNotFoundError as exc:
        raise FileNotFoundError(f"input file not found: {path}") from exc
    with handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: file is empty, expected header {expected_header}")
        if tuple(h.strip().lower() for h in header) != expected_header:
            raise SchemaError(
                f"{path}: expected header {','.join(expected_header)}, "
                f"got {','.join(header)}"
            )
        for number, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue  # blank line
            if len(row) != len(expected_header):
                raise RecordValidationError(
                    f"{path}: row {number}: expected {len(expected_header)} fields, "
                    f"got {len(row)}"
                )
            yield number, row


def ingest_series(path, schema: SeriesSchema) -> SeriesFrame:
    """Read a ``timestamp,value_mw`` CSV into a validated :class:`SeriesFrame`.

    Validation is layered: header first, then per-row parsing (errors name
    the offending row), then ordering/alignment, then a day-level quality
    gate — any calendar day inside the series span missing more than 5 %
    of its expected samples fails the whole ingest.
    """
    minutes, values = [], []
    previous = None
    for number, (ts_text, value_text) in _read_rows(path, SERIES_HEADER):
        try:
            minute = parse_minute(ts_text)
        except RecordValidationError as exc:
            raise RecordValidationError(f"{path}: row {number}: {exc}") from None
        try:
            value = float(value_text)
        except ValueError:
            raise RecordValidationError(
                f"{path}: row {number}: unparseable value {value_text!r}"
            ) from None
        if not math.isfinite(value):
            raise RecordValidationError(f"{path}: row {number}: non-finite value")
        if schema.kind == "actual" and value < 0:
            raise RecordValidationError(
                f"{path}: row {number}: negative value {value} in actual series"
            )
        if previous is not None and minute <= previous:
            raise OrderingError(
                f"{path}: row {number}: timestamp {ts_text.strip()} not after previous row"
            )
        if minute % schema.resolution_minutes != 0:
            raise RecordValidationError(
                f"{path}: row {number}: timestamp {ts_text.strip()} not aligned to "
                f"{schema.resolution_minutes}-minute resolution"
            )
        previous = minute
        minutes.append(minute)
        values.append(value)

    frame = SeriesFrame(
        signal_id=schema.signal_id,
        kind=schema.kind,
        resolution_minutes=schema.resolution_minutes,
        minutes=np.array(minutes, dtype=np.int64),
        values=np.array(values, dtype=np.float64),
    )
    if len(frame):
        _check_day_completeness(frame, path)
    return frame


def _check_day_completeness(frame: SeriesFrame, path) -> None:
    """Fail if any day within the frame's span misses > 5 % of its samples."""
    res = frame.resolution_minutes
    m = frame.minutes
    first, last = int(m[0]), int(m[-1])
    days = m // MINUTES_PER_DAY
    day0 = first // MINUTES_PER_DAY
    counts = np.bincount(days - day0)
    for offset, count in enumerate(counts):
        day_start = (day0 + offset) * MINUTES_PER_DAY
        lo = max(day_start, first)
        hi = min(day_start + MINUTES_PER_DAY, last + res)
        lo = -(-lo // res) * res  # round up to the resolution lattice
        expected = max(0, -(-(hi - lo) // res))
        if expected and 1.0 - count / expected > 0.05:
            raise DataQualityError(
                f"{path}: day {day_label(day_start)} is missing "
                f"{expected - count} of {expected} expected samples (> 5 %)"
            )


def write_series(frame: SeriesFrame, path) -> None:
    """Serialize a frame back to ``timestamp,value_mw`` CSV.

    Values use shortest round-trip float formatting, so ingesting the
    output reproduces the numeric content bit-exactly.
    """
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(SERIES_HEADER)
        for minute, value in zip(frame.minutes, frame.values):
            writer.writerow((format_minute(minute), repr(float(value))))


def ingest_outages(path) -> list[OutageRecord]:
    """Read a ``unit_id,rated_mw,start,end,cause`` CSV into outage records.

    Planned outages are retained (they carry their cause) so that callers
    can exclude them from forced-outage statistics explicitly. An empty
    file with a valid header yields an empty list.
    """
    records = []
    for number, (unit, rated_text, start_text, end_text, cause) in _read_rows(
        path, OUTAGE_HEADER
    ):
        try:
            rated = float(rated_text)
        except ValueError:
            raise RecordValidationError(
                f"{path}: row {number}: unparseable rated_mw {rated_text!r}"
            ) from None
        try:
            record = OutageRecord(
                unit_id=unit.strip(),
                rated_mw=rated,
                start_minute=parse_minute(start_text),
                end_minute=parse_minute(end_text),
                cause=cause.strip().lower(),
            )
        except RecordValidationError as exc:
            raise RecordValidationError(f"{path}: row {number}: {exc}") from None
        records.append(record)
    return records


class IntervalGroups(NamedTuple):
    """Samples of one series grouped into left-closed sizing intervals."""

    start_minutes: np.ndarray  # interval start of each group
    sums: np.ndarray  # per-group value sums
    counts: np.ndarray  # per-group sample counts
    complete: np.ndarray  # bool: group has every expected sample
    expected_count: int
    segment_starts: np.ndarray  # index of each group's first sample


def group_by_interval(frame: SeriesFrame, interval_minutes: int) -> IntervalGroups:
    """Group a frame's samples by the interval ``[k*L, (k+1)*L)`` they fall in.

    Requires the frame resolution to divide the interval length. A group is
    complete iff it contains ``interval/resolution`` samples.
    """
    if interval_minutes <= 0:
        raise ParameterError("interval_minutes must be positive")
    if interval_minutes % frame.resolution_minutes != 0:
        raise ParameterError(
            f"series resolution {frame.resolution_minutes} min does not divide "
            f"the {interval_minutes}-minute interval"
        )
    if not len(frame):
        empty_i = np.array([], dtype=np.int64)
        empty_f = np.array([], dtype=np.float64)
        return IntervalGroups(
            empty_i, empty_f, empty_i.copy(), np.array([], dtype=bool),
            interval_minutes // frame.resolution_minutes, empty_i.copy(),
        )
    index = frame.minutes // interval_minutes
    uniq, starts, counts = np.unique(index, return_index=True, return_counts=True)
    sums = np.add.reduceat(frame.values, starts)
    expected = interval_minutes // frame.resolution_minutes
    return IntervalGroups(
        start_minutes=uniq * interval_minutes,
        sums=sums,
        counts=counts,
        complete=counts == expected,
        expected_count=expected,
        segment_starts=starts,
    )


def resample_to_interval(frame: SeriesFrame, interval_minutes: int) -> SeriesFrame:
    """Average a series onto left-closed intervals of the given length.

    Only complete intervals (every expected sample present) appear in the
    output; incomplete ones are simply absent. The interval must divide an
    hour so that intervals nest inside hour-of-week clusters.
    """
    if interval_minutes <= 0 or 60 % interval_minutes != 0:
        raise ParameterError(
            f"interval_minutes must be a divisor of 60, got {interval_minutes}"
        )
    if frame.resolution_minutes > interval_minutes:
        raise ParameterError(
            f"cannot resample {frame.resolution_minutes}-minute data onto a finer "
            f"{interval_minutes}-minute interval"
        )
    groups = group_by_interval(frame, interval_minutes)
    keep = groups.complete
    return SeriesFrame(
        signal_id=frame.signal_id,
        kind=frame.kind,
        resolution_minutes=interval_minutes,
        minutes=groups.start_minutes[keep],
        values=groups.sums[keep] / groups.expected_count,
    )


def aggregate_series(frames: Sequence[SeriesFrame], signal_id: str | None = None) -> SeriesFrame:
    """Sum several same-resolution series (e.g. plant-level VRE) into one.

    Only timestamps present in every input survive; if none are shared the
    inputs have no usable overlap.
    """
    if not frames:
        raise ParameterError("aggregate_series needs at least one frame")
    if len({f.resolution_minutes for f in frames}) != 1:
        raise ParameterError("cannot aggregate series with differing resolutions")
    if len({f.kind for f in frames}) != 1:
        raise ParameterError("cannot aggregate forecast and actual series together")
    common = frames[0].minutes
    for frame in frames[1:]:
        common = np.intersect1d(common, frame.minutes, assume_unique=True)
    if common.size == 0:
        raise NoOverlapError(
            "no overlapping timestamps across series "
            + ", ".join(repr(f.signal_id) for f in frames)
        )
    total = np.zeros(common.size)
    for frame in frames:
        total += frame.values[np.searchsorted(frame.minutes, common)]
    return SeriesFrame(
        signal_id=signal_id if signal_id is not None else frames[0].driver,
        kind=frames[0].kind,
        resolution_minutes=frames[0].resolution_minutes,
        minutes=common,
        values=total,
    )
