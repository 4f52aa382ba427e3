"""Run configuration: YAML schema, validation and flag overrides.

Paths inside a config file are resolved relative to the file itself, so a
dataset directory is relocatable as a unit.
"""

from dataclasses import dataclass
from pathlib import Path

import yaml

from .errors import ConfigurationError, ParameterError
from .imbalance import DRIVERS
from .scenario import ScenarioSpec
from .timeseries import SeriesSchema, parse_minute

VALID_MODES = ("dynamic", "static", "baseline2pct")
VALID_INTERVALS = (5, 15, 30, 60)


@dataclass(frozen=True)
class SeriesSource:
    """One CSV file backing part of a signal."""

    path: Path
    resolution_minutes: int

    def schema(self, signal_id: str, kind: str) -> SeriesSchema:
        return SeriesSchema(
            signal_id=signal_id, kind=kind, resolution_minutes=self.resolution_minutes
        )


@dataclass(frozen=True)
class RunConfig:
    """Everything a CLI command needs to run.

    ``series`` maps each driver to its forecast/actual source lists
    (several files per signal are aggregated by summation, e.g. plant-level
    VRE feeds). ``holdout`` has the same shape and backs the backtest.
    """

    series: dict
    output_dir: Path
    interval_minutes: int = 60
    margin: float = 0.99
    grid_step_mw: float = 0.5
    mode: str = "dynamic"
    outages_path: Path | None = None
    observation: tuple[int, int] | None = None
    fop_floor: float = 0.0
    baseline_fraction: float = 0.02
    scenario: ScenarioSpec | None = None
    holdout: dict | None = None
    requirements_path: Path | None = None
    seed: int | None = None

    def __post_init__(self):
        if not (0.0 < self.margin < 1.0):
            raise ParameterError(f"margin must lie in (0, 1), got {self.margin}")
        if self.interval_minutes not in VALID_INTERVALS:
            raise ParameterError(
                f"interval_minutes must be one of {VALID_INTERVALS}, got {self.interval_minutes}"
            )
        if self.mode not in VALID_MODES:
            raise ParameterError(f"mode must be one of {VALID_MODES}, got {self.mode!r}")
        if self.grid_step_mw <= 0:
            raise ParameterError(f"grid_step_mw must be positive, got {self.grid_step_mw}")
        if not (0.0 < self.baseline_fraction < 1.0):
            raise ParameterError(
                f"baseline_fraction must lie in (0, 1), got {self.baseline_fraction}"
            )
        missing = [d for d in DRIVERS if d not in self.series]
        if missing:
            raise ConfigurationError(
                f"config must describe all drivers {DRIVERS}; missing {', '.join(missing)}"
            )
        if self.outages_path is not None and self.observation is None:
            raise ConfigurationError(
                "outage records need an explicit observation window "
                "(outages.observation.start/end)"
            )


def _as_sources(node, base: Path, where: str) -> list[SeriesSource]:
    entries = node if isinstance(node, list) else [node]
    sources = []
    for entry in entries:
        if not isinstance(entry, dict) or "path" not in entry or "resolution_minutes" not in entry:
            raise ConfigurationError(
                f"{where}: each source needs 'path' and 'resolution_minutes'"
            )
        resolution = entry["resolution_minutes"]
        if not isinstance(resolution, int) or resolution <= 0:
            raise ConfigurationError(
                f"{where}: resolution_minutes must be a positive integer"
            )
        sources.append(SeriesSource(path=base / str(entry["path"]), resolution_minutes=resolution))
    if not sources:
        raise ConfigurationError(f"{where}: no sources given")
    return sources


def _parse_series_block(block, base: Path, where: str) -> dict:
    if not isinstance(block, dict):
        raise ConfigurationError(f"{where}: expected a driver mapping")
    parsed = {}
    for driver, signals in block.items():
        if driver not in DRIVERS:
            raise ConfigurationError(
                f"{where}: unknown driver {driver!r}; expected one of {DRIVERS}"
            )
        if not isinstance(signals, dict):
            raise ConfigurationError(f"{where}.{driver}: expected forecast/actual entries")
        parsed[driver] = {}
        for kind in ("forecast", "actual"):
            if kind not in signals:
                raise ConfigurationError(f"{where}.{driver}: missing {kind} source")
            parsed[driver][kind] = _as_sources(
                signals[kind], base, f"{where}.{driver}.{kind}"
            )
    return parsed


def load_run_config(path, **overrides) -> RunConfig:
    """Load and validate a YAML run config, applying CLI flag overrides.

    Recognized overrides: ``margin``, ``interval_minutes``, ``output_dir``,
    ``mode``, ``seed``, ``requirements_path`` (None values are ignored).
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"input file not found: {path}")
    base = path.parent
    with open(path) as handle:
        try:
            raw = yaml.safe_load(handle)
        except yaml.YAMLError as exc:
            raise ConfigurationError(f"{path}: invalid YAML: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigurationError(f"{path}: config must be a mapping")
    if "series" not in raw:
        raise ConfigurationError(f"{path}: missing 'series' section")

    series = _parse_series_block(raw["series"], base, "series")
    holdout = None
    if raw.get("holdout") is not None:
        holdout = _parse_series_block(raw["holdout"], base, "holdout")

    outages_path = None
    observation = None
    fop_floor = 0.0
    if raw.get("outages") is not None:
        outage_node = raw["outages"]
        if not isinstance(outage_node, dict) or "path" not in outage_node:
            raise ConfigurationError("outages section needs a 'path'")
        outages_path = base / str(outage_node["path"])
        window = outage_node.get("observation")
        if window is not None:
            if not isinstance(window, dict) or "start" not in window or "end" not in window:
                raise ConfigurationError("outages.observation needs 'start' and 'end'")
            observation = (
                parse_minute(str(window["start"])),
                parse_minute(str(window["end"])),
            )
            if observation[1] <= observation[0]:
                raise ConfigurationError("outages.observation must have positive length")
        fop_floor = float(outage_node.get("fop_floor", 0.0))

    margin = float(raw.get("margin", 0.99))
    scenario = None
    if raw.get("scenario") is not None:
        node = raw["scenario"]
        if not isinstance(node, dict):
            raise ConfigurationError("scenario section must be a mapping")
        scenario = ScenarioSpec(
            growth={str(k): float(v) for k, v in (node.get("growth") or {}).items()},
            forecast_improvement={
                str(k): float(v) for k, v in (node.get("forecast_improvement") or {}).items()
            },
            margin=float(node.get("margin", margin)),
            intervals=tuple(int(i) for i in node.get("intervals", (60, 30, 15, 5))),
        )

    output_dir = Path(raw.get("output_dir", "out"))
    if not output_dir.is_absolute():
        output_dir = base / output_dir  # config-relative; flag overrides are cwd-relative

    values = dict(
        series=series,
        output_dir=output_dir,
        interval_minutes=int(raw.get("interval_minutes", 60)),
        margin=margin,
        grid_step_mw=float(raw.get("grid_step_mw", 0.5)),
        mode=str(raw.get("mode", "dynamic")),
        outages_path=outages_path,
        observation=observation,
        fop_floor=fop_floor,
        baseline_fraction=float(raw.get("baseline_fraction", 0.02)),
        scenario=scenario,
        holdout=holdout,
        requirements_path=None,
        seed=raw.get("seed"),
    )
    for key, value in overrides.items():
        if value is None:
            continue
        if key not in values:
            raise ConfigurationError(f"unknown override {key!r}")
        values[key] = value
    values["output_dir"] = Path(values["output_dir"])
    if values["requirements_path"] is not None:
        values["requirements_path"] = Path(values["requirements_path"])
    return RunConfig(**values)
