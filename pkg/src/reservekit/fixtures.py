"""Deterministic synthetic dataset generation.

Builds a small three-driver system (demand, wind, solar) with hourly
forecasts, per-minute actuals, a forced-outage log and a ready-to-run YAML
config. Everything is driven by one seeded generator, so a given
``(seed, days, holdout_days)`` triple always produces byte-identical files.
"""

from pathlib import Path

import numpy as np
import yaml

from .timeseries import (
    MINUTES_PER_DAY,
    SeriesFrame,
    format_minute,
    parse_minute,
    write_series,
)

#: default dataset start: 2018-01-01T00:00, a Monday
START_MINUTE = parse_minute("2018-01-01T00:00")

#: default start of the outage observation window
OBSERVATION_START_MINUTE = parse_minute("2017-01-01T00:00")

_UNITS = (  # unit id, rated MW, mean forced outages per year
    ("G1", 150.0, 6.0),
    ("G2", 200.0, 4.0),
    ("G3", 100.0, 8.0),
)


def ar1_series(rng: np.random.Generator, n: int, phi: float, sigma: float) -> np.ndarray:
    """Stationary Gaussian AR(1) path: x_t = phi * x_{t-1} + sigma * eps_t."""
    if not 0.0 <= phi < 1.0:
        raise ValueError(f"phi must lie in [0, 1), got {phi}")
    x = np.empty(n)
    x[0] = rng.normal(0.0, sigma / np.sqrt(1.0 - phi * phi))
    innovations = rng.normal(0.0, sigma, n)
    for t in range(1, n):
        x[t] = phi * x[t - 1] + innovations[t]
    return x


def _hourly_means(values: np.ndarray) -> np.ndarray:
    return values.reshape(-1, 60).mean(axis=1)


def _profiles(rng: np.random.Generator, n_minutes: int, start_minute: int):
    """Per-minute actuals and hourly forecasts for the three drivers."""
    minute = start_minute + np.arange(n_minutes, dtype=np.int64)
    minute_of_day = minute % MINUTES_PER_DAY
    day = minute // MINUTES_PER_DAY
    weekend = ((day + 3) % 7) >= 5

    load_profile = (
        1000.0
        + 180.0 * np.sin(2.0 * np.pi * (minute_of_day - 480.0) / MINUTES_PER_DAY)
        - 80.0 * weekend
    )
    load_actual = load_profile + ar1_series(rng, n_minutes, 0.97, 6.0)
    load_forecast = _hourly_means(load_profile) + rng.normal(0.0, 20.0, n_minutes // 60)

    wind_profile = 150.0 + 100.0 * np.sin(
        2.0 * np.pi * minute / (3.5 * MINUTES_PER_DAY) + 1.0
    )
    wind_actual = np.clip(wind_profile + ar1_series(rng, n_minutes, 0.95, 5.0), 0.0, None)
    wind_forecast = np.clip(
        _hourly_means(wind_profile) + rng.normal(0.0, 18.0, n_minutes // 60), 0.0, None
    )

    daylight = np.clip(np.sin(np.pi * (minute_of_day - 360.0) / 720.0), 0.0, None)
    solar_profile = 250.0 * daylight**1.2
    solar_actual = np.clip(
        solar_profile + daylight * ar1_series(rng, n_minutes, 0.9, 4.0), 0.0, None
    )
    solar_forecast = np.clip(
        _hourly_means(solar_profile)
        + _hourly_means(daylight) * rng.normal(0.0, 10.0, n_minutes // 60),
        0.0,
        None,
    )

    return {
        "load": (load_forecast, load_actual),
        "wind": (wind_forecast, wind_actual),
        "solar": (solar_forecast, solar_actual),
    }


def _write_driver(out_dir: Path, driver: str, suffix: str, start_minute: int,
                  forecast: np.ndarray, actual: np.ndarray) -> dict:
    n_minutes = actual.size
    forecast_frame = SeriesFrame(
        signal_id=driver,
        kind="forecast",
        resolution_minutes=60,
        minutes=start_minute + 60 * np.arange(n_minutes // 60, dtype=np.int64),
        values=forecast,
    )
    actual_frame = SeriesFrame(
        signal_id=driver,
        kind="actual",
        resolution_minutes=1,
        minutes=start_minute + np.arange(n_minutes, dtype=np.int64),
        values=actual,
    )
    forecast_name = f"{driver}_forecast{suffix}.csv"
    actual_name = f"{driver}_actual{suffix}.csv"
    write_series(forecast_frame, out_dir / forecast_name)
    write_series(actual_frame, out_dir / actual_name)
    return {
        "forecast": {"path": forecast_name, "resolution_minutes": 60},
        "actual": {"path": actual_name, "resolution_minutes": 1},
    }


def _write_outages(rng: np.random.Generator, out_dir: Path, window: tuple[int, int]) -> str:
    lo, hi = window
    years = (hi - lo) / (365.0 * MINUTES_PER_DAY)
    rows = []
    for unit_id, rated, rate_per_year in _UNITS:
        count = max(1, int(rng.poisson(rate_per_year * years)))
        starts = np.sort(rng.integers(lo, hi - 72 * 60, count))
        for start in starts:
            duration = int(rng.uniform(8.0, 48.0) * 60.0)
            cause = "forced" if rng.random() > 0.1 else "planned"
            rows.append(
                (
                    unit_id,
                    repr(rated),
                    format_minute(int(start)),
                    format_minute(int(start) + duration),
                    cause,
                )
            )
    path = out_dir / "outages.csv"
    with open(path, "w", newline="") as handle:
        handle.write("unit_id,rated_mw,start,end,cause\n")
        for row in rows:
            handle.write(",".join(row) + "\n")
    return path.name


def make_demo_dataset(
    out_dir,
    seed: int = 0,
    days: int = 14,
    holdout_days: int = 0,
) -> Path:
    """Write the synthetic dataset plus ``config.yaml``; returns the config path.

    ``days`` should be a multiple of 7 so every hour-of-week cluster is
    populated. With ``holdout_days`` > 0 an out-of-sample continuation of
    each series is written and referenced from the config's holdout block.
    """
    if days < 7:
        raise ValueError("need at least 7 days for cluster coverage")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)

    total_minutes = (days + holdout_days) * MINUTES_PER_DAY
    split = days * MINUTES_PER_DAY
    profiles = _profiles(rng, total_minutes, START_MINUTE)

    series_block, holdout_block = {}, {}
    for driver in ("load", "wind", "solar"):
        forecast, actual = profiles[driver]
        series_block[driver] = _write_driver(
            out_dir, driver, "", START_MINUTE, forecast[: split // 60], actual[:split]
        )
        if holdout_days:
            holdout_block[driver] = _write_driver(
                out_dir,
                driver,
                "_holdout",
                START_MINUTE + split,
                forecast[split // 60 :],
                actual[split:],
            )

    observation = (OBSERVATION_START_MINUTE, START_MINUTE + split)
    outages_name = _write_outages(rng, out_dir, observation)

    config = {
        "series": series_block,
        "outages": {
            "path": outages_name,
            "observation": {
                "start": format_minute(observation[0]),
                "end": format_minute(observation[1]),
            },
        },
        "interval_minutes": 60,
        "margin": 0.99,
        "grid_step_mw": 0.5,
        "mode": "dynamic",
        "output_dir": "out",
        "scenario": {
            "growth": {"load": 1.0, "wind": 1.0, "solar": 1.0},
            "intervals": [60, 30, 15, 5],
        },
    }
    if holdout_days:
        config["holdout"] = holdout_block

    config_path = out_dir / "config.yaml"
    with open(config_path, "w") as handle:
        yaml.safe_dump(config, handle, sort_keys=True)
    return config_path
