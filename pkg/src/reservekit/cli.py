"""Command-line interface.

Subcommands mirror the pipeline stages: ``errors`` extracts clustered error
samples, ``size`` produces per-cluster requirements (plus static and
fixed-fraction baselines for comparison), ``sweep`` re-sizes across
sizing-interval lengths, and ``backtest`` scores sized requirements against
a holdout period. ``fixture`` writes a synthetic demo dataset so every
command can be exercised without real data.

All failures exit with a single machine-parseable stderr line
``error[<category>]: <message>``; exit code 2 marks configuration/input
problems, 3 an empty data overlap, 1 anything else.
"""

import csv
import logging
from pathlib import Path

import click
import numpy as np

from .backtest import evaluate_coverage, realized_imbalances
from .config import RunConfig, load_run_config
from .distribution import DiscreteDistribution
from .errors import (
    ConfigurationError,
    DataQualityError,
    NoOverlapError,
    OrderingError,
    ParameterError,
    RecordValidationError,
    ReserveSizingError,
    SchemaError,
)
from .fixtures import make_demo_dataset
from .imbalance import (
    DRIVERS,
    ErrorSampleSet,
    compute_forecast_errors,
    compute_noise_errors,
    sign_convention_check,
)
from .outages import build_outage_stats
from .scenario import ScenarioSpec, run_resolution_sweep, scale_samples
from .sizing import (
    DynamicReserveSizer,
    ReserveRequirement,
    StaticReserveSizer,
    regulating_reserve_baseline,
)
from .timeseries import (
    aggregate_series,
    format_minute,
    hour_of_week,
    ingest_outages,
    ingest_series,
)

log = logging.getLogger(__name__)

REQUIREMENT_HEADER = ("cluster_key", "reserve_class", "up_mw", "down_mw", "margin")


def _fmt(value: float) -> str:
    return repr(float(value))


def _load_signal(sources, driver: str, kind: str):
    frames = [
        ingest_series(source.path, source.schema(f"{driver}:{i}" if len(sources) > 1 else driver, kind))
        for i, source in enumerate(sources)
    ]
    if len(frames) == 1:
        return frames[0]
    return aggregate_series(frames, signal_id=driver)


def _load_bundle(series_block) -> dict:
    """Ingest and aggregate every driver's forecast and actual series."""
    bundle = {}
    for driver in DRIVERS:
        if driver not in series_block:
            raise ConfigurationError(f"series config missing driver {driver!r}")
        bundle[driver] = {
            kind: _load_signal(series_block[driver][kind], driver, kind)
            for kind in ("forecast", "actual")
        }
    return bundle


def _compute_error_sets(bundle, interval_minutes: int) -> list[ErrorSampleSet]:
    sets = []
    for driver in DRIVERS:
        forecast = bundle[driver]["forecast"]
        actual = bundle[driver]["actual"]
        sets.append(compute_forecast_errors(forecast, actual, interval_minutes))
        sets.append(compute_noise_errors(actual, interval_minutes))
    return sets


def _load_outage_stats(config: RunConfig):
    if config.outages_path is None:
        return None
    records = ingest_outages(config.outages_path)
    return build_outage_stats(records, config.observation, fop_floor=config.fop_floor)


def _apply_scenario(error_sets, scenario: ScenarioSpec | None):
    if scenario is None or not scenario.growth:
        return error_sets
    return [scale_samples(sample_set, scenario) for sample_set in error_sets]


def _write_error_csv(sample_set: ErrorSampleSet, path: Path) -> None:
    if sample_set.minutes is None:
        raise ConfigurationError(
            f"{sample_set.driver}/{sample_set.kind} set carries no timestamps"
        )
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(("cluster_key", "timestamp", "driver", "kind", "error_mw"))
        for cluster in sample_set.clusters:
            minutes = sample_set.minutes[cluster]
            values = sample_set.samples[cluster]
            for minute, value in zip(minutes, values):
                writer.writerow(
                    (
                        cluster,
                        format_minute(minute),
                        sample_set.driver,
                        sample_set.kind,
                        _fmt(value),
                    )
                )


def _write_requirements_csv(requirements, path: Path) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(REQUIREMENT_HEADER)
        for req in requirements:
            writer.writerow(
                (
                    "" if req.cluster is None else req.cluster,
                    req.reserve_class,
                    _fmt(req.up_mw),
                    _fmt(req.down_mw),
                    _fmt(req.margin),
                )
            )


def read_requirements_csv(path) -> list[ReserveRequirement]:
    """Read back a requirements CSV written by the size command."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"input file not found: {path}")
    requirements = []
    with open(path, newline="") as handle:
        reader = csv.DictReader(handle)
        if reader.fieldnames is None or tuple(reader.fieldnames) != REQUIREMENT_HEADER:
            raise SchemaError(f"{path}: expected header {','.join(REQUIREMENT_HEADER)}")
        for number, row in enumerate(reader, start=2):
            try:
                requirements.append(
                    ReserveRequirement(
                        cluster=int(row["cluster_key"]) if row["cluster_key"] else None,
                        reserve_class=row["reserve_class"],
                        up_mw=float(row["up_mw"]),
                        down_mw=float(row["down_mw"]),
                        margin=float(row["margin"]),
                    )
                )
            except (ValueError, ParameterError) as exc:
                raise RecordValidationError(f"{path}: row {number}: {exc}") from None
    if not requirements:
        raise SchemaError(f"{path}: no requirement rows")
    return requirements


def _write_distributions_csv(pdfs_by_class: dict, path: Path) -> None:
    """One tidy CSV with every cluster's total/secondary density."""
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(("cluster_key", "reserve_class", "grid_mw", "mass"))
        for reserve_class in sorted(pdfs_by_class):
            per_cluster = pdfs_by_class[reserve_class]
            for cluster in sorted(per_cluster):
                pdf: DiscreteDistribution = per_cluster[cluster]
                for value, mass in zip(pdf.grid, pdf.masses):
                    writer.writerow((cluster, reserve_class, _fmt(value), _fmt(mass)))


def _cluster_peak_forecast(load_forecast) -> dict[int, float]:
    """Largest historical hourly load forecast per hour-of-week cluster."""
    clusters = hour_of_week(load_forecast.minutes)
    peaks: dict[int, float] = {}
    for cluster, value in zip(clusters, load_forecast.values):
        key = int(cluster)
        if value > peaks.get(key, -np.inf):
            peaks[key] = float(value)
    return peaks


# ---------------------------------------------------------------------------
# command implementations


def cmd_errors(config: RunConfig) -> list[Path]:
    """Extract the six clustered error sample sets and write one CSV each."""
    bundle = _load_bundle(config.series)
    error_sets = _compute_error_sets(bundle, config.interval_minutes)
    config.output_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for sample_set in error_sets:
        path = config.output_dir / f"errors_{sample_set.driver}_{sample_set.kind}.csv"
        _write_error_csv(sample_set, path)
        paths.append(path)
        click.echo(str(sign_convention_check(sample_set)))
    return paths


def cmd_size(config: RunConfig) -> list[Path]:
    """Size reserves according to the configured mode and write CSVs.

    ``dynamic`` writes per-cluster requirements for all three classes, the
    per-cluster densities, and a secondary-reserve comparison against the
    static and fixed-fraction baselines; ``static`` and ``baseline2pct``
    write just their own requirement tables.
    """
    bundle = _load_bundle(config.series)
    config.output_dir.mkdir(parents=True, exist_ok=True)
    paths = []

    if config.mode == "baseline2pct":
        peaks = _cluster_peak_forecast(bundle["load"]["forecast"])
        path = config.output_dir / "requirements_baseline2pct.csv"
        with open(path, "w", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(("cluster_key", "up_mw", "down_mw", "fraction"))
            for cluster in sorted(peaks):
                up, down = regulating_reserve_baseline(
                    peaks[cluster], config.baseline_fraction
                )
                writer.writerow((cluster, _fmt(up), _fmt(down), _fmt(config.baseline_fraction)))
        click.echo(f"wrote {path}")
        return [path]

    error_sets = _apply_scenario(
        _compute_error_sets(bundle, config.interval_minutes), config.scenario
    )
    outage_stats = _load_outage_stats(config)

    if config.mode == "static":
        sizer = StaticReserveSizer(margin=config.margin, grid_step_mw=config.grid_step_mw)
        sizer.fit(error_sets, outage_stats)
        path = config.output_dir / "requirements_static.csv"
        _write_requirements_csv(sizer.requirements_, path)
        click.echo(f"wrote {path}")
        return [path]

    sizer = DynamicReserveSizer(margin=config.margin, grid_step_mw=config.grid_step_mw)
    sizer.fit(error_sets, outage_stats)
    by_class = {
        cls: [r for r in sizer.requirements_ if r.reserve_class == cls]
        for cls in ("total", "secondary", "tertiary")
    }
    for reserve_class, requirements in by_class.items():
        path = config.output_dir / f"requirements_{reserve_class}.csv"
        _write_requirements_csv(requirements, path)
        paths.append(path)

    dist_path = config.output_dir / "distributions.csv"
    _write_distributions_csv(
        {"total": sizer.total_pdfs_, "secondary": sizer.secondary_pdfs_}, dist_path
    )
    paths.append(dist_path)

    # secondary-reserve comparison: dynamic vs pooled-static vs fixed fraction
    static = StaticReserveSizer(margin=config.margin, grid_step_mw=config.grid_step_mw)
    static_secondary = next(
        r
        for r in static.fit(error_sets, outage_stats).requirements_
        if r.reserve_class == "secondary"
    )
    peaks = _cluster_peak_forecast(bundle["load"]["forecast"])
    comparison_path = config.output_dir / "comparison_secondary.csv"
    with open(comparison_path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(
            (
                "cluster_key",
                "dynamic_up_mw",
                "dynamic_down_mw",
                "static_up_mw",
                "static_down_mw",
                "baseline_up_mw",
                "baseline_down_mw",
            )
        )
        for req in by_class["secondary"]:
            base_up, base_down = regulating_reserve_baseline(
                peaks.get(req.cluster, 0.0), config.baseline_fraction
            )
            writer.writerow(
                (
                    req.cluster,
                    _fmt(req.up_mw),
                    _fmt(req.down_mw),
                    _fmt(static_secondary.up_mw),
                    _fmt(static_secondary.down_mw),
                    _fmt(base_up),
                    _fmt(base_down),
                )
            )
    paths.append(comparison_path)

    for path in paths:
        click.echo(f"wrote {path}")
    return paths


def cmd_sweep(config: RunConfig) -> Path:
    """Re-size total reserves across sizing-interval lengths."""
    bundle = _load_bundle(config.series)
    actuals = {driver: bundle[driver]["actual"] for driver in DRIVERS}
    scenario = config.scenario
    if scenario is None:
        scenario = ScenarioSpec(
            growth={driver: 1.0 for driver in DRIVERS}, margin=config.margin
        )
    elif not scenario.growth:
        scenario = ScenarioSpec(
            growth={driver: 1.0 for driver in DRIVERS},
            forecast_improvement=scenario.forecast_improvement,
            margin=scenario.margin,
            intervals=scenario.intervals,
        )
    outage_stats = _load_outage_stats(config)
    rows = run_resolution_sweep(
        actuals, scenario, outage_stats, grid_step_mw=config.grid_step_mw
    )

    config.output_dir.mkdir(parents=True, exist_ok=True)
    path = config.output_dir / "sweep.csv"
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(
            (
                "interval_min",
                "mean_down_mw",
                "down_reduction_pct",
                "mean_up_mw",
                "up_reduction_pct",
            )
        )
        for row in rows:
            writer.writerow(
                (
                    row.interval_minutes,
                    _fmt(row.mean_down_mw),
                    _fmt(row.down_reduction_pct),
                    _fmt(row.mean_up_mw),
                    _fmt(row.up_reduction_pct),
                )
            )
    for row in rows:
        click.echo(
            f"{row.interval_minutes:>3} min: down {row.mean_down_mw:9.2f} MW "
            f"({row.down_reduction_pct:+6.1f} %), up {row.mean_up_mw:9.2f} MW "
            f"({row.up_reduction_pct:+6.1f} %)"
        )
    click.echo(f"wrote {path}")
    return path


def cmd_backtest(config: RunConfig) -> Path:
    """Score requirements against the holdout period's realized imbalances."""
    if config.holdout is None:
        raise ConfigurationError("backtest needs a 'holdout' series block in the config")

    if config.requirements_path is not None:
        requirements = read_requirements_csv(config.requirements_path)
    else:
        bundle = _load_bundle(config.series)
        error_sets = _apply_scenario(
            _compute_error_sets(bundle, config.interval_minutes), config.scenario
        )
        outage_stats = _load_outage_stats(config)
        if config.mode == "static":
            sizer = StaticReserveSizer(margin=config.margin, grid_step_mw=config.grid_step_mw)
        else:
            sizer = DynamicReserveSizer(margin=config.margin, grid_step_mw=config.grid_step_mw)
        requirements = sizer.fit(error_sets, outage_stats).requirements_

    holdout_bundle = _load_bundle(config.holdout)
    imbalances = realized_imbalances(
        {d: holdout_bundle[d]["forecast"] for d in DRIVERS},
        {d: holdout_bundle[d]["actual"] for d in DRIVERS},
        config.interval_minutes,
    )
    report = evaluate_coverage(requirements, imbalances, config.margin)

    config.output_dir.mkdir(parents=True, exist_ok=True)
    path = config.output_dir / "backtest.csv"
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(
            (
                "reserve_class",
                "intervals_evaluated",
                "upward_shortages",
                "downward_shortages",
                "achieved_coverage",
                "target_margin",
            )
        )
        for row in report.classes:
            writer.writerow(
                (
                    row.reserve_class,
                    row.intervals_evaluated,
                    row.upward_shortages,
                    row.downward_shortages,
                    _fmt(row.achieved_coverage),
                    _fmt(report.target_margin),
                )
            )
    click.echo(str(report))
    click.echo(f"wrote {path}")
    return path


# ---------------------------------------------------------------------------
# click wiring


@click.group()
@click.option("--config", "config_path", type=click.Path(), default=None,
              help="YAML run configuration.")
@click.option("--margin", type=float, default=None, help="Reliability margin override.")
@click.option("--interval", type=int, default=None, help="Sizing interval override (min).")
@click.option("--out", "output_dir", type=click.Path(), default=None,
              help="Output directory override.")
@click.option("--mode", type=click.Choice(["dynamic", "static", "baseline2pct"]),
              default=None, help="Sizing mode override.")
@click.option("--seed", type=int, default=None, help="Seed for fixture generation.")
@click.pass_context
def cli(ctx, config_path, margin, interval, output_dir, mode, seed):
    """Reserve sizing from historical imbalance statistics."""
    ctx.ensure_object(dict)
    ctx.obj.update(
        config_path=config_path,
        overrides=dict(
            margin=margin,
            interval_minutes=interval,
            output_dir=output_dir,
            mode=mode,
            seed=seed,
        ),
    )


def _config_from_ctx(ctx, **extra) -> RunConfig:
    config_path = ctx.obj.get("config_path")
    if config_path is None:
        raise ConfigurationError("this command needs --config pointing to a YAML file")
    overrides = dict(ctx.obj["overrides"])
    overrides.update(extra)
    return load_run_config(config_path, **overrides)


@cli.command("errors")
@click.pass_context
def errors_command(ctx):
    """Extract clustered forecast/noise error samples to CSV."""
    cmd_errors(_config_from_ctx(ctx))


@cli.command("size")
@click.pass_context
def size_command(ctx):
    """Size per-cluster reserve requirements."""
    cmd_size(_config_from_ctx(ctx))


@cli.command("sweep")
@click.pass_context
def sweep_command(ctx):
    """Sweep sizing-interval lengths and report requirement reductions."""
    cmd_sweep(_config_from_ctx(ctx))


@cli.command("backtest")
@click.option("--requirements", "requirements_path", type=click.Path(), default=None,
              help="Evaluate a previously written requirements CSV instead of re-sizing.")
@click.pass_context
def backtest_command(ctx, requirements_path):
    """Evaluate achieved coverage on the holdout period."""
    cmd_backtest(_config_from_ctx(ctx, requirements_path=requirements_path))


@cli.command("fixture")
@click.option("--days", type=int, default=14, show_default=True,
              help="Training days to generate (multiple of 7 recommended).")
@click.option("--holdout-days", type=int, default=0, show_default=True,
              help="Additional out-of-sample days for backtesting.")
@click.pass_context
def fixture_command(ctx, days, holdout_days):
    """Write a synthetic demo dataset plus config.yaml."""
    seed = ctx.obj["overrides"].get("seed")
    out = ctx.obj["overrides"].get("output_dir") or "demo"
    config_path = make_demo_dataset(
        out, seed=0 if seed is None else seed, days=days, holdout_days=holdout_days
    )
    click.echo(f"wrote {config_path}")


def _exit_code(exc: ReserveSizingError) -> int:
    if isinstance(exc, NoOverlapError):
        return 3
    if isinstance(
        exc,
        (
            ConfigurationError,
            ParameterError,
            SchemaError,
            RecordValidationError,
            OrderingError,
            DataQualityError,
        ),
    ):
        return 2
    return 1


def main(argv=None) -> int:
    """Entry point with deterministic exit codes and one-line errors."""
    logging.basicConfig(format="%(levelname)s %(name)s: %(message)s")
    try:
        result = cli.main(args=argv, standalone_mode=False)
    except click.ClickException as exc:
        exc.show()
        return exc.exit_code
    except click.exceptions.Abort:
        click.echo("error[aborted]: interrupted", err=True)
        return 1
    except ReserveSizingError as exc:
        click.echo(f"error[{exc.category}]: {exc}", err=True)
        return _exit_code(exc)
    except FileNotFoundError as exc:
        click.echo(f"error[missing-input]: {exc}", err=True)
        return 2
    return int(result) if isinstance(result, int) else 0


if __name__ == "__main__":
    raise SystemExit(main())
