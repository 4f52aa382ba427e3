"""reservekit: data-driven sizing of secondary and tertiary
frequency-control reserves from historical power-system time series.

The pipeline clusters forecast and noise errors by hour of week, estimates
their densities with Gaussian kernels on a shared MW lattice, convolves
them with the fleet's capacity-outage distribution and reads the reserve
requirements off the resulting imbalance distribution at a reliability
margin.
"""

from .backtest import ClassCoverage, CoverageReport, evaluate_coverage, realized_imbalances
from .config import RunConfig, SeriesSource, load_run_config
from .distribution import (
    DiscreteDistribution,
    KdeConfig,
    convolve,
    convolve_all,
    kde_estimate,
    point_mass,
    read_distribution,
    regrid,
    silverman_bandwidth,
    write_distribution,
)
from .errors import (
    ConfigurationError,
    DataInconsistencyError,
    DataQualityError,
    GridIncompatibilityError,
    InsufficientDataError,
    NoOverlapError,
    OrderingError,
    ParameterError,
    RecordValidationError,
    ReserveSizingError,
    SchemaError,
)
from .fixtures import make_demo_dataset
from .imbalance import (
    DRIVER_SIGNS,
    DRIVERS,
    ERROR_KINDS,
    ErrorSampleSet,
    SignConventionReport,
    compute_forecast_errors,
    compute_noise_errors,
    sign_convention_check,
)
from .outages import (
    GeneratorOutageStats,
    build_outage_stats,
    compute_fop,
    compute_for,
    compute_mttr,
    total_outage_distribution,
    unit_outage_distribution,
)
from .scenario import (
    ScenarioSpec,
    SweepRow,
    reduction_pct,
    run_resolution_sweep,
    scale_samples,
    synthesize_subhourly_forecasts,
)
from .sizing import (
    DynamicReserveSizer,
    ReliabilityPolicy,
    ReserveRequirement,
    StaticReserveSizer,
    build_secondary_reserve_pdf,
    build_total_reserve_pdf,
    extract_requirements,
    mean_requirement,
    regulating_reserve_baseline,
    size_static,
    split_tertiary,
)
from .timeseries import (
    OutageRecord,
    SeriesFrame,
    SeriesSchema,
    aggregate_series,
    cluster_label,
    day_label,
    format_minute,
    group_by_interval,
    hour_of_week,
    ingest_outages,
    ingest_series,
    parse_minute,
    resample_to_interval,
    write_series,
)

__version__ = "0.1.0"
