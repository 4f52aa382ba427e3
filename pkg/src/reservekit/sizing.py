"""Reserve sizing: reliability policies, per-cluster imbalance densities,
requirement extraction and the static/dynamic sizing estimators.

The dynamic path follows fit/predict: fitting learns, for every hour-of-week
cluster, the densities of the six error drivers (3 drivers x forecast/noise,
oriented so positive = shortage), convolves them with the fleet
capacity-outage distribution into total and secondary imbalance PDFs, and
extracts up/down requirements at the reliability margin. The static path
pools all clusters into a single requirement per reserve class.
"""

import logging
import math
from dataclasses import dataclass
from itertools import product
from typing import Mapping, Sequence

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .distribution import (
    DiscreteDistribution,
    KdeConfig,
    convolve_all,
    kde_estimate,
    point_mass,
    regrid,
)
from .errors import ConfigurationError, ParameterError
from .imbalance import DRIVER_SIGNS, DRIVERS, ERROR_KINDS, ErrorSampleSet
from .outages import GeneratorOutageStats, total_outage_distribution

log = logging.getLogger(__name__)

RESERVE_CLASSES = ("total", "secondary", "tertiary")


@dataclass(frozen=True)
class ReliabilityPolicy:
    """How the reliability margin is split between the two tails.

    ``margin`` is the probability the sized reserves cover the imbalance;
    the complement is split between deficit (imbalance beyond the upward
    reserve) and surplus (beyond the downward reserve). The three
    probabilities must partition 1.
    """

    margin: float
    deficit_probability: float
    surplus_probability: float

    def __post_init__(self):
        for name, value in (
            ("margin", self.margin),
            ("deficit_probability", self.deficit_probability),
            ("surplus_probability", self.surplus_probability),
        ):
            if not (isinstance(value, (int, float)) and math.isfinite(value) and 0.0 < value < 1.0):
                raise ParameterError(f"{name} must lie in (0, 1), got {value!r}")
        total = self.margin + self.deficit_probability + self.surplus_probability
        if abs(total - 1.0) > 1e-9:
            raise ParameterError(
                f"margin and tail probabilities must sum to 1, got {total!r}"
            )

    @classmethod
    def symmetric(cls, margin: float) -> "ReliabilityPolicy":
        """Split the complement of the margin evenly between the tails."""
        if not (isinstance(margin, (int, float)) and math.isfinite(margin) and 0.0 < margin < 1.0):
            raise ParameterError(f"margin must lie in (0, 1), got {margin!r}")
        tail = (1.0 - margin) / 2.0
        return cls(margin=margin, deficit_probability=tail, surplus_probability=tail)


@dataclass(frozen=True)
class ReserveRequirement:
    """Sized up/down reserve for one cluster (or pooled, cluster=None)."""

    cluster: int | None
    reserve_class: str
    up_mw: float
    down_mw: float
    margin: float

    def __post_init__(self):
        if self.reserve_class not in RESERVE_CLASSES:
            raise ParameterError(
                f"reserve_class must be one of {RESERVE_CLASSES}, got {self.reserve_class!r}"
            )
        if self.cluster is not None and not 1 <= self.cluster <= 168:
            raise ParameterError(f"cluster key {self.cluster} outside [1, 168]")
        if self.up_mw < 0 or self.down_mw < 0:
            raise ParameterError("reserve magnitudes must be non-negative")


def extract_requirements(
    pdf: DiscreteDistribution, policy: ReliabilityPolicy
) -> tuple[float, float]:
    """Up/down reserve magnitudes covering the policy's tail probabilities.

    The upward reserve is the smallest grid value whose CDF reaches
    ``1 - surplus_probability``; the downward reserve is the magnitude of
    the smallest grid value whose CDF reaches ``deficit_probability``. Both
    are clamped at zero (a quantile on the wrong side of zero means no
    reserve of that direction is needed).
    """
    up = max(0.0, pdf.quantile(1.0 - policy.surplus_probability))
    down = max(0.0, -pdf.quantile(policy.deficit_probability))
    return up, down


def split_tertiary(
    total: ReserveRequirement, secondary: ReserveRequirement
) -> ReserveRequirement:
    """Tertiary requirement as the total minus the secondary, per direction.

    A secondary exceeding the total (possible through grid snapping on
    near-identical densities) is clamped to zero with a warning rather than
    producing a negative reserve.
    """
    if total.reserve_class != "total" or secondary.reserve_class != "secondary":
        raise ParameterError(
            f"split_tertiary needs a total and a secondary requirement, got "
            f"{total.reserve_class!r} and {secondary.reserve_class!r}"
        )
    if total.cluster != secondary.cluster:
        raise ParameterError(
            f"cluster mismatch: total for {total.cluster}, secondary for {secondary.cluster}"
        )
    if total.margin != secondary.margin:
        raise ParameterError("total and secondary were sized at different margins")
    up = total.up_mw - secondary.up_mw
    down = total.down_mw - secondary.down_mw
    if up < 0 or down < 0:
        log.warning(
            "secondary exceeds total for cluster %s (up %+.3f MW, down %+.3f MW); "
            "clamping tertiary to zero", total.cluster, up, down,
        )
    return ReserveRequirement(
        cluster=total.cluster,
        reserve_class="tertiary",
        up_mw=max(0.0, up),
        down_mw=max(0.0, down),
        margin=total.margin,
    )


def regulating_reserve_baseline(
    forecast_mw: float, fraction: float = 0.02
) -> tuple[float, float]:
    """Fixed-fraction regulating-reserve rule: up = down = fraction * forecast."""
    if forecast_mw < 0:
        raise ParameterError(f"forecast_mw must be non-negative, got {forecast_mw}")
    if not 0.0 < fraction < 1.0:
        raise ParameterError(f"fraction must lie in (0, 1), got {fraction}")
    reserve = fraction * forecast_mw
    return reserve, reserve


def build_total_reserve_pdf(
    cluster: int,
    error_pdfs: Mapping[tuple[str, str], DiscreteDistribution],
    outage_pdf: DiscreteDistribution,
) -> DiscreteDistribution:
    """Total-imbalance PDF: all six error densities plus the outage block.

    The six (driver, kind) densities must all be present; the drivers are
    treated as independent, so the total is their convolution.
    """
    missing = [key for key in product(DRIVERS, ERROR_KINDS) if key not in error_pdfs]
    if missing:
        names = ", ".join(f"{d}/{k}" for d, k in missing)
        raise ConfigurationError(f"missing {names} density for cluster {cluster}")
    parts = [error_pdfs[key] for key in product(DRIVERS, ERROR_KINDS)]
    parts.append(outage_pdf)
    return convolve_all(parts)


def build_secondary_reserve_pdf(
    cluster: int,
    noise_pdfs: Mapping[str, DiscreteDistribution],
    outage_pdf: DiscreteDistribution,
) -> DiscreteDistribution:
    """Secondary-imbalance PDF: the three noise densities plus the outage
    block (forecast errors are the slower component handled by tertiary)."""
    missing = [driver for driver in DRIVERS if driver not in noise_pdfs]
    if missing:
        raise ConfigurationError(
            f"missing {', '.join(missing)} noise density for cluster {cluster}"
        )
    parts = [noise_pdfs[driver] for driver in DRIVERS]
    parts.append(outage_pdf)
    return convolve_all(parts)


def _catalog_error_sets(error_sets) -> dict[tuple[str, str], ErrorSampleSet]:
    """Index sample sets by (driver, kind) and insist on exactly the six."""
    catalog: dict[tuple[str, str], ErrorSampleSet] = {}
    for sample_set in error_sets:
        if sample_set.driver not in DRIVERS:
            raise ConfigurationError(
                f"unknown driver {sample_set.driver!r}; expected one of {DRIVERS}"
            )
        key = (sample_set.driver, sample_set.kind)
        if key in catalog:
            raise ConfigurationError(f"duplicate sample set for {key[0]}/{key[1]}")
        catalog[key] = sample_set
    missing = [key for key in product(DRIVERS, ERROR_KINDS) if key not in catalog]
    if missing:
        names = ", ".join(f"{d}/{k}" for d, k in missing)
        raise ConfigurationError(f"missing error sample sets: {names}")
    return catalog


def _oriented(samples: np.ndarray, driver: str) -> np.ndarray:
    """Samples flipped onto the shortage-positive reserve axis."""
    sign = DRIVER_SIGNS[driver]
    return samples if sign == 1.0 else -samples


def _resolve_outage_pdf(outage, grid_step_mw: float) -> DiscreteDistribution:
    """Normalize fit's outage argument onto the sizing lattice."""
    if outage is None:
        return point_mass(0.0, grid_step_mw)
    if isinstance(outage, DiscreteDistribution):
        return regrid(outage, grid_step_mw)
    return total_outage_distribution(list(outage), grid_step_mw)


class DynamicReserveSizer(BaseEstimator):
    """Per-cluster reserve sizing from clustered error samples.

    Parameters
    ----------
    margin : float
        Reliability margin; the complement is split evenly over the tails.
    grid_step_mw : float
        Lattice step of all densities and of the resulting requirements.
    support_sigma : float
        Kernel support extension of the density grids, in bandwidths.
    bandwidth_override : float or None
        Fixed kernel bandwidth; None applies the sample-size rule.

    Attributes (after fit)
    ----------------------
    policy_ : ReliabilityPolicy
    outage_pdf_ : DiscreteDistribution
    clusters_ : list of int
    error_pdfs_ : dict mapping (driver, kind) -> {cluster: DiscreteDistribution}
    total_pdfs_, secondary_pdfs_ : dict mapping cluster -> DiscreteDistribution
    requirements_ : tuple of ReserveRequirement (all clusters, all classes)
    """

    def __init__(
        self,
        margin: float = 0.99,
        grid_step_mw: float = 0.5,
        support_sigma: float = 6.0,
        bandwidth_override: float | None = None,
    ):
        self.margin = margin
        self.grid_step_mw = grid_step_mw
        self.support_sigma = support_sigma
        self.bandwidth_override = bandwidth_override

    def _kde_config(self) -> KdeConfig:
        return KdeConfig(
            grid_step_mw=self.grid_step_mw,
            support_sigma=self.support_sigma,
            bandwidth_override=self.bandwidth_override,
        )

    def fit(self, error_sets: Sequence[ErrorSampleSet], outage=None):
        """Learn per-cluster imbalance densities and size all requirements.

        ``error_sets`` must cover the six (driver, kind) pairs; every
        cluster present in any set must be present in all of them.
        ``outage`` may be unit statistics, a ready distribution, or None
        (no outage block).
        """
        policy = ReliabilityPolicy.symmetric(self.margin)
        config = self._kde_config()
        catalog = _catalog_error_sets(error_sets)
        outage_pdf = _resolve_outage_pdf(outage, self.grid_step_mw)

        clusters = sorted({c for s in catalog.values() for c in s.clusters})
        if not clusters:
            raise ConfigurationError("error sample sets contain no clusters")

        error_pdfs: dict[tuple[str, str], dict[int, DiscreteDistribution]] = {
            key: {} for key in catalog
        }
        for (driver, kind), sample_set in catalog.items():
            for cluster in clusters:
                if cluster not in sample_set.samples:
                    raise ConfigurationError(
                        f"missing {driver}/{kind} samples for cluster {cluster}"
                    )
                error_pdfs[(driver, kind)][cluster] = kde_estimate(
                    _oriented(sample_set.samples[cluster], driver), config
                )

        total_pdfs, secondary_pdfs = {}, {}
        requirements = []
        for cluster in clusters:
            per_cluster = {key: error_pdfs[key][cluster] for key in error_pdfs}
            total_pdf = build_total_reserve_pdf(cluster, per_cluster, outage_pdf)
            secondary_pdf = build_secondary_reserve_pdf(
                cluster,
                {driver: per_cluster[(driver, "noise")] for driver in DRIVERS},
                outage_pdf,
            )
            total_pdfs[cluster] = total_pdf
            secondary_pdfs[cluster] = secondary_pdf

            total_req = ReserveRequirement(
                cluster, "total", *extract_requirements(total_pdf, policy), policy.margin
            )
            secondary_req = ReserveRequirement(
                cluster,
                "secondary",
                *extract_requirements(secondary_pdf, policy),
                policy.margin,
            )
            requirements += [total_req, secondary_req, split_tertiary(total_req, secondary_req)]

        self.policy_ = policy
        self.outage_pdf_ = outage_pdf
        self.clusters_ = clusters
        self.error_pdfs_ = error_pdfs
        self.total_pdfs_ = total_pdfs
        self.secondary_pdfs_ = secondary_pdfs
        self.requirements_ = tuple(requirements)
        return self

    def predict(self, clusters=None) -> tuple[ReserveRequirement, ...]:
        """Requirements for the given clusters (default: all fitted)."""
        check_is_fitted(self, "requirements_")
        if clusters is None:
            return self.requirements_
        wanted = set(int(c) for c in clusters)
        unknown = wanted - set(self.clusters_)
        if unknown:
            raise ParameterError(f"clusters not fitted: {sorted(unknown)}")
        return tuple(r for r in self.requirements_ if r.cluster in wanted)


class StaticReserveSizer(BaseEstimator):
    """Single pooled requirement per reserve class, ignoring clusters.

    ``scale`` optionally multiplies each driver's errors before estimation
    (e.g. a demand-growth ratio anchored on peak forecasts); drivers absent
    from the mapping keep factor 1.
    """

    def __init__(
        self,
        margin: float = 0.99,
        grid_step_mw: float = 0.5,
        support_sigma: float = 6.0,
        bandwidth_override: float | None = None,
        scale: Mapping[str, float] | None = None,
    ):
        self.margin = margin
        self.grid_step_mw = grid_step_mw
        self.support_sigma = support_sigma
        self.bandwidth_override = bandwidth_override
        self.scale = scale

    def fit(self, error_sets: Sequence[ErrorSampleSet], outage=None):
        policy = ReliabilityPolicy.symmetric(self.margin)
        config = KdeConfig(
            grid_step_mw=self.grid_step_mw,
            support_sigma=self.support_sigma,
            bandwidth_override=self.bandwidth_override,
        )
        catalog = _catalog_error_sets(error_sets)
        outage_pdf = _resolve_outage_pdf(outage, self.grid_step_mw)
        scale = dict(self.scale) if self.scale else {}

        pooled_pdfs = {}
        for (driver, kind), sample_set in catalog.items():
            pooled = sample_set.pooled()
            if pooled.size == 0:
                raise ConfigurationError(f"no samples in {driver}/{kind} set")
            factor = float(scale.get(driver, 1.0))
            pooled_pdfs[(driver, kind)] = kde_estimate(
                _oriented(pooled, driver) * factor, config
            )

        total_pdf = build_total_reserve_pdf(None, pooled_pdfs, outage_pdf)
        secondary_pdf = build_secondary_reserve_pdf(
            None, {d: pooled_pdfs[(d, "noise")] for d in DRIVERS}, outage_pdf
        )
        total_req = ReserveRequirement(
            None, "total", *extract_requirements(total_pdf, policy), policy.margin
        )
        secondary_req = ReserveRequirement(
            None, "secondary", *extract_requirements(secondary_pdf, policy), policy.margin
        )

        self.policy_ = policy
        self.outage_pdf_ = outage_pdf
        self.total_pdf_ = total_pdf
        self.secondary_pdf_ = secondary_pdf
        self.requirements_ = (
            total_req,
            secondary_req,
            split_tertiary(total_req, secondary_req),
        )
        return self

    def predict(self, clusters=None) -> tuple[ReserveRequirement, ...]:
        """The pooled requirements; ``clusters`` is accepted and ignored
        (static sizing is cluster-independent by definition)."""
        check_is_fitted(self, "requirements_")
        return self.requirements_


def size_static(
    error_sets: Sequence[ErrorSampleSet],
    outage=None,
    margin: float = 0.99,
    *,
    scale: Mapping[str, float] | None = None,
    grid_step_mw: float = 0.5,
    support_sigma: float = 6.0,
    bandwidth_override: float | None = None,
) -> tuple[ReserveRequirement, ...]:
    """Functional wrapper around :class:`StaticReserveSizer`."""
    sizer = StaticReserveSizer(
        margin=margin,
        grid_step_mw=grid_step_mw,
        support_sigma=support_sigma,
        bandwidth_override=bandwidth_override,
        scale=scale,
    )
    return sizer.fit(error_sets, outage).requirements_


def mean_requirement(
    requirements: Sequence[ReserveRequirement], reserve_class: str = "total"
) -> tuple[float, float]:
    """Mean (up, down) magnitude of one reserve class across clusters."""
    ups = [r.up_mw for r in requirements if r.reserve_class == reserve_class]
    downs = [r.down_mw for r in requirements if r.reserve_class == reserve_class]
    if not ups:
        raise ParameterError(f"no {reserve_class!r} requirements to average")
    return float(np.mean(ups)), float(np.mean(downs))
