"""Discrete distributions on a uniform MW lattice, kernel density
estimation of error samples, and exact convolution.

Every distribution lives on the lattice ``{k * step_mw}`` (its origin is an
integer multiple of the step), so distributions built independently for
different drivers share a common grid and can be convolved without any
resampling. Convolution is the exact discrete sum-of-independent-variables
operation; no FFT shortcuts, so mass bookkeeping stays bit-honest.
"""

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    GridIncompatibilityError,
    InsufficientDataError,
    ParameterError,
    SchemaError,
)

#: tolerance on total probability mass at construction
MASS_TOLERANCE = 1e-9

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class KdeConfig:
    """Grid and kernel settings for density estimation.

    ``support_sigma`` controls how far past the extreme samples the grid
    extends, in bandwidths; 6 keeps the truncated tail mass below 1e-9.
    ``bandwidth_override`` pins the kernel width instead of the
    sample-size-dependent rule, which matters when comparing densities
    built from differently sized sample sets.
    """

    grid_step_mw: float = 0.5
    support_sigma: float = 6.0
    bandwidth_override: float | None = None

    def __post_init__(self):
        if not (math.isfinite(self.grid_step_mw) and self.grid_step_mw > 0):
            raise ParameterError(f"grid_step_mw must be positive, got {self.grid_step_mw}")
        if self.support_sigma < 3.0:
            raise ParameterError(
                f"support_sigma must be >= 3 (got {self.support_sigma}); a shorter "
                "support truncates visible tail mass"
            )
        if self.bandwidth_override is not None and self.bandwidth_override <= 0:
            raise ParameterError("bandwidth_override must be positive when given")


@dataclass(frozen=True)
class DiscreteDistribution:
    """A probability mass function on a uniform MW grid.

    ``masses[k]`` is the probability of the value ``origin_mw + k * step_mw``.
    Masses must be non-negative and sum to 1 within :data:`MASS_TOLERANCE`;
    construction never renormalizes silently.
    """

    origin_mw: float
    step_mw: float
    masses: np.ndarray

    def __post_init__(self):
        if not (math.isfinite(self.step_mw) and self.step_mw > 0):
            raise ParameterError(f"step_mw must be positive, got {self.step_mw}")
        if not math.isfinite(self.origin_mw):
            raise ParameterError("origin_mw must be finite")
        m = np.array(self.masses, dtype=np.float64)
        if m.ndim != 1 or m.size == 0:
            raise ParameterError("masses must be a non-empty 1-D array")
        if not np.all(np.isfinite(m)):
            raise ParameterError("masses must be finite")
        if np.any(m < -1e-15):
            raise ParameterError(f"negative mass {m.min()} in distribution")
        np.clip(m, 0.0, None, out=m)  # forgive -0.0 / rounding dust only
        total = float(m.sum())
        if abs(total - 1.0) > MASS_TOLERANCE:
            raise ParameterError(
                f"masses sum to {total!r}, expected 1 within {MASS_TOLERANCE}"
            )
        # keep the origin on the {k * step} lattice so independent builds align
        k = self.origin_mw / self.step_mw
        if abs(k - round(k)) > 1e-6:
            raise GridIncompatibilityError(
                f"origin {self.origin_mw} is not a multiple of step {self.step_mw}"
            )
        m.setflags(write=False)
        object.__setattr__(self, "origin_mw", float(round(k) * self.step_mw))
        object.__setattr__(self, "masses", m)

    def __len__(self) -> int:
        return self.masses.size

    @property
    def grid(self) -> np.ndarray:
        """The support values ``origin + k * step``."""
        return self.origin_mw + self.step_mw * np.arange(self.masses.size)

    @property
    def max_mw(self) -> float:
        return self.origin_mw + self.step_mw * (self.masses.size - 1)

    def mean(self) -> float:
        return float(np.dot(self.grid, self.masses))

    def variance(self) -> float:
        g = self.grid - self.mean()
        return float(np.dot(g * g, self.masses))

    def cdf(self) -> np.ndarray:
        """Cumulative masses along the grid (last entry ~ 1)."""
        return np.cumsum(self.masses)

    def quantile(self, p: float) -> float:
        """Smallest grid value whose CDF is >= ``p``; requires 0 < p < 1."""
        if not (isinstance(p, (int, float)) and math.isfinite(p) and 0.0 < p < 1.0):
            raise ParameterError(f"quantile probability must lie in (0, 1), got {p!r}")
        cumulative = self.cdf()
        index = int(np.searchsorted(cumulative, p, side="left"))
        index = min(index, self.masses.size - 1)  # guard float-dust shortfall at 1
        return float(self.origin_mw + self.step_mw * index)


def point_mass(value_mw: float, step_mw: float) -> DiscreteDistribution:
    """Degenerate distribution at ``value_mw`` snapped onto the step lattice."""
    if not (math.isfinite(step_mw) and step_mw > 0):
        raise ParameterError(f"step_mw must be positive, got {step_mw}")
    k = round(value_mw / step_mw)
    return DiscreteDistribution(k * step_mw, step_mw, np.array([1.0]))


def silverman_bandwidth(samples) -> float:
    """Normal-reference-rule kernel bandwidth ``(4 / (3 T))^0.2 * sigma``.

    ``sigma`` is the sample standard deviation (ddof=1). Needs at least two
    samples; zero spread returns bandwidth 0.0 as the degenerate signal —
    the caller is expected to build a point mass in that case.
    """
    arr = np.asarray(samples, dtype=np.float64)
    if arr.size < 2:
        raise InsufficientDataError(
            f"bandwidth needs at least 2 samples, got {arr.size}"
        )
    sigma = float(arr.std(ddof=1))
    if sigma == 0.0:
        return 0.0
    return (4.0 / (3.0 * arr.size)) ** 0.2 * sigma


def _snapped_histogram(arr: np.ndarray, step: float) -> DiscreteDistribution:
    """Empirical distribution with every sample snapped to the lattice."""
    indices = np.round(arr / step).astype(np.int64)
    lo = int(indices.min())
    masses = np.bincount(indices - lo).astype(np.float64)
    masses /= arr.size
    return DiscreteDistribution(lo * step, step, masses)


def kde_estimate(samples, config: KdeConfig = KdeConfig()) -> DiscreteDistribution:
    """Gaussian-kernel density of the samples, discretized on the MW lattice.

    The mixture ``(1 / (T h)) * sum_t K((u - e_t) / h)`` is evaluated at
    every grid point spanning ``[min - s*h, max + s*h]`` (s = support
    sigma); point masses of ``density * step`` are then renormalized to sum
    to exactly 1, absorbing both discretization and tail truncation.

    Single-sample or zero-variance input degenerates to a point mass at the
    (snapped) sample value. A bandwidth narrower than half a grid step
    cannot be resolved on the lattice at all (the density aliases between
    grid points), so such samples are snapped to their nearest grid points
    instead — the h -> 0 limit of the mixture.
    """
    arr = np.asarray(samples, dtype=np.float64)
    if arr.size == 0:
        raise InsufficientDataError("cannot estimate a density from zero samples")
    step = config.grid_step_mw
    if arr.size == 1 or arr.std(ddof=1) == 0.0:
        # degenerate input: a kernel would only manufacture spread
        return point_mass(float(arr[0]), step)
    bandwidth = (
        config.bandwidth_override
        if config.bandwidth_override is not None
        else silverman_bandwidth(arr)
    )
    if bandwidth < 0.5 * step:
        return _snapped_histogram(arr, step)

    pad = config.support_sigma * bandwidth
    lo = math.floor((arr.min() - pad) / step)
    hi = math.ceil((arr.max() + pad) / step)
    grid = step * np.arange(lo, hi + 1)

    # Chunk over samples: grid x samples can be large for minute-level sets.
    density = np.zeros(grid.size)
    for start in range(0, arr.size, 1024):
        chunk = arr[start : start + 1024]
        z = (grid[:, None] - chunk[None, :]) / bandwidth
        density += np.exp(-0.5 * z * z).sum(axis=1)
    density *= _INV_SQRT_2PI / (arr.size * bandwidth)

    masses = density * step
    masses /= masses.sum()
    return DiscreteDistribution(lo * step, step, masses)


def convolve(a: DiscreteDistribution, b: DiscreteDistribution) -> DiscreteDistribution:
    """Distribution of the sum of two independent lattice variables.

    Both inputs must share the same step. The result's origin is the sum of
    the origins and its masses are the full discrete convolution — the
    direct quadratic sum, evaluated exactly.
    """
    if not math.isclose(a.step_mw, b.step_mw, rel_tol=1e-9, abs_tol=0.0):
        raise GridIncompatibilityError(
            f"cannot convolve distributions with steps {a.step_mw} and {b.step_mw}"
        )
    masses = np.convolve(a.masses, b.masses)
    # renormalization would hide upstream mass bugs; trust the inputs
    return DiscreteDistribution(a.origin_mw + b.origin_mw, a.step_mw, masses)


def convolve_all(distributions) -> DiscreteDistribution:
    """Left fold of :func:`convolve` over at least one distribution."""
    items = list(distributions)
    if not items:
        raise ParameterError("convolve_all needs at least one distribution")
    result = items[0]
    for other in items[1:]:
        result = convolve(result, other)
    return result


def regrid(dist: DiscreteDistribution, step_mw: float) -> DiscreteDistribution:
    """Re-express a distribution on a different lattice step.

    Each mass point is split linearly between its two bracketing points on
    the new lattice, which preserves both total mass and the mean exactly;
    the variance picks up at most one new-step-squared of smearing.
    """
    if not (math.isfinite(step_mw) and step_mw > 0):
        raise ParameterError(f"step_mw must be positive, got {step_mw}")
    if math.isclose(step_mw, dist.step_mw, rel_tol=1e-9, abs_tol=0.0):
        return dist
    x = dist.grid
    origin = math.floor(x[0] / step_mw + 1e-9) * step_mw
    position = (x - origin) / step_mw
    lower = np.floor(position + 1e-9).astype(np.int64)
    frac = np.clip(position - lower, 0.0, 1.0)
    frac[frac < 1e-9] = 0.0

    masses = np.zeros(int(lower.max()) + 2)
    np.add.at(masses, lower, dist.masses * (1.0 - frac))
    np.add.at(masses, lower + 1, dist.masses * frac)
    if masses[-1] == 0.0:
        masses = masses[:-1]
    return DiscreteDistribution(origin, step_mw, masses)


def write_distribution(dist: DiscreteDistribution, path) -> None:
    """Serialize a distribution to a ``grid_mw,mass`` CSV."""
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(("grid_mw", "mass"))
        for value, mass in zip(dist.grid, dist.masses):
            writer.writerow((repr(float(value)), repr(float(mass))))


def read_distribution(path) -> DiscreteDistribution:
    """Read a ``grid_mw,mass`` CSV back into a distribution."""
    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header is None or [h.strip().lower() for h in header] != ["grid_mw", "mass"]:
            raise SchemaError(f"{path}: expected header grid_mw,mass")
        grid, masses = [], []
        for row in reader:
            if not row:
                continue
            grid.append(float(row[0]))
            masses.append(float(row[1]))
    if len(grid) < 1:
        raise SchemaError(f"{path}: no distribution rows")
    if len(grid) == 1:
        # single point: the step is unrecoverable from the file; pick one
        # that keeps the value on its own lattice
        step = abs(grid[0]) if grid[0] != 0.0 else 1.0
        return DiscreteDistribution(grid[0], step, np.array(masses))
    steps = np.diff(grid)
    step = float(steps[0])
    if not np.allclose(steps, step, rtol=1e-9, atol=1e-12):
        raise SchemaError(f"{path}: grid is not uniform")
    return DiscreteDistribution(grid[0], step, np.array(masses))
