"""Orbit-based estimators used to cross-check the formalism.

The level-set estimator works on the cylinders that orbit points pick out
at dyadic scales.  For a sample point x and a scale 2^{-j}, let n_j(x) be the
first time with S_n log|Df|(x) >= j log 2; the n_j-cylinder around x has
length about 2^{-j} and local exponent e_j(x) = S_{n_j}/n_j.  For a bin
centre c above the typical exponent, the points with e_j >= c are covered
by N_j(c) ~ frac_j(c) 2^j boxes of that size (below the typical exponent
the set e_j <= c is used instead), so the box-counting dimension is
1 + d log frac_j / d(j log 2).  Sample points are all points along many
long orbits, which makes them distributed by the absolutely continuous
invariant measure.  The polynomial prefactor of the large-deviation
probability (order (j log 2)^{-1/2}) is removed before the fit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .equilibria import MeasureApprox, interval_mass
from .errors import CriticalPointError, DepthError, DomainError, InsufficientData
from .maps import MapSpec

MIN_STARTS = 100
MIN_BIN_COUNT = 20
DEFAULT_SCALES = tuple(range(8, 33))
R2_RELIABLE = 0.95
LN2 = math.log(2.0)


@dataclass
class OrbitSample:
    x0: float
    length: int
    birkhoff_log_deriv_prefixes: np.ndarray = field(repr=False)
    seed: int | None = None

    @property
    def exponent(self) -> float:
        return float(self.birkhoff_log_deriv_prefixes[-1]) / self.length

    def check_prefixes(self, fmap: MapSpec, fraction: float = 0.01, seed: int = 0,
                       tol: float = 1e-9) -> bool:
        """Recompute a random subsample of prefix sums from the orbit itself."""
        rng = np.random.default_rng(seed)
        k = max(1, int(fraction * self.length))
        picks = np.sort(rng.choice(np.arange(1, self.length + 1), size=k, replace=False))
        _, logd = _orbit(fmap, np.array([self.x0]), int(picks[-1]))
        ref = np.cumsum(logd[0])
        got = self.birkhoff_log_deriv_prefixes[picks]
        return bool(np.all(np.abs(got - ref[picks - 1]) <= tol * np.maximum(1.0, np.abs(got))))


@dataclass
class LevelSetEstimate:
    bin_centers: np.ndarray
    bin_width: float
    scales: np.ndarray
    counts: np.ndarray  # (bins, scales): samples in the tail set at each scale
    bin_counts: np.ndarray  # samples with e in [c - w/2, c + w/2) at the coarsest scale
    dim_estimates: np.ndarray
    fit_r2: np.ndarray
    typical_exponent: float
    samples: int

    @property
    def reliable(self) -> np.ndarray:
        return self.fit_r2 >= R2_RELIABLE


# ---------------------------------------------------------------- orbits


def _orbit(fmap: MapSpec, x0: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Final points and the (len(x0), n) array of log|Df| along each orbit."""
    x = np.asarray(x0, dtype=float).copy()
    logd = np.empty((x.size, n))
    floor = math.log(fmap.deriv_floor)
    for k in range(n):
        b = fmap.branch_index(x)
        ld = fmap.log_abs_deriv_on(x, b)
        if np.any(ld < floor) or np.any(np.isnan(ld)):
            raise CriticalPointError(f"orbit hit a critical point at step {k}")
        logd[:, k] = ld
        x = fmap.forward_on(x, b)
    return x, logd


def finite_time_lyapunov(fmap: MapSpec, x0: float, n: int) -> float:
    """(1/n) sum_{k<n} log|Df(f^k x0)|."""
    if n < 1:
        raise DomainError("n must be >= 1")
    if not 0.0 <= x0 <= 1.0:
        raise DomainError(f"x0={x0} outside [0, 1]")
    _, logd = _orbit(fmap, np.array([x0]), n)
    return math.fsum(logd[0]) / n


def orbit_sample(fmap: MapSpec, x0: float, n: int, seed: int | None = None) -> OrbitSample:
    _, logd = _orbit(fmap, np.array([x0]), n)
    prefixes = np.concatenate([[0.0], np.cumsum(logd[0])])
    return OrbitSample(float(x0), n, prefixes, seed)


def start_points(M: int, seed: int = 0) -> np.ndarray:
    """Uniform grid of M cells with one seeded jittered point per cell."""
    rng = np.random.default_rng(seed)
    return (np.arange(M) + rng.random(M)) / M


# ------------------------------------------------------------ level sets


def _local_exponents(prefix: np.ndarray, targets: np.ndarray,
                     usable: int) -> tuple[np.ndarray, np.ndarray]:
    """e_j(x_k) for k < usable and each target j log 2, plus a mask of points
    whose orbit reaches the finest target before it ends."""
    # log|Df| may be negative near critical points; search on the running max
    running = np.maximum.accumulate(prefix)
    start = prefix[:usable]
    stop = np.searchsorted(running, start[:, None] + targets[None, :], side="left")
    valid = stop[:, -1] < prefix.size
    stop = np.minimum(stop, prefix.size - 1)
    steps = stop - np.arange(usable)[:, None]
    return (prefix[stop] - start[:, None]) / steps, valid


def _fit(X: np.ndarray, Y: np.ndarray) -> tuple[float, float]:
    A = np.column_stack([np.ones_like(X), X])
    coef, *_ = np.linalg.lstsq(A, Y, rcond=None)
    resid = Y - A @ coef
    ss_tot = float(np.sum((Y - Y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot if ss_tot > 0 else 1.0
    return float(coef[1]), r2


def empirical_lyapunov_spectrum(fmap: MapSpec, starts: int, n: int,
                                bins: int | Sequence[float] = 5, bin_width: float | None = None,
                                scales: Sequence[int] = DEFAULT_SCALES,
                                seed: int = 0) -> LevelSetEstimate:
    """Box-counting dimension of finite-time exponent level sets.

    ``bins`` is either a count (centres spread over the central 90% of the
    coarsest-scale exponents) or explicit centres.  Raises InsufficientData
    when M < 100 or a requested bin has fewer than 20 samples.
    """
    if starts < MIN_STARTS:
        raise InsufficientData(f"{starts} starts; at least {MIN_STARTS} are required")
    scales = np.asarray(sorted(scales), dtype=int)
    if scales.size < 4:
        raise DomainError("at least 4 scales are required")
    targets = scales * LN2
    x0 = start_points(starts, seed)
    _, logd = _orbit(fmap, x0, n)
    prefixes = np.concatenate([np.zeros((starts, 1)), np.cumsum(logd, axis=1)], axis=1)
    typical = float(prefixes[:, -1].sum() / (starts * n))
    margin = min(int(math.ceil(3.0 * targets[-1] / max(typical, 1e-3))), n - 1)
    usable = n - margin
    if usable < 1:
        raise InsufficientData(f"orbits of length {n} cannot resolve scale 2^-{scales[-1]}")

    if isinstance(bins, (int, np.integer)):
        probe = _local_exponents(prefixes[0], targets[:1], usable)[0][:, 0]
        lo, hi = np.quantile(probe, [0.05, 0.95])
        if hi - lo < 1e-9:
            centers = np.array([typical])
        else:
            centers = lo + (hi - lo) * (np.arange(bins) + 0.5) / bins
    else:
        centers = np.asarray(bins, dtype=float)
    width = bin_width if bin_width is not None else (
        float(np.min(np.diff(centers))) if centers.size > 1 else 0.05)
    degenerate = bool(np.ptp(logd) < 1e-12)

    above = centers > typical
    counts = np.zeros((centers.size, scales.size), dtype=np.int64)
    bin_counts = np.zeros(centers.size, dtype=np.int64)
    total = 0
    for i in range(starts):
        e, valid = _local_exponents(prefixes[i], targets, usable)
        e = e[valid]
        total += int(valid.sum())
        # 1e-12 slack keeps constant-slope maps (all e equal) inside their bin
        ge = e[:, None, :] >= centers[None, :, None] - 1e-12
        le = e[:, None, :] <= centers[None, :, None] + 1e-12
        tail = np.where(above[None, :, None], ge, le)
        counts += tail.sum(axis=0)
        e0 = e[:, 0]
        inside = np.abs(e0[:, None] - centers[None, :]) <= 0.5 * width + 1e-12
        bin_counts += inside.sum(axis=0)
    if np.any(counts[:, -1] < MIN_BIN_COUNT):
        bad = centers[counts[:, -1] < MIN_BIN_COUNT]
        raise InsufficientData(f"bins at {np.round(bad, 4).tolist()} have fewer than "
                               f"{MIN_BIN_COUNT} samples")

    dims = np.empty(centers.size)
    r2 = np.empty(centers.size)
    for b in range(centers.size):
        frac = counts[b] / total
        Y = np.log(frac)
        if not degenerate:
            Y = Y + 0.5 * np.log(targets)
        slope, r2[b] = _fit(targets, Y)
        dims[b] = min(max(1.0 + slope, 0.0), 1.05)
    return LevelSetEstimate(centers, width, scales, counts, bin_counts, dims, r2, typical, total)


# ---------------------------------------------------------- pointwise dims


def pointwise_dimension_estimate(measure: MeasureApprox, x: float, r_grid: Sequence[float],
                                 resolution: float = 1e-3) -> float:
    """Least-squares slope of log mu((x - r, x + r)) against log r."""
    r = np.asarray(r_grid, dtype=float)
    if r.size < 2 or np.any(r <= 0):
        raise DomainError("r_grid needs at least two positive radii")
    if np.any((x + r) - (x - r) < r):
        raise DepthError(f"radius {r.min():.3g} is below the float resolution at x={x}")
    masses = np.array([interval_mass(measure, x - ri, x + ri, resolution) for ri in r])
    if np.any(masses <= 0):
        raise DomainError("zero-mass ball; x lies outside the support")
    slope, _ = _fit(np.log(r), np.log(masses))
    return slope


__all__ = [
    "LevelSetEstimate",
    "OrbitSample",
    "empirical_lyapunov_spectrum",
    "finite_time_lyapunov",
    "orbit_sample",
    "pointwise_dimension_estimate",
    "start_points",
]
