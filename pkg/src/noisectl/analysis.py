"""Statistical checks connecting simulations back to the analytic quantities."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .distributions import NoiseSpec
from .engine import Trajectory, tail_log_slope, uniform_stream

__all__ = [
    "EtaEstimate",
    "empirical_eta",
    "SlopeEstimate",
    "lyapunov_slope",
    "HittingTimeStats",
    "hitting_time_stats",
]


@dataclass(frozen=True)
class EtaEstimate:
    mean: float
    stderr: float
    n_samples: int


def empirical_eta(noise: NoiseSpec, sigma: float, n_samples: int = 10 ** 6,
                  seed: int = 0) -> EtaEstimate:
    """Monte Carlo estimate of eta = -E ln|1 + sigma xi| with its standard error.

    By the law of large numbers the mean converges to ``log_gain_eta``; the
    draws come from the same counter-based stream family as the engine.
    """
    noise.validate_sigma(sigma)
    xs = noise.sample_array(uniform_stream(seed, 0, n_samples))
    vals = -np.log(np.abs(1.0 + sigma * xs))
    mean = float(vals.mean())
    stderr = float(vals.std(ddof=1) / math.sqrt(n_samples))
    return EtaEstimate(mean=mean, stderr=stderr, n_samples=n_samples)


@dataclass(frozen=True)
class SlopeEstimate:
    slope: float
    stderr: float
    n_used: int


def lyapunov_slope(trajectory: Trajectory | np.ndarray, target: float,
                   tail_fraction: float = 0.5) -> SlopeEstimate:
    """Per-step decay rate: least-squares slope of ln|x_n - target| on the tail.

    Underflowed points (|x - target| < 1e-300) are excluded; raises
    ValueError when fewer than two usable points remain.
    """
    values = trajectory.values if isinstance(trajectory, Trajectory) else np.asarray(trajectory)
    slope, stderr, n_used = tail_log_slope(values, target, tail_fraction)
    if n_used < 2:
        raise ValueError("fewer than 2 usable points in the tail")
    return SlopeEstimate(slope=slope, stderr=stderr, n_used=n_used)


@dataclass(frozen=True)
class HittingTimeStats:
    quantiles: dict
    never_trapped_fraction: float
    n_trapped: int
    n_total: int


def hitting_time_stats(trajectories: list[Trajectory],
                       trap: tuple[float, float]) -> HittingTimeStats:
    """Distribution of first-entry indices into [b, d] across runs."""
    b, d = trap
    if not 0.0 < b < d:
        raise ValueError(f"trap must satisfy 0 < b < d, got {trap}")
    hits = []
    for t in trajectories:
        if t.hit_index is not None:
            hits.append(t.hit_index)
    n = len(trajectories)
    if hits:
        arr = np.array(hits, dtype=float)
        quantiles = {q: float(np.quantile(arr, q)) for q in (0.1, 0.25, 0.5, 0.75, 0.9)}
    else:
        quantiles = {q: math.nan for q in (0.1, 0.25, 0.5, 0.75, 0.9)}
    return HittingTimeStats(
        quantiles=quantiles,
        never_trapped_fraction=1.0 - len(hits) / n if n else math.nan,
        n_trapped=len(hits),
        n_total=n,
    )
