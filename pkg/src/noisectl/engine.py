"""Deterministic trajectory and ensemble simulation.

Every trajectory owns a counter-based random stream keyed by
(master_seed, trajectory_index), so ensembles are reproducible bit for bit
regardless of execution order or thread count, and a trajectory is a pure
function of its inputs.

Classification is computed online while iterating:

* ``CONVERGED`` -- the trajectory held |x - target| < eps_conv for
  ``window`` consecutive steps at some point (index of completion in
  ``conv_index``);
* ``TRAPPED``  -- a trap [b, d] was supplied, the trajectory entered it
  (first entry in ``hit_index``) and never left afterwards;
* ``ESCAPED``  -- |x| exceeded x_max (or overflowed); the stored sequence
  is truncated just before the offending value;
* ``MAX_STEPS`` -- none of the above within n_steps.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .control import ControlScheme, DestabilizeK, StabilizeK, make_step
from .distributions import NoiseSpec
from .maps import MapSpec

__all__ = [
    "Status",
    "EngineOptions",
    "Trajectory",
    "EnsembleSummary",
    "uniform_stream",
    "run_trajectory",
    "run_ensemble",
    "classify",
    "tail_log_slope",
    "resolve_target",
]

_MASK64 = (1 << 64) - 1


class Status(str, Enum):
    RUNNING = "running"
    CONVERGED = "converged"
    TRAPPED = "trapped"
    ESCAPED = "escaped"
    MAX_STEPS = "max_steps"


@dataclass(frozen=True)
class EngineOptions:
    """Classification thresholds and storage policy."""

    eps_conv: float = 1e-8
    window: int = 50
    x_max: float = 1e8
    target: float | None = None
    trap: tuple[float, float] | None = None
    thin: int = 1

    def __post_init__(self):
        if self.window < 1:
            raise ValueError(f"window must be >= 1, got {self.window}")
        if self.thin < 1:
            raise ValueError(f"thin must be >= 1, got {self.thin}")
        if self.trap is not None and not 0.0 < self.trap[0] < self.trap[1]:
            raise ValueError(f"trap must satisfy 0 < b < d, got {self.trap}")


def resolve_target(scheme: ControlScheme) -> float:
    """Default classification target: K for the K-schemes, 0 otherwise."""
    if isinstance(scheme, (StabilizeK, DestabilizeK)):
        return scheme.K
    return 0.0


def uniform_stream(master_seed: int, index: int, n: int) -> np.ndarray:
    """n uniforms from the counter-based stream keyed by (master_seed, index)."""
    key = np.array([master_seed & _MASK64, index & _MASK64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key)).random(n)


@dataclass(frozen=True)
class Trajectory:
    x0: float
    seed: int
    index: int
    n_steps: int
    scheme_id: str
    map_id: str
    noise_id: str
    steps: np.ndarray
    values: np.ndarray
    status: Status
    terminal: float
    conv_index: int | None
    hit_index: int | None
    trap_violations: int
    escape_index: int | None
    tail_min_abs: float
    log_slope: float


def classify(values, target: float, eps_conv: float, window: int,
             trap: tuple[float, float] | None = None,
             escaped: bool = False) -> Status:
    """Classify a fully stored sequence (same rules as the online engine)."""
    if escaped:
        return Status.ESCAPED
    streak = 0
    conv = False
    hit = None
    violations = 0
    for k, x in enumerate(values):
        if abs(x - target) < eps_conv:
            streak += 1
            if streak >= window:
                conv = True
        else:
            streak = 0
        if trap is not None:
            inside = trap[0] <= x <= trap[1]
            if inside and hit is None:
                hit = k
            elif hit is not None and not inside:
                violations += 1
    if conv:
        return Status.CONVERGED
    if trap is not None and hit is not None and violations == 0:
        return Status.TRAPPED
    return Status.MAX_STEPS


def tail_log_slope(values: np.ndarray, target: float,
                   tail_fraction: float = 0.5) -> tuple[float, float, int]:
    """Least-squares slope of ln|x_n - target| over the final tail.

    Returns (slope, stderr, n_used); (nan, nan, 0) when fewer than two
    usable points remain after dropping underflowed or non-finite entries.
    """
    n = len(values)
    start = int(n * (1.0 - tail_fraction))
    idx = np.arange(start, n)
    resid = np.abs(np.asarray(values)[start:] - target)
    mask = (resid > 1e-300) & np.isfinite(resid)
    idx, resid = idx[mask], resid[mask]
    if len(idx) < 2:
        return (math.nan, math.nan, 0)
    y = np.log(resid)
    t = idx.astype(float)
    tbar, ybar = t.mean(), y.mean()
    stt = float(np.sum((t - tbar) ** 2))
    if stt == 0.0:
        return (math.nan, math.nan, len(idx))
    slope = float(np.sum((t - tbar) * (y - ybar)) / stt)
    resid_var = float(np.sum((y - ybar - slope * (t - tbar)) ** 2))
    dof = max(len(idx) - 2, 1)
    stderr = math.sqrt(resid_var / dof / stt)
    return (slope, stderr, len(idx))


def run_trajectory(scheme: ControlScheme, map_spec: MapSpec, noise: NoiseSpec,
                   x0: float, n_steps: int, seed: int, index: int = 0,
                   options: EngineOptions | None = None) -> Trajectory:
    """Iterate the controlled recurrence for n_steps from x0.

    xi_{n+1} is the inverse-transform sample of the n-th uniform of the
    stream keyed by (seed, index); identical arguments give bit-identical
    trajectories.
    """
    if n_steps < 1:
        raise ValueError(f"n_steps must be >= 1, got {n_steps}")
    opts = options or EngineOptions()
    target = opts.target if opts.target is not None else resolve_target(scheme)
    trap = opts.trap

    step_fn = make_step(scheme, map_spec)
    sample = noise.sample
    us = uniform_stream(seed, index, n_steps).tolist()

    zero_absorbing = not isinstance(scheme, (StabilizeK, DestabilizeK))
    eps, window, x_max = opts.eps_conv, opts.window, opts.x_max
    have_trap = trap is not None
    trap_lo, trap_hi = trap if have_trap else (0.0, 0.0)
    isfinite = math.isfinite

    values = np.empty(n_steps + 1)
    values[0] = x0
    x = x0
    streak = 1 if abs(x0 - target) < eps else 0
    conv_index: int | None = 0 if streak >= window else None
    hit_index: int | None = 0 if have_trap and trap_lo <= x0 <= trap_hi else None
    violations = 0
    escape_index: int | None = None
    stored = 1

    k = 0
    for u in us:
        k += 1
        if x == 0.0 and zero_absorbing:
            nxt = 0.0  # the noise gain vanishes at 0 for the zero-equilibrium schemes
        else:
            try:
                nxt = step_fn(x, sample(u))
            except OverflowError:
                nxt = math.inf
        if not isfinite(nxt) or abs(nxt) > x_max:
            escape_index = k
            break
        x = nxt
        values[stored] = x
        stored += 1
        if abs(x - target) < eps:
            streak += 1
            if streak >= window and conv_index is None:
                conv_index = k
        else:
            streak = 0
        if have_trap:
            if trap_lo <= x <= trap_hi:
                if hit_index is None:
                    hit_index = k
            elif hit_index is not None:
                violations += 1

    values = values[:stored]
    status = Status.ESCAPED if escape_index is not None else (
        Status.CONVERGED if conv_index is not None else (
            Status.TRAPPED if (trap is not None and hit_index is not None and violations == 0)
            else Status.MAX_STEPS))

    tail = values[len(values) // 2:]
    tail_min_abs = float(np.min(np.abs(tail))) if len(tail) else math.nan
    slope, _, _ = tail_log_slope(values, target)

    steps = np.arange(stored)
    if opts.thin > 1:
        keep = np.zeros(stored, dtype=bool)
        keep[::opts.thin] = True
        keep[-1] = True
        steps, values = steps[keep], values[keep]

    return Trajectory(
        x0=x0, seed=seed, index=index, n_steps=n_steps,
        scheme_id=repr(scheme), map_id=repr(map_spec), noise_id=repr(noise),
        steps=steps, values=values, status=status, terminal=float(values[-1]),
        conv_index=conv_index, hit_index=hit_index, trap_violations=violations,
        escape_index=escape_index, tail_min_abs=tail_min_abs, log_slope=slope,
    )


@dataclass(frozen=True)
class EnsembleSummary:
    n_runs: int
    counts: dict
    convergence_fraction: float
    trapped_fraction: float
    escaped_fraction: float
    never_trapped_fraction: float
    terminal_abs_error_mean: float
    terminal_abs_error_se: float
    terminal_abs_error_ci: tuple[float, float]
    hitting_time_quantiles: dict
    mean_log_slope: float
    mean_tail_min_abs: float

    def to_row(self) -> dict:
        row = {
            "n_runs": self.n_runs,
            "count_converged": self.counts.get(Status.CONVERGED.value, 0),
            "count_trapped": self.counts.get(Status.TRAPPED.value, 0),
            "count_escaped": self.counts.get(Status.ESCAPED.value, 0),
            "count_max_steps": self.counts.get(Status.MAX_STEPS.value, 0),
            "convergence_fraction": self.convergence_fraction,
            "trapped_fraction": self.trapped_fraction,
            "escaped_fraction": self.escaped_fraction,
            "never_trapped_fraction": self.never_trapped_fraction,
            "terminal_abs_error_mean": self.terminal_abs_error_mean,
            "terminal_abs_error_se": self.terminal_abs_error_se,
            "terminal_abs_error_ci_lo": self.terminal_abs_error_ci[0],
            "terminal_abs_error_ci_hi": self.terminal_abs_error_ci[1],
            "hit_q10": self.hitting_time_quantiles.get(0.1, math.nan),
            "hit_q50": self.hitting_time_quantiles.get(0.5, math.nan),
            "hit_q90": self.hitting_time_quantiles.get(0.9, math.nan),
            "mean_log_slope": self.mean_log_slope,
            "mean_tail_min_abs": self.mean_tail_min_abs,
        }
        return row


def summarize(trajectories: list[Trajectory], target: float) -> EnsembleSummary:
    n = len(trajectories)
    counts: dict = {}
    for t in trajectories:
        counts[t.status.value] = counts.get(t.status.value, 0) + 1

    conv = counts.get(Status.CONVERGED.value, 0) / n
    trapped = counts.get(Status.TRAPPED.value, 0) / n
    escaped = counts.get(Status.ESCAPED.value, 0) / n
    never = sum(1 for t in trajectories if t.hit_index is None) / n

    errs = np.array([abs(t.terminal - target) for t in trajectories])
    mean = float(errs.mean())
    se = float(errs.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    ci = (mean - 1.96 * se, mean + 1.96 * se)

    hits = np.array([t.hit_index for t in trajectories if t.hit_index is not None], dtype=float)
    if len(hits):
        quantiles = {q: float(np.quantile(hits, q)) for q in (0.1, 0.5, 0.9)}
    else:
        quantiles = {q: math.nan for q in (0.1, 0.5, 0.9)}

    slopes = np.array([t.log_slope for t in trajectories])
    slopes = slopes[np.isfinite(slopes)]
    mean_slope = float(slopes.mean()) if len(slopes) else math.nan
    tails = np.array([t.tail_min_abs for t in trajectories])
    tails = tails[np.isfinite(tails)]
    mean_tail = float(tails.mean()) if len(tails) else math.nan

    return EnsembleSummary(
        n_runs=n, counts=counts, convergence_fraction=conv, trapped_fraction=trapped,
        escaped_fraction=escaped, never_trapped_fraction=never,
        terminal_abs_error_mean=mean, terminal_abs_error_se=se, terminal_abs_error_ci=ci,
        hitting_time_quantiles=quantiles, mean_log_slope=mean_slope,
        mean_tail_min_abs=mean_tail,
    )


def run_ensemble(scheme: ControlScheme, map_spec: MapSpec, noise: NoiseSpec,
                 x0: float, n_steps: int, n_runs: int, master_seed: int,
                 thread_hint: int | None = None,
                 options: EngineOptions | None = None,
                 return_trajectories: bool = False):
    """n_runs independent trajectories; run i uses the (master_seed, i) stream.

    The summary is a pure function of the arguments: thread_hint only
    controls execution, never results.
    """
    if n_runs < 1:
        raise ValueError(f"n_runs must be >= 1, got {n_runs}")
    opts = options or EngineOptions()
    target = opts.target if opts.target is not None else resolve_target(scheme)

    def one(i: int) -> Trajectory:
        return run_trajectory(scheme, map_spec, noise, x0, n_steps, master_seed,
                              index=i, options=opts)

    if thread_hint is not None and thread_hint > 1:
        with ThreadPoolExecutor(max_workers=thread_hint) as pool:
            trajectories = list(pool.map(one, range(n_runs)))
    else:
        trajectories = [one(i) for i in range(n_runs)]

    summary = summarize(trajectories, target)
    if return_trajectories:
        return summary, trajectories
    return summary
