"""Noise-induced stabilization and destabilization of scalar difference equations.

The library simulates controlled recurrences x_{n+1} = x_n f(x_n) + noise
for a catalog of population maps and three bounded noise families, and
verifies the analytic stabilization/destabilization thresholds those
controls are designed around.
"""

from .analysis import (
    EtaEstimate,
    HittingTimeStats,
    SlopeEstimate,
    empirical_eta,
    hitting_time_stats,
    lyapunov_slope,
)
from .control import (
    Constant,
    ContinuousBound,
    ControlScheme,
    DestabilizeCheck,
    DestabilizeK,
    DestabilizeZero,
    DiscreteBound,
    SigmaProfile,
    StabilizeK,
    StabilizeZero,
    ThresholdReport,
    TrapCheck,
    check_destabilize,
    check_stabilize_K,
    check_stabilize_zero,
    check_trap,
    make_step,
    sigma_profile_value,
    step,
)
from .distributions import (
    DiscreteUniform,
    DomainError,
    NoiseSpec,
    PiecewiseUniform,
    PolynomialSymmetric,
    ThresholdParams,
    cdf,
    density,
    inverse_power_expectation,
    log_gain_eta,
    sample,
    sample_array,
    stabilization_threshold,
)
from .engine import (
    EngineOptions,
    EnsembleSummary,
    Status,
    Trajectory,
    classify,
    run_ensemble,
    run_trajectory,
    uniform_stream,
)
from .maps import (
    FixedPoint,
    Logistic,
    MapSpec,
    ModifiedBevertonHolt,
    PiecewiseBH,
    Ricker,
    Shifted,
    ShiftedBound,
    bound_H,
    eval_map,
    fixed_points,
    shifted_bound,
)

__version__ = "0.1.0"
