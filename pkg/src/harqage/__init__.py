"""Age-of-information optimisation for status updates over HARQ with incremental redundancy."""
from .analysis import (
    AgeSolution,
    ConsistencyError,
    EpochMoments,
    Region,
    WaitingPolicy,
    busy_pmf,
    closed_form,
    epoch_moments,
    epoch_objective,
    optimal_waits,
    p_of_lambda,
    solve_lambda_bisection,
)
from .channel import (
    AttemptProbs,
    BscParams,
    HarqScheme,
    InfeasibleScheme,
    binomial_cdf,
    bsc_mds_probs,
    explicit_probs,
)
from .optimizer import GridResult, GridSpec, grid_search, sweep_epsilon
from .sim import ExplicitWaits, SimConfig, SimStats, Threshold, run, run_replicas, simulate_epoch

__version__ = "0.1.0"
