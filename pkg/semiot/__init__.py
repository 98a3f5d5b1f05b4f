# -*- coding: utf-8 -*-
################################################################################
# semiot/__init__.py
# Initialization file for the semiot library.

"""Semidiscrete Optimal Transport with Known and Unknown Linear Costs

Stochastic approximation of the optimal dual weights of a semidiscrete
transport problem, and a joint learner that estimates unknown linear costs
from bandit feedback while it converges.
"""

from ._model import (
    LinearCostModel, DualWeights, ContextSampler, NoiseModel,
    TransportInstance, InstanceFormatError,
    decide, decide_many, evaluate_cost, dual_objective,
    estimate_assignment_probs, load_instance, save_instance)
from ._trace import (RunTrace, TracePoint, trace_schedule)
from ._sa import (SAConfig, sa_step, run_known_costs, run_sa)
from ._regression import (
    RidgePolicy, RidgeAccumulator, RLSState, NumericError,
    UnsupportedModeError, solve_beta, rls_update)
from ._policy import (
    ExplorationSchedule, exploration_time, forced_alternative,
    exploration_probability, maybe_explore, select)
from ._learner import (
    LearnerConfig, LearnerState, Learner, learner_step, run_learner,
    checkpoint, restore, CheckpointError)
from ._oracle import (
    OracleResult, OracleError, Truth, verify_targets, solve_gstar_long_sa,
    solve_gstar_quantile_k2, score_run, ScoreReport)
from ._experiments import (
    SyntheticSpec, generate_instance, pcs_trajectory, rate_diagnostics,
    fit_rate, clear_oracle_cache)
from ._voronoi import (
    FacilityInstance, FacilityCostModel, VoronoiConfig,
    generate_facility_instance, run_partition_learning, rasterize_partition,
    partition_study)

__all__ = (
    "LinearCostModel", "DualWeights", "ContextSampler", "NoiseModel",
    "TransportInstance", "InstanceFormatError",
    "decide", "decide_many", "evaluate_cost", "dual_objective",
    "estimate_assignment_probs", "load_instance", "save_instance",
    "RunTrace", "TracePoint", "trace_schedule",
    "SAConfig", "sa_step", "run_known_costs", "run_sa",
    "RidgePolicy", "RidgeAccumulator", "RLSState", "NumericError",
    "UnsupportedModeError", "solve_beta", "rls_update",
    "ExplorationSchedule", "exploration_time", "forced_alternative",
    "exploration_probability", "maybe_explore", "select",
    "LearnerConfig", "LearnerState", "Learner", "learner_step",
    "run_learner", "checkpoint", "restore", "CheckpointError",
    "OracleResult", "OracleError", "Truth", "verify_targets",
    "solve_gstar_long_sa", "solve_gstar_quantile_k2", "score_run",
    "ScoreReport",
    "SyntheticSpec", "generate_instance", "pcs_trajectory",
    "rate_diagnostics", "fit_rate", "clear_oracle_cache",
    "FacilityInstance", "FacilityCostModel", "VoronoiConfig",
    "generate_facility_instance", "run_partition_learning",
    "rasterize_partition", "partition_study")

__version__ = "0.1.0"
