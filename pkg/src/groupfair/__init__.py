"""Envy-free fair division among groups of agents with additive utilities."""

from .bounds import (
    BoundValue,
    approx_ef_failure_bound,
    chernoff_lower,
    chernoff_upper,
    greedy_failure_bound,
    nonexistence_bound,
)
from .experiments import (
    Check,
    ConfigError,
    ExperimentConfig,
    SweepResult,
    SweepRow,
    estimate,
    estimate_max_group_sum,
    run_trial,
    sweep,
    verify_symmetry,
    wilson_interval,
)
from .fairness import CapacityError, EnvyReport, exists_envy_free, is_alpha_ef, is_envy_free
from .mechanisms import greedy_average, greedy_total, random_assignment
from .model import Allocation, GroupStructure, UtilityMatrix, bundle_of, social_welfare, utility_of_bundle
from .sampling import DistributionSpec, RngStream, SamplingPlan, sample_matrix, spec_moments

__version__ = "0.1.0"
