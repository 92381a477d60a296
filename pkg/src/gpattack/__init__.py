"""Simulation lab for adversarial reward poisoning of Gaussian-process bandits."""

from .algorithms import Algorithm, BetaKind, BetaSchedule, PlayerState, info_gain_curve
from .attacks import AttackPolicy, BudgetLedger, BudgetMode, Variant, verify_attack_conditions
from .config import ExperimentConfig, load_config, parse_config
from .errors import ConfigurationError, NumericalError
from .gp import fit_hyperparameters, gp_fit, gp_predict, gp_update
from .harness import SweepSpec, emit_outputs, run_experiment, run_sweep
from .kernels import Family, Kernel, kernel_eval, kernel_matrix
from .metrics import RunTrace, cumulative_regret, efficient_hyperparameter, normalized_cost, success_rate
from .objectives import OBJECTIVE_NAMES, TargetRegion, get_objective

__version__ = "0.1.0"

__all__ = [
    "Algorithm", "AttackPolicy", "BetaKind", "BetaSchedule", "BudgetLedger", "BudgetMode",
    "ConfigurationError", "ExperimentConfig", "Family", "Kernel", "NumericalError", "OBJECTIVE_NAMES",
    "PlayerState", "RunTrace", "SweepSpec", "TargetRegion", "Variant", "cumulative_regret",
    "efficient_hyperparameter", "emit_outputs", "fit_hyperparameters", "get_objective", "gp_fit",
    "gp_predict", "gp_update", "info_gain_curve", "kernel_eval", "kernel_matrix", "load_config",
    "normalized_cost", "parse_config", "run_experiment", "run_sweep", "success_rate",
    "verify_attack_conditions",
]
