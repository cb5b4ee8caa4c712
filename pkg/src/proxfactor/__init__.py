"""Factor-analytic scale construction and regression for occupation tables."""

from .config import ConfigError, load_config, parse_config
from .dataset import DataError, Dataset, descriptive_stats, load_matrix, save_matrix
from .efa import FactorSolution, PruneRules, kaiser_retention, prune_iterate
from .pipeline import STAGES, run_pipeline
from .regression import RankDeficientError, multicollinearity_report, ols_fit, stepwise_select, vif
from .report import QuadrantThresholds, evaluate_hypotheses, quadrant_classify
from .scales import ScaleDefinition, build_scale, composite_reverse_index, reliability_report
from .statcore import correlation_matrix, cronbach_alpha

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "DataError",
    "Dataset",
    "FactorSolution",
    "PruneRules",
    "QuadrantThresholds",
    "RankDeficientError",
    "STAGES",
    "ScaleDefinition",
    "build_scale",
    "composite_reverse_index",
    "correlation_matrix",
    "cronbach_alpha",
    "descriptive_stats",
    "evaluate_hypotheses",
    "kaiser_retention",
    "load_config",
    "load_matrix",
    "multicollinearity_report",
    "ols_fit",
    "parse_config",
    "prune_iterate",
    "quadrant_classify",
    "reliability_report",
    "run_pipeline",
    "save_matrix",
    "stepwise_select",
    "vif",
]
