"""Nearest-convex-hull blind user identification: solver, system model,
moment estimators, free-probability checks and the experiment bench.

The experiment bench lives in ``nchc.experiments`` (run_experiment,
ExperimentConfig), reference-table scoring in ``nchc.reference`` and
figure rendering in ``nchc.plots``; those pull heavier dependencies and
are imported on demand.
"""

__version__ = "0.1.0"

from .classifier import (
    DecisionSample,
    MomentSummary,
    classify,
    decision_sample,
    empirical_misclassification,
    gaussian_accuracy,
    moment_summary,
    std_normal_cdf,
)
from .hull import (
    HullProblem,
    HullProjection,
    fw_dual_gap,
    project_onto_hull,
    reference_distance_small,
)
from .model import (
    ModelParams,
    SeedStream,
    TestPoint,
    TrainingSet,
    make_test_point,
    make_training_set,
    norm_concentration_stat,
    test_covariance,
)

__all__ = [
    "__version__",
    "HullProblem",
    "HullProjection",
    "project_onto_hull",
    "fw_dual_gap",
    "reference_distance_small",
    "ModelParams",
    "SeedStream",
    "TrainingSet",
    "TestPoint",
    "make_training_set",
    "make_test_point",
    "test_covariance",
    "norm_concentration_stat",
    "DecisionSample",
    "MomentSummary",
    "decision_sample",
    "classify",
    "moment_summary",
    "gaussian_accuracy",
    "std_normal_cdf",
    "empirical_misclassification",
]
