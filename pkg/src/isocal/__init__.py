"""Ranking-calibrated peer-review scores (the Isotonic Mechanism)."""

from isocal.aggregation import CalibrationResult, Strategy, calibrate
from isocal.estimator import IsotonicMechanism
from isocal.isotonic import brute_force_project, isotonic_residuals, pava, project_isotonic
from isocal.model import Author, Dataset, Decision, Paper, Ranking, Review, Role, validate_dataset

__version__ = "0.1.0"

__all__ = [
    "Author",
    "CalibrationResult",
    "Dataset",
    "Decision",
    "IsotonicMechanism",
    "Paper",
    "Ranking",
    "Review",
    "Role",
    "Strategy",
    "brute_force_project",
    "calibrate",
    "isotonic_residuals",
    "pava",
    "project_isotonic",
    "validate_dataset",
]
