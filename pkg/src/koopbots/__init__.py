"""Koopman-lifted utility surrogates and one-step control for a three-robot team."""

from .config import RunConfig, load_config
from .dynamics import Workspace, step
from .estimation import GradientEstimator, RLSEstimator, batch_ls
from .harness import compute_metrics, run_case, run_control, run_identification

__version__ = "0.1.0"

__all__ = [
    "GradientEstimator",
    "RLSEstimator",
    "RunConfig",
    "Workspace",
    "batch_ls",
    "compute_metrics",
    "load_config",
    "run_case",
    "run_control",
    "run_identification",
    "step",
]
