"""Weak KAM workbench on warped-product model manifolds."""

import json

from ._core import (
    ConfigError,
    ConvergenceError,
    DomainError,
    ExperimentConfig,
    ModelManifold,
    PreconditionError,
    eigen_residual,
    fundamental_matrix_rigid,
    integrate,
    reference_weak_kam,
    run,
    solve,
)
from ._core import verify as _verify

__all__ = [
    "ConfigError",
    "ConvergenceError",
    "DomainError",
    "ExperimentConfig",
    "ModelManifold",
    "PreconditionError",
    "eigen_residual",
    "fundamental_matrix_rigid",
    "integrate",
    "reference_weak_kam",
    "run",
    "solve",
    "verify",
]


def verify(config=None, criteria=()):
    """Run acceptance criteria (all when empty) and return the parsed report."""
    return json.loads(_verify(config or ExperimentConfig(), list(criteria)))
