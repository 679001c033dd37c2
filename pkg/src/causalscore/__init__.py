"""Causal scoring: interpretations, simulators, scorers and uplift metrics."""

__version__ = "0.1.0"

from .core import (ExperimentDataset, OracleTruth, PolicySpec, RngStream, make_dataset,
                   make_oracle)
from .errors import CausalScoreError

__all__ = ["ExperimentDataset", "OracleTruth", "PolicySpec", "RngStream", "make_dataset",
           "make_oracle", "CausalScoreError", "__version__"]
