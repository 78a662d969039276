"""Exact simulation of quantum LDA dimensionality reduction with a classical oracle."""
from .errors import BranchAmbiguityError, ConfigError, DataError, NumericalError, PipelineError, QldaError
from .lda import Dataset, build_scatter_model, project_unit_directions, project_pipeline_oracle, solve_shadow
from .pipeline import PipelineConfig, PipelineReport, run_full

__all__ = [
    "BranchAmbiguityError",
    "ConfigError",
    "DataError",
    "Dataset",
    "NumericalError",
    "PipelineConfig",
    "PipelineError",
    "PipelineReport",
    "QldaError",
    "build_scatter_model",
    "project_unit_directions",
    "project_pipeline_oracle",
    "run_full",
    "solve_shadow",
]
__version__ = "0.1.0"
