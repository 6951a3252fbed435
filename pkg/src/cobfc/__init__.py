"""Class-outlier based feature construction (CobFC) and its evaluation harness."""

from .data import Dataset, encode, parse_dataset, read_dataset, write_dataset
from .harness import (PipelineConfig, augment, construct_features, cross_validate, evaluate,
                      remove_outliers_baseline)

__version__ = "0.1.0"

__all__ = [
    "Dataset", "PipelineConfig", "augment", "construct_features", "cross_validate", "encode",
    "evaluate", "parse_dataset", "read_dataset", "remove_outliers_baseline", "write_dataset",
]
