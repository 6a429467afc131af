"""
Synthetic Data Module

Seeded multi-label datasets that stand in for the institutional imaging data:
- generator.py: Gaussian features, logistic label maps, two protected attributes
- splits.py: the four split regimes (as is, 50/50, 75/25, 100/0) per attribute
- flips.py: label-flip corruption of training partitions
- io.py: columnar CSV export for inspection
"""

from synthdata.generator import (
    ATTRIBUTES,
    ConfigurationError,
    GeneratorSpec,
    Sample,
    SampleSet,
    Subgroup,
    generate,
)
from synthdata.splits import ClientDataset, SplitError, SplitPlan, SplitRegime, split
from synthdata.flips import apply_flips, flip_count, flip_labels, flip_positions

__version__ = "1.0.0"

__all__ = [
    "ATTRIBUTES",
    "ClientDataset",
    "ConfigurationError",
    "GeneratorSpec",
    "Sample",
    "SampleSet",
    "SplitError",
    "SplitPlan",
    "SplitRegime",
    "Subgroup",
    "apply_flips",
    "flip_count",
    "flip_labels",
    "flip_positions",
    "generate",
    "split",
]
