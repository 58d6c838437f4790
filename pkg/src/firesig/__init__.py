"""firesig: quantitative fire-pattern shape analysis and scene mapping.

Submodules
----------
mask        binary pattern masks and PGM/PNG I/O
signature   rotating-line aspect-ratio signatures
features    peak/valley extraction and classifier feature vectors
synth       synthetic labeled pattern generator
forest      random-forest training, evaluation, explanation
cloud       point-cloud container and PLY/XYZ readers
scene3d     plane segmentation, mask projection, scene graphs
plots       self-contained SVG renderings
cli         command-line entry point
"""

__version__ = "0.1.0"

from .mask import ShapeMask, read_mask, write_pgm
from .signature import AspectSignature, ChordMode, aspect_signature
from .features import ExtremaConfig, PatternFeatures, build_features, detect_extrema
from .synth import PatternClass, SynthConfig, generate_dataset
from .forest import ForestHyperparams, ForestModel, evaluate, explain, predict, train

__all__ = [
    "ShapeMask",
    "read_mask",
    "write_pgm",
    "AspectSignature",
    "ChordMode",
    "aspect_signature",
    "ExtremaConfig",
    "PatternFeatures",
    "build_features",
    "detect_extrema",
    "PatternClass",
    "SynthConfig",
    "generate_dataset",
    "ForestHyperparams",
    "ForestModel",
    "train",
    "predict",
    "evaluate",
    "explain",
]
