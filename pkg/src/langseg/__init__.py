"""Language-guided video object segmentation toolkit: binary-mask codecs,
segmentation metrics (J, F, IoU pools, Precision@K), a phrase-conditioned
segmentation model, the referring-expression taxonomy and annotation
pipeline, and a CLI harness tying them together."""

__version__ = "0.1.0"

from . import data, evaluate, masks, metrics, report, taxonomy

__all__ = ["data", "evaluate", "masks", "metrics", "report", "taxonomy", "__version__"]
