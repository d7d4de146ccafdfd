from .checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from .config import (
    ConfigError,
    ModelConfig,
    TrainingConfig,
    TrainSchedule,
    load_training_config,
)
from .net import DimensionMismatch, GroundedSegmenter, ShapeError, segmentation_loss
from .tokenizer import (
    CLS,
    MASK,
    PAD,
    SEP,
    UNK,
    TokenOutOfRange,
    Tokenizer,
    Vocab,
    build_vocab,
)
from .training import (
    EmptyDataset,
    NoMaskableTokens,
    NonFiniteLoss,
    TrainSample,
    mean_train_iou,
    mlm_loss,
    mlm_step,
    run_mlm_warmup,
    train_segmentation,
)

__all__ = [
    "CLS",
    "MASK",
    "PAD",
    "SEP",
    "UNK",
    "CheckpointError",
    "ConfigError",
    "DimensionMismatch",
    "EmptyDataset",
    "GroundedSegmenter",
    "ModelConfig",
    "NoMaskableTokens",
    "NonFiniteLoss",
    "ShapeError",
    "TokenOutOfRange",
    "Tokenizer",
    "TrainSample",
    "TrainSchedule",
    "TrainingConfig",
    "Vocab",
    "build_vocab",
    "load_checkpoint",
    "load_training_config",
    "mean_train_iou",
    "mlm_loss",
    "mlm_step",
    "run_mlm_warmup",
    "save_checkpoint",
    "segmentation_loss",
    "train_segmentation",
]
