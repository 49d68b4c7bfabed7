"""strokevid: video synthesis from a single image and a motion-stroke path."""

from .config import ModelConfig, TrainConfig
from .errors import (
    ConfigurationError,
    FormatError,
    InputError,
    StrokeVidError,
    TrainingFault,
)
from .model import StrokeVideoModel
from .strokes import StrokeKeypoints, StrokeRaster

__all__ = [
    "ModelConfig",
    "TrainConfig",
    "StrokeVideoModel",
    "StrokeKeypoints",
    "StrokeRaster",
    "StrokeVidError",
    "InputError",
    "ConfigurationError",
    "FormatError",
    "TrainingFault",
]

__version__ = "0.1.0"
