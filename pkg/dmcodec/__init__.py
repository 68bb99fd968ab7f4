try:
    from importlib import metadata as importlib_metadata
    __version__ = importlib_metadata.version(__package__)
except ImportError:
    # Not installed; imported from a source checkout on PYTHONPATH.
    __version__ = "unknown" # :nocov:


from .errors import *
from .codec import CodecConfig, AudioClip, LatentSequence, Codec, QuantizedCode, bitrate
from .distill import DistillTarget, SyntheticTeacher
from .losses import LossWeights, LossBreakdown
from .train import TrainConfig, Trainer


__all__ = [
    "ConfigurationError", "DomainError", "DataError", "NonFiniteLossError",
    "CodecConfig", "AudioClip", "LatentSequence", "Codec", "QuantizedCode", "bitrate",
    "DistillTarget", "SyntheticTeacher",
    "LossWeights", "LossBreakdown",
    "TrainConfig", "Trainer",
]
