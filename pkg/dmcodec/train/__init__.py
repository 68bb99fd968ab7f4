from .config import TrainConfig, SEED_ENV_VAR
from .trace import LOG_COLUMNS, TrainingLog, read_log, LossTraceWriter
from .trainer import Batch, CodecDataset, Trainer


__all__ = [
    "TrainConfig", "SEED_ENV_VAR",
    "LOG_COLUMNS", "TrainingLog", "read_log", "LossTraceWriter",
    "Batch", "CodecDataset", "Trainer",
]
