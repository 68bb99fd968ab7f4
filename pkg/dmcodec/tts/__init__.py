from .phonemes import Phonemizer, GraphemePhonemizer, EspeakPhonemizer
from .model import (TruncationWarning, TtsConfig, TtsSample, ARModel, NARModel, TtsModel,
                    ar_loss, nar_loss, synthesize)
from .trainer import prepare_samples, TtsTrainer


__all__ = [
    "Phonemizer", "GraphemePhonemizer", "EspeakPhonemizer",
    "TruncationWarning", "TtsConfig", "TtsSample", "ARModel", "NARModel", "TtsModel",
    "ar_loss", "nar_loss", "synthesize",
    "prepare_samples", "TtsTrainer",
]
