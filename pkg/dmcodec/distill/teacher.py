import hashlib

import numpy as np
import torch

from ..errors import ConfigurationError, DataError
from ..losses import log_mel


__all__ = [
    "MODALITIES", "LAYER_POLICIES", "TEACHER_MAGIC",
    "TeacherEmbedding", "apply_layer_policy", "load_teacher", "save_teacher",
    "read_teacher_array",
    "SyntheticTeacher",
]


MODALITIES     = ("contextual", "semantic", "cls", "static_word")
LAYER_POLICIES = ("average_all", "last", "ninth")
TEACHER_MAGIC  = b"DMTE"
TEACHER_VERSION = 1

_header = np.dtype([
    ("magic",    "S4"),
    ("version",  "<u4"),
    ("modality", "<u4"),
    ("layers",   "<u4"),
    ("n",        "<u4"),
    ("dim",      "<u4"),
    ("dtype",    "<u4"),
])


class TeacherEmbedding:
    """Frozen teacher representation of one utterance.

    Parameters
    ----------
    vectors : array-like, (n, D_teacher)
        Layer-reduced hidden states.
    modality : str
        One of ``"contextual"`` (LM tokens), ``"semantic"`` (SM frames), ``"cls"`` (LM
        sequence summary, ``n == 1``) or ``"static_word"`` (context-free word vectors).
    layer_policy : str
        How the hidden layers were reduced: ``"average_all"``, ``"last"`` or ``"ninth"``.
    """
    def __init__(self, vectors, modality, layer_policy="average_all"):
        if modality not in MODALITIES:
            raise ConfigurationError("Modality must be one of {}, not {!r}"
                                     .format(", ".join(MODALITIES), modality))
        if layer_policy not in LAYER_POLICIES:
            raise ConfigurationError("Layer policy must be one of {}, not {!r}"
                                     .format(", ".join(LAYER_POLICIES), layer_policy))
        vectors = torch.as_tensor(np.asarray(vectors, dtype=np.float32))
        if vectors.dim() != 2 or vectors.shape[0] < 1:
            raise DataError("Teacher vectors must be shaped (n, D) with n >= 1, not {}"
                            .format(tuple(vectors.shape)))
        if not torch.isfinite(vectors).all():
            raise DataError("Teacher vectors contain non-finite values")
        if modality == "cls" and vectors.shape[0] != 1:
            raise DataError("A [CLS] teacher holds exactly one vector, not {}"
                            .format(vectors.shape[0]))
        self.vectors      = vectors
        self.modality     = modality
        self.layer_policy = layer_policy

    def __len__(self):
        return self.vectors.shape[0]

    @property
    def dim(self):
        return self.vectors.shape[1]

    def __repr__(self):
        return "(teacher {} {}x{} {})".format(self.modality, len(self), self.dim,
                                              self.layer_policy)


def apply_layer_policy(layers, layer_policy):
    """Reduce ``(L, n, D)`` hidden states to ``(n, D)``.

    ``"ninth"`` counts transformer blocks from 1, so it selects ``layers[8]``.
    """
    if layer_policy not in LAYER_POLICIES:
        raise ConfigurationError("Layer policy must be one of {}, not {!r}"
                                 .format(", ".join(LAYER_POLICIES), layer_policy))
    n_layers = layers.shape[0]
    if layer_policy == "average_all":
        return layers.mean(axis=0)
    if layer_policy == "last":
        return layers[n_layers - 1]
    if n_layers < 9:
        raise ConfigurationError("Layer 9 requested from a dump with only {} layers"
                                 .format(n_layers))
    return layers[8]


def save_teacher(file, array, modality):
    """Write a ``DMTE`` cache holding ``(L, n, D)`` layered or ``(n, D)`` reduced states."""
    array = np.ascontiguousarray(array, dtype="<f4")
    if array.ndim == 2:
        n_layers, (n, dim) = 0, array.shape
    elif array.ndim == 3:
        n_layers, n, dim = array.shape
    else:
        raise DataError("Teacher array must be (n, D) or (L, n, D), not {}".format(array.shape))
    header = np.zeros((), dtype=_header)
    header["magic"]    = TEACHER_MAGIC
    header["version"]  = TEACHER_VERSION
    header["modality"] = MODALITIES.index(modality)
    header["layers"]   = n_layers
    header["n"]        = n
    header["dim"]      = dim
    header["dtype"]    = 0
    with open(file, "wb") as f:
        f.write(header.tobytes())
        f.write(array.tobytes())


def read_teacher_array(file):
    """Raw contents of a ``DMTE`` cache: ``(modality, array)``."""
    with open(file, "rb") as f:
        data = f.read()
    if len(data) < _header.itemsize:
        raise DataError("Teacher cache {} is too short for its header".format(file))
    header = np.frombuffer(data[:_header.itemsize], dtype=_header)[0]
    if header["magic"] != TEACHER_MAGIC:
        raise DataError("Teacher cache {} has bad magic {!r}".format(file, header["magic"]))
    if header["version"] != TEACHER_VERSION:
        raise DataError("Teacher cache {} has version {}, expected {}"
                        .format(file, header["version"], TEACHER_VERSION))
    if header["dtype"] != 0:
        raise DataError("Teacher cache {} has unsupported dtype code {}"
                        .format(file, header["dtype"]))
    if header["modality"] >= len(MODALITIES):
        raise DataError("Teacher cache {} has unknown modality code {}"
                        .format(file, header["modality"]))
    n_layers, n, dim = int(header["layers"]), int(header["n"]), int(header["dim"])
    shape = (n, dim) if n_layers == 0 else (n_layers, n, dim)
    payload = np.frombuffer(data[_header.itemsize:], dtype="<f4")
    if payload.size != int(np.prod(shape)):
        raise DataError("Teacher cache {} holds {} values, header declares {}"
                        .format(file, payload.size, shape))
    array = payload.reshape(shape).astype(np.float32)
    if not np.isfinite(array).all():
        raise DataError("Teacher cache {} contains NaN or infinite values".format(file))
    return MODALITIES[header["modality"]], array


def load_teacher(file, modality, layer_policy="average_all"):
    stored_modality, array = read_teacher_array(file)
    if stored_modality != modality:
        raise DataError("Teacher cache {} holds {} representations, expected {}"
                        .format(file, stored_modality, modality))
    if array.ndim == 3:
        vectors = apply_layer_policy(array, layer_policy)
    elif layer_policy != "average_all":
        raise ConfigurationError("Layer policy {!r} cannot be applied to the pre-reduced cache {}"
                                 .format(layer_policy, file))
    else:
        vectors = array
    return TeacherEmbedding(vectors, modality, layer_policy)


class SyntheticTeacher:
    """Deterministic stand-in for pretrained LM and SM teachers.

    Hidden states are fixed random projections of log-mel features, so distillation
    targets carry real information about the audio while needing no pretrained weights.
    Every projection is drawn from a generator seeded with ``seed``.

    Parameters
    ----------
    seed : int
    dim : int
        Teacher feature dimension ``D_teacher``.
    n_layers : int
        Number of hidden layers produced.
    sample_rate : int
    hop_length : int
        Semantic frames are produced at ``sample_rate / hop_length`` Hz, one per codec frame.
    """
    n_mels = 64

    def __init__(self, *, seed=42, dim=32, n_layers=12, sample_rate=16000, hop_length=320):
        self.seed        = seed
        self.dim         = dim
        self.n_layers    = n_layers
        self.sample_rate = sample_rate
        self.hop_length  = hop_length
        rng = np.random.default_rng(seed)
        scale = 1.0 / np.sqrt(self.n_mels)
        self._semantic   = rng.standard_normal((n_layers, self.n_mels, dim)) * scale
        self._contextual = rng.standard_normal((n_layers, self.n_mels, dim)) * scale
        self._context    = rng.standard_normal((n_layers, self.n_mels, dim)) * scale

    def _features(self, samples):
        samples = torch.as_tensor(samples, dtype=torch.float32)
        n_frames = samples.shape[-1] // self.hop_length
        mel = log_mel(samples[:n_frames * self.hop_length][None], self.sample_rate,
                      n_fft=4 * self.hop_length, hop_length=self.hop_length,
                      n_mels=self.n_mels, pad_mode="constant")[0]
        # Centered frames yield n_frames + 1 columns; keep one per codec frame.
        features = mel[:, :n_frames].T.double().numpy()
        return features - features.mean(axis=0, keepdims=True)

    def semantic_layers(self, samples):
        """``(L, T', D)`` hidden states, one row per codec frame."""
        features = self._features(samples)
        return np.tanh(np.einsum("tm,lmd->ltd", features, self._semantic)).astype(np.float32)

    def _word_spans(self, features, n_words):
        spans = np.array_split(np.arange(features.shape[0]), n_words)
        return np.stack([features[span].mean(axis=0) if len(span) else
                         np.zeros(features.shape[1]) for span in spans])

    def contextual_layers(self, samples, transcript):
        """``(L, n_words, D)`` hidden states, one row per transcript word."""
        words = transcript.split()
        if not words:
            raise DataError("Transcript is empty")
        tokens = self._word_spans(self._features(samples), len(words))
        context = tokens.mean(axis=0, keepdims=True)
        return np.tanh(np.einsum("nm,lmd->lnd", tokens, self._contextual) +
                       np.einsum("nm,lmd->lnd", context, self._context)).astype(np.float32)

    def cls_layers(self, samples, transcript):
        """``(L, 1, D)`` sequence-summary hidden states."""
        return self.contextual_layers(samples, transcript).mean(axis=1, keepdims=True)

    def static_words(self, transcript):
        """``(n_words, D)`` context-free word vectors, each seeded by the word itself."""
        words = transcript.split()
        if not words:
            raise DataError("Transcript is empty")
        rows = []
        for word in words:
            digest = hashlib.blake2b(word.encode("utf-8"), digest_size=8,
                                     key=str(self.seed).encode("utf-8")).digest()
            rng = np.random.default_rng(int.from_bytes(digest, "little"))
            rows.append(rng.standard_normal(self.dim) / np.sqrt(self.dim))
        return np.stack(rows).astype(np.float32)

    def embed(self, modality, samples, transcript, layer_policy="average_all"):
        if modality == "semantic":
            layers = self.semantic_layers(samples)
        elif modality == "contextual":
            layers = self.contextual_layers(samples, transcript)
        elif modality == "cls":
            layers = self.cls_layers(samples, transcript)
        elif modality == "static_word":
            return TeacherEmbedding(self.static_words(transcript), modality)
        else:
            raise ConfigurationError("Modality must be one of {}, not {!r}"
                                     .format(", ".join(MODALITIES), modality))
        return TeacherEmbedding(apply_layer_policy(layers, layer_policy), modality, layer_policy)
