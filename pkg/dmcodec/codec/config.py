import math

import torch

from ..errors import ConfigurationError, DomainError
from ..utils import frames_for


__all__ = ["CodecConfig", "AudioClip", "LatentSequence"]


class CodecConfig:
    """Shape of the codec.

    Parameters
    ----------
    base_channels : int
        Channel count of the first encoder convolution (``C``). Doubled at every
        downsampling stage.
    n_blocks : int
        Number of strided encoder blocks (``B``). Must equal ``len(strides)``.
    strides : tuple of int
        Downsampling factor of each encoder block (``S``), in encoder order. The decoder
        upsamples with the same factors in reverse.
    latent_dim : int
        Encoder output channels (``D'``), also the codeword dimension.
    sample_rate : int
        Sample rate in Hz.
    codebook_size : int
        Entries per residual codebook.
    n_quantizers : int
        Number of residual codebooks (``K``).
    lstm_layers : int
        Depth of the recurrent block at the top of the encoder and bottom of the decoder.
    seed : int
        Seed for parameter initialization.
    """
    def __init__(self, *, base_channels=8, n_blocks=4, strides=(2, 4, 5, 8), latent_dim=64,
                 sample_rate=16000, codebook_size=1024, n_quantizers=8, lstm_layers=2, seed=0):
        for name, value in (("Base channel count", base_channels),
                            ("Block count", n_blocks),
                            ("Latent dimension", latent_dim),
                            ("Sample rate", sample_rate),
                            ("Quantizer count", n_quantizers),
                            ("LSTM layer count", lstm_layers)):
            if not isinstance(value, int) or value < 1:
                raise TypeError("{} must be a positive integer, not {!r}"
                                .format(name, value))
        strides = tuple(strides)
        if not strides or not all(isinstance(s, int) and s >= 1 for s in strides):
            raise TypeError("Strides must be a non-empty sequence of positive integers, not {!r}"
                            .format(strides))
        if len(strides) != n_blocks:
            raise ConfigurationError("Block count {} does not match the {} strides {!r}"
                                     .format(n_blocks, len(strides), strides))
        if not isinstance(codebook_size, int) or codebook_size < 2:
            raise TypeError("Codebook size must be an integer of at least 2, not {!r}"
                            .format(codebook_size))
        hop_length = math.prod(strides)
        if sample_rate % hop_length != 0:
            raise ConfigurationError("Sample rate {} Hz is not a multiple of the stride product {}"
                                     .format(sample_rate, hop_length))

        self.base_channels = base_channels
        self.n_blocks      = n_blocks
        self.strides       = strides
        self.latent_dim    = latent_dim
        self.sample_rate   = sample_rate
        self.codebook_size = codebook_size
        self.n_quantizers  = n_quantizers
        self.lstm_layers   = lstm_layers
        self.seed          = seed

    @classmethod
    def full_scale(cls, **kwargs):
        """Full-scale configuration: C = 32, B = 4, S = (2, 4, 5, 8), 1024-dimensional codes."""
        params = dict(base_channels=32, latent_dim=1024)
        params.update(kwargs)
        return cls(**params)

    @property
    def hop_length(self):
        return math.prod(self.strides)

    @property
    def frame_rate(self):
        return self.sample_rate // self.hop_length

    def n_frames(self, n_samples):
        return frames_for(n_samples, self.hop_length)

    def replace(self, **kwargs):
        params = {name: getattr(self, name) for name in (
            "base_channels", "n_blocks", "strides", "latent_dim", "sample_rate",
            "codebook_size", "n_quantizers", "lstm_layers", "seed")}
        params.update(kwargs)
        return type(self)(**params)

    def __eq__(self, other):
        return isinstance(other, CodecConfig) and vars(self) == vars(other)

    def __repr__(self):
        return ("(codec C={} B={} S={} D'={} sr={} codes={}x{})"
                .format(self.base_channels, self.n_blocks, self.strides, self.latent_dim,
                        self.sample_rate, self.n_quantizers, self.codebook_size))


class AudioClip:
    """Mono waveform.

    Parameters
    ----------
    samples : array-like of float
        Waveform samples. Converted to a 1-D :class:`torch.Tensor`.
    sample_rate : int
        Sample rate in Hz.
    """
    def __init__(self, samples, sample_rate):
        samples = torch.as_tensor(samples)
        if not samples.is_floating_point():
            samples = samples.to(torch.get_default_dtype())
        if samples.dim() != 1:
            raise DomainError("Audio clip must be one-dimensional (mono), not of shape {}"
                              .format(tuple(samples.shape)))
        if not isinstance(sample_rate, int) or sample_rate <= 0:
            raise TypeError("Sample rate must be a positive integer, not {!r}"
                            .format(sample_rate))
        if not torch.isfinite(samples).all():
            raise DomainError("Audio clip contains non-finite samples")
        self.samples     = samples
        self.sample_rate = sample_rate

    def __len__(self):
        return self.samples.shape[0]

    @property
    def duration(self):
        return len(self) / self.sample_rate

    def __repr__(self):
        return "(clip {} samples @ {} Hz)".format(len(self), self.sample_rate)


class LatentSequence:
    """Latent frames of one clip, shaped ``(T', D')``."""
    def __init__(self, frames, frame_rate):
        frames = torch.as_tensor(frames)
        if frames.dim() != 2:
            raise DomainError("Latent frames must be shaped (T', D'), not {}"
                              .format(tuple(frames.shape)))
        self.frames     = frames
        self.frame_rate = frame_rate

    def __len__(self):
        return self.frames.shape[0]

    @property
    def dim(self):
        return self.frames.shape[1]

    def __repr__(self):
        return "(latents {}x{} @ {} Hz)".format(len(self), self.dim, self.frame_rate)
