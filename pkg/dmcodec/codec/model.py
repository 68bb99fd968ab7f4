import torch
from torch import nn

from ..errors import ConfigurationError, DomainError
from .config import AudioClip, LatentSequence
from .seanet import SEANetEncoder, SEANetDecoder
from .rvq import ResidualVectorQuantizer, straight_through


__all__ = ["Codec", "CodecOutput"]


class CodecOutput:
    """Result of a full codec pass over a batch.

    Attributes
    ----------
    audio : Tensor, (batch, 1, T' * hop)
        Reconstruction.
    latents : Tensor, (batch, T', D')
        Encoder output.
    code : QuantizedCode
        Codes with layer axis first.
    """
    def __init__(self, audio, latents, code):
        self.audio   = audio
        self.latents = latents
        self.code    = code


class Codec(nn.Module):
    """SEANet encoder, residual vector quantizer and decoder.

    Parameters
    ----------
    cfg : CodecConfig
    dead_threshold : float
        Forwarded to every :class:`Codebook`.
    """
    def __init__(self, cfg, *, decay=0.99, dead_threshold=0.5):
        super().__init__()
        self.cfg = cfg
        with torch.random.fork_rng(devices=[]):
            torch.manual_seed(cfg.seed)
            self.encoder   = SEANetEncoder(cfg)
            self.decoder   = SEANetDecoder(cfg)
        self.quantizer = ResidualVectorQuantizer(cfg, decay=decay, dead_threshold=dead_threshold)

    def _check_clip(self, clip):
        if clip.sample_rate != self.cfg.sample_rate:
            raise ConfigurationError("Clip sample rate {} Hz does not match codec sample rate {} Hz"
                                     .format(clip.sample_rate, self.cfg.sample_rate))
        if len(clip) < self.cfg.hop_length:
            raise DomainError("Clip of {} samples is shorter than one frame ({} samples)"
                              .format(len(clip), self.cfg.hop_length))

    def crop(self, audio):
        """Drop trailing samples that do not fill a whole frame."""
        usable = audio.shape[-1] // self.cfg.hop_length * self.cfg.hop_length
        return audio[..., :usable]

    def encode_batch(self, audio):
        """``(batch, 1, n)`` waveforms to ``(batch, T', D')`` latents."""
        return self.encoder(self.crop(audio)).transpose(1, 2)

    def decode_batch(self, latents):
        """``(batch, T', D')`` latents to ``(batch, 1, T' * hop)`` waveforms."""
        if latents.shape[-1] != self.cfg.latent_dim:
            raise DomainError("Latents have dimension {}, expected {}"
                              .format(latents.shape[-1], self.cfg.latent_dim))
        return self.decoder(latents.transpose(1, 2))

    def encode(self, clip):
        self._check_clip(clip)
        audio = clip.samples.to(self._dtype())[None, None]
        latents = self.encode_batch(audio)[0]
        return LatentSequence(latents, self.cfg.frame_rate)

    def decode(self, codes_sum):
        if isinstance(codes_sum, LatentSequence):
            codes_sum = codes_sum.frames
        if codes_sum.dim() != 2:
            raise DomainError("Decoder input must be shaped (T', D'), not {}"
                              .format(tuple(codes_sum.shape)))
        audio = self.decode_batch(codes_sum.to(self._dtype())[None])[0, 0]
        return AudioClip(audio, self.cfg.sample_rate)

    def quantize(self, latents, n_active_layers=None, *, generator=None):
        if isinstance(latents, LatentSequence):
            latents = latents.frames
        return self.quantizer.quantize(latents, n_active_layers, generator=generator)

    def forward(self, audio, n_active_layers=None, *, generator=None):
        latents = self.encode_batch(audio)
        code = self.quantizer.quantize(latents, n_active_layers, generator=generator)
        reconstruction = self.decode_batch(straight_through(latents, code.quantized))
        return CodecOutput(reconstruction, latents, code)

    @torch.no_grad()
    def roundtrip(self, clip, n_active_layers=None):
        """Encode, quantize and decode one clip."""
        latents = self.encode(clip)
        code = self.quantize(latents, n_active_layers)
        return self.decode(code.quantized), code

    def _dtype(self):
        return next(self.parameters()).dtype
