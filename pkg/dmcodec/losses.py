import math
import warnings

import torch
import torchaudio
from torch.nn import functional as F

from ._utils import memoize
from .errors import DomainError


__all__ = [
    "MelScaleWarning", "LossWeights", "LossBreakdown", "MelLoss", "log_mel",
    "time_loss", "mel_loss", "hinge_generator", "hinge_discriminator", "feature_matching",
    "total_generator",
]


class MelScaleWarning(UserWarning):
    pass


class LossWeights:
    """Coefficients of the generator objective.

    By default every coefficient follows from the common scale ``X``:
    ``distill = X``, ``t = 4.15 X``, ``f = 0.375 X``, ``w = 0.085 X``, ``g = fm = 1``.
    Any coefficient may be given explicitly instead.
    """
    names = ("distill", "t", "f", "g", "fm", "w")

    def __init__(self, *, scale=1.0, distill=None, t=None, f=None, g=1.0, fm=1.0, w=None):
        # Coefficients that follow the scale rather than being given explicitly.
        self.derived = tuple(name for name, value in (("distill", distill), ("t", t), ("f", f),
                                                      ("w", w)) if value is None)
        self.scale   = scale
        self.distill = scale if distill is None else distill
        self.t       = 4.15 * scale if t is None else t
        self.f       = 0.375 * scale if f is None else f
        self.g       = g
        self.fm      = fm
        self.w       = 0.085 * scale if w is None else w
        for name in self.names:
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or value < 0:
                raise TypeError("Loss weight {} must be a non-negative number, not {!r}"
                                .format(name, value))

    def __repr__(self):
        return "(weights {})".format(" ".join("{}={}".format(name, getattr(self, name))
                                               for name in self.names))


class LossBreakdown:
    """Named loss components of one step.

    Components are floats once reported, or tensors while a step is being computed.
    ``extras`` carries diagnostics that are not part of the objective (codebook
    perplexity, replaced codewords).
    """
    columns = ("t", "f", "g", "d", "fm", "w", "distill", "total")

    def __init__(self, *, t=0.0, f=0.0, g=0.0, d=0.0, fm=0.0, w=0.0, distill=0.0, total=None,
                 extras=None):
        self.t       = t
        self.f       = f
        self.g       = g
        self.d       = d
        self.fm      = fm
        self.w       = w
        self.distill = distill
        self.total   = total
        self.extras  = {} if extras is None else extras

    def items(self):
        for name in self.columns:
            yield name, getattr(self, name)

    def detach(self):
        """A copy with every component converted to a Python float."""
        def value(x):
            if x is None:
                return None
            return float(x.detach()) if isinstance(x, torch.Tensor) else float(x)
        return LossBreakdown(**{name: value(x) for name, x in self.items()},
                             extras=dict(self.extras))

    def is_finite(self):
        return all(x is None or math.isfinite(float(x)) for _, x in self.items())

    def as_row(self):
        return [getattr(self, name) for name in self.columns]

    def __repr__(self):
        return "(losses {})".format(" ".join("{}={:.6g}".format(name, float(x))
                                              for name, x in self.items() if x is not None))


@memoize
def _mel_filters(n_fft, n_mels, sample_rate, f_min, f_max, dtype):
    with warnings.catch_warnings():
        # Short windows leave some of the filters without any frequency bin; those
        # bands sit at the log floor for every signal.
        warnings.filterwarnings("ignore", message=r".*filterbank has all zero values.*")
        filters = torchaudio.functional.melscale_fbanks(
            n_freqs=n_fft // 2 + 1, f_min=f_min, f_max=f_max, n_mels=n_mels,
            sample_rate=sample_rate, norm=None, mel_scale="htk")
    return filters.to(dtype)


@memoize
def _hann(n_fft, dtype):
    return torch.hann_window(n_fft, dtype=dtype)


def log_mel(audio, sample_rate, *, n_fft, hop_length, n_mels=64, f_min=0.0, f_max=8000.0,
            floor=1e-5, pad_mode="reflect"):
    """Log-compressed HTK mel magnitude spectrogram of ``(batch, n)`` audio,
    shaped ``(batch, n_mels, frames)``.
    """
    spectrum = torch.stft(audio, n_fft, hop_length=hop_length, window=_hann(n_fft, audio.dtype),
                          center=True, pad_mode=pad_mode, return_complex=True).abs()
    filters = _mel_filters(n_fft, n_mels, sample_rate, f_min, min(f_max, sample_rate / 2),
                           audio.dtype)
    mel = torch.matmul(spectrum.transpose(-1, -2), filters).transpose(-1, -2)
    return mel.clamp(min=floor).log()


def _as_batch(x):
    if x.dim() == 1:
        return x[None]
    return x.reshape(-1, x.shape[-1])


def time_loss(x, x_hat):
    """Mean absolute difference between waveforms."""
    if x.shape != x_hat.shape:
        raise DomainError("Waveforms of shapes {} and {} cannot be compared"
                          .format(tuple(x.shape), tuple(x_hat.shape)))
    return (x - x_hat).abs().mean()


def mel_loss(x, x_hat, *, sample_rate=16000, scales=range(5, 12), n_mels=64):
    """Sum over scales ``i`` of the L1 and L2 distances between log-mel spectrograms with
    window ``2**i`` and hop ``2**i / 4``.

    The L1 term is the mean absolute difference and the L2 term the Euclidean norm of the
    difference. Scales whose window exceeds the clip are skipped with a
    :class:`MelScaleWarning`.
    """
    if x.shape != x_hat.shape:
        raise DomainError("Waveforms of shapes {} and {} cannot be compared"
                          .format(tuple(x.shape), tuple(x_hat.shape)))
    x, x_hat = _as_batch(x), _as_batch(x_hat)
    length = x.shape[-1]
    loss = x.new_zeros(())
    for i in scales:
        window = 2 ** i
        if window > length:
            warnings.warn("Mel scale with window {} skipped for a clip of {} samples"
                          .format(window, length), MelScaleWarning, stacklevel=2)
            continue
        mel = log_mel(x, sample_rate, n_fft=window, hop_length=window // 4, n_mels=n_mels)
        mel_hat = log_mel(x_hat, sample_rate, n_fft=window, hop_length=window // 4,
                          n_mels=n_mels)
        difference = mel - mel_hat
        loss = loss + difference.abs().mean() + torch.linalg.vector_norm(difference)
    return loss


def hinge_generator(disc_outputs):
    """``(1/N) sum_n max(1 - R_n(x_hat), 0)``.

    ``disc_outputs`` holds one score tensor per discriminator, either a scalar or one
    score per batch item; batch items are averaged.
    """
    return torch.stack([F.relu(1 - torch.as_tensor(r)).mean() for r in disc_outputs]).mean()


def hinge_discriminator(real_outputs, fake_outputs):
    """``(1/N) sum_n [max(1 - R_n(x), 0) + max(1 + R_n(x_hat), 0)]``."""
    if len(real_outputs) != len(fake_outputs):
        raise DomainError("{} real and {} fake discriminator outputs"
                          .format(len(real_outputs), len(fake_outputs)))
    return torch.stack([
        F.relu(1 - torch.as_tensor(r)).mean() + F.relu(1 + torch.as_tensor(f)).mean()
        for r, f in zip(real_outputs, fake_outputs)
    ]).mean()


def feature_matching(real_feats, fake_feats, *, epsilon=1e-8):
    """``(1/NM) sum_n sum_m |R_n^m(x) - R_n^m(x_hat)|_1 / mean(|R_n^m(x)|)``.

    ``real_feats[n][m]`` is the ``m``-th intermediate feature of discriminator ``n``,
    with the batch on the first axis when there is more than one item. The L1 norm is
    taken per item and averaged over the batch; real features are not differentiated.
    """
    terms = []
    for real_layers, fake_layers in zip(real_feats, fake_feats):
        if len(real_layers) != len(fake_layers):
            raise DomainError("{} real and {} fake feature layers"
                              .format(len(real_layers), len(fake_layers)))
        for real, fake in zip(real_layers, fake_layers):
            real = real.detach()
            difference = (real - fake).abs()
            if difference.dim() > 1:
                numerator = difference.reshape(difference.shape[0], -1).sum(1).mean()
            else:
                numerator = difference.sum()
            terms.append(numerator / real.abs().mean().clamp(min=epsilon))
    if not terms:
        raise DomainError("No discriminator features to match")
    return torch.stack(terms).mean()


def total_generator(components, weights):
    """Weighted generator objective over the components of a :class:`LossBreakdown`."""
    terms = [weights.distill * components.distill,
             weights.t * components.t,
             weights.f * components.f,
             weights.g * components.g,
             weights.fm * components.fm,
             weights.w * components.w]
    if any(isinstance(term, torch.Tensor) for term in terms):
        return sum(terms[1:], terms[0])
    return math.fsum(terms)


class MelLoss(torch.nn.Module):
    """:func:`mel_loss` with fixed parameters."""
    def __init__(self, sample_rate=16000, scales=range(5, 12), n_mels=64):
        super().__init__()
        self.sample_rate = sample_rate
        self.scales      = tuple(scales)
        self.n_mels      = n_mels

    def forward(self, x, x_hat):
        return mel_loss(x, x_hat, sample_rate=self.sample_rate, scales=self.scales,
                        n_mels=self.n_mels)
