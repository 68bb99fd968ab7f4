import torch
from torch import nn
from torch.nn import functional as F
from torch.nn.utils.parametrizations import weight_norm

from .errors import DomainError
from ._utils import memoize


__all__ = [
    "DiscriminatorConfig", "DiscriminatorOutput",
    "PeriodDiscriminator", "ScaleDiscriminator", "STFTDiscriminator", "Discriminators",
]


class DiscriminatorConfig:
    """Shape of the discriminator ensemble.

    Parameters
    ----------
    periods : tuple of int
        One multi-period discriminator per period.
    scales : tuple of int
        One multi-scale discriminator per downsampling factor; ``1`` sees raw audio.
    stft_windows : tuple of int
        One STFT discriminator per window length (hop is a quarter window).
    channels : int
        Base channel count; every sub-discriminator grows its width from it.
    """
    def __init__(self, *, periods=(2, 3, 5, 7, 11), scales=(1, 2, 4),
                 stft_windows=(512, 1024, 2048), channels=8, seed=1):
        for name, values in (("Periods", periods), ("Scales", scales),
                             ("STFT windows", stft_windows)):
            values = tuple(values)
            if not all(isinstance(value, int) and value >= 1 for value in values):
                raise TypeError("{} must be a sequence of positive integers, not {!r}"
                                .format(name, values))
        if not (periods or scales or stft_windows):
            raise TypeError("At least one discriminator must be configured")
        if not isinstance(channels, int) or channels < 4 or channels % 4:
            raise TypeError("Channel count must be a positive multiple of 4, not {!r}"
                            .format(channels))
        self.periods      = tuple(periods)
        self.scales       = tuple(scales)
        self.stft_windows = tuple(stft_windows)
        self.channels     = channels
        self.seed         = seed

    @property
    def count(self):
        return len(self.periods) + len(self.scales) + len(self.stft_windows)

    @property
    def min_length(self):
        """Shortest input every sub-discriminator accepts."""
        return max(self.stft_windows + (max(self.periods + (1,)),))


class DiscriminatorOutput:
    """Score and intermediate features of one sub-discriminator.

    Attributes
    ----------
    logits : Tensor, (batch,)
        Mean of the final logit map per batch item.
    features : list of Tensor
        Activations of every hidden layer, batch first.
    """
    def __init__(self, logits, features):
        self.logits   = logits
        self.features = features


def _leaky(x):
    return F.leaky_relu(x, 0.1)


class PeriodDiscriminator(nn.Module):
    """Folds the waveform into ``period`` columns and convolves along time."""
    def __init__(self, period, channels=8):
        super().__init__()
        self.period = period
        widths = [1, channels, 4 * channels, 16 * channels, 16 * channels]
        self.convs = nn.ModuleList([
            weight_norm(nn.Conv2d(widths[i], widths[i + 1], (5, 1), (3 if i < 3 else 1, 1),
                                  padding=(2, 0)))
            for i in range(len(widths) - 1)
        ])
        self.output = weight_norm(nn.Conv2d(widths[-1], 1, (3, 1), padding=(1, 0)))

    @property
    def n_features(self):
        return len(self.convs)

    def forward(self, x):
        batch, channels, length = x.shape
        if length % self.period:
            x = F.pad(x, (0, self.period - length % self.period), "reflect")
        x = x.reshape(batch, channels, -1, self.period)
        features = []
        for conv in self.convs:
            x = _leaky(conv(x))
            features.append(x)
        logits = self.output(x)
        return DiscriminatorOutput(logits.flatten(1).mean(1), features)


class ScaleDiscriminator(nn.Module):
    """Grouped strided 1-D convolutions over audio average-pooled by ``scale``."""
    def __init__(self, scale, channels=8):
        super().__init__()
        self.scale = scale
        c = channels
        self.convs = nn.ModuleList([
            weight_norm(nn.Conv1d(1, c, 15, padding=7)),
            weight_norm(nn.Conv1d(c, 2 * c, 41, stride=2, padding=20, groups=4)),
            weight_norm(nn.Conv1d(2 * c, 4 * c, 41, stride=2, padding=20, groups=4)),
            weight_norm(nn.Conv1d(4 * c, 8 * c, 41, stride=4, padding=20, groups=4)),
            weight_norm(nn.Conv1d(8 * c, 8 * c, 5, padding=2)),
        ])
        self.output = weight_norm(nn.Conv1d(8 * c, 1, 3, padding=1))

    @property
    def n_features(self):
        return len(self.convs)

    def forward(self, x):
        if self.scale > 1:
            x = F.avg_pool1d(x, 2 * self.scale, self.scale, padding=self.scale)
        features = []
        for conv in self.convs:
            x = _leaky(conv(x))
            features.append(x)
        logits = self.output(x)
        return DiscriminatorOutput(logits.flatten(1).mean(1), features)


@memoize
def _hann(window, dtype):
    return torch.hann_window(window, dtype=dtype)


def _padding_2d(kernel, dilation=(1, 1)):
    return tuple((k - 1) * d // 2 for k, d in zip(kernel, dilation))


class STFTDiscriminator(nn.Module):
    """2-D convolutions over the real and imaginary parts of a complex STFT, dilated
    along time by 1, 2 and 4.
    """
    dilations = (1, 2, 4)

    def __init__(self, window, channels=8):
        super().__init__()
        self.window = window
        c = channels
        kernel = (3, 9)
        convs = [weight_norm(nn.Conv2d(2, c, kernel, padding=_padding_2d(kernel)))]
        for dilation in self.dilations:
            convs.append(weight_norm(nn.Conv2d(c, c, kernel, stride=(1, 2),
                                               dilation=(dilation, 1),
                                               padding=_padding_2d(kernel, (dilation, 1)))))
        convs.append(weight_norm(nn.Conv2d(c, c, (3, 3), padding=(1, 1))))
        self.convs  = nn.ModuleList(convs)
        self.output = weight_norm(nn.Conv2d(c, 1, (3, 3), padding=(1, 1)))

    @property
    def n_features(self):
        return len(self.convs)

    def forward(self, x):
        spectrum = torch.stft(x.squeeze(1), self.window, hop_length=self.window // 4,
                              window=_hann(self.window, x.dtype), center=False,
                              normalized=True, return_complex=True)
        # (batch, 2, time, frequency)
        x = torch.stack([spectrum.real, spectrum.imag], dim=1).transpose(2, 3)
        features = []
        for conv in self.convs:
            x = F.leaky_relu(conv(x), 0.2)
            features.append(x)
        logits = self.output(x)
        return DiscriminatorOutput(logits.flatten(1).mean(1), features)


class Discriminators(nn.Module):
    """Multi-period, multi-scale and multi-resolution STFT discriminators, in that order."""
    def __init__(self, cfg=None):
        super().__init__()
        if cfg is None:
            cfg = DiscriminatorConfig()
        self.cfg = cfg
        with torch.random.fork_rng(devices=[]):
            torch.manual_seed(cfg.seed)
            self.discriminators = nn.ModuleList(
                [PeriodDiscriminator(period, cfg.channels) for period in cfg.periods] +
                [ScaleDiscriminator(scale, cfg.channels) for scale in cfg.scales] +
                [STFTDiscriminator(window, cfg.channels) for window in cfg.stft_windows])

    def __len__(self):
        return len(self.discriminators)

    def run_all(self, x):
        """Score ``x``, an :class:`AudioClip` or a ``(batch, 1, n)`` tensor, with every
        sub-discriminator.
        """
        if hasattr(x, "samples"):
            x = x.samples[None, None]
        if x.dim() == 2:
            x = x[:, None]
        if x.shape[-1] < self.cfg.min_length:
            raise DomainError("Discriminators need at least {} samples, got {}"
                              .format(self.cfg.min_length, x.shape[-1]))
        x = x.to(next(self.parameters()).dtype)
        return [discriminator(x) for discriminator in self.discriminators]

    forward = run_all
