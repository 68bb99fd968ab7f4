import torch
from torch import nn
from torch.nn import functional as F
from torch.nn.utils.parametrizations import weight_norm


__all__ = ["SEANetEncoder", "SEANetDecoder"]


def _conv(in_channels, out_channels, kernel_size, *, stride=1):
    return weight_norm(nn.Conv1d(in_channels, out_channels, kernel_size, stride=stride))


def _same_padding(kernel_size, stride=1):
    total = kernel_size - stride
    return total // 2, total - total // 2


class _ResidualUnit(nn.Module):
    def __init__(self, channels):
        super().__init__()
        self.conv1 = _conv(channels, channels, 3)
        self.conv2 = _conv(channels, channels, 3)

    def forward(self, x):
        y = self.conv1(F.pad(F.elu(x), _same_padding(3)))
        y = self.conv2(F.pad(F.elu(y), _same_padding(3)))
        return x + y


class _StridedConv(nn.Module):
    # Kernel 2S, stride S, padded so that the length is divided exactly by S.
    def __init__(self, in_channels, out_channels, stride):
        super().__init__()
        self.stride = stride
        self.conv   = _conv(in_channels, out_channels, 2 * stride, stride=stride)

    def forward(self, x):
        return self.conv(F.pad(x, _same_padding(2 * self.stride, self.stride)))


class _StridedTransposedConv(nn.Module):
    def __init__(self, in_channels, out_channels, stride):
        super().__init__()
        self.stride = stride
        self.conv   = weight_norm(nn.ConvTranspose1d(in_channels, out_channels, 2 * stride,
                                                     stride=stride))

    def forward(self, x):
        y = self.conv(x)
        left, right = _same_padding(2 * self.stride, self.stride)
        return y[..., left:y.shape[-1] - right]


class _RecurrentBlock(nn.Module):
    def __init__(self, channels, *, layers, bidirectional):
        super().__init__()
        hidden = channels // 2 if bidirectional else channels
        self.lstm = nn.LSTM(channels, hidden, num_layers=layers,
                            bidirectional=bidirectional, batch_first=True)

    def forward(self, x):
        y, _ = self.lstm(x.transpose(1, 2))
        return x + y.transpose(1, 2)


class SEANetEncoder(nn.Module):
    """Convolutional waveform encoder.

    Maps ``(batch, 1, T' * hop)`` waveforms to ``(batch, D', T')`` latent frames. The input
    length must be a multiple of the stride product.
    """
    def __init__(self, cfg):
        super().__init__()
        channels = cfg.base_channels
        self.input_conv = _conv(1, channels, 7)
        blocks = []
        for stride in cfg.strides:
            blocks.append(nn.ModuleDict({
                "residual": _ResidualUnit(channels),
                "down":     _StridedConv(channels, channels * 2, stride),
            }))
            channels *= 2
        self.blocks = nn.ModuleList(blocks)
        self.recurrent   = _RecurrentBlock(channels, layers=cfg.lstm_layers, bidirectional=True)
        self.output_conv = _conv(channels, cfg.latent_dim, 7)
        self.out_channels = channels

    def forward(self, x):
        x = self.input_conv(F.pad(x, _same_padding(7)))
        for block in self.blocks:
            x = block["residual"](x)
            x = block["down"](F.elu(x))
        x = self.recurrent(x)
        return self.output_conv(F.pad(F.elu(x), _same_padding(7)))


class SEANetDecoder(nn.Module):
    """Mirror of :class:`SEANetEncoder` with a unidirectional recurrent block and
    transposed convolutions; maps ``(batch, D', T')`` to ``(batch, 1, T' * hop)``.
    """
    def __init__(self, cfg):
        super().__init__()
        channels = cfg.base_channels * 2 ** len(cfg.strides)
        self.input_conv = _conv(cfg.latent_dim, channels, 7)
        self.recurrent  = _RecurrentBlock(channels, layers=cfg.lstm_layers, bidirectional=False)
        blocks = []
        for stride in reversed(cfg.strides):
            blocks.append(nn.ModuleDict({
                "up":       _StridedTransposedConv(channels, channels // 2, stride),
                "residual": _ResidualUnit(channels // 2),
            }))
            channels //= 2
        self.blocks = nn.ModuleList(blocks)
        self.output_conv = _conv(channels, 1, 7)

    def forward(self, z):
        x = self.input_conv(F.pad(z, _same_padding(7)))
        x = self.recurrent(x)
        for block in self.blocks:
            x = block["up"](F.elu(x))
            x = block["residual"](x)
        return self.output_conv(F.pad(F.elu(x), _same_padding(7)))
