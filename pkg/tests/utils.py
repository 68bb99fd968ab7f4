import os
import shutil
import tempfile
import unittest
import warnings

import torch

from dmcodec.codec.config import CodecConfig
from dmcodec.discriminators import DiscriminatorConfig


__all__ = ["CodecTestCase", "small_codec_config", "small_disc_config"]


def small_codec_config(**kwargs):
    """A codec small enough to run dozens of steps per second on a CPU."""
    params = dict(base_channels=4, strides=(2, 4, 5, 8), latent_dim=16, codebook_size=64,
                  n_quantizers=4, lstm_layers=1)
    params.update(kwargs)
    return CodecConfig(**params)


def small_disc_config(**kwargs):
    params = dict(periods=(2, 3), scales=(1,), stft_windows=(256,), channels=4)
    params.update(kwargs)
    return DiscriminatorConfig(**params)


class CodecTestCase(unittest.TestCase):
    def setUp(self):
        self._dtype = torch.get_default_dtype()

    def tearDown(self):
        torch.set_default_dtype(self._dtype)

    def mkdtemp(self):
        path = tempfile.mkdtemp(prefix="dmcodec-test-")
        self.addCleanup(shutil.rmtree, path, True)
        return path

    def assertTensorEqual(self, actual, expected):
        self.assertEqual(tuple(actual.shape), tuple(expected.shape))
        self.assertTrue(torch.equal(actual, expected),
                        "Tensors differ:\n{}\n{}".format(actual, expected))

    def assertTensorClose(self, actual, expected, *, rtol=1e-5, atol=1e-8):
        self.assertEqual(tuple(actual.shape), tuple(expected.shape))
        self.assertTrue(torch.allclose(actual, expected, rtol=rtol, atol=atol),
                        "Tensors differ by up to {}"
                        .format(float((actual - expected).abs().max())))

    def assertGradcheck(self, function, *inputs, rtol=1e-4, atol=1e-6):
        inputs = tuple(x.detach().double().requires_grad_() for x in inputs)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            self.assertTrue(torch.autograd.gradcheck(function, inputs, eps=1e-6,
                                                     rtol=rtol, atol=atol))
