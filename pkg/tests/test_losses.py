import math

import torch

from dmcodec.losses import *
from dmcodec.errors import DomainError

from .utils import *


class LossWeightsTestCase(CodecTestCase):
    def test_defaults(self):
        weights = LossWeights()
        self.assertEqual(weights.distill, 1.0)
        self.assertEqual(weights.t, 4.15)
        self.assertEqual(weights.f, 0.375)
        self.assertEqual(weights.w, 0.085)
        self.assertEqual((weights.g, weights.fm), (1.0, 1.0))
        self.assertEqual(weights.derived, ("distill", "t", "f", "w"))

    def test_scale(self):
        weights = LossWeights(scale=2.0, t=1.0)
        self.assertEqual(weights.distill, 2.0)
        self.assertEqual(weights.t, 1.0)
        self.assertEqual(weights.f, 0.75)
        self.assertEqual(weights.derived, ("distill", "f", "w"))

    def test_repr(self):
        self.assertEqual(repr(LossWeights()),
                         "(weights distill=1.0 t=4.15 f=0.375 g=1.0 fm=1.0 w=0.085)")

    def test_wrong_weight(self):
        with self.assertRaisesRegex(TypeError,
                r"^Loss weight t must be a non-negative number, not -1$"):
            LossWeights(t=-1)
        with self.assertRaisesRegex(TypeError,
                r"^Loss weight g must be a non-negative number, not 'one'$"):
            LossWeights(g="one")


class LossBreakdownTestCase(CodecTestCase):
    def test_total_of_ones(self):
        breakdown = LossBreakdown(t=1.0, f=1.0, g=1.0, fm=1.0, w=1.0, distill=1.0)
        self.assertAlmostEqual(total_generator(breakdown, LossWeights()), 7.61, places=12)

    def test_total_tensor(self):
        breakdown = LossBreakdown(t=torch.tensor(1.0, requires_grad=True), f=2.0)
        total = total_generator(breakdown, LossWeights())
        self.assertIsInstance(total, torch.Tensor)
        self.assertAlmostEqual(float(total), 4.15 + 0.75, places=5)
        total.backward()

    def test_detach(self):
        breakdown = LossBreakdown(t=torch.tensor(0.5), total=torch.tensor(2.0),
                                  extras={"perplexity": [3.0]})
        detached = breakdown.detach()
        self.assertIsInstance(detached.t, float)
        self.assertEqual(detached.total, 2.0)
        self.assertEqual(detached.extras, {"perplexity": [3.0]})
        self.assertEqual(detached.as_row(), [0.5, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 2.0])

    def test_is_finite(self):
        self.assertTrue(LossBreakdown(t=1.0).is_finite())
        self.assertFalse(LossBreakdown(t=float("nan")).is_finite())
        self.assertFalse(LossBreakdown(total=torch.tensor(float("inf"))).is_finite())

    def test_repr(self):
        self.assertEqual(repr(LossBreakdown(t=0.25)),
                         "(losses t=0.25 f=0 g=0 d=0 fm=0 w=0 distill=0)")


class ReconstructionLossTestCase(CodecTestCase):
    def test_time_loss(self):
        x = torch.tensor([0.0, 1.0, -1.0, 0.5])
        self.assertEqual(float(time_loss(x, x)), 0.0)
        self.assertEqual(float(time_loss(x, torch.zeros(4))), 0.625)

    def test_time_loss_shape(self):
        with self.assertRaisesRegex(DomainError,
                r"^Waveforms of shapes \(4,\) and \(5,\) cannot be compared$"):
            time_loss(torch.zeros(4), torch.zeros(5))

    def test_time_loss_gradcheck(self):
        for seed in range(20):
            generator = torch.Generator().manual_seed(seed)
            x = torch.randn(2, 1, 64, generator=generator)
            x_hat = torch.randn(2, 1, 64, generator=generator)
            self.assertGradcheck(lambda y: time_loss(x.double(), y), x_hat)

    def test_mel_identical(self):
        x = torch.randn(2, 1, 2048)
        self.assertEqual(float(mel_loss(x, x)), 0.0)

    def test_mel_positive(self):
        generator = torch.Generator().manual_seed(0)
        x = torch.randn(1, 2048, generator=generator)
        self.assertGreater(float(mel_loss(x, 0.5 * x)), 0.0)

    def test_mel_skipped_scale(self):
        x = torch.randn(100)
        with self.assertWarnsRegex(MelScaleWarning,
                r"^Mel scale with window 128 skipped for a clip of 100 samples$"):
            loss = mel_loss(x, x, scales=range(5, 8), n_mels=8)
        self.assertEqual(float(loss), 0.0)

    def test_mel_module(self):
        generator = torch.Generator().manual_seed(3)
        x = torch.randn(1, 1024, generator=generator)
        x_hat = torch.randn(1, 1024, generator=generator)
        module = MelLoss(scales=range(5, 9), n_mels=16)
        self.assertEqual(float(module(x, x_hat)),
                         float(mel_loss(x, x_hat, scales=range(5, 9), n_mels=16)))

    def test_mel_gradcheck(self):
        for seed in range(20):
            generator = torch.Generator().manual_seed(seed)
            x = torch.randn(1, 256, generator=generator)
            x_hat = torch.randn(1, 256, generator=generator)
            self.assertGradcheck(lambda y: mel_loss(x.double(), y, scales=range(5, 8),
                                                    n_mels=8), x_hat)

    def test_log_mel_shape(self):
        mel = log_mel(torch.zeros(3, 1024), 16000, n_fft=256, hop_length=64, n_mels=32)
        self.assertEqual(tuple(mel.shape), (3, 32, 17))
        self.assertTensorClose(mel, torch.full((3, 32, 17), math.log(1e-5)))


class AdversarialLossTestCase(CodecTestCase):
    def test_hinge_generator(self):
        self.assertEqual(float(hinge_generator([torch.tensor(2.0), torch.tensor(-1.0)])), 1.0)
        self.assertEqual(float(hinge_generator([torch.tensor([0.0, 1.0])])), 0.5)

    def test_hinge_discriminator(self):
        loss = hinge_discriminator([torch.tensor(1.5), torch.tensor(0.0)],
                                   [torch.tensor(-0.5), torch.tensor(-2.0)])
        # (0 + 0.5 + 1 + 0) / 2
        self.assertEqual(float(loss), 0.75)

    def test_hinge_discriminator_mismatch(self):
        with self.assertRaisesRegex(DomainError, r"^2 real and 1 fake discriminator outputs$"):
            hinge_discriminator([torch.tensor(0.0)] * 2, [torch.tensor(0.0)])

    def test_feature_matching(self):
        real = [[torch.tensor([1.0, -1.0])], [torch.tensor([[2.0, 2.0], [2.0, 2.0]])]]
        fake = [[torch.tensor([0.0, 0.0])], [torch.tensor([[2.0, 2.0], [1.0, 1.0]])]]
        # (2 / 1 + ((0 + 2) / 2) / 2) / 2
        self.assertEqual(float(feature_matching(real, fake)), 1.25)
        self.assertEqual(float(feature_matching(real, real)), 0.0)

    def test_feature_matching_no_real_gradient(self):
        real = torch.randn(2, 3, requires_grad=True)
        fake = torch.randn(2, 3, requires_grad=True)
        feature_matching([[real]], [[fake]]).backward()
        self.assertIsNone(real.grad)
        self.assertIsNotNone(fake.grad)

    def test_feature_matching_errors(self):
        with self.assertRaisesRegex(DomainError, r"^No discriminator features to match$"):
            feature_matching([], [])
        with self.assertRaisesRegex(DomainError, r"^2 real and 1 fake feature layers$"):
            feature_matching([[torch.zeros(1)] * 2], [[torch.zeros(1)]])
