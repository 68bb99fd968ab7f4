import math

import torch

from dmcodec.codec import CodecConfig, ResidualVectorQuantizer
from dmcodec.distill import *
from dmcodec.errors import ConfigurationError, DomainError

from .utils import *


class DistillTargetTestCase(CodecTestCase):
    def test_defaults(self):
        target = DistillTarget()
        self.assertTrue(target.enabled)
        self.assertEqual(target.teachers, {"lm": "contextual", "sm": "semantic"})
        self.assertEqual(repr(target),
                         "(distill lm+sm lm=RVQ-1 sm=RVQ-1:8 axis=feature_dim w=(1.0, 1.0) "
                         "average_all)")

    def test_modes(self):
        self.assertFalse(DistillTarget(mode="none").enabled)
        self.assertEqual(DistillTarget(mode="none").teachers, {})
        self.assertEqual(DistillTarget(mode="cls").teachers, {"lm": "cls"})
        self.assertEqual(DistillTarget(mode="word").teachers, {"lm": "static_word"})
        self.assertEqual(DistillTarget(mode="sm").teachers, {"sm": "semantic"})

    def test_wrong_mode(self):
        with self.assertRaisesRegex(ConfigurationError,
                r"^Distillation mode must be one of none, lm, sm, lm\+sm, cls, word, "
                r"not 'both'$"):
            DistillTarget(mode="both")

    def test_wrong_axis(self):
        with self.assertRaisesRegex(ConfigurationError,
                r"^Distillation axis must be one of feature_dim, time, not 'channel'$"):
            DistillTarget(axis="channel")

    def test_wrong_selection(self):
        with self.assertRaisesRegex(ConfigurationError,
                r"^RVQ selection must look like 'RVQ-1' or 'RVQ-1:8', not 'layer-1'$"):
            DistillTarget(lm_selection="layer-1")
        with self.assertRaisesRegex(ConfigurationError,
                r"^RVQ selection 'RVQ-3:1' does not name a non-empty layer range$"):
            DistillTarget(sm_selection="RVQ-3:1")
        with self.assertRaisesRegex(ConfigurationError,
                r"^RVQ selection 'RVQ-0' does not name a non-empty layer range$"):
            DistillTarget(lm_selection="RVQ-0")

    def test_wrong_weights(self):
        with self.assertRaisesRegex(ConfigurationError,
                r"^Distillation weight w_sm must be a non-negative number, not -1$"):
            DistillTarget(w_sm=-1)
        with self.assertRaisesRegex(ConfigurationError,
                r"^At least one of the LM and SM distillation weights must be positive$"):
            DistillTarget(w_lm=0, w_sm=0)


class DistillLossTestCase(CodecTestCase):
    def test_identical(self):
        x = torch.randn(10, 4, dtype=torch.float64)
        for axis in ("feature_dim", "time"):
            with self.subTest(axis=axis):
                self.assertAlmostEqual(float(distill_loss(x, x, axis)),
                                       math.log(1 + math.exp(-1)), delta=1e-9)

    def test_negated(self):
        x = torch.randn(10, 4, dtype=torch.float64)
        self.assertAlmostEqual(float(distill_loss(x, -x)), math.log(1 + math.e), delta=1e-9)

    def test_orthogonal(self):
        q = torch.tensor([[1.0], [0.0]], dtype=torch.float64)
        target = torch.tensor([[0.0], [1.0]], dtype=torch.float64)
        self.assertAlmostEqual(float(distill_loss(q, target)), math.log(2), delta=1e-12)

    def test_zero_column(self):
        q = torch.zeros(5, 3, dtype=torch.float64)
        target = torch.randn(5, 3, dtype=torch.float64)
        self.assertAlmostEqual(float(distill_loss(q, target)), math.log(2), delta=1e-12)

    def test_axes_differ(self):
        generator = torch.Generator().manual_seed(0)
        q = torch.randn(6, 3, generator=generator, dtype=torch.float64)
        target = torch.randn(6, 3, generator=generator, dtype=torch.float64)
        self.assertNotAlmostEqual(float(distill_loss(q, target, "feature_dim")),
                                  float(distill_loss(q, target, "time")))

    def test_batch_mean(self):
        generator = torch.Generator().manual_seed(1)
        q = torch.randn(2, 6, 3, generator=generator, dtype=torch.float64)
        target = torch.randn(2, 6, 3, generator=generator, dtype=torch.float64)
        self.assertAlmostEqual(float(distill_loss(q, target)),
                               (float(distill_loss(q[0], target[0])) +
                                float(distill_loss(q[1], target[1]))) / 2, delta=1e-12)

    def test_gradcheck(self):
        for axis in ("feature_dim", "time"):
            for seed in range(20):
                generator = torch.Generator().manual_seed(seed)
                q = torch.randn(5, 3, generator=generator)
                target = torch.randn(5, 3, generator=generator)
                with self.subTest(axis=axis, seed=seed):
                    self.assertGradcheck(lambda x: distill_loss(x, target.double(), axis), q)

    def test_wrong_shape(self):
        with self.assertRaisesRegex(DomainError,
                r"^Projected codes of shape \(5, 3\) do not match teacher targets of shape "
                r"\(5, 4\)$"):
            distill_loss(torch.zeros(5, 3), torch.zeros(5, 4))
        with self.assertRaisesRegex(DomainError,
                r"^Distillation inputs must be shaped \(\.\.\., T', D\) with D >= 1, "
                r"not \(5,\)$"):
            distill_loss(torch.zeros(5), torch.zeros(5))

    def test_wrong_axis(self):
        with self.assertRaisesRegex(ConfigurationError,
                r"^Distillation axis must be feature_dim or time, not 'frames'$"):
            distill_loss(torch.zeros(5, 3), torch.zeros(5, 3), "frames")


class CombinedLossTestCase(CodecTestCase):
    def test_mix(self):
        self.assertEqual(combined_loss(2.0, 4.0), 3.0)
        self.assertEqual(combined_loss(2.0, 4.0, 0.0, 1.0), 2.0)
        self.assertEqual(combined_loss(2.0, 4.0, 2.0, 0.5), 3.0)

    def test_wrong_weights(self):
        with self.assertRaisesRegex(ConfigurationError,
                r"^Distillation weights must be non-negative, not \(-1, 1\)$"):
            combined_loss(1.0, 1.0, -1, 1)
        with self.assertRaisesRegex(ConfigurationError,
                r"^At least one of the LM and SM distillation weights must be positive$"):
            combined_loss(1.0, 1.0, 0, 0)


class AlignTestCase(CodecTestCase):
    def test_pad(self):
        teacher = TeacherEmbedding([[1.0, 2.0], [3.0, 4.0]], "contextual")
        aligned = align(teacher, 4)
        self.assertTensorEqual(aligned, torch.tensor([[1.0, 2.0], [3.0, 4.0],
                                                      [0.0, 0.0], [0.0, 0.0]]))

    def test_truncate(self):
        teacher = TeacherEmbedding([[1.0], [2.0], [3.0]], "semantic")
        with self.assertWarnsRegex(TeacherWarning,
                r"^Teacher holds 3 vectors for 2 frames; the last 1 are dropped$"):
            aligned = align(teacher, 2)
        self.assertTensorEqual(aligned, torch.tensor([[1.0], [2.0]]))

    def test_cls(self):
        teacher = TeacherEmbedding([[1.0, -1.0]], "cls")
        self.assertTensorEqual(align(teacher, 3), torch.tensor([[1.0, -1.0]] * 3))

    def test_wrong_frames(self):
        teacher = TeacherEmbedding([[1.0]], "semantic")
        with self.assertRaisesRegex(DomainError,
                r"^Frame count must be a positive integer, not 0$"):
            align(teacher, 0)


def _quantizer(n_layers=3, dim=4):
    cfg = CodecConfig(latent_dim=dim, n_quantizers=n_layers, codebook_size=8)
    quantizer = ResidualVectorQuantizer(cfg)
    quantizer.quantize(torch.randn(64, dim), generator=torch.Generator().manual_seed(0))
    return quantizer


class SelectRvqTestCase(CodecTestCase):
    def test_single_layer(self):
        code = _quantizer().quantize(torch.randn(2, 5, 4))
        self.assertTensorClose(select_rvq(code, "RVQ-2"), code.per_layer_vectors[1], atol=1e-6)

    def test_range(self):
        code = _quantizer().quantize(torch.randn(2, 5, 4))
        self.assertTensorClose(select_rvq(code, "RVQ-1:3"), code.per_layer_vectors.mean(0),
                               atol=1e-6)

    def test_gradient(self):
        latents = torch.randn(2, 5, 4, requires_grad=True)
        code = _quantizer().quantize(latents)
        select_rvq(code, "RVQ-1").sum().backward()
        self.assertTensorEqual(latents.grad, torch.ones(2, 5, 4))

    def test_too_few_layers(self):
        code = _quantizer().quantize(torch.randn(5, 4), 2)
        with self.assertRaisesRegex(DomainError,
                r"^RVQ selection 'RVQ-1:8' needs 8 layers, but only 2 are active$"):
            select_rvq(code, "RVQ-1:8")

    def test_looked_up_codes(self):
        quantizer = _quantizer()
        code = quantizer.lookup(torch.zeros(3, 5, dtype=torch.long))
        with self.assertRaisesRegex(DomainError,
                r"^RVQ selection requires codes produced by quantization$"):
            select_rvq(code, "RVQ-1")


class DistillObjectiveTestCase(CodecTestCase):
    def setUp(self):
        super().setUp()
        self.code = _quantizer().quantize(torch.randn(2, 5, 4))
        self.projections = {"lm": Projection(4, 6), "sm": Projection(4, 6)}
        self.lm = torch.randn(2, 5, 6)
        self.sm = torch.randn(2, 5, 6)

    def test_none(self):
        loss, parts = distill_objective(self.code, DistillTarget(mode="none"),
                                        self.projections)
        self.assertEqual(float(loss), 0.0)
        self.assertEqual(parts, {})

    def test_single(self):
        target = DistillTarget(mode="sm", sm_selection="RVQ-1:3")
        loss, parts = distill_objective(self.code, target, self.projections, sm=self.sm)
        self.assertEqual(list(parts), ["sm"])
        expected = distill_loss(self.projections["sm"](select_rvq(self.code, "RVQ-1:3")),
                                self.sm)
        self.assertAlmostEqual(float(loss), float(expected), places=6)

    def test_combined(self):
        target = DistillTarget(mode="lm+sm", sm_selection="RVQ-1:3", w_lm=1.0, w_sm=3.0)
        loss, parts = distill_objective(self.code, target, self.projections,
                                        lm=self.lm, sm=self.sm)
        self.assertAlmostEqual(float(loss),
                               0.5 * (float(parts["lm"]) + 3.0 * float(parts["sm"])), places=6)
        loss.backward()
        self.assertIsNotNone(self.projections["lm"].weight.grad)

    def test_missing_teacher(self):
        with self.assertRaisesRegex(DomainError,
                r"^Distillation mode 'lm' needs LM teacher targets$"):
            distill_objective(self.code, DistillTarget(mode="lm"), self.projections)


class ProjectionTestCase(CodecTestCase):
    def test_shape(self):
        projection = Projection(4, 6)
        self.assertEqual(tuple(projection.weight.shape), (6, 4))
        self.assertEqual(tuple(projection(torch.zeros(3, 4)).shape), (3, 6))

    def test_wrong_dim(self):
        with self.assertRaisesRegex(TypeError,
                r"^Teacher dimension must be a positive integer, not 0$"):
            Projection(4, 0)
