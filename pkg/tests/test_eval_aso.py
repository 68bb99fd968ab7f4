import os

import numpy as np

from dmcodec.errors import DataError, DomainError
from dmcodec.eval.aso import *

from .utils import *


class ScoreSampleTestCase(CodecTestCase):
    def test_oriented(self):
        sample = ScoreSample([0.1, 0.2], [0.3, 0.4], "wer", higher_is_better=False)
        a, b = sample.oriented()
        np.testing.assert_array_equal(a, [-0.1, -0.2])
        self.assertEqual(len(sample), 2)
        np.testing.assert_array_equal(sample.swapped().system_a, [0.3, 0.4])

    def test_wrong_values(self):
        with self.assertRaisesRegex(DomainError,
                r"^Significance testing needs at least 2 scores per system, got 1 and 1$"):
            ScoreSample([1.0], [2.0])
        with self.assertRaisesRegex(DomainError,
                r"^Paired scores must have equal lengths, got 2 and 3$"):
            ScoreSample([1, 2], [1, 2, 3])
        with self.assertRaisesRegex(DomainError, r"^Scores must be finite$"):
            ScoreSample([1, float("nan")], [1, 2])


class ViolationRatioTestCase(CodecTestCase):
    def test_dominant(self):
        self.assertEqual(violation_ratio([1, 2, 3], [0, 1, 2]), 0.0)
        self.assertEqual(violation_ratio([0, 1, 2], [1, 2, 3]), 1.0)

    def test_crossing(self):
        self.assertEqual(violation_ratio([0, 3], [1, 2]), 0.5)

    def test_identical(self):
        self.assertEqual(violation_ratio([1, 2, 3], [3, 2, 1]), 0.5)


class EpsilonTestCase(CodecTestCase):
    def test_dominant(self):
        b = np.random.default_rng(0).normal(size=50)
        epsilon = aso_epsilon(ScoreSample(b + 10.0, b), n_bootstrap=200)
        self.assertEqual(epsilon, 0.0)
        self.assertEqual(aso_label(epsilon), "dominant")

    def test_lower_is_better(self):
        sample = ScoreSample([0.1, 0.2, 0.15], [0.3, 0.4, 0.35], "wer", higher_is_better=False)
        self.assertEqual(aso_epsilon(sample, n_bootstrap=50), 0.0)
        self.assertAlmostEqual(aso_epsilon(sample.swapped(), n_bootstrap=50), 1.0)

    def test_identical(self):
        scores = [1.0, 2.0, 3.0, 4.0]
        self.assertEqual(aso_epsilon(ScoreSample(scores, scores), n_bootstrap=50), 0.5)
        self.assertEqual(aso_epsilon(ScoreSample(scores, scores[::-1]), n_bootstrap=50), 0.5)

    def test_self_comparison(self):
        scores = np.random.default_rng(4).normal(size=200)
        epsilon = aso_epsilon(ScoreSample(scores, scores.copy()))
        self.assertEqual(epsilon, 0.5)
        self.assertEqual(aso_label(epsilon), "not_significant")

    def test_directions_sum_to_one(self):
        rng = np.random.default_rng(5)
        better, worse = rng.normal(2.0, 1.0, 200), rng.normal(0.0, 1.0, 200)
        forward  = aso_epsilon(ScoreSample(better, worse))
        backward = aso_epsilon(ScoreSample(worse, better))
        self.assertAlmostEqual(forward + backward, 1.0, delta=0.1)
        self.assertLess(forward, 0.1)
        self.assertGreater(backward, 0.9)

    def test_shifted(self):
        rng = np.random.default_rng(1)
        better, worse = rng.normal(1.0, 1.0, 200), rng.normal(0.0, 1.0, 200)
        forward  = aso_epsilon(ScoreSample(better, worse), n_bootstrap=200)
        backward = aso_epsilon(ScoreSample(worse, better), n_bootstrap=200)
        self.assertLess(forward, 0.5)
        self.assertIn(aso_label(forward), ("dominant", "significantly_better"))
        self.assertGreater(backward, 0.5)
        self.assertEqual(aso_label(backward), "not_significant")

    def test_deterministic(self):
        rng = np.random.default_rng(2)
        sample = ScoreSample(rng.normal(size=30), rng.normal(size=30))
        self.assertEqual(aso_epsilon(sample, n_bootstrap=100, seed=7),
                         aso_epsilon(sample, n_bootstrap=100, seed=7))

    def test_wrong_values(self):
        sample = ScoreSample([1, 2], [2, 3])
        with self.assertRaisesRegex(TypeError, r"^Scores must be a ScoreSample, not \[1, 2\]$"):
            aso_epsilon([1, 2])
        with self.assertRaisesRegex(DomainError, r"^Alpha must be a float in \(0, 1\), not 1\.5$"):
            aso_epsilon(sample, 1.5)
        with self.assertRaisesRegex(DomainError,
                r"^Bootstrap count must be an integer of at least 2, not 1$"):
            aso_epsilon(sample, n_bootstrap=1)


class LabelTestCase(CodecTestCase):
    def test_label(self):
        self.assertEqual(aso_label(0.0), "dominant")
        self.assertEqual(aso_label(0.3), "significantly_better")
        self.assertEqual(aso_label(0.5), "not_significant")
        self.assertEqual(aso_label(0.2, threshold=0.2), "not_significant")


class ReadScoresTestCase(CodecTestCase):
    def _write(self, name, text):
        path = os.path.join(self.mkdtemp(), name)
        with open(path, "w", encoding="utf-8") as f:
            f.write(text)
        return path

    def test_read(self):
        path = self._write("a.csv", "utterance_id,score\nu1, 0.5\n# skipped\nu2,1.5\n")
        self.assertEqual(list(read_scores(path).items()), [("u1", 0.5), ("u2", 1.5)])

    def test_wrong_rows(self):
        with self.assertRaisesRegex(DataError,
                r"^Score line .+a\.csv:2 has 3 fields, expected 2$"):
            read_scores(self._write("a.csv", "u1,1\nu2,1,2\n"))
        with self.assertRaisesRegex(DataError,
                r"^Score line .+a\.csv:2 has a non-numeric score 'high'$"):
            read_scores(self._write("a.csv", "u1,1\nu2,high\n"))
        with self.assertRaisesRegex(DataError,
                r"^Score file .+a\.csv lists utterance 'u1' twice$"):
            read_scores(self._write("a.csv", "u1,1\nu1,2\n"))
        with self.assertRaisesRegex(DataError, r"^Score file .+a\.csv has no entries$"):
            read_scores(self._write("a.csv", "id,score\n"))


class DominanceMatrixTestCase(CodecTestCase):
    def test_arrays(self):
        rng = np.random.default_rng(3)
        base = rng.normal(size=40)
        table = dominance_matrix({"strong": base + 10.0, "weak": base, "copy": base.copy()},
                                 "pesq", n_bootstrap=100)
        self.assertEqual(table.names, ["strong", "weak", "copy"])
        self.assertIsNone(table.labels[0][0])
        self.assertIsNone(table.epsilon[1][1])
        self.assertEqual(table.label("strong", "weak"), "dominant")
        self.assertEqual(table.label("weak", "strong"), "not_significant")
        self.assertEqual(table.epsilon[1][2], 0.5)
        self.assertEqual(table.label("weak", "copy"), "not_significant")
        self.assertAlmostEqual(table.means[0] - table.means[1], 10.0)
        self.assertAlmostEqual(table.stds[0], table.stds[1])

    def test_files(self):
        a = self._write("a.csv", "u1,0.1\nu2,0.2\nu3,0.1\n")
        b = self._write("b.csv", "u3,0.5\nu1,0.4\nu2,0.6\n")
        table = dominance_matrix({"a": a, "b": b}, "wer", higher_is_better=False,
                                 n_bootstrap=50)
        self.assertEqual(table.label("a", "b"), "dominant")
        self.assertAlmostEqual(table.means[1], 0.5)

    def test_unpaired(self):
        a = self._write("a.csv", "u1,0.1\nu2,0.2\n")
        b = self._write("b.csv", "u1,0.5\nu3,0.6\n")
        with self.assertRaisesRegex(DataError,
                r"^Score file of system 'b' does not cover the same utterances as the first "
                r"system$"):
            dominance_matrix({"a": a, "b": b})

    def test_single_system(self):
        with self.assertRaisesRegex(DomainError,
                r"^A dominance matrix needs at least 2 systems, got 1$"):
            dominance_matrix({"a": [1, 2]})

    def _write(self, name, text):
        path = os.path.join(self.mkdtemp(), name)
        with open(path, "w", encoding="utf-8") as f:
            f.write(text)
        return path
