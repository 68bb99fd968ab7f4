import os

import numpy as np
import torch
from scipy.io import wavfile

from dmcodec.codec import *
from dmcodec.errors import ConfigurationError, DataError

from .utils import *


class WavTestCase(CodecTestCase):
    def test_pcm16(self):
        path = os.path.join(self.mkdtemp(), "clip.wav")
        samples = torch.linspace(-0.5, 0.5, 1600)
        write_wav(path, AudioClip(samples, 16000))
        clip = read_wav(path, 16000)
        self.assertEqual(len(clip), 1600)
        self.assertTensorClose(clip.samples, samples, atol=1 / 16384)

    def test_float32(self):
        path = os.path.join(self.mkdtemp(), "clip.wav")
        samples = torch.linspace(-0.5, 0.5, 1600)
        write_wav(path, AudioClip(samples, 16000), pcm16=False)
        self.assertTensorEqual(read_wav(path, 16000).samples, samples)

    def test_wrong_rate(self):
        path = os.path.join(self.mkdtemp(), "clip.wav")
        write_wav(path, AudioClip(torch.zeros(80), 8000))
        with self.assertRaisesRegex(ConfigurationError,
                r"^WAV file .+clip\.wav has sample rate 8000 Hz, expected 16000 Hz$"):
            read_wav(path, 16000)

    def test_stereo(self):
        path = os.path.join(self.mkdtemp(), "stereo.wav")
        wavfile.write(path, 16000, np.zeros((80, 2), dtype=np.int16))
        with self.assertRaisesRegex(DataError,
                r"^WAV file .+stereo\.wav has 2 channels; only mono audio is supported$"):
            read_wav(path, 16000)

    def test_wrong_format(self):
        path = os.path.join(self.mkdtemp(), "int32.wav")
        wavfile.write(path, 16000, np.zeros(80, dtype=np.int32))
        with self.assertRaisesRegex(DataError,
                r"^WAV file .+int32\.wav has sample format int32; "
                r"expected PCM16 or float32$"):
            read_wav(path, 16000)

    def test_not_wav(self):
        path = os.path.join(self.mkdtemp(), "garbage.wav")
        with open(path, "wb") as f:
            f.write(b"not a wav file at all")
        with self.assertRaisesRegex(DataError, r"^Cannot read WAV file .+garbage\.wav: "):
            read_wav(path, 16000)


class CheckpointTestCase(CodecTestCase):
    def _archive(self):
        codec = Codec(small_codec_config())
        archive = CheckpointArchive(config_text="x = 1\n", digest="abc")
        archive.add_module("codec.", codec)
        archive.add_array("step", np.array([7]))
        return codec, archive

    def test_deterministic(self):
        directory = self.mkdtemp()
        _, first = self._archive()
        _, second = self._archive()
        first.archive(os.path.join(directory, "a.zip"))
        second.archive(os.path.join(directory, "b.zip"))
        with open(os.path.join(directory, "a.zip"), "rb") as f:
            a = f.read()
        with open(os.path.join(directory, "b.zip"), "rb") as f:
            b = f.read()
        self.assertEqual(a, b)
        self.assertEqual(first.digest(), second.digest())

    def test_load(self):
        path = os.path.join(self.mkdtemp(), "checkpoint.zip")
        codec, archive = self._archive()
        archive.add_object("rng", torch.get_rng_state())
        archive.archive(path)

        checkpoint = Checkpoint(path)
        self.assertEqual(checkpoint.config_text, "x = 1\n")
        self.assertEqual(checkpoint.digest, "abc")
        self.assertEqual(checkpoint.get_array("step").tolist(), [7])
        self.assertTrue(checkpoint.has("rng"))
        self.assertFalse(checkpoint.has("optimizer"))

        other = Codec(small_codec_config(seed=5))
        checkpoint.load_module("codec.", other)
        for (name, a), (_, b) in zip(codec.state_dict().items(), other.state_dict().items()):
            with self.subTest(name=name):
                self.assertTensorEqual(a, b)

    def test_missing_state(self):
        path = os.path.join(self.mkdtemp(), "checkpoint.zip")
        CheckpointArchive().archive(path)
        with self.assertRaisesRegex(DataError, r"^Checkpoint has no state for 'codec\.'$"):
            Checkpoint(path).load_module("codec.", Codec(small_codec_config()))

    def test_not_zip(self):
        path = os.path.join(self.mkdtemp(), "checkpoint.zip")
        with open(path, "wb") as f:
            f.write(b"plain text")
        with self.assertRaisesRegex(DataError, r"^Cannot read checkpoint .+checkpoint\.zip: "):
            Checkpoint(path)

    def test_wrong_version(self):
        path = os.path.join(self.mkdtemp(), "checkpoint.zip")
        archive = CheckpointArchive()
        archive.files["version"] = "99"
        archive.archive(path)
        with self.assertRaisesRegex(DataError,
                r"^Checkpoint .+checkpoint\.zip has version 99, expected 1$"):
            Checkpoint(path)


class CodesFileTestCase(CodecTestCase):
    def test_export_import(self):
        path = os.path.join(self.mkdtemp(), "clip.dmcq")
        indices = torch.tensor([[0, 1023, 5], [7, 8, 9]])
        export_codes(path, QuantizedCode(indices), 1024)
        with open(path, "rb") as f:
            data = f.read()
        self.assertEqual(data[:4], CODES_MAGIC)
        self.assertEqual(len(data), 16 + 6 * 2)
        code, codebook_size = import_codes(path)
        self.assertTensorEqual(code.indices, indices)
        self.assertEqual(codebook_size, 1024)

    def test_batch_rejected(self):
        path = os.path.join(self.mkdtemp(), "clip.dmcq")
        with self.assertRaisesRegex(DataError,
                r"^Only single-clip codes shaped \(K, T'\) can be exported, not \(2, 1, 3\)$"):
            export_codes(path, QuantizedCode(torch.zeros(2, 1, 3, dtype=torch.long)), 1024)

    def test_truncated(self):
        path = os.path.join(self.mkdtemp(), "clip.dmcq")
        export_codes(path, QuantizedCode(torch.zeros(2, 3, dtype=torch.long)), 1024)
        with open(path, "rb") as f:
            data = f.read()
        with open(path, "wb") as f:
            f.write(data[:-2])
        with self.assertRaisesRegex(DataError,
                r"^Codes file .+clip\.dmcq holds 5 indices, header declares 2x3$"):
            import_codes(path)

    def test_bad_magic(self):
        path = os.path.join(self.mkdtemp(), "clip.dmcq")
        with open(path, "wb") as f:
            f.write(b"RIFF" + bytes(12))
        with self.assertRaisesRegex(DataError, r"^Codes file .+clip\.dmcq has bad magic$"):
            import_codes(path)
        with open(path, "wb") as f:
            f.write(b"DMCQ")
        with self.assertRaisesRegex(DataError,
                r"^Codes file .+clip\.dmcq is too short for its header$"):
            import_codes(path)
