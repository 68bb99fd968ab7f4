import os
import stat
from unittest import mock

import torch

from dmcodec.errors import DomainError
from dmcodec.tts import GraphemePhonemizer, EspeakPhonemizer

from .utils import *


class GraphemePhonemizerTestCase(CodecTestCase):
    def setUp(self):
        super().setUp()
        self.phonemizer = GraphemePhonemizer()

    def test_transcribe(self):
        self.assertEqual(self.phonemizer.transcribe("  Hello,   World! It's 3pm"),
                         "hello world it's pm")

    def test_encode(self):
        self.assertEqual(self.phonemizer.vocab_size, 29)
        ids = self.phonemizer.encode("Cab a")
        self.assertTensorEqual(ids, torch.tensor([3, 1, 2, 28, 1]))
        self.assertEqual(self.phonemizer.decode(ids), "cab a")

    def test_unknown(self):
        self.assertEqual(self.phonemizer.decode(torch.tensor([0, 1])), "?a")

    def test_encode_symbols(self):
        # No transcription: upper case and digits fall outside the inventory.
        self.assertTensorEqual(self.phonemizer.encode_symbols("cA 1"),
                               torch.tensor([3, 0, 28, 0]))

    def test_empty(self):
        with self.assertRaisesRegex(DomainError, r"^Text '!!!' has no phonemes$"):
            self.phonemizer.encode("!!!")
        with self.assertRaisesRegex(DomainError, r"^Phoneme string is empty$"):
            self.phonemizer.encode_symbols("")


class EspeakPhonemizerTestCase(CodecTestCase):
    def _fake(self, output):
        directory = self.mkdtemp()
        path = os.path.join(directory, "espeak-ng")
        with open(path, "w", encoding="utf-8") as f:
            f.write("#!/bin/sh\nprintf '{}'\n".format(output))
        os.chmod(path, os.stat(path).st_mode | stat.S_IEXEC)
        return mock.patch.dict(os.environ, {"DMCODEC_ESPEAK_NG": path})

    def test_transcribe(self):
        with self._fake(" həlˈoʊ\\n   wˈɜːld\\n"):
            phonemizer = EspeakPhonemizer()
            self.assertEqual(phonemizer.transcribe("hello world"), "həlˈoʊ wˈɜːld")
            ids = phonemizer.encode("hello world")
        self.assertEqual(ids.shape[0], 13)
        self.assertFalse(bool((ids == 0).any()))
        self.assertEqual(phonemizer.decode(ids), "həlˈoʊ wˈɜːld")
