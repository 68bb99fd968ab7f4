import re

import torch

from .._toolchain import run_tool
from ..errors import DomainError


__all__ = ["Phonemizer", "GraphemePhonemizer", "EspeakPhonemizer"]


class Phonemizer:
    """Maps text to a sequence of symbol ids from a fixed inventory.

    Id 0 is reserved for symbols outside the inventory.
    """
    symbols = ()

    @property
    def vocab_size(self):
        return len(self.symbols) + 1

    def transcribe(self, text):
        """Symbol string for ``text``."""
        raise NotImplementedError # :nocov:

    def encode(self, text):
        transcription = self.transcribe(text)
        if not transcription:
            raise DomainError("Text {!r} has no phonemes".format(text))
        return self.encode_symbols(transcription)

    def encode_symbols(self, symbols):
        """Ids of an already transcribed symbol string, such as the output of
        :meth:`transcribe` or :meth:`decode`.
        """
        index = {symbol: number + 1 for number, symbol in enumerate(self.symbols)}
        ids = [index.get(symbol, 0) for symbol in symbols]
        if not ids:
            raise DomainError("Phoneme string is empty")
        return torch.tensor(ids, dtype=torch.long)

    def decode(self, ids):
        return "".join(self.symbols[i - 1] if i > 0 else "?" for i in ids.tolist())


class GraphemePhonemizer(Phonemizer):
    """Lowercase letters, apostrophes and single spaces stand for phonemes."""
    symbols = tuple("abcdefghijklmnopqrstuvwxyz' ")

    def transcribe(self, text):
        text = re.sub(r"[^a-z' ]+", " ", text.lower())
        return re.sub(r" +", " ", text).strip()


class EspeakPhonemizer(Phonemizer):
    """IPA transcription by the external ``espeak-ng`` program.

    The program is looked up in ``PATH`` unless the ``DMCODEC_ESPEAK_NG`` environment
    variable names it.
    """
    symbols = tuple(
        "abdefhijklmnoprstuvwxzæçðøħŋœɐɑɒɔɕɖɘəɚɛɜɝɞɟɡɢɣɤɥɨɪɬɭɮɯɰɱɲɳɴɵɶɸɹɺɻɽɾʀʁʂʃʈʉʊʋʌʍʎʏʐʑʒʔʕʘ"
        "ʙʛʜʝʟʡʢˈˌːˑ̩̃θχᵻ "
    )

    def __init__(self, voice="en-us"):
        self.voice = voice

    def transcribe(self, text):
        output = run_tool("espeak-ng", ["-q", "--ipa", "-v", self.voice, text])
        return re.sub(r"\s+", " ", output).strip()
