import os
import warnings

import numpy as np
import torch

from .codec.config import AudioClip
from .codec.io import read_wav, write_wav
from .distill.teacher import SyntheticTeacher, load_teacher, save_teacher
from .errors import ConfigurationError, DataError, DomainError


__all__ = [
    "ManifestWarning", "ManifestEntry", "Utterance", "Manifest", "VOCABULARY",
    "synthesize_words", "generate_toy_corpus",
]


class ManifestWarning(UserWarning):
    pass


class ManifestEntry:
    """One manifest line: ``<wav>\\t<transcript>\\t<lm teacher>\\t<sm teacher>``.

    Teacher paths are ``None`` when the line leaves them empty or ``-``.
    """
    def __init__(self, wav_path, transcript, lm_path=None, sm_path=None):
        self.wav_path   = wav_path
        self.transcript = transcript
        self.lm_path    = lm_path or None
        self.sm_path    = sm_path or None

    def __repr__(self):
        return "(entry {} {!r})".format(self.wav_path, self.transcript)


class Utterance:
    """A loaded manifest entry.

    Attributes
    ----------
    clip : AudioClip
    transcript : str
    teachers : dict
        Cached :class:`TeacherEmbedding` per modality; empty unless requested.
    """
    def __init__(self, clip, transcript, teachers=None):
        self.clip       = clip
        self.transcript = transcript
        self.teachers   = {} if teachers is None else teachers


class Manifest:
    """Ordered list of corpus entries; relative paths resolve against ``root``."""
    def __init__(self, entries, root="."):
        self.entries = list(entries)
        self.root    = root

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def resolve(self, path):
        return path if os.path.isabs(path) else os.path.join(self.root, path)

    @classmethod
    def read(cls, file):
        entries = []
        with open(file, encoding="utf-8") as f:
            for lineno, line in enumerate(f, start=1):
                line = line.rstrip("\n")
                if not line.strip() or line.startswith("#"):
                    continue
                fields = line.split("\t")
                if len(fields) < 2 or len(fields) > 4:
                    raise DataError("Manifest line {}:{} has {} fields, expected 2 to 4"
                                    .format(file, lineno, len(fields)))
                fields = [None if field in ("", "-") else field for field in fields]
                entries.append(ManifestEntry(*fields))
        return cls(entries, os.path.dirname(os.path.abspath(file)))

    def write(self, file):
        with open(file, "w", encoding="utf-8") as f:
            for entry in self.entries:
                f.write("\t".join([entry.wav_path, entry.transcript,
                                   entry.lm_path or "-", entry.sm_path or "-"]) + "\n")

    def load(self, sample_rate, *, teachers=None, layer_policy="average_all"):
        """Read every entry; unreadable entries are skipped with one
        :class:`ManifestWarning` reporting how many were dropped.

        ``teachers`` maps a manifest column (``"lm"`` or ``"sm"``) to the modality its
        cache must hold.
        """
        utterances, skipped = [], []
        for entry in self.entries:
            try:
                clip = read_wav(self.resolve(entry.wav_path), sample_rate)
                cached = {}
                for column, modality in (teachers or {}).items():
                    path = entry.lm_path if column == "lm" else entry.sm_path
                    if path is None:
                        raise DataError("Entry {} has no {} teacher cache"
                                        .format(entry.wav_path, column.upper()))
                    cached[modality] = load_teacher(self.resolve(path), modality, layer_policy)
            except (OSError, DataError, ConfigurationError) as e:
                skipped.append((entry, e))
                continue
            utterances.append(Utterance(clip, entry.transcript or "", cached))
        if skipped:
            warnings.warn("{} of {} manifest entries could not be read and were skipped "
                          "(first: {})".format(len(skipped), len(self.entries), skipped[0][1]),
                          ManifestWarning, stacklevel=2)
        if not utterances:
            raise DataError("Manifest has no readable entries")
        return utterances


VOCABULARY = (
    "red", "green", "blue", "one", "two", "three", "four", "five", "stop", "go",
    "left", "right", "yes", "no", "up", "down", "on", "off", "cat", "dog",
)


def _word_voice(word):
    # Pitch and formants depend only on the word.
    rng = np.random.default_rng([ord(c) for c in word])
    f0 = rng.uniform(100.0, 220.0)
    formants = (rng.uniform(300.0, 900.0), rng.uniform(900.0, 2500.0))
    return f0, formants


def synthesize_words(words, n_samples, sample_rate):
    """Harmonic tones shaped by two formant resonances, one segment per word."""
    t = np.arange(n_samples) / sample_rate
    signal = np.zeros(n_samples)
    bounds = np.linspace(0, n_samples, len(words) + 1).astype(int)
    for word, start, stop in zip(words, bounds[:-1], bounds[1:]):
        f0, (f1, f2) = _word_voice(word)
        segment = np.zeros(stop - start)
        for harmonic in range(1, int(4000.0 // f0) + 1):
            frequency = harmonic * f0
            gain = np.exp(-((frequency - f1) / 150.0) ** 2) + \
                0.5 * np.exp(-((frequency - f2) / 250.0) ** 2) + 0.02
            segment += gain * np.sin(2 * np.pi * frequency * t[start:stop])
        signal[start:stop] = segment * np.hanning(stop - start)
    peak = np.abs(signal).max()
    if peak > 0:
        signal *= 0.5 / peak
    return signal.astype(np.float32)


def generate_toy_corpus(directory, *, n_clips=16, seconds=3.0, sample_rate=16000, seed=42,
                        teacher=None, hop_length=320):
    """Write a deterministic corpus of synthetic utterances with transcripts and teacher
    caches, and return its manifest.

    Every clip says 3 to 6 words from :data:`VOCABULARY`. Teacher caches hold layered
    contextual (LM) and semantic (SM) states from ``teacher`` (a :class:`SyntheticTeacher`
    seeded with ``seed`` if omitted).
    """
    if not isinstance(n_clips, int) or n_clips < 1:
        raise DomainError("Clip count must be a positive integer, not {!r}".format(n_clips))
    if teacher is None:
        teacher = SyntheticTeacher(seed=seed, sample_rate=sample_rate, hop_length=hop_length)
    os.makedirs(directory, exist_ok=True)
    rng = np.random.default_rng(seed)
    n_samples = int(round(seconds * sample_rate))
    entries = []
    for index in range(n_clips):
        words = [VOCABULARY[i] for i in rng.integers(len(VOCABULARY), size=rng.integers(3, 7))]
        transcript = " ".join(words)
        samples = synthesize_words(words, n_samples, sample_rate)
        name = "clip_{:03d}".format(index)
        clip = AudioClip(torch.from_numpy(samples), sample_rate)
        write_wav(os.path.join(directory, name + ".wav"), clip)
        save_teacher(os.path.join(directory, name + ".lm.dmte"),
                     teacher.contextual_layers(samples, transcript), "contextual")
        save_teacher(os.path.join(directory, name + ".sm.dmte"),
                     teacher.semantic_layers(samples), "semantic")
        with open(os.path.join(directory, name + ".txt"), "w", encoding="utf-8") as f:
            f.write(transcript + "\n")
        entries.append(ManifestEntry(name + ".wav", transcript,
                                     name + ".lm.dmte", name + ".sm.dmte"))
    manifest = Manifest(entries, os.path.abspath(directory))
    manifest.write(os.path.join(directory, "manifest.tsv"))
    return manifest
