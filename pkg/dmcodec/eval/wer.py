import re
import string

from ..errors import DataError, DomainError


__all__ = [
    "WIL_VARIANTS", "normalize_text", "AlignmentCounts", "align", "wer", "wil",
    "corpus_counts", "read_transcripts",
]


WIL_VARIANTS = ("simple", "standard")

_punctuation = re.compile("[{}]".format(re.escape(string.punctuation)))


def normalize_text(text):
    """Lowercase ``text``, strip punctuation and collapse whitespace."""
    text = _punctuation.sub("", text.lower())
    return " ".join(text.split())


class AlignmentCounts:
    """Edit operation counts of one word alignment.

    Attributes
    ----------
    N : int
        Reference words; ``C + S + D``.
    C : int
        Correct words.
    S : int
        Substitutions.
    D : int
        Deletions.
    I : int
        Insertions.
    P : int
        Hypothesis words; ``C + S + I``.
    """
    def __init__(self, *, C=0, S=0, D=0, I=0):
        for name, value in (("C", C), ("S", S), ("D", D), ("I", I)):
            if not isinstance(value, int) or value < 0:
                raise TypeError("{} must be a non-negative integer, not {!r}"
                                .format(name, value))
        self.C = C
        self.S = S
        self.D = D
        self.I = I

    @property
    def N(self):
        return self.C + self.S + self.D

    @property
    def P(self):
        return self.C + self.S + self.I

    @property
    def errors(self):
        return self.S + self.D + self.I

    def __add__(self, other):
        if not isinstance(other, AlignmentCounts):
            return NotImplemented
        return AlignmentCounts(C=self.C + other.C, S=self.S + other.S,
                               D=self.D + other.D, I=self.I + other.I)

    def __eq__(self, other):
        if not isinstance(other, AlignmentCounts):
            return NotImplemented
        return (self.C, self.S, self.D, self.I) == (other.C, other.S, other.D, other.I)

    def __repr__(self):
        return "(counts N={} C={} S={} D={} I={})".format(self.N, self.C, self.S, self.D,
                                                           self.I)


def _words(text):
    if isinstance(text, str):
        return normalize_text(text).split()
    return list(text)


def align(reference, hypothesis):
    """Minimal-edit alignment of two word sequences with unit costs.

    Strings are normalized and split on whitespace; lists are taken as given. Among
    alignments of equal cost, the one with the fewest insertions and deletions wins, so a
    substitution is always preferred over a deletion followed by an insertion.
    """
    ref, hyp = _words(reference), _words(hypothesis)

    # Each cell holds (edits, insertions + deletions, C, S, D, I).
    prev = [(j, j, 0, 0, 0, j) for j in range(len(hyp) + 1)]
    for i in range(1, len(ref) + 1):
        row = [(i, i, 0, 0, i, 0)]
        for j in range(1, len(hyp) + 1):
            e, g, c, s, d, n = prev[j - 1]
            if ref[i - 1] == hyp[j - 1]:
                best = (e, g, c + 1, s, d, n)
            else:
                best = (e + 1, g, c, s + 1, d, n)
            e, g, c, s, d, n = prev[j]
            best = min(best, (e + 1, g + 1, c, s, d + 1, n), key=lambda cell: cell[:2])
            e, g, c, s, d, n = row[j - 1]
            best = min(best, (e + 1, g + 1, c, s, d, n + 1), key=lambda cell: cell[:2])
            row.append(best)
        prev = row

    _, _, c, s, d, n = prev[-1]
    return AlignmentCounts(C=c, S=s, D=d, I=n)


def wer(counts):
    """Word error rate ``(S + D + I) / N``."""
    if counts.N == 0:
        raise DomainError("Word error rate is undefined for an empty reference")
    return counts.errors / counts.N


def wil(counts, variant="simple"):
    """Word information lost.

    The ``"simple"`` variant is ``(S + D) / N``; the ``"standard"`` variant is
    ``1 - (C / N) * (C / P)``.
    """
    if variant not in WIL_VARIANTS:
        raise DomainError("WIL variant must be one of {}, not {!r}"
                          .format(", ".join(WIL_VARIANTS), variant))
    if counts.N == 0:
        raise DomainError("Word information lost is undefined for an empty reference")
    if variant == "simple":
        return (counts.S + counts.D) / counts.N
    if counts.P == 0:
        return 1.0
    return 1.0 - (counts.C / counts.N) * (counts.C / counts.P)


def corpus_counts(pairs):
    """Sum of the alignment counts of ``(reference, hypothesis)`` pairs.

    Corpus-level rates divide the total errors by the total number of reference words.
    """
    total = AlignmentCounts()
    for reference, hypothesis in pairs:
        total = total + align(reference, hypothesis)
    return total


def read_transcripts(file):
    """Read ``utterance_id<TAB>reference<TAB>hypothesis`` lines.

    Returns
    -------
    list of (str, str, str)
    """
    rows = []
    with open(file, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            fields = line.split("\t")
            if len(fields) == 2:
                fields.append("")
            if len(fields) != 3:
                raise DataError("Transcript line {}:{} has {} fields, expected 3"
                                .format(file, lineno, len(fields)))
            rows.append(tuple(fields))
    if not rows:
        raise DataError("Transcript file {} has no entries".format(file))
    return rows
