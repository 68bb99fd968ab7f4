from .wer import (WIL_VARIANTS, normalize_text, AlignmentCounts, align, wer, wil,
                  corpus_counts, read_transcripts)
from .aso import (LABELS, ScoreSample, violation_ratio, aso_epsilon, aso_label, read_scores,
                  DominanceTable, dominance_matrix)
from .report import render_report, render_wer_report, write_table


__all__ = [
    "WIL_VARIANTS", "normalize_text", "AlignmentCounts", "align", "wer", "wil",
    "corpus_counts", "read_transcripts",
    "LABELS", "ScoreSample", "violation_ratio", "aso_epsilon", "aso_label", "read_scores",
    "DominanceTable", "dominance_matrix",
    "render_report", "render_wer_report", "write_table",
]
