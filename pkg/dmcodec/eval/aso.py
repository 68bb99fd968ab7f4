import csv
import os
from collections import OrderedDict

import numpy as np
from deepsig import aso

from ..errors import DataError, DomainError


__all__ = [
    "LABELS", "ScoreSample", "violation_ratio", "aso_epsilon", "aso_label", "read_scores",
    "DominanceTable", "dominance_matrix",
]


LABELS = ("dominant", "significantly_better", "not_significant")


class ScoreSample:
    """Paired per-utterance scores of two systems on one metric.

    Parameters
    ----------
    system_a, system_b : array_like
        Scores of equal length, at least 2.
    metric_name : str
    higher_is_better : bool
        ``False`` for error rates; scores are negated before testing.
    """
    def __init__(self, system_a, system_b, metric_name="score", *, higher_is_better=True):
        system_a = np.asarray(system_a, dtype=np.float64).reshape(-1)
        system_b = np.asarray(system_b, dtype=np.float64).reshape(-1)
        if len(system_a) < 2 or len(system_b) < 2:
            raise DomainError("Significance testing needs at least 2 scores per system, "
                              "got {} and {}".format(len(system_a), len(system_b)))
        if len(system_a) != len(system_b):
            raise DomainError("Paired scores must have equal lengths, got {} and {}"
                              .format(len(system_a), len(system_b)))
        if not (np.isfinite(system_a).all() and np.isfinite(system_b).all()):
            raise DomainError("Scores must be finite")
        self.system_a         = system_a
        self.system_b         = system_b
        self.metric_name      = str(metric_name)
        self.higher_is_better = bool(higher_is_better)

    def __len__(self):
        return len(self.system_a)

    def oriented(self):
        """Both score arrays with larger meaning better."""
        if self.higher_is_better:
            return self.system_a, self.system_b
        return -self.system_a, -self.system_b

    def swapped(self):
        return ScoreSample(self.system_b, self.system_a, self.metric_name,
                           higher_is_better=self.higher_is_better)


def _quantiles(values, grid):
    # Empirical inverse CDF: smallest x with F(x) >= t.
    values = np.sort(values)
    index  = np.ceil(grid * len(values)).astype(int) - 1
    return values[np.clip(index, 0, len(values) - 1)]


def violation_ratio(a, b, *, n_grid=1000):
    """Share of the squared distance between the quantile functions of ``a`` and ``b``
    lying where ``a`` is worse than ``b``.

    Zero means ``a`` stochastically dominates ``b``. When both quantile functions coincide
    there is no evidence either way and the ratio is 0.5.
    """
    grid = (np.arange(n_grid) + 0.5) / n_grid
    diff = _quantiles(np.asarray(a, dtype=np.float64), grid) - \
           _quantiles(np.asarray(b, dtype=np.float64), grid)
    total = np.sum(diff ** 2)
    if total == 0:
        return 0.5
    return float(np.sum(np.minimum(diff, 0) ** 2) / total)


def aso_epsilon(scores, alpha=0.05, n_bootstrap=1000, seed=0):
    """Almost stochastic order of ``scores.system_a`` over ``scores.system_b``.

    The minimal violation ratio ``epsilon_min`` of :func:`deepsig.aso` at confidence
    level ``1 - alpha``. Samples with identical quantile functions give 0.5.

    Returns
    -------
    float
        ``0`` when A dominates B; smaller values are stronger evidence that A is better.
    """
    if not isinstance(scores, ScoreSample):
        raise TypeError("Scores must be a ScoreSample, not {!r}".format(scores))
    if not (isinstance(alpha, float) and 0.0 < alpha < 1.0):
        raise DomainError("Alpha must be a float in (0, 1), not {!r}".format(alpha))
    if not isinstance(n_bootstrap, int) or n_bootstrap < 2:
        raise DomainError("Bootstrap count must be an integer of at least 2, not {!r}"
                          .format(n_bootstrap))

    a, b = scores.oriented()
    if np.array_equal(np.sort(a), np.sort(b)):
        return 0.5
    epsilon = aso(a, b, confidence_level=1.0 - alpha,
                  num_bootstrap_iterations=n_bootstrap, num_jobs=1, show_progress=False,
                  seed=seed)
    return float(np.clip(epsilon, 0.0, 1.0))


def aso_label(epsilon, threshold=0.5):
    """``dominant`` at zero, ``significantly_better`` below ``threshold``."""
    if epsilon == 0.0:
        return "dominant"
    if epsilon < threshold:
        return "significantly_better"
    return "not_significant"


def read_scores(file):
    """Read ``utterance_id,score`` rows into an ordered mapping.

    A header row whose score column is not a number is skipped.
    """
    scores = OrderedDict()
    with open(file, newline="", encoding="utf-8") as f:
        for lineno, row in enumerate(csv.reader(f), start=1):
            if not row or row[0].startswith("#"):
                continue
            if len(row) != 2:
                raise DataError("Score line {}:{} has {} fields, expected 2"
                                .format(file, lineno, len(row)))
            utterance_id, score = row[0].strip(), row[1].strip()
            try:
                score = float(score)
            except ValueError:
                if lineno == 1:
                    continue
                raise DataError("Score line {}:{} has a non-numeric score {!r}"
                                .format(file, lineno, score)) from None
            if utterance_id in scores:
                raise DataError("Score file {} lists utterance {!r} twice"
                                .format(file, utterance_id))
            scores[utterance_id] = score
    if not scores:
        raise DataError("Score file {} has no entries".format(file))
    return scores


class DominanceTable:
    """Pairwise significance of every system (row) over every other system (column).

    Attributes
    ----------
    names : list of str
    metric : str
    higher_is_better : bool
    alpha : float
    means, stds : list of float
        Per-system mean and sample standard deviation.
    epsilon : list of list
        ``epsilon[i][j]`` for row ``i`` against column ``j``; ``None`` on the diagonal.
    labels : list of list
        Matching :data:`LABELS` entries; ``None`` on the diagonal.
    """
    def __init__(self, names, metric, higher_is_better, alpha, means, stds, epsilon, labels):
        self.names            = list(names)
        self.metric           = metric
        self.higher_is_better = higher_is_better
        self.alpha            = alpha
        self.means            = list(means)
        self.stds             = list(stds)
        self.epsilon          = epsilon
        self.labels           = labels

    def label(self, row, column):
        return self.labels[self.names.index(row)][self.names.index(column)]


def _paired(systems):
    arrays = OrderedDict()
    ids = None
    for name, source in systems.items():
        if isinstance(source, (str, os.PathLike)):
            scores = read_scores(source)
            if ids is None:
                ids = list(scores)
            elif set(scores) != set(ids):
                raise DataError("Score file of system {!r} does not cover the same "
                                "utterances as the first system".format(name))
            arrays[name] = np.array([scores[utterance_id] for utterance_id in ids])
        else:
            arrays[name] = np.asarray(source, dtype=np.float64).reshape(-1)
    return arrays


def dominance_matrix(systems, metric="score", alpha=0.05, *, higher_is_better=True,
                     n_bootstrap=1000, seed=0):
    """Compare every pair of ``systems``, a mapping of names to score files or arrays.

    Score files are paired by utterance id.
    """
    if len(systems) < 2:
        raise DomainError("A dominance matrix needs at least 2 systems, got {}"
                          .format(len(systems)))
    arrays = _paired(systems)
    names  = list(arrays)

    epsilon = [[None] * len(names) for _ in names]
    labels  = [[None] * len(names) for _ in names]
    for i, row in enumerate(names):
        for j, column in enumerate(names):
            if i == j:
                continue
            sample = ScoreSample(arrays[row], arrays[column], metric,
                                 higher_is_better=higher_is_better)
            value = aso_epsilon(sample, alpha, n_bootstrap, seed)
            epsilon[i][j] = value
            labels[i][j]  = aso_label(value)

    means = [float(np.mean(arrays[name])) for name in names]
    stds  = [float(np.std(arrays[name], ddof=1)) for name in names]
    return DominanceTable(names, metric, higher_is_better, alpha, means, stds, epsilon, labels)
