import re
import warnings

import torch
from torch import nn
from torch.nn import functional as F

from ..errors import ConfigurationError, DomainError
from .teacher import LAYER_POLICIES


__all__ = [
    "TeacherWarning", "DistillTarget", "Projection",
    "align", "distill_loss", "combined_loss", "select_rvq", "distill_objective",
]


class TeacherWarning(UserWarning):
    pass


_selection_re = re.compile(r"^RVQ-(\d+)(?::(\d+))?$")


def _parse_selection(selection):
    match = _selection_re.match(selection) if isinstance(selection, str) else None
    if match is None:
        raise ConfigurationError("RVQ selection must look like 'RVQ-1' or 'RVQ-1:8', not {!r}"
                                 .format(selection))
    first = int(match.group(1))
    last  = int(match.group(2) or first)
    if not 1 <= first <= last:
        raise ConfigurationError("RVQ selection {!r} does not name a non-empty layer range"
                                 .format(selection))
    return first, last


class DistillTarget:
    """What is distilled, from which RVQ layers, and how the losses are mixed.

    Parameters
    ----------
    mode : str
        ``"none"`` (baseline codec), ``"lm"`` (contextual token vectors), ``"sm"`` (semantic
        frames), ``"lm+sm"`` (both, mixed by :func:`combined_loss`), ``"cls"`` (the [CLS]
        summary vector repeated over time) or ``"word"`` (static word vectors).
    lm_selection : str
        RVQ layers compared with the LM teacher. ``"RVQ-1"`` is the first layer,
        ``"RVQ-1:8"`` the mean of layers 1 to 8, ``"RVQ-8"`` the eighth layer.
    sm_selection : str
        RVQ layers compared with the SM teacher.
    axis : str
        ``"feature_dim"`` takes the cosine of each feature column across time;
        ``"time"`` takes the cosine of each frame across features.
    w_lm, w_sm : float
        Mixing weights of the LM and SM losses in ``"lm+sm"`` mode.
    layer_policy : str
        Reduction applied to layered teacher dumps.
    """
    modes = ("none", "lm", "sm", "lm+sm", "cls", "word")
    axes  = ("feature_dim", "time")

    def __init__(self, *, mode="lm+sm", lm_selection="RVQ-1", sm_selection="RVQ-1:8",
                 axis="feature_dim", w_lm=1.0, w_sm=1.0, layer_policy="average_all"):
        if mode not in self.modes:
            raise ConfigurationError("Distillation mode must be one of {}, not {!r}"
                                     .format(", ".join(self.modes), mode))
        if axis not in self.axes:
            raise ConfigurationError("Distillation axis must be one of {}, not {!r}"
                                     .format(", ".join(self.axes), axis))
        if layer_policy not in LAYER_POLICIES:
            raise ConfigurationError("Layer policy must be one of {}, not {!r}"
                                     .format(", ".join(LAYER_POLICIES), layer_policy))
        _parse_selection(lm_selection)
        _parse_selection(sm_selection)
        for name, weight in (("w_lm", w_lm), ("w_sm", w_sm)):
            if not isinstance(weight, (int, float)) or weight < 0:
                raise ConfigurationError("Distillation weight {} must be a non-negative number, "
                                         "not {!r}".format(name, weight))
        if mode == "lm+sm" and w_lm == 0 and w_sm == 0:
            raise ConfigurationError("At least one of the LM and SM distillation weights must "
                                     "be positive")
        self.mode         = mode
        self.lm_selection = lm_selection
        self.sm_selection = sm_selection
        self.axis         = axis
        self.w_lm         = float(w_lm)
        self.w_sm         = float(w_sm)
        self.layer_policy = layer_policy

    @property
    def enabled(self):
        return self.mode != "none"

    @property
    def teachers(self):
        """Teacher modality consumed by each active branch, keyed ``"lm"`` or ``"sm"``."""
        return {
            "none":  {},
            "lm":    {"lm": "contextual"},
            "sm":    {"sm": "semantic"},
            "lm+sm": {"lm": "contextual", "sm": "semantic"},
            "cls":   {"lm": "cls"},
            "word":  {"lm": "static_word"},
        }[self.mode]

    def __repr__(self):
        return "(distill {} lm={} sm={} axis={} w=({}, {}) {})".format(
            self.mode, self.lm_selection, self.sm_selection, self.axis, self.w_lm, self.w_sm,
            self.layer_policy)


class Projection(nn.Module):
    """Learnable linear map ``Q' = W Q`` from codec latents to a teacher's feature space."""
    def __init__(self, latent_dim, teacher_dim):
        super().__init__()
        for name, value in (("Latent dimension", latent_dim), ("Teacher dimension", teacher_dim)):
            if not isinstance(value, int) or value < 1:
                raise TypeError("{} must be a positive integer, not {!r}".format(name, value))
        self.linear = nn.Linear(latent_dim, teacher_dim, bias=False)

    @property
    def weight(self):
        """``W``, shaped ``(D_teacher, D')``."""
        return self.linear.weight

    def forward(self, q):
        return self.linear(q)


def align(teacher, t_prime):
    """Teacher vectors laid out over ``t_prime`` frames.

    A [CLS] vector is repeated on every frame. Otherwise missing rows are zero and
    surplus rows are dropped with a :class:`TeacherWarning`.
    """
    if not isinstance(t_prime, int) or t_prime < 1:
        raise DomainError("Frame count must be a positive integer, not {!r}".format(t_prime))
    vectors = teacher.vectors
    if teacher.modality == "cls":
        return vectors[0].expand(t_prime, -1).clone()
    n = vectors.shape[0]
    if n > t_prime:
        warnings.warn("Teacher holds {} vectors for {} frames; the last {} are dropped"
                      .format(n, t_prime, n - t_prime), TeacherWarning, stacklevel=2)
        return vectors[:t_prime].clone()
    return F.pad(vectors, (0, 0, 0, t_prime - n))


def distill_loss(q_proj, target, axis="feature_dim", *, epsilon=1e-8):
    """``-mean log sigmoid(cos)`` over the columns (``"feature_dim"``) or rows
    (``"time"``) of ``(..., T', D)`` arrays; leading batch axes are averaged.

    The cosine denominator is floored at ``epsilon``, so an all-zero column has cosine 0.
    """
    if q_proj.shape != target.shape:
        raise DomainError("Projected codes of shape {} do not match teacher targets of shape {}"
                          .format(tuple(q_proj.shape), tuple(target.shape)))
    if q_proj.dim() < 2 or q_proj.shape[-1] < 1:
        raise DomainError("Distillation inputs must be shaped (..., T', D) with D >= 1, not {}"
                          .format(tuple(q_proj.shape)))
    if axis == "feature_dim":
        dim = -2
    elif axis == "time":
        dim = -1
    else:
        raise ConfigurationError("Distillation axis must be feature_dim or time, not {!r}"
                                 .format(axis))
    target = target.to(q_proj.dtype)
    dot = (q_proj * target).sum(dim)
    norms = torch.linalg.vector_norm(q_proj, dim=dim) * torch.linalg.vector_norm(target, dim=dim)
    cosine = dot / norms.clamp(min=epsilon)
    return -F.logsigmoid(cosine).mean()


def combined_loss(l_lm, l_sm, w_lm=1.0, w_sm=1.0):
    """``(w_lm * l_lm + w_sm * l_sm) / 2``."""
    if w_lm < 0 or w_sm < 0:
        raise ConfigurationError("Distillation weights must be non-negative, not ({!r}, {!r})"
                                 .format(w_lm, w_sm))
    if w_lm == 0 and w_sm == 0:
        raise ConfigurationError("At least one of the LM and SM distillation weights must "
                                 "be positive")
    return 0.5 * (w_lm * l_lm + w_sm * l_sm)


def select_rvq(code, selection):
    """Straight-through RVQ output named by ``selection``, shaped like one layer of
    ``code.per_layer_vectors``.

    A layer range is averaged.
    """
    first, last = _parse_selection(selection)
    if last > code.n_active_layers:
        raise DomainError("RVQ selection {!r} needs {} layers, but only {} are active"
                          .format(selection, last, code.n_active_layers))
    if code.residuals is None:
        raise DomainError("RVQ selection requires codes produced by quantization")
    layers = [code.layer_through(index) for index in range(first - 1, last)]
    if len(layers) == 1:
        return layers[0]
    return torch.stack(layers).mean(0)


def distill_objective(code, target, projections, *, lm=None, sm=None):
    """Distillation loss of a batch.

    Parameters
    ----------
    code : QuantizedCode
        Codes of a ``(batch, T', D')`` latent batch.
    target : DistillTarget
    projections : mapping
        :class:`Projection` per active branch (``"lm"``, ``"sm"``).
    lm, sm : Tensor, (batch, T', D_teacher)
        Aligned teacher targets of the active branches.

    Returns
    -------
    (loss, parts)
        The scalar loss and the per-branch losses it was mixed from.
    """
    parts = {}
    for branch, selection, teacher in (("lm", target.lm_selection, lm),
                                       ("sm", target.sm_selection, sm)):
        if branch not in target.teachers:
            continue
        if teacher is None:
            raise DomainError("Distillation mode {!r} needs {} teacher targets"
                              .format(target.mode, branch.upper()))
        q = projections[branch](select_rvq(code, selection))
        parts[branch] = distill_loss(q, teacher, target.axis)
    if not parts:
        zero = code.indices.new_zeros((), dtype=torch.get_default_dtype())
        if code.per_layer_vectors is not None:
            zero = code.per_layer_vectors.new_zeros(())
        return zero, parts
    if len(parts) == 2:
        return combined_loss(parts["lm"], parts["sm"], target.w_lm, target.w_sm), parts
    return next(iter(parts.values())), parts
