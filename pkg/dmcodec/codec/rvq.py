import warnings

import torch
from torch import nn

from ..errors import ConfigurationError, DomainError
from ..utils import log2_int


__all__ = [
    "CodebookWarning", "Codebook", "QuantizedCode", "ResidualVectorQuantizer",
    "nearest", "straight_through", "commitment_loss", "bitrate",
]


class CodebookWarning(UserWarning):
    pass


def nearest(x, embeddings, *, chunk_elements=1 << 22):
    """Index of the nearest codeword for every row of ``x``.

    Squared Euclidean distance, computed elementwise (not through the expanded inner
    product) so that ties are exact; ties resolve to the lowest index.
    """
    n_codes, dim = embeddings.shape
    chunk = max(1, chunk_elements // max(1, n_codes * dim))
    indices = []
    for start in range(0, x.shape[0], chunk):
        part = x[start:start + chunk]
        distances = (part[:, None, :] - embeddings[None, :, :]).pow(2).sum(-1)
        indices.append(distances.argmin(dim=1))
    if not indices:
        return torch.zeros(0, dtype=torch.long, device=x.device)
    return torch.cat(indices)


def straight_through(latents, quantized):
    """Forward value ``quantized``, gradient with respect to ``latents`` the identity."""
    if latents.shape != quantized.shape:
        raise DomainError("Latents of shape {} cannot pass through quantized vectors of shape {}"
                          .format(tuple(latents.shape), tuple(quantized.shape)))
    # latents - latents.detach() is exactly zero, so the value is quantized bit for bit.
    return quantized.detach() + (latents - latents.detach())


def commitment_loss(residuals, codewords):
    """Sum over layers of the squared distance between each layer's residual and its
    selected codeword, averaged over frames.

    Both arguments are shaped ``(layers, ..., D')``. Codewords receive no gradient.
    """
    if residuals.shape != codewords.shape:
        raise DomainError("Residuals of shape {} do not match codewords of shape {}"
                          .format(tuple(residuals.shape), tuple(codewords.shape)))
    per_frame = (residuals - codewords.detach()).pow(2).sum(-1).sum(0)
    return per_frame.mean()


def bitrate(cfg, n_active_layers):
    """Bitrate in kbps of ``n_active_layers`` codebooks.

    ``layers * log2(codebook_size) * frame_rate / 1000``: one layer of 1024 entries at
    50 Hz is 0.5 kbps.
    """
    if not isinstance(n_active_layers, int) or not 1 <= n_active_layers <= cfg.n_quantizers:
        raise ConfigurationError("Active layer count must be an integer in 1..{}, not {!r}"
                                 .format(cfg.n_quantizers, n_active_layers))
    try:
        bits = log2_int(cfg.codebook_size)
    except ValueError:
        raise ConfigurationError("Codebook size {} is not a power of 2"
                                 .format(cfg.codebook_size)) from None
    return n_active_layers * bits * cfg.frame_rate / 1000


class Codebook(nn.Module):
    """One residual layer with EMA-maintained codewords.

    Parameters
    ----------
    size : int
        Number of codewords.
    dim : int
        Codeword dimension.
    decay : float
        EMA decay, in (0, 1).
    epsilon : float
        Floor of the cluster size in the codeword normalization.
    dead_threshold : float
        Entries whose EMA cluster size falls below this value are replaced by vectors
        sampled from the current batch. New and replaced entries start at a cluster size
        of 1, so an unassigned entry survives about 70 steps at the default decay.

    Attributes
    ----------
    embeddings : Tensor, (size, dim)
    ema_cluster_size : Tensor, (size,)
    ema_embed_sum : Tensor, (size, dim)
    """
    def __init__(self, size, dim, *, decay=0.99, epsilon=1e-5, dead_threshold=0.5):
        super().__init__()
        if not 0.0 < decay < 1.0:
            raise ValueError("Decay must be in (0, 1), not {!r}".format(decay))
        self.size           = size
        self.dim            = dim
        self.decay          = decay
        self.epsilon        = epsilon
        self.dead_threshold = dead_threshold
        self.register_buffer("embeddings", torch.zeros(size, dim))
        self.register_buffer("ema_cluster_size", torch.zeros(size))
        self.register_buffer("ema_embed_sum", torch.zeros(size, dim))
        self.register_buffer("initialized", torch.tensor(False))

    def init_from_batch(self, vectors, generator=None):
        vectors = vectors.detach().reshape(-1, self.dim)
        if vectors.shape[0] == 0:
            raise DomainError("Cannot initialize a codebook from an empty batch")
        picks = torch.randint(vectors.shape[0], (self.size,), generator=generator)
        self.embeddings.copy_(vectors[picks])
        self.ema_cluster_size.fill_(1.0)
        self.ema_embed_sum.copy_(self.embeddings)
        self.initialized.fill_(True)

    def assign(self, vectors):
        return nearest(vectors, self.embeddings)

    @torch.no_grad()
    def ema_update(self, vectors, assignments, generator=None):
        """Fold a batch into the EMA statistics and recompute the codewords.

        Returns the number of entries replaced because they fell below the dead threshold.
        """
        vectors = vectors.detach().reshape(-1, self.dim).to(self.embeddings.dtype)
        assignments = assignments.reshape(-1)
        if vectors.shape[0] == 0:
            warnings.warn("Codebook update skipped: the batch is empty",
                          CodebookWarning, stacklevel=2)
            return 0
        if assignments.shape[0] != vectors.shape[0]:
            raise DomainError("{} assignments given for {} vectors"
                              .format(assignments.shape[0], vectors.shape[0]))

        counts = torch.bincount(assignments, minlength=self.size).to(vectors.dtype)
        sums   = torch.zeros_like(self.ema_embed_sum).index_add_(0, assignments, vectors)
        self.ema_cluster_size.mul_(self.decay).add_(counts, alpha=1 - self.decay)
        self.ema_embed_sum.mul_(self.decay).add_(sums, alpha=1 - self.decay)
        denominator = self.ema_cluster_size.clamp(min=self.epsilon)
        self.embeddings.copy_(self.ema_embed_sum / denominator[:, None])

        dead = self.ema_cluster_size < self.dead_threshold
        n_dead = int(dead.sum())
        if n_dead:
            picks = torch.randint(vectors.shape[0], (n_dead,), generator=generator)
            self.embeddings[dead] = vectors[picks]
            self.ema_cluster_size[dead] = 1.0
            self.ema_embed_sum[dead] = vectors[picks]
        return n_dead


class QuantizedCode:
    """Discrete codes of one clip or a batch of clips.

    The layer axis comes first: ``indices`` is ``(layers, ..., T')`` and
    ``per_layer_vectors`` and ``residuals`` are ``(layers, ..., T', D')``.

    Attributes
    ----------
    indices : LongTensor
        Selected entry per layer and frame.
    per_layer_vectors : Tensor or None
        Selected codeword per layer and frame. ``None`` for codes not yet looked up in
        a codebook (e.g. freshly synthesized ones).
    residuals : Tensor or None
        The residual each layer quantized; carries the encoder's gradient.
    """
    def __init__(self, indices, per_layer_vectors=None, residuals=None):
        self.indices           = indices
        self.per_layer_vectors = per_layer_vectors
        self.residuals         = residuals

    @property
    def n_active_layers(self):
        return self.indices.shape[0]

    @property
    def n_frames(self):
        return self.indices.shape[-1]

    @property
    def quantized(self):
        """Sum of the selected codewords over active layers."""
        return self.per_layer_vectors.sum(0)

    def layer_through(self, layer):
        """Codeword of ``layer`` (0-based) with a straight-through path to its residual."""
        return straight_through(self.residuals[layer], self.per_layer_vectors[layer])

    def __repr__(self):
        return "(codes {} layers x {} frames)".format(self.n_active_layers, self.n_frames)


class ResidualVectorQuantizer(nn.Module):
    """Cascade of :class:`Codebook` layers, each quantizing the previous layer's residual."""
    def __init__(self, cfg, *, decay=0.99, epsilon=1e-5, dead_threshold=0.5):
        super().__init__()
        self.cfg = cfg
        self.codebooks = nn.ModuleList([
            Codebook(cfg.codebook_size, cfg.latent_dim, decay=decay, epsilon=epsilon,
                     dead_threshold=dead_threshold)
            for _ in range(cfg.n_quantizers)
        ])

    @property
    def initialized(self):
        return all(bool(codebook.initialized) for codebook in self.codebooks)

    def _check_layers(self, n_active_layers):
        if n_active_layers is None:
            return len(self.codebooks)
        if not isinstance(n_active_layers, int) or \
                not 1 <= n_active_layers <= len(self.codebooks):
            raise DomainError("Active layer count must be an integer in 1..{}, not {!r}"
                              .format(len(self.codebooks), n_active_layers))
        return n_active_layers

    def quantize(self, latents, n_active_layers=None, *, generator=None):
        """Quantize ``(..., T', D')`` latents with the first ``n_active_layers`` codebooks.

        Codebooks that were never initialized are first filled from the residuals they
        receive, sampled with ``generator``.
        """
        n_active_layers = self._check_layers(n_active_layers)
        if latents.shape[-1] != self.cfg.latent_dim:
            raise DomainError("Latents have dimension {}, expected {}"
                              .format(latents.shape[-1], self.cfg.latent_dim))
        if torch.isnan(latents).any():
            raise DomainError("Latents contain NaN")

        frame_shape = latents.shape[:-1]
        residual = latents
        indices, vectors, residuals = [], [], []
        for codebook in self.codebooks[:n_active_layers]:
            flat = residual.reshape(-1, self.cfg.latent_dim)
            if not codebook.initialized:
                with torch.no_grad():
                    codebook.init_from_batch(flat, generator)
            index = codebook.assign(flat.detach())
            codeword = codebook.embeddings[index].to(latents.dtype)
            indices.append(index.reshape(frame_shape))
            vectors.append(codeword.reshape(latents.shape))
            residuals.append(residual)
            residual = residual - vectors[-1]
        return QuantizedCode(torch.stack(indices), torch.stack(vectors), torch.stack(residuals))

    def lookup(self, indices):
        """Codewords for ``(layers, ..., T')`` indices."""
        if indices.shape[0] > len(self.codebooks):
            raise DomainError("Codes have {} layers, but the quantizer has {}"
                              .format(indices.shape[0], len(self.codebooks)))
        if indices.numel() and (indices.min() < 0 or indices.max() >= self.cfg.codebook_size):
            raise DomainError("Code indices must be in 0..{}".format(self.cfg.codebook_size - 1))
        vectors = torch.stack([codebook.embeddings[layer_indices]
                               for codebook, layer_indices in zip(self.codebooks, indices)])
        return QuantizedCode(indices, vectors)

    @torch.no_grad()
    def ema_update(self, code, generator=None):
        """Update every active codebook from the residuals and assignments in ``code``.

        Returns the number of replaced entries per layer.
        """
        replaced = []
        for codebook, residual, index in zip(self.codebooks, code.residuals, code.indices):
            replaced.append(codebook.ema_update(residual, index, generator))
        return replaced

    def perplexity(self, code):
        """Codebook usage perplexity per active layer."""
        result = []
        for index in code.indices:
            counts = torch.bincount(index.reshape(-1), minlength=self.cfg.codebook_size)
            probs = counts.double() / max(1, index.numel())
            entropy = -(probs[probs > 0] * probs[probs > 0].log()).sum()
            result.append(float(entropy.exp()))
        return result
