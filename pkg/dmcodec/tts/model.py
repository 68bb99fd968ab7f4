import warnings

import torch
from torch import nn
from torch.nn import functional as F

from .._utils import parse_options, coerce_option, render_option
from ..codec.io import CheckpointArchive, Checkpoint
from ..codec.rvq import QuantizedCode
from ..errors import ConfigurationError, DataError, DomainError


__all__ = [
    "TruncationWarning", "TtsConfig", "TtsSample", "ARModel", "NARModel", "TtsModel",
    "ar_loss", "nar_loss", "synthesize",
]


class TruncationWarning(UserWarning):
    pass


class TtsConfig:
    """Shape of the codec language models.

    Parameters
    ----------
    n_layers, n_heads, width : int
        Transformer depth, attention heads and model width, shared by both models.
    dropout : float
    max_len : int
        Longest input sequence (phonemes, prompt and codes together).
    phoneme_vocab : int
        Number of phoneme ids, including the reserved unknown id.
    codebook_size : int
    n_quantizers : int
        Number of code layers ``K``; layer 1 is modelled autoregressively, layers 2 to
        ``K`` non-autoregressively.
    seed : int
        Seed for parameter initialization.
    """
    _fields = (
        ("n_layers",      int),
        ("n_heads",       int),
        ("width",         int),
        ("dropout",       float),
        ("max_len",       int),
        ("phoneme_vocab", int),
        ("codebook_size", int),
        ("n_quantizers",  int),
        ("seed",          int),
    )

    def __init__(self, *, n_layers=2, n_heads=4, width=128, dropout=0.0, max_len=512,
                 phoneme_vocab=29, codebook_size=1024, n_quantizers=8, seed=0):
        for name, value in (("Layer count", n_layers), ("Head count", n_heads),
                            ("Width", width), ("Maximum length", max_len),
                            ("Phoneme vocabulary size", phoneme_vocab),
                            ("Codebook size", codebook_size), ("Quantizer count", n_quantizers)):
            if not isinstance(value, int) or value < 1:
                raise TypeError("{} must be a positive integer, not {!r}".format(name, value))
        if width % n_heads:
            raise ConfigurationError("Width {} is not divisible by the head count {}"
                                     .format(width, n_heads))
        if not 0.0 <= dropout < 1.0:
            raise TypeError("Dropout must be in [0, 1), not {!r}".format(dropout))
        self.n_layers      = n_layers
        self.n_heads       = n_heads
        self.width         = width
        self.dropout       = float(dropout)
        self.max_len       = max_len
        self.phoneme_vocab = phoneme_vocab
        self.codebook_size = codebook_size
        self.n_quantizers  = n_quantizers
        self.seed          = seed

    @property
    def eos(self):
        """End token, the last AR output class."""
        return self.codebook_size

    @property
    def bos(self):
        return self.codebook_size + 1

    def render(self):
        return "".join("{} = {}\n".format(name, render_option(getattr(self, name)))
                       for name, _ in self._fields)

    @classmethod
    def parse(cls, text):
        types = dict(cls._fields)
        options = parse_options(text)
        for key in options:
            if key not in types:
                raise ConfigurationError("Unknown TTS option {!r}".format(key))
        return cls(**{key: coerce_option(key, value, types[key])
                      for key, value in options.items()})

    def __eq__(self, other):
        return isinstance(other, TtsConfig) and self.render() == other.render()

    def __repr__(self):
        return "(tts {}x{}h{} K={} V={})".format(self.n_layers, self.width, self.n_heads,
                                                  self.n_quantizers, self.codebook_size)


class TtsSample:
    """Training example of the codec language models.

    Parameters
    ----------
    phonemes : LongTensor, (L,)
    codes : LongTensor, (K, T')
        Target codes.
    prompt : LongTensor, (T'_p, K) or None
        Acoustic prompt, frames first.
    """
    def __init__(self, phonemes, codes, prompt=None):
        phonemes = torch.as_tensor(phonemes, dtype=torch.long)
        codes    = torch.as_tensor(codes, dtype=torch.long)
        if phonemes.dim() != 1 or phonemes.shape[0] == 0:
            raise DomainError("Phonemes must be a non-empty sequence, not of shape {}"
                              .format(tuple(phonemes.shape)))
        if codes.dim() != 2 or codes.shape[1] == 0:
            raise DomainError("Codes must be shaped (K, T') with T' >= 1, not {}"
                              .format(tuple(codes.shape)))
        if prompt is not None:
            prompt = torch.as_tensor(prompt, dtype=torch.long)
            if prompt.dim() != 2 or prompt.shape[1] != codes.shape[0]:
                raise DomainError("Prompt must be shaped (T'_p, {}), not {}"
                                  .format(codes.shape[0], tuple(prompt.shape)))
        self.phonemes = phonemes
        self.codes    = codes
        self.prompt   = prompt

    def check(self, cfg):
        if self.phonemes.max() >= cfg.phoneme_vocab or self.phonemes.min() < 0:
            raise DomainError("Phoneme ids must be in 0..{}".format(cfg.phoneme_vocab - 1))
        for name, codes in (("Code", self.codes), ("Prompt", self.prompt)):
            if codes is not None and codes.numel() and \
                    (codes.min() < 0 or codes.max() >= cfg.codebook_size):
                raise DomainError("{} indices must be in 0..{}"
                                  .format(name, cfg.codebook_size - 1))
        if self.codes.shape[0] != cfg.n_quantizers:
            raise DomainError("Codes have {} layers, expected {}"
                              .format(self.codes.shape[0], cfg.n_quantizers))


def _encoder(cfg):
    layer = nn.TransformerEncoderLayer(cfg.width, cfg.n_heads, 4 * cfg.width, cfg.dropout,
                                       batch_first=True)
    return nn.TransformerEncoder(layer, cfg.n_layers, enable_nested_tensor=False)


def _pad(sequences, value=0):
    return nn.utils.rnn.pad_sequence(sequences, batch_first=True, padding_value=value)


def _lengths_mask(lengths, size):
    # True at padded positions.
    return torch.arange(size)[None, :] >= torch.as_tensor(lengths)[:, None]


class ARModel(nn.Module):
    """Predicts first-layer codes one frame at a time from phonemes.

    The input is ``[phonemes, BOS, q_1 .. q_T]``; the outputs at ``BOS, q_1 .. q_T`` predict
    ``q_1 .. q_T, EOS``. Phonemes attend to each other freely; codes attend to every
    phoneme and to earlier codes only.
    """
    def __init__(self, cfg):
        super().__init__()
        self.cfg = cfg
        self.phoneme_embedding = nn.Embedding(cfg.phoneme_vocab, cfg.width)
        self.code_embedding    = nn.Embedding(cfg.codebook_size + 2, cfg.width)
        self.phoneme_position  = nn.Embedding(cfg.max_len, cfg.width)
        self.code_position     = nn.Embedding(cfg.max_len, cfg.width)
        self.encoder = _encoder(cfg)
        self.head    = nn.Linear(cfg.width, cfg.codebook_size + 1)
        nn.init.zeros_(self.head.weight)
        nn.init.zeros_(self.head.bias)

    def forward(self, phonemes, phoneme_lengths, codes, code_lengths):
        """Logits ``(batch, T_max + 1, codebook_size + 1)`` for padded ``(batch, L_max)``
        phonemes and ``(batch, T_max)`` first-layer codes.
        """
        batch, n_phonemes = phonemes.shape
        bos = codes.new_full((batch, 1), self.cfg.bos)
        codes = torch.cat([bos, codes], dim=1)
        n_codes = codes.shape[1]
        if n_phonemes + n_codes > self.cfg.max_len:
            raise DomainError("Sequence of {} phonemes and {} codes exceeds the context of {}"
                              .format(n_phonemes, n_codes - 1, self.cfg.max_len))
        x = torch.cat([
            self.phoneme_embedding(phonemes) +
                self.phoneme_position(torch.arange(n_phonemes))[None],
            self.code_embedding(codes) + self.code_position(torch.arange(n_codes))[None],
        ], dim=1)
        size = n_phonemes + n_codes
        blocked = torch.ones(size, size, dtype=torch.bool).triu(1)
        blocked[:n_phonemes, :n_phonemes] = False
        padding = torch.cat([_lengths_mask(phoneme_lengths, n_phonemes),
                             _lengths_mask([length + 1 for length in code_lengths], n_codes)],
                            dim=1)
        mask = torch.zeros(size, size, dtype=x.dtype).masked_fill(blocked, float("-inf"))
        padding = torch.zeros(padding.shape, dtype=x.dtype).masked_fill(padding, float("-inf"))
        y = self.encoder(x, mask=mask, src_key_padding_mask=padding)
        return self.head(y[:, n_phonemes:])


class NARModel(nn.Module):
    """Predicts every frame of code layer ``k`` at once from phonemes, the acoustic prompt
    and layers ``1 .. k - 1``.

    The input is ``[phonemes, prompt frames, target frames]``. A prompt frame embeds the
    sum of all its layers; a target frame embeds the sum of its layers below ``k`` plus a
    learned embedding of ``k``.
    """
    def __init__(self, cfg):
        super().__init__()
        self.cfg = cfg
        self.phoneme_embedding = nn.Embedding(cfg.phoneme_vocab, cfg.width)
        self.code_embeddings   = nn.ModuleList([nn.Embedding(cfg.codebook_size, cfg.width)
                                                for _ in range(cfg.n_quantizers)])
        self.stage_embedding   = nn.Embedding(cfg.n_quantizers + 1, cfg.width)
        self.phoneme_position  = nn.Embedding(cfg.max_len, cfg.width)
        self.prompt_position   = nn.Embedding(cfg.max_len, cfg.width)
        self.target_position   = nn.Embedding(cfg.max_len, cfg.width)
        self.encoder = _encoder(cfg)
        self.head    = nn.Linear(cfg.width, cfg.codebook_size)
        nn.init.zeros_(self.head.weight)
        nn.init.zeros_(self.head.bias)

    def _embed_layers(self, codes, n_layers):
        # codes: (batch, K', T) -> sum of the first n_layers layer embeddings
        x = 0
        for layer in range(n_layers):
            x = x + self.code_embeddings[layer](codes[:, layer])
        return x

    def forward(self, phonemes, phoneme_lengths, prompt, prompt_lengths, codes, code_lengths, k):
        """Logits ``(batch, T_max, codebook_size)`` for layer ``k`` (1-based).

        ``prompt`` is ``(batch, K, T_p,max)`` and ``codes`` ``(batch, K', T_max)`` with
        ``K' >= k - 1``; only layers below ``k`` of ``codes`` are read.
        """
        if not isinstance(k, int) or not 2 <= k <= self.cfg.n_quantizers:
            raise DomainError("Layer k must be an integer in 2..{}, not {!r}"
                              .format(self.cfg.n_quantizers, k))
        batch, n_phonemes = phonemes.shape
        n_prompt, n_codes = prompt.shape[-1], codes.shape[-1]
        size = n_phonemes + n_prompt + n_codes
        if size > self.cfg.max_len:
            raise DomainError("Sequence of {} phonemes, {} prompt frames and {} codes exceeds "
                              "the context of {}"
                              .format(n_phonemes, n_prompt, n_codes, self.cfg.max_len))
        parts = [self.phoneme_embedding(phonemes) +
                 self.phoneme_position(torch.arange(n_phonemes))[None]]
        if n_prompt:
            parts.append(self._embed_layers(prompt, self.cfg.n_quantizers) +
                         self.prompt_position(torch.arange(n_prompt))[None])
        stage = self.stage_embedding(torch.tensor(k))
        parts.append(self._embed_layers(codes, k - 1) + stage +
                     self.target_position(torch.arange(n_codes))[None])
        x = torch.cat(parts, dim=1)
        padding = torch.cat([_lengths_mask(phoneme_lengths, n_phonemes),
                             _lengths_mask(prompt_lengths, n_prompt),
                             _lengths_mask(code_lengths, n_codes)], dim=1)
        padding = torch.zeros(padding.shape, dtype=x.dtype).masked_fill(padding, float("-inf"))
        y = self.encoder(x, src_key_padding_mask=padding)
        return self.head(y[:, n_phonemes + n_prompt:])


class TtsModel(nn.Module):
    """The AR and NAR codec language models of one run."""
    def __init__(self, cfg):
        super().__init__()
        self.cfg = cfg
        with torch.random.fork_rng(devices=[]):
            torch.manual_seed(cfg.seed)
            self.ar  = ARModel(cfg)
            self.nar = NARModel(cfg)

    def save(self, file):
        archive = CheckpointArchive(config_text=self.cfg.render())
        archive.add_module("tts.", self)
        archive.archive(file)

    @classmethod
    def load(cls, file):
        checkpoint = Checkpoint(file)
        try:
            cfg = TtsConfig.parse(checkpoint.config_text)
        except (TypeError, ConfigurationError) as e:
            raise DataError("Checkpoint {} does not hold a TTS model: {}".format(file, e)) \
                from None
        model = cls(cfg)
        checkpoint.load_module("tts.", model)
        return model


def _collate(samples, cfg):
    for sample in samples:
        sample.check(cfg)
    phonemes = _pad([sample.phonemes for sample in samples])
    phoneme_lengths = [sample.phonemes.shape[0] for sample in samples]
    codes = _pad([sample.codes.T for sample in samples]).transpose(1, 2)
    code_lengths = [sample.codes.shape[1] for sample in samples]
    prompts = [sample.prompt if sample.prompt is not None
               else sample.codes.new_zeros((0, cfg.n_quantizers)) for sample in samples]
    prompt_lengths = [prompt.shape[0] for prompt in prompts]
    if max(prompt_lengths):
        prompt = _pad(prompts).transpose(1, 2)
    else:
        prompt = codes.new_zeros((len(samples), cfg.n_quantizers, 0))
    return phonemes, phoneme_lengths, codes, code_lengths, prompt, prompt_lengths


def _nll(logits, targets, lengths, reduction):
    padded = _lengths_mask(lengths, targets.shape[1])
    targets = targets.masked_fill(padded, -100)
    losses = F.cross_entropy(logits.transpose(1, 2), targets, ignore_index=-100,
                             reduction="none")
    if reduction == "none":
        return losses
    return losses.sum() / (~padded).sum()


def ar_loss(model, samples, *, reduction="mean"):
    """Mean negative log-likelihood of each first-layer code, and of the end token after
    the last one, under teacher forcing.

    With ``reduction="none"`` the ``(batch, T_max + 1)`` per-position losses are returned;
    padded positions are 0.
    """
    phonemes, phoneme_lengths, codes, code_lengths, _, _ = _collate(samples, model.cfg)
    first = codes[:, 0]
    logits = model.ar(phonemes, phoneme_lengths, first, code_lengths)
    targets = F.pad(first, (0, 1))
    targets[torch.arange(len(samples)), torch.as_tensor(code_lengths)] = model.cfg.eos
    return _nll(logits, targets, [length + 1 for length in code_lengths], reduction)


def nar_loss(model, samples, k, *, reduction="mean"):
    """Mean negative log-likelihood of the layer ``k`` (1-based, ``2 <= k <= K``) codes
    given the lower layers, the prompt and the phonemes.
    """
    if not isinstance(k, int) or not 2 <= k <= model.cfg.n_quantizers:
        raise DomainError("Layer k must be an integer in 2..{}, not {!r}"
                          .format(model.cfg.n_quantizers, k))
    phonemes, phoneme_lengths, codes, code_lengths, prompt, prompt_lengths = \
        _collate(samples, model.cfg)
    logits = model.nar(phonemes, phoneme_lengths, prompt, prompt_lengths, codes, code_lengths, k)
    return _nll(logits, codes[:, k - 1], code_lengths, reduction)


@torch.no_grad()
def synthesize(model, phonemes, prompt=None, *, max_frames=None, quantizer=None):
    """Greedy decoding of codes for ``phonemes``.

    The AR model emits first-layer codes until the end token or ``max_frames`` (by
    default, as many as fit the context); reaching the cap emits a
    :class:`TruncationWarning`. The NAR model then fills layers 2 to ``K``.

    Returns a :class:`QuantizedCode` of shape ``(K, T')``, with codewords looked up in
    ``quantizer`` if one is given.
    """
    cfg = model.cfg
    phonemes = torch.as_tensor(phonemes, dtype=torch.long)
    if phonemes.dim() != 1 or phonemes.shape[0] == 0:
        raise DomainError("Cannot synthesize speech from an empty phoneme sequence")
    if prompt is None:
        prompt = torch.zeros((0, cfg.n_quantizers), dtype=torch.long)
    prompt = torch.as_tensor(prompt, dtype=torch.long)
    n_phonemes = phonemes.shape[0]
    limit = cfg.max_len - n_phonemes - 1
    if prompt.shape[0]:
        # The NAR pass must fit the prompt as well.
        limit = min(limit, cfg.max_len - n_phonemes - prompt.shape[0])
    if max_frames is None:
        max_frames = limit
    if not isinstance(max_frames, int) or not 1 <= max_frames <= limit:
        raise DomainError("Frame cap must be an integer in 1..{}, not {!r}"
                          .format(limit, max_frames))
    model.eval()

    first = []
    ended = False
    while len(first) < max_frames:
        codes = torch.tensor([first], dtype=torch.long).reshape(1, len(first))
        logits = model.ar(phonemes[None], [n_phonemes], codes, [len(first)])[0, -1]
        if not first:
            logits[cfg.eos] = float("-inf")
        token = int(logits.argmax())
        if token == cfg.eos:
            ended = True
            break
        first.append(token)
    if not ended:
        warnings.warn("Synthesis stopped at the cap of {} frames without an end token"
                      .format(max_frames), TruncationWarning, stacklevel=2)

    n_frames = len(first)
    codes = torch.zeros((1, cfg.n_quantizers, n_frames), dtype=torch.long)
    codes[0, 0] = torch.tensor(first)
    for k in range(2, cfg.n_quantizers + 1):
        logits = model.nar(phonemes[None], [n_phonemes], prompt.T[None], [prompt.shape[0]],
                           codes, [n_frames], k)
        codes[0, k - 1] = logits[0].argmax(-1)
    if quantizer is not None:
        return quantizer.lookup(codes[0])
    return QuantizedCode(codes[0])
