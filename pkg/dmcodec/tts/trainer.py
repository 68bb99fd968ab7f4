import torch

from ..errors import DomainError, NonFiniteLossError
from .model import TtsSample, ar_loss, nar_loss


__all__ = ["prepare_samples", "TtsTrainer"]


@torch.no_grad()
def prepare_samples(utterances, codec, phonemizer, *, prompt_frames=0):
    """:class:`TtsSample` per utterance: phonemes of its transcript and the codes of its
    audio. The first ``prompt_frames`` frames of the codes double as the acoustic prompt.
    """
    samples = []
    for utterance in utterances:
        latents = codec.encode(utterance.clip)
        code = codec.quantize(latents)
        prompt = code.indices[:, :prompt_frames].T if prompt_frames else None
        samples.append(TtsSample(phonemizer.encode(utterance.transcript), code.indices, prompt))
    return samples


class TtsTrainer:
    """Adam updates of the AR and NAR models.

    Every :meth:`step` updates the AR model once and the NAR model once, on a layer ``k``
    drawn uniformly from ``2 .. K``.
    """
    def __init__(self, model, *, learning_rate=1e-3, seed=0):
        self.model = model
        self.ar_optimizer  = torch.optim.Adam(model.ar.parameters(), lr=learning_rate)
        self.nar_optimizer = torch.optim.Adam(model.nar.parameters(), lr=learning_rate)
        self.generator = torch.Generator().manual_seed(seed)
        self.n_steps = 0

    def sample_layer(self):
        return int(torch.randint(2, self.model.cfg.n_quantizers + 1, (),
                                 generator=self.generator))

    def step(self, samples):
        """Returns ``{"ar": loss, "nar": loss, "k": k}``; ``nar`` and ``k`` are ``None``
        for single-layer codes.
        """
        if not samples:
            raise DomainError("Cannot train on an empty batch")
        self.model.train()
        result = {"ar": None, "nar": None, "k": None}

        loss = ar_loss(self.model, samples)
        if not torch.isfinite(loss):
            raise NonFiniteLossError("Non-finite AR loss at step {}".format(self.n_steps + 1),
                                     {"ar": float(loss)})
        self.ar_optimizer.zero_grad()
        loss.backward()
        self.ar_optimizer.step()
        result["ar"] = float(loss.detach())

        if self.model.cfg.n_quantizers > 1:
            k = self.sample_layer()
            loss = nar_loss(self.model, samples, k)
            if not torch.isfinite(loss):
                raise NonFiniteLossError("Non-finite NAR loss at step {} (k={})"
                                         .format(self.n_steps + 1, k), {"nar": float(loss)})
            self.nar_optimizer.zero_grad()
            loss.backward()
            self.nar_optimizer.step()
            result["nar"] = float(loss.detach())
            result["k"] = k

        self.n_steps += 1
        return result
