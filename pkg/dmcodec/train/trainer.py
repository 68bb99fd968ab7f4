import os
from contextlib import contextmanager

import torch
from torch import nn
from torch.nn import functional as F

from .._utils import parse_options
from ..codec.io import CheckpointArchive, Checkpoint
from ..codec.model import Codec
from ..codec.rvq import commitment_loss
from ..discriminators import Discriminators
from ..distill.loss import Projection, align, distill_objective
from ..distill.teacher import SyntheticTeacher, TeacherEmbedding
from ..errors import ConfigurationError, DataError, NonFiniteLossError
from ..losses import (LossBreakdown, MelLoss, time_loss, hinge_generator, hinge_discriminator,
                      feature_matching, total_generator)
from .config import TrainConfig
from .trace import TrainingLog, LossTraceWriter


__all__ = ["Batch", "CodecDataset", "Trainer"]


class Batch:
    """Training crops and their teacher targets.

    Attributes
    ----------
    audio : Tensor, (batch, 1, n)
    lm, sm : Tensor, (batch, T', D_teacher) or None
        Aligned LM and SM teacher targets, present for the active distillation branches.
    """
    def __init__(self, audio, lm=None, sm=None):
        self.audio = audio
        self.lm    = lm
        self.sm    = sm

    def __len__(self):
        return self.audio.shape[0]


class CodecDataset:
    """Frame-aligned random crops of a corpus, with teacher targets.

    Parameters
    ----------
    utterances : list of Utterance
    config : TrainConfig
    teacher : SyntheticTeacher or None
        Computes targets when ``config.teacher_mode`` is ``"synthetic"``; built from the
        configuration if omitted. Cached targets come from the utterances.
    """
    def __init__(self, utterances, config, *, teacher=None):
        if not utterances:
            raise DataError("Cannot train on an empty corpus")
        self.utterances = list(utterances)
        self.config     = config
        target = config.distill_target
        if config.teacher_mode == "synthetic" and target.enabled and teacher is None:
            teacher = SyntheticTeacher(seed=config.seed, dim=config.teacher_dim,
                                       n_layers=config.teacher_layers,
                                       sample_rate=config.codec.sample_rate,
                                       hop_length=config.codec.hop_length)
        self.teacher = teacher

        self._teachers = []
        for utterance in self.utterances:
            embeddings = {}
            for branch, modality in target.teachers.items():
                if config.teacher_mode == "synthetic":
                    embedding = teacher.embed(modality, utterance.clip.samples,
                                              utterance.transcript, target.layer_policy)
                elif modality in utterance.teachers:
                    embedding = utterance.teachers[modality]
                else:
                    raise DataError("Utterance {!r} has no cached {} teacher"
                                    .format(utterance.transcript, modality))
                if embedding.dim != config.teacher_dim:
                    raise ConfigurationError("Teacher vectors have dimension {}, but the "
                                             "configuration declares {}"
                                             .format(embedding.dim, config.teacher_dim))
                embeddings[branch] = embedding
            self._teachers.append(embeddings)

    def __len__(self):
        return len(self.utterances)

    def example(self, index, frame_offset):
        """Crop ``index`` starting at ``frame_offset`` and its per-branch targets."""
        hop      = self.config.codec.hop_length
        n_frames = self.config.crop_samples // hop
        samples  = self.utterances[index].clip.samples.to(torch.get_default_dtype())
        audio    = samples[frame_offset * hop:frame_offset * hop + self.config.crop_samples]
        audio    = F.pad(audio, (0, self.config.crop_samples - audio.shape[0]))
        targets  = {}
        for branch, embedding in self._teachers[index].items():
            if embedding.modality == "semantic":
                rows = embedding.vectors[frame_offset:frame_offset + n_frames]
                if rows.shape[0] == 0:
                    rows = embedding.vectors.new_zeros((1, embedding.dim))
                embedding = TeacherEmbedding(rows, "semantic", embedding.layer_policy)
            targets[branch] = align(embedding, n_frames)
        return audio, targets

    def _offset(self, index, generator):
        hop = self.config.codec.hop_length
        spare = (len(self.utterances[index].clip) - self.config.crop_samples) // hop
        if spare <= 0:
            return 0
        return int(torch.randint(spare + 1, (), generator=generator))

    def collate(self, examples):
        audio = torch.stack([audio for audio, _ in examples])[:, None]
        targets = {}
        for branch in ("lm", "sm"):
            if all(branch in example_targets for _, example_targets in examples):
                targets[branch] = torch.stack([example_targets[branch]
                                               for _, example_targets in examples])
        return Batch(audio, **targets)

    def batches(self, generator):
        """One epoch of batches in an order and with crops drawn from ``generator``."""
        order = torch.randperm(len(self), generator=generator).tolist()
        for start in range(0, len(order), self.config.batch_size):
            indices = order[start:start + self.config.batch_size]
            yield self.collate([self.example(index, self._offset(index, generator))
                                for index in indices])

    def probe(self, size=None):
        """Deterministic batch of the first clips, cropped at the start."""
        size = self.config.batch_size if size is None else size
        return self.collate([self.example(index, 0)
                             for index in range(min(size, len(self)))])


class Trainer:
    """Alternating discriminator and generator optimization of a :class:`Codec`.

    Parameters
    ----------
    config : TrainConfig

    Attributes
    ----------
    codec : Codec
    discriminators : Discriminators
    projections : ModuleDict
        One :class:`Projection` per active distillation branch.
    generator : torch.Generator
        Source of every random choice made during training.
    step : int
        Number of completed training steps.
    epoch : int
        Number of completed epochs.
    """
    def __init__(self, config=None):
        self.config = TrainConfig() if config is None else config
        config = self.config

        self.codec = Codec(config.codec, decay=config.codebook_decay,
                           dead_threshold=config.dead_threshold)
        self.discriminators = Discriminators(config.disc)
        with torch.random.fork_rng(devices=[]):
            torch.manual_seed(config.seed)
            self.projections = nn.ModuleDict({
                branch: Projection(config.codec.latent_dim, config.teacher_dim)
                for branch in config.distill_target.teachers
            })
        self.mel_loss = MelLoss(config.codec.sample_rate)

        self.generator_optimizer = torch.optim.Adam(
            list(self.codec.parameters()) + list(self.projections.parameters()),
            lr=config.learning_rate, betas=config.adam_betas)
        self.discriminator_optimizer = torch.optim.Adam(
            self.discriminators.parameters(), lr=config.learning_rate, betas=config.adam_betas)
        self.schedulers = [
            torch.optim.lr_scheduler.ExponentialLR(optimizer, gamma=config.lr_decay)
            for optimizer in (self.generator_optimizer, self.discriminator_optimizer)
        ]

        self.generator = torch.Generator().manual_seed(config.seed)
        self.step  = 0
        self.epoch = 0
        self._trace_writers = []

    def _clip(self, parameters):
        if self.config.grad_clip > 0:
            nn.utils.clip_grad_norm_(parameters, self.config.grad_clip)

    def _generator_losses(self, batch, output, d):
        audio, reconstruction, code = batch.audio, output.audio, output.code
        with torch.no_grad():
            real = self.discriminators.run_all(audio)
        fake = self.discriminators.run_all(reconstruction)
        distill, parts = distill_objective(code, self.config.distill_target, self.projections,
                                           lm=batch.lm, sm=batch.sm)
        return LossBreakdown(
            t=time_loss(audio, reconstruction),
            f=self.mel_loss(audio.squeeze(1), reconstruction.squeeze(1)),
            g=hinge_generator([o.logits for o in fake]),
            d=d,
            fm=feature_matching([o.features for o in real], [o.features for o in fake]),
            w=commitment_loss(code.residuals, code.per_layer_vectors),
            distill=distill,
            extras={"distill_" + branch: float(value.detach()) for branch, value in parts.items()},
        )

    def _check_finite(self, breakdown, what):
        if not breakdown.is_finite():
            raise NonFiniteLossError("Non-finite {} loss at step {}: {!r}"
                                     .format(what, self.step + 1, breakdown), breakdown)

    def train_step(self, batch):
        """One discriminator update, then one generator update with the EMA codebook update.

        Returns the :class:`LossBreakdown` of the generator update; ``d`` is the
        discriminator loss before its update.
        """
        self.codec.train()
        output = self.codec(batch.audio, self.config.active_layers, generator=self.generator)

        real = self.discriminators.run_all(batch.audio)
        fake = self.discriminators.run_all(output.audio.detach())
        d = hinge_discriminator([o.logits for o in real], [o.logits for o in fake])
        self._check_finite(LossBreakdown(d=d.detach()).detach(), "discriminator")
        self.discriminator_optimizer.zero_grad()
        d.backward()
        self._clip(self.discriminators.parameters())
        self.discriminator_optimizer.step()

        components = self._generator_losses(batch, output, d.detach())
        components.total = total_generator(components, self.config.loss_weights)
        breakdown = components.detach()
        self._check_finite(breakdown, "generator")
        self.generator_optimizer.zero_grad()
        self.discriminator_optimizer.zero_grad()
        components.total.backward()
        self._clip([p for group in self.generator_optimizer.param_groups for p in group["params"]])
        self.generator_optimizer.step()
        self.discriminator_optimizer.zero_grad()

        replaced = self.codec.quantizer.ema_update(output.code, self.generator)
        self.step += 1

        breakdown.total = total_generator(breakdown, self.config.loss_weights)
        breakdown.extras["perplexity"] = self.codec.quantizer.perplexity(output.code)
        breakdown.extras["replaced"] = replaced
        for writer in self._trace_writers:
            writer.update(self.step, breakdown)
        return breakdown

    @torch.no_grad()
    def evaluate(self, batch):
        """Every loss component on ``batch`` without updating any state.

        Codebooks that were never initialized are filled from a generator seeded with
        the configuration seed, leaving the training generator untouched.
        """
        generator = None
        if not self.codec.quantizer.initialized:
            generator = torch.Generator().manual_seed(self.config.seed)
        output = self.codec(batch.audio, self.config.active_layers, generator=generator)
        real = self.discriminators.run_all(batch.audio)
        fake = self.discriminators.run_all(output.audio)
        d = hinge_discriminator([o.logits for o in real], [o.logits for o in fake])
        breakdown = self._generator_losses(batch, output, d).detach()
        breakdown.total = total_generator(breakdown, self.config.loss_weights)
        breakdown.extras["perplexity"] = self.codec.quantizer.perplexity(output.code)
        return breakdown

    def end_epoch(self):
        for scheduler in self.schedulers:
            scheduler.step()
        self.epoch += 1

    @property
    def learning_rate(self):
        return self.generator_optimizer.param_groups[0]["lr"]

    def run(self, manifest, out_dir, *, utterances=None):
        """Train for the configured number of epochs, writing ``train.csv`` and
        ``checkpoint.zip`` to ``out_dir`` after every epoch; returns the checkpoint path.
        """
        config = self.config
        if utterances is None:
            teachers = config.distill_target.teachers if config.teacher_mode == "cached" else None
            utterances = manifest.load(config.codec.sample_rate, teachers=teachers,
                                       layer_policy=config.distill_target.layer_policy)
        dataset = CodecDataset(utterances, config)
        os.makedirs(out_dir, exist_ok=True)
        checkpoint = os.path.join(out_dir, "checkpoint.zip")
        log = TrainingLog(os.path.join(out_dir, "train.csv"), append=self.step > 0)
        try:
            while self.epoch < config.epochs:
                for batch in dataset.batches(self.generator):
                    log.write(self.step + 1, self.train_step(batch))
                self.end_epoch()
                self.save(checkpoint)
        finally:
            log.close()
        return checkpoint

    def save(self, file):
        archive = CheckpointArchive(config_text=self.config.render(),
                                    digest=self.config.digest())
        archive.add_module("codec.", self.codec)
        archive.add_module("disc.", self.discriminators)
        archive.add_module("proj.", self.projections)
        archive.add_object("train/optimizers", {
            "generator":     self.generator_optimizer.state_dict(),
            "discriminator": self.discriminator_optimizer.state_dict(),
            "schedulers":    [scheduler.state_dict() for scheduler in self.schedulers],
        })
        archive.add_array("train/rng", self.generator.get_state())
        archive.add_file("train/step", str(self.step))
        archive.add_file("train/epoch", str(self.epoch))
        archive.archive(file)

    @classmethod
    def load(cls, file):
        """Trainer restored from :meth:`save`, ready to continue exactly where it stopped."""
        checkpoint = Checkpoint(file)
        config = TrainConfig.from_options(parse_options(checkpoint.config_text, origin=file))
        if config.digest() != checkpoint.digest:
            raise DataError("Checkpoint {} has configuration digest {}, but its configuration "
                            "hashes to {}".format(file, checkpoint.digest, config.digest()))
        trainer = cls(config)
        checkpoint.load_module("codec.", trainer.codec)
        checkpoint.load_module("disc.", trainer.discriminators)
        if len(trainer.projections):
            checkpoint.load_module("proj.", trainer.projections)
        state = checkpoint.get_object("train/optimizers")
        trainer.generator_optimizer.load_state_dict(state["generator"])
        trainer.discriminator_optimizer.load_state_dict(state["discriminator"])
        for scheduler, scheduler_state in zip(trainer.schedulers, state["schedulers"]):
            scheduler.load_state_dict(scheduler_state)
        trainer.generator.set_state(torch.from_numpy(checkpoint.get_array("train/rng")))
        trainer.step  = int(checkpoint.files["train/step"].decode("utf-8"))
        trainer.epoch = int(checkpoint.files["train/epoch"].decode("utf-8"))
        return trainer

    @contextmanager
    def write_vcd(self, vcd_file, gtkw_file=None):
        """Trace every loss component of the steps run inside the ``with`` block to a Value
        Change Dump file, optionally populating a GTKWave save file. ::

            with trainer.write_vcd("losses.vcd", "losses.gtkw"):
                trainer.run(manifest, "out")
        """
        writer = LossTraceWriter(vcd_file=vcd_file, gtkw_file=gtkw_file)
        try:
            self._trace_writers.append(writer)
            yield
        finally:
            writer.close()
            self._trace_writers.remove(writer)
