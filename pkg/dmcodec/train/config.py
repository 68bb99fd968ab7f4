import hashlib
import math
import os
from collections import OrderedDict

from .._utils import parse_options, coerce_option, render_option
from ..codec.config import CodecConfig
from ..discriminators import DiscriminatorConfig
from ..distill.loss import DistillTarget
from ..errors import ConfigurationError
from ..losses import LossWeights


__all__ = ["TrainConfig", "SEED_ENV_VAR"]


SEED_ENV_VAR = "DMCODEC_SEED"


# Every option a configuration file may set, grouped by the object it configures.
_schema = OrderedDict([
    ("", (
        ("epochs",          int),
        ("batch_size",      int),
        ("crop_seconds",    float),
        ("learning_rate",   float),
        ("lr_decay",        float),
        ("adam_betas",      (float,)),
        ("grad_clip",       float),
        ("seed",            int),
        ("n_active_layers", int),
        ("codebook_decay",  float),
        ("dead_threshold",  float),
        ("teacher_mode",    str),
        ("teacher_dim",     int),
        ("teacher_layers",  int),
    )),
    ("codec", (
        ("base_channels",   int),
        ("n_blocks",        int),
        ("strides",         (int,)),
        ("latent_dim",      int),
        ("sample_rate",     int),
        ("codebook_size",   int),
        ("n_quantizers",    int),
        ("lstm_layers",     int),
        ("seed",            int),
    )),
    ("disc", (
        ("periods",         (int,)),
        ("scales",          (int,)),
        ("stft_windows",    (int,)),
        ("channels",        int),
        ("seed",            int),
    )),
    ("loss", (
        ("scale",           float),
        ("distill",         float),
        ("t",               float),
        ("f",               float),
        ("g",               float),
        ("fm",              float),
        ("w",               float),
    )),
    ("distill", (
        ("mode",            str),
        ("lm_selection",    str),
        ("sm_selection",    str),
        ("axis",            str),
        ("w_lm",            float),
        ("w_sm",            float),
        ("layer_policy",    str),
    )),
])

_attributes = {"codec": "codec", "disc": "disc", "loss": "loss_weights",
               "distill": "distill_target"}

_factories = {"codec": CodecConfig, "disc": DiscriminatorConfig, "loss": LossWeights,
              "distill": DistillTarget}


def _types():
    types = OrderedDict()
    for group, fields in _schema.items():
        for name, type in fields:
            types[group + "." + name if group else name] = type
    return types


class TrainConfig:
    """Everything that determines a training run.

    Parameters
    ----------
    epochs : int
    batch_size : int
    crop_seconds : float
        Length of the random training crops. Must be a whole number of codec frames.
    learning_rate : float
        Adam step size of both the generator and the discriminators.
    lr_decay : float
        Multiplier applied to the learning rate after every epoch.
    adam_betas : tuple of float
    grad_clip : float
        Global gradient norm limit; ``0`` disables clipping.
    seed : int
        Seeds crops, batch order and codebook sampling.
    n_active_layers : int
        Quantizer layers used during training; ``0`` uses all of them.
    codebook_decay, dead_threshold : float
        EMA decay and dead-entry threshold of every codebook.
    teacher_mode : str
        ``"synthetic"`` computes teacher targets on the fly, ``"cached"`` reads them from
        the ``DMTE`` files listed in the manifest.
    teacher_dim, teacher_layers : int
        Shape of the synthetic teacher.
    codec : CodecConfig
    disc : DiscriminatorConfig
    loss_weights : LossWeights
    distill_target : DistillTarget
    """
    def __init__(self, *, epochs=1, batch_size=8, crop_seconds=3.0, learning_rate=1e-4,
                 lr_decay=0.98, adam_betas=(0.9, 0.999), grad_clip=10.0, seed=42,
                 n_active_layers=0, codebook_decay=0.99, dead_threshold=0.5,
                 teacher_mode="synthetic", teacher_dim=32, teacher_layers=12,
                 codec=None, disc=None, loss_weights=None, distill_target=None):
        for name, value in (("Epoch count", epochs), ("Batch size", batch_size),
                            ("Teacher dimension", teacher_dim),
                            ("Teacher layer count", teacher_layers)):
            if not isinstance(value, int) or value < 1:
                raise ConfigurationError("{} must be a positive integer, not {!r}"
                                         .format(name, value))
        if not learning_rate > 0:
            raise ConfigurationError("Learning rate must be positive, not {!r}"
                                     .format(learning_rate))
        if not 0 < lr_decay <= 1:
            raise ConfigurationError("Learning rate decay must be in (0, 1], not {!r}"
                                     .format(lr_decay))
        adam_betas = tuple(adam_betas)
        if len(adam_betas) != 2 or not all(0 <= beta < 1 for beta in adam_betas):
            raise ConfigurationError("Adam betas must be two numbers in [0, 1), not {!r}"
                                     .format(adam_betas))
        if grad_clip < 0:
            raise ConfigurationError("Gradient clipping norm must be non-negative, not {!r}"
                                     .format(grad_clip))
        if teacher_mode not in ("synthetic", "cached"):
            raise ConfigurationError("Teacher mode must be one of synthetic, cached, not {!r}"
                                     .format(teacher_mode))

        self.codec          = CodecConfig() if codec is None else codec
        self.disc           = DiscriminatorConfig() if disc is None else disc
        self.loss_weights   = LossWeights() if loss_weights is None else loss_weights
        self.distill_target = DistillTarget() if distill_target is None else distill_target

        crop = crop_seconds * self.codec.sample_rate
        if not crop_seconds > 0 or not math.isclose(crop, round(crop)) or \
                round(crop) % self.codec.hop_length:
            raise ConfigurationError("Crop of {} s is not a whole number of {}-sample frames"
                                     .format(crop_seconds, self.codec.hop_length))
        if not isinstance(n_active_layers, int) or \
                not 0 <= n_active_layers <= self.codec.n_quantizers:
            raise ConfigurationError("Active layer count must be an integer in 0..{}, not {!r}"
                                     .format(self.codec.n_quantizers, n_active_layers))

        self.epochs          = epochs
        self.batch_size      = batch_size
        self.crop_seconds    = float(crop_seconds)
        self.learning_rate   = float(learning_rate)
        self.lr_decay        = float(lr_decay)
        self.adam_betas      = tuple(float(beta) for beta in adam_betas)
        self.grad_clip       = float(grad_clip)
        self.seed            = seed
        self.n_active_layers = n_active_layers
        self.codebook_decay  = float(codebook_decay)
        self.dead_threshold  = float(dead_threshold)
        self.teacher_mode    = teacher_mode
        self.teacher_dim     = teacher_dim
        self.teacher_layers  = teacher_layers

    @property
    def crop_samples(self):
        return round(self.crop_seconds * self.codec.sample_rate)

    @property
    def active_layers(self):
        return self.n_active_layers or self.codec.n_quantizers

    def options(self):
        """Every option as an ordered ``{dotted key: value}`` mapping."""
        options = OrderedDict()
        for group, fields in _schema.items():
            owner = getattr(self, _attributes[group]) if group else self
            for name, _ in fields:
                options[group + "." + name if group else name] = getattr(owner, name)
        return options

    @classmethod
    def from_options(cls, options, *, base=None):
        """Configuration with ``options`` applied on top of ``base`` (the defaults if
        omitted). Values may be typed or raw strings.
        """
        types = _types()
        base = cls() if base is None else base
        merged = base.options()
        for name in base.loss_weights.derived:
            if "loss." + name not in options:
                del merged["loss." + name]
        for key, value in options.items():
            if key not in types:
                raise ConfigurationError("Unknown configuration option {!r}".format(key))
            if isinstance(value, str):
                value = coerce_option(key, value, types[key])
            merged[key] = value

        groups = {group: {} for group in _schema if group}
        params = {}
        for key, value in merged.items():
            group, _, name = key.rpartition(".")
            (groups[group] if group else params)[name] = value
        try:
            for group, kwargs in groups.items():
                params[_attributes[group]] = _factories[group](**kwargs)
            return cls(**params)
        except TypeError as e:
            raise ConfigurationError(str(e)) from None

    def replace(self, **options):
        """Copy with options replaced; dotted keys are passed with ``__`` in place of dots."""
        return self.from_options({key.replace("__", "."): value
                                  for key, value in options.items()}, base=self)

    @classmethod
    def load(cls, file=None, *, overrides=(), environ=None):
        """Configuration from defaults, then ``file``, then ``key=value`` ``overrides``,
        then the ``DMCODEC_SEED`` environment variable.
        """
        config = cls()
        if file is not None:
            with open(file) as f:
                config = cls.from_options(parse_options(f.read(), origin=file), base=config)
        for override in overrides:
            config = cls.from_options(parse_options(override, origin="--set"), base=config)
        environ = os.environ if environ is None else environ
        if SEED_ENV_VAR in environ:
            seed = coerce_option(SEED_ENV_VAR, environ[SEED_ENV_VAR], int)
            config = cls.from_options({"seed": seed}, base=config)
        return config

    def render(self):
        """Canonical text form: one ``key = value`` line per option, keys sorted."""
        return "".join("{} = {}\n".format(key, render_option(value))
                       for key, value in sorted(self.options().items()))

    def digest(self):
        return hashlib.blake2b(self.render().encode("utf-8"), digest_size=16).hexdigest()

    def __eq__(self, other):
        return isinstance(other, TrainConfig) and self.render() == other.render()

    def __repr__(self):
        return "(train-config {})".format(self.digest())
