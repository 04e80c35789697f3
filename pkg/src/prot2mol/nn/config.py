"""Model and training configuration."""

from dataclasses import asdict, dataclass, fields

ARCHS = ("enc_dec", "dec_only", "enc_only")


class ConfigError(ValueError):
    pass


class ShapeError(ValueError):
    pass


class VocabOverflow(ValueError):
    pass


class ShapeMismatch(ValueError):
    pass


class ConfigMismatch(ValueError):
    pass


class EmptyDataset(ValueError):
    pass


class NonFiniteLoss(FloatingPointError):
    pass


@dataclass(frozen=True)
class ModelConfig:
    n_layers: int = 2
    d_model: int = 64
    d_ff: int = 128
    n_heads: int = 4
    vocab_src: int = 64
    vocab_tgt: int = 64
    max_len: int = 256
    arch: str = "enc_dec"
    dropout: float = 0.1

    def __post_init__(self):
        for name in ("n_layers", "d_model", "d_ff", "n_heads", "vocab_src", "vocab_tgt", "max_len"):
            v = getattr(self, name)
            if not isinstance(v, int) or v <= 0:
                raise ConfigError(f"{name} must be a positive integer, got {v!r}")
        if self.d_model % self.n_heads:
            raise ConfigError(
                f"d_model={self.d_model} is not divisible by n_heads={self.n_heads}"
            )
        if self.max_len < 2:
            raise ConfigError("max_len must be at least 2")
        if self.arch not in ARCHS:
            raise ConfigError(f"arch must be one of {ARCHS}, got {self.arch!r}")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError(f"dropout must be in [0, 1), got {self.dropout}")

    @property
    def d_head(self):
        return self.d_model // self.n_heads

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in fields(cls)}
        extra = set(d) - known
        if extra:
            raise ConfigError(f"unknown model config keys: {sorted(extra)}")
        return cls(**d)

    def replace(self, **kw):
        d = self.to_dict()
        d.update(kw)
        return ModelConfig(**d)


# full-size baseline; 6 heads would not divide 256, so 8 are used
FULL_SCALE = dict(n_layers=4, d_model=256, d_ff=512, n_heads=8)


@dataclass(frozen=True)
class TrainConfig:
    peak_lr: float = 5e-5
    warmup_steps: int = 2000
    batch_size: int = 8
    grad_accum: int = 8
    epochs: int = 5
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    max_steps: int = None  # None means epochs alone decide
    eval_every: int = 0  # optimizer steps between training-loss probes; 0 = per epoch
    mask_prob: float = 0.15

    def __post_init__(self):
        if self.warmup_steps < 0:
            raise ConfigError("warmup_steps must be >= 0")
        for name in ("batch_size", "grad_accum", "epochs"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.peak_lr <= 0:
            raise ConfigError("peak_lr must be > 0")
        if (self.max_steps is not None and self.max_steps < 0) or self.eval_every < 0:
            raise ConfigError("max_steps and eval_every must be >= 0")
        if not 0.0 < self.mask_prob < 1.0:
            raise ConfigError("mask_prob must be in (0, 1)")

    @property
    def effective_batch(self):
        return self.batch_size * self.grad_accum

    def to_dict(self):
        return asdict(self)
