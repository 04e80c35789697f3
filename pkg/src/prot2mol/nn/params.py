"""Named parameter store and initialization."""

import numpy as np

from .config import ModelConfig

INIT_STD = 0.02
ATTN = ("wq", "bq", "wk", "bk", "wv", "bv", "wo", "bo")


def _stack_shapes(prefix, cfg, vocab, cross):
    d, f = cfg.d_model, cfg.d_ff
    out = [
        (f"{prefix}.tok_emb", (vocab, d)),
        (f"{prefix}.pos_emb", (cfg.max_len, d)),
        (f"{prefix}.emb_ln.g", (d,)),
        (f"{prefix}.emb_ln.b", (d,)),
    ]
    blocks = ["self_attn", "ln1"] + (["cross_attn", "ln_cross"] if cross else []) + ["ffn", "ln2"]
    for i in range(cfg.n_layers):
        lp = f"{prefix}.layers.{i}"
        for blk in blocks:
            if blk.endswith("attn"):
                for w in ATTN:
                    out.append((f"{lp}.{blk}.{w}", (d, d) if w[0] == "w" else (d,)))
            elif blk.startswith("ln"):
                out += [(f"{lp}.{blk}.g", (d,)), (f"{lp}.{blk}.b", (d,))]
            else:
                out += [
                    (f"{lp}.ffn.w1", (d, f)),
                    (f"{lp}.ffn.b1", (f,)),
                    (f"{lp}.ffn.w2", (f, d)),
                    (f"{lp}.ffn.b2", (d,)),
                ]
    return out


def param_shapes(cfg):
    """Ordered (name, shape) list fully determined by ``cfg``."""
    d = cfg.d_model
    if cfg.arch == "enc_only":
        return _stack_shapes("enc", cfg, cfg.vocab_src, False) + [
            ("mlm_head.w", (d, cfg.vocab_src)),
            ("mlm_head.b", (cfg.vocab_src,)),
        ]
    head = [("lm_head.w", (d, cfg.vocab_tgt)), ("lm_head.b", (cfg.vocab_tgt,))]
    if cfg.arch == "dec_only":
        return _stack_shapes("dec", cfg, cfg.vocab_tgt, False) + head
    return (
        _stack_shapes("enc", cfg, cfg.vocab_src, False)
        + _stack_shapes("dec", cfg, cfg.vocab_tgt, True)
        + head
    )


def init_tensor(name, shape, rng, dtype=np.float32):
    leaf = name.rsplit(".", 1)[-1]
    if len(shape) == 1:
        if leaf == "g":
            return np.ones(shape, dtype=dtype)
        return np.zeros(shape, dtype=dtype)
    return (rng.standard_normal(shape) * INIT_STD).astype(dtype)


class ModelParams:
    """Configuration plus an ordered name -> ndarray mapping."""

    def __init__(self, cfg, tensors):
        self.cfg = cfg
        self.tensors = dict(tensors)

    @classmethod
    def init(cls, cfg, seed=0, dtype=np.float32):
        rng = np.random.default_rng(seed)
        return cls(cfg, {n: init_tensor(n, s, rng, dtype) for n, s in param_shapes(cfg)})

    def __getitem__(self, name):
        return self.tensors[name]

    def __contains__(self, name):
        return name in self.tensors

    def names(self):
        return list(self.tensors)

    def copy(self):
        return ModelParams(self.cfg, {k: v.copy() for k, v in self.tensors.items()})

    def astype(self, dtype):
        return ModelParams(self.cfg, {k: v.astype(dtype) for k, v in self.tensors.items()})

    def n_params(self):
        return int(sum(v.size for v in self.tensors.values()))

    def all_finite(self):
        return all(np.isfinite(v).all() for v in self.tensors.values())

    def equal(self, other):
        return (
            self.cfg == other.cfg
            and list(self.tensors) == list(other.tensors)
            and all(np.array_equal(self.tensors[k], other.tensors[k]) for k in self.tensors)
        )

    def validate(self):
        expected = param_shapes(self.cfg)
        if [n for n, _ in expected] != list(self.tensors):
            raise ValueError("tensor names do not match the configuration")
        for n, s in expected:
            if self.tensors[n].shape != s:
                raise ValueError(f"{n}: shape {self.tensors[n].shape} != {s}")


__all__ = ["ModelConfig", "ModelParams", "param_shapes", "init_tensor", "INIT_STD"]
