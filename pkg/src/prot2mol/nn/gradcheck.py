"""Central finite-difference check of the analytic gradients (float64)."""

import time
from dataclasses import dataclass, field

import numpy as np

from .config import ModelConfig
from .model import loss_and_grads
from .params import ModelParams

TINY = dict(n_layers=2, d_model=8, d_ff=16, n_heads=2, vocab_src=11, vocab_tgt=9, max_len=8)
STEP = 1e-5
# gradients smaller than this are compared absolutely; attention key biases
# have an exactly zero true gradient, so a pure ratio would compare noise
SCALE_FLOOR = 1e-3


@dataclass
class GradCheckReport:
    arch: str
    tolerance: float
    per_tensor: dict = field(default_factory=dict)
    seconds: float = 0.0

    @property
    def max_error(self):
        return max(self.per_tensor.values()) if self.per_tensor else 0.0

    @property
    def passed(self):
        return all(e <= self.tolerance for e in self.per_tensor.values())

    def to_dict(self):
        return {
            "arch": self.arch,
            "tolerance": self.tolerance,
            "passed": self.passed,
            "max_error": self.max_error,
            "seconds": round(self.seconds, 3),
            "per_tensor": dict(self.per_tensor),
        }


def toy_batch(cfg, rng, batch=3):
    """Small random batch with some padding in every input."""
    S, T = cfg.max_len - 2, cfg.max_len - 3
    out = {}
    if cfg.arch in ("enc_dec", "enc_only"):
        src = rng.integers(4, cfg.vocab_src, size=(batch, S))
        src[0, S - 2 :] = 0
        src[1, S - 1 :] = 0
        out["src"] = src
    if cfg.arch == "enc_only":
        tgt = rng.integers(4, cfg.vocab_src, size=src.shape)
        tgt[rng.random(src.shape) < 0.5] = 0
        tgt[src == 0] = 0
        tgt[:, 0] = rng.integers(4, cfg.vocab_src, size=batch)
        out["tgt_out"] = tgt
        return out
    tgt = rng.integers(4, cfg.vocab_tgt, size=(batch, T + 1))
    tgt[:, 0] = 1
    tgt[0, T - 1 :] = 0
    out["tgt_in"] = tgt[:, :-1]
    out["tgt_out"] = tgt[:, 1:]
    return out


def perturbed_params(cfg, seed):
    """Initialization plus noise so no gradient is trivially zero."""
    p = ModelParams.init(cfg, seed, dtype=np.float64)
    rng = np.random.default_rng(seed + 1)
    for k, v in p.tensors.items():
        v += rng.standard_normal(v.shape) * 0.1
    return p


def relative_error(analytic, numeric):
    scale = max(np.abs(analytic).max(), np.abs(numeric).max(), SCALE_FLOOR)
    return float(np.abs(analytic - numeric).max() / scale)


def grad_check(cfg=None, seed=0, tolerance=1e-6, loss_fn=loss_and_grads):
    """Compare analytic and numeric gradients entry by entry, per tensor.

    The error for a tensor is max|analytic - numeric| divided by the larger
    of the two maximal magnitudes (floored at SCALE_FLOOR).
    """
    t0 = time.perf_counter()
    cfg = cfg or ModelConfig(**TINY, arch="enc_dec")
    cfg = cfg.replace(dropout=0.0)
    if cfg.n_layers > 2 or cfg.d_model > 16:
        raise ValueError("grad_check is meant for tiny configs (<= 2 layers, d_model <= 16)")
    params = perturbed_params(cfg, seed)
    batch = toy_batch(cfg, np.random.default_rng(seed + 2))
    _, grads = loss_fn(params, batch)
    report = GradCheckReport(cfg.arch, tolerance)
    for name, tensor in params.tensors.items():
        flat = tensor.reshape(-1)
        numeric = np.empty_like(flat)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + STEP
            up, _ = loss_fn(params, batch, need_grads=False)
            flat[i] = orig - STEP
            down, _ = loss_fn(params, batch, need_grads=False)
            flat[i] = orig
            numeric[i] = (up - down) / (2 * STEP)
        report.per_tensor[name] = relative_error(grads[name].reshape(-1), numeric)
    report.seconds = time.perf_counter() - t0
    return report
