"""Warm-start weight surgery.

An enc_dec model is assembled from encoder-only (masked-LM) checkpoints:
the encoder comes verbatim from the protein model, and the decoder's
embeddings, positions, self-attention, feed-forward and layer norms come
from the chemical model. Cross-attention (with its layer norm) and the LM
head have no counterpart and are drawn fresh.
"""

import numpy as np

from .config import ConfigMismatch, ModelConfig, ShapeMismatch
from .params import ModelParams, init_tensor, param_shapes

COPY = "copy"
RANDOM = "random"


def classify(name):
    """Surgery role of an enc_dec tensor: (group, kind)."""
    parts = name.split(".")
    if parts[0] == "lm_head":
        return "lm_head", RANDOM
    if parts[0] == "enc":
        return "encoder", COPY
    if parts[0] == "dec":
        if parts[1] in ("tok_emb", "pos_emb"):
            return "embeddings", COPY
        if parts[1] == "emb_ln":
            return "layer_norm", COPY
        if parts[1] == "layers" and len(parts) >= 4:
            blk = parts[3]
            if blk in ("cross_attn", "ln_cross"):
                return "cross_attention", RANDOM
            if blk == "self_attn":
                return "self_attention", COPY
            if blk == "ffn":
                return "ffn", COPY
            if blk in ("ln1", "ln2"):
                return "layer_norm", COPY
    return None, None


def _check_cfg(src, cfg, vocab_attr, vocab, arch, what):
    if src.arch != arch:
        raise ConfigMismatch(f"{what} must be a {arch} checkpoint, got {src.arch}")
    for key in ("n_layers", "n_heads"):
        if getattr(src, key) != getattr(cfg, key):
            raise ConfigMismatch(f"{what} {key}={getattr(src, key)} but config has {getattr(cfg, key)}")
    if getattr(src, vocab_attr) != vocab:
        raise ConfigMismatch(f"{what} vocabulary {getattr(src, vocab_attr)} != {vocab}")


def _take(source, name, shape, what):
    if name not in source.tensors:
        raise ShapeMismatch(f"{what} has no tensor {name}")
    t = source.tensors[name]
    if t.shape != shape:
        raise ShapeMismatch(f"{what} tensor {name} has shape {t.shape}, expected {shape}")
    return t.copy()


def _assemble(enc_ckpt, dec_source, dec_prefix, cfg, seed):
    if cfg.arch != "enc_dec":
        raise ConfigMismatch("warm starts build enc_dec models")
    rng = np.random.default_rng(seed)
    tensors, audit = {}, {}
    for name, shape in param_shapes(cfg):
        group, kind = classify(name)
        if group is None:
            raise ValueError(f"tensor {name} has no surgery rule")
        if kind == RANDOM:
            tensors[name] = init_tensor(name, shape, rng)
            audit[name] = (group, RANDOM, None)
        elif group == "encoder":
            tensors[name] = _take(enc_ckpt, name, shape, "encoder checkpoint")
            audit[name] = (group, COPY, name)
        else:
            src_name = dec_prefix + name[len("dec") :]
            tensors[name] = _take(dec_source, src_name, shape, "decoder checkpoint")
            audit[name] = (group, COPY, src_name)
    return ModelParams(cfg, tensors), audit


def warm_start_one_stage(enc_ckpt, dec_ckpt, cfg, seed=0, return_audit=False):
    """EncDecBase-style init from two masked-LM checkpoints."""
    _check_cfg(enc_ckpt.cfg, cfg, "vocab_src", cfg.vocab_src, "enc_only", "encoder checkpoint")
    _check_cfg(dec_ckpt.cfg, cfg, "vocab_src", cfg.vocab_tgt, "enc_only", "decoder checkpoint")
    params, audit = _assemble(enc_ckpt, dec_ckpt, "enc", cfg, seed)
    return (params, audit) if return_audit else params


def warm_start_two_stage(enc_ckpt, clm_params, cfg, seed=0, return_audit=False):
    """EncDecLM-style init: decoder weights from a causal-LM model."""
    _check_cfg(enc_ckpt.cfg, cfg, "vocab_src", cfg.vocab_src, "enc_only", "encoder checkpoint")
    _check_cfg(clm_params.cfg, cfg, "vocab_tgt", cfg.vocab_tgt, "dec_only", "causal-LM model")
    params, audit = _assemble(enc_ckpt, clm_params, "dec", cfg, seed)
    return (params, audit) if return_audit else params


def scratch(cfg, seed=0):
    return ModelParams.init(cfg, seed)


def mlm_to_clm(dec_ckpt):
    """Reuse a masked-LM checkpoint as a decoder-only causal LM, head included."""
    src = dec_ckpt.cfg
    if src.arch != "enc_only":
        raise ConfigMismatch("causal-LM conversion needs an enc_only checkpoint")
    cfg = src.replace(arch="dec_only", vocab_tgt=src.vocab_src)
    tensors = {}
    for name, shape in param_shapes(cfg):
        if name.startswith("lm_head."):
            src_name = "mlm_head." + name.split(".", 1)[1]
        else:
            src_name = "enc." + name.split(".", 1)[1]
        tensors[name] = _take(dec_ckpt, src_name, shape, "decoder checkpoint")
    return ModelParams(cfg, tensors)


def encoder_config(cfg, vocab):
    """The enc_only config whose checkpoints fit ``cfg`` for surgery."""
    return ModelConfig(
        n_layers=cfg.n_layers,
        d_model=cfg.d_model,
        d_ff=cfg.d_ff,
        n_heads=cfg.n_heads,
        vocab_src=vocab,
        vocab_tgt=vocab,
        max_len=cfg.max_len,
        arch="enc_only",
        dropout=cfg.dropout,
    )


def pretrain_clm(dec_ckpt, corpus, train_cfg=None, valid=None):
    """Turn ``dec_ckpt`` into a molecule generator by next-token training."""
    from .train import train_clm

    return train_clm(mlm_to_clm(dec_ckpt), corpus, train_cfg, valid)
