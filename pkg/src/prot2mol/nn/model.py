"""Encoder-decoder, decoder-only and encoder-only transformer passes.

All blocks are post-layer-norm residual blocks with learned absolute
positions and a layer norm on the embedding sum. Padding (id 0) is masked
out as an attention key everywhere; the decoder also applies a causal mask.

Batches are dicts of int arrays:

* enc_dec: ``src`` [B, S], ``tgt_in`` [B, T], ``tgt_out`` [B, T]
* dec_only: ``tgt_in``, ``tgt_out``
* enc_only (masked LM): ``src`` (corrupted input), ``tgt_out`` (original ids
  at masked positions, 0 elsewhere)

Target id 0 marks a position that does not contribute to the loss.
"""

import numpy as np

from ..biotok import PAD
from . import layers as L
from .config import ShapeError, VocabOverflow


def _check_ids(ids, vocab, max_len, what):
    ids = np.asarray(ids)
    if ids.ndim != 2:
        raise ShapeError(f"{what} must be a [batch, length] matrix, got shape {ids.shape}")
    if ids.shape[1] > max_len:
        raise ShapeError(f"{what} length {ids.shape[1]} exceeds max_len {max_len}")
    if ids.size and (ids.min() < 0 or ids.max() >= vocab):
        raise VocabOverflow(f"{what} ids must lie in [0, {vocab})")
    return ids.astype(np.int64, copy=False)


def pad_allow(ids):
    """[B, 1, 1, T] key mask: True where the key is a real token."""
    keep = ids != PAD
    if ids.shape[1] and not keep.any(axis=1).all():
        raise ShapeError("a sequence consists only of padding")
    return keep[:, None, None, :]


def causal_allow(T):
    return np.tril(np.ones((T, T), dtype=bool))[None, None]


def _embed_fwd(P, pre, ids, rate, rng):
    T = ids.shape[1]
    e = P[pre + ".tok_emb"][ids] + P[pre + ".pos_emb"][:T]
    x, ln = L.layer_norm_fwd(e, P[pre + ".emb_ln.g"], P[pre + ".emb_ln.b"])
    x, keep = L.dropout_fwd(x, rate, rng)
    return x, (ids, ln, keep)


def _embed_bwd(dx, cache, P, pre, grads):
    ids, ln, keep = cache
    dx = L.dropout_bwd(dx, keep)
    de = L.layer_norm_bwd(dx, ln, P[pre + ".emb_ln.g"], grads, pre + ".emb_ln")
    tok = np.zeros_like(P[pre + ".tok_emb"])
    np.add.at(tok, ids.reshape(-1), de.reshape(-1, de.shape[-1]))
    L.acc(grads, pre + ".tok_emb", tok)
    pos = np.zeros_like(P[pre + ".pos_emb"])
    pos[: ids.shape[1]] = de.sum(axis=0)
    L.acc(grads, pre + ".pos_emb", pos)


def _block_fwd(P, lp, x, allow, n_heads, rate, rng, mem=None, mem_allow=None):
    caches = {}
    a, caches["sa"] = L.attention_fwd(P, lp + ".self_attn", x, x, allow, n_heads)
    a, caches["sa_drop"] = L.dropout_fwd(a, rate, rng)
    x, caches["ln1"] = L.layer_norm_fwd(x + a, P[lp + ".ln1.g"], P[lp + ".ln1.b"])
    if mem is not None:
        c, caches["ca"] = L.attention_fwd(P, lp + ".cross_attn", x, mem, mem_allow, n_heads)
        c, caches["ca_drop"] = L.dropout_fwd(c, rate, rng)
        x, caches["lnc"] = L.layer_norm_fwd(x + c, P[lp + ".ln_cross.g"], P[lp + ".ln_cross.b"])
    f, caches["ffn"] = L.ffn_fwd(P, lp + ".ffn", x)
    f, caches["ffn_drop"] = L.dropout_fwd(f, rate, rng)
    x, caches["ln2"] = L.layer_norm_fwd(x + f, P[lp + ".ln2.g"], P[lp + ".ln2.b"])
    return x, caches


def _block_bwd(dx, caches, P, lp, grads):
    """Returns (d input, d memory or None)."""
    dx = L.layer_norm_bwd(dx, caches["ln2"], P[lp + ".ln2.g"], grads, lp + ".ln2")
    df = L.dropout_bwd(dx, caches["ffn_drop"])
    dx = dx + L.ffn_bwd(df, caches["ffn"], P, lp + ".ffn", grads)
    dmem = None
    if "ca" in caches:
        dx = L.layer_norm_bwd(dx, caches["lnc"], P[lp + ".ln_cross.g"], grads, lp + ".ln_cross")
        dc = L.dropout_bwd(dx, caches["ca_drop"])
        dq, dmem = L.attention_bwd(dc, caches["ca"], P, grads, self_attn=False)
        dx = dx + dq
    dx = L.layer_norm_bwd(dx, caches["ln1"], P[lp + ".ln1.g"], grads, lp + ".ln1")
    da = L.dropout_bwd(dx, caches["sa_drop"])
    dsa, _ = L.attention_bwd(da, caches["sa"], P, grads, self_attn=True)
    return dx + dsa, dmem


def _stack_fwd(P, cfg, pre, ids, allow, rate, rng, mem=None, mem_allow=None):
    x, ecache = _embed_fwd(P, pre, ids, rate, rng)
    caches = []
    for i in range(cfg.n_layers):
        x, c = _block_fwd(P, f"{pre}.layers.{i}", x, allow, cfg.n_heads, rate, rng, mem, mem_allow)
        caches.append(c)
    return x, (ecache, caches)


def _stack_bwd(dx, cache, P, cfg, pre, grads):
    ecache, caches = cache
    dmem = None
    for i in reversed(range(cfg.n_layers)):
        dx, dm = _block_bwd(dx, caches[i], P, f"{pre}.layers.{i}", grads)
        if dm is not None:
            dmem = dm if dmem is None else dmem + dm
    _embed_bwd(dx, ecache, P, pre, grads)
    return dmem


def _head(cfg):
    return "mlm_head" if cfg.arch == "enc_only" else "lm_head"


# -- inference helpers ---------------------------------------------------------


def encode(params, src_ids):
    """Encoder states and source key mask (enc_dec / enc_only)."""
    cfg, P = params.cfg, params.tensors
    src = _check_ids(src_ids, cfg.vocab_src, cfg.max_len, "src_ids")
    allow = pad_allow(src)
    h, _ = _stack_fwd(P, cfg, "enc", src, allow, 0.0, None)
    return h, allow


def decoder_states(params, tgt_ids, memory=None, memory_allow=None):
    cfg, P = params.cfg, params.tensors
    tgt = _check_ids(tgt_ids, cfg.vocab_tgt, cfg.max_len, "tgt_ids")
    allow = pad_allow(tgt) & causal_allow(tgt.shape[1])
    if cfg.arch == "enc_dec":
        if memory is None:
            raise ShapeError("enc_dec decoding needs encoder states")
    else:
        memory = memory_allow = None
    h, _ = _stack_fwd(P, cfg, "dec", tgt, allow, 0.0, None, memory, memory_allow)
    return h


def head_logits(params, h):
    pre = _head(params.cfg)
    return L.linear_fwd(h, params[pre + ".w"], params[pre + ".b"])


def forward_logits(params, src_ids=None, tgt_ids=None):
    """Logits [B, T, V] over the output vocabulary for the model's arch."""
    cfg = params.cfg
    if cfg.arch == "enc_only":
        h, _ = encode(params, src_ids)
        return head_logits(params, h)
    mem = mem_allow = None
    if cfg.arch == "enc_dec":
        mem, mem_allow = encode(params, src_ids)
        if np.asarray(tgt_ids).shape[0] != mem.shape[0]:
            raise ShapeError("src and tgt batch sizes differ")
    return head_logits(params, decoder_states(params, tgt_ids, mem, mem_allow))


# -- training ------------------------------------------------------------------


def _xent(logits, targets):
    """Mean cross-entropy over positions with target != 0 and dlogits."""
    valid = targets != PAD
    n = int(valid.sum())
    if n == 0:
        raise ShapeError("batch has no target positions")
    z = logits - logits.max(axis=-1, keepdims=True)
    lse = np.log(np.exp(z).sum(axis=-1, keepdims=True))
    logp = z - lse
    picked = np.take_along_axis(logp, targets[..., None], axis=-1)[..., 0]
    loss = -float(picked[valid].astype(np.float64).sum()) / n
    d = np.exp(logp)
    np.put_along_axis(d, targets[..., None], np.take_along_axis(d, targets[..., None], -1) - 1, -1)
    d *= (valid[..., None] / n).astype(d.dtype)
    return loss, d, n


def loss_and_grads(params, batch, rng=None, dropout=None, need_grads=True):
    """Teacher-forced cross-entropy and analytic gradients for every tensor.

    Dropout is applied only when ``rng`` is given; ``dropout`` overrides the
    configured rate.
    """
    cfg, P = params.cfg, params.tensors
    rate = cfg.dropout if dropout is None else dropout
    if rng is None:
        rate = 0.0
    targets = np.asarray(batch["tgt_out"], dtype=np.int64)
    enc_cache = dec_cache = None
    if cfg.arch in ("enc_dec", "enc_only"):
        src = _check_ids(batch["src"], cfg.vocab_src, cfg.max_len, "src")
        src_allow = pad_allow(src)
        mem, enc_cache = _stack_fwd(P, cfg, "enc", src, src_allow, rate, rng)
    if cfg.arch == "enc_only":
        h = mem
        vocab = cfg.vocab_src
    else:
        tgt = _check_ids(batch["tgt_in"], cfg.vocab_tgt, cfg.max_len, "tgt_in")
        allow = pad_allow(tgt) & causal_allow(tgt.shape[1])
        if cfg.arch == "enc_dec":
            h, dec_cache = _stack_fwd(P, cfg, "dec", tgt, allow, rate, rng, mem, src_allow)
        else:
            h, dec_cache = _stack_fwd(P, cfg, "dec", tgt, allow, rate, rng)
        vocab = cfg.vocab_tgt
    if targets.shape != h.shape[:2]:
        raise ShapeError(f"tgt_out shape {targets.shape} does not match {h.shape[:2]}")
    if targets.size and (targets.min() < 0 or targets.max() >= vocab):
        raise VocabOverflow("tgt_out ids out of range")
    head = _head(cfg)
    logits = L.linear_fwd(h, P[head + ".w"], P[head + ".b"])
    loss, dlogits, n_tok = _xent(logits, targets)
    if not need_grads:
        return loss, None
    grads = {}
    dh = L.linear_bwd(dlogits, h, P[head + ".w"], grads, head + ".w", head + ".b")
    if cfg.arch == "enc_only":
        _stack_bwd(dh, enc_cache, P, cfg, "enc", grads)
    else:
        dmem = _stack_bwd(dh, dec_cache, P, cfg, "dec", grads)
        if cfg.arch == "enc_dec":
            _stack_bwd(dmem, enc_cache, P, cfg, "enc", grads)
    for name, t in P.items():
        if name not in grads:
            grads[name] = np.zeros_like(t)
        else:
            grads[name] = grads[name].astype(t.dtype, copy=False)
    return loss, {name: grads[name] for name in P}


def batch_loss(params, batch):
    """Summed cross-entropy and target count, no dropout, no gradients."""
    loss, _ = loss_and_grads(params, batch, need_grads=False)
    n = int((np.asarray(batch["tgt_out"]) != PAD).sum())
    return loss * n, n
