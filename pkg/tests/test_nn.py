import math

import numpy as np
import pytest

from prot2mol.biotok import BOS, EOS
from prot2mol.nn import checkpoint
from prot2mol.nn.config import (
    ConfigError,
    ConfigMismatch,
    ModelConfig,
    ShapeError,
    ShapeMismatch,
    TrainConfig,
    VocabOverflow,
)
from prot2mol.nn.gradcheck import TINY, grad_check
from prot2mol.nn.model import forward_logits, loss_and_grads
from prot2mol.nn.optim import linear_schedule
from prot2mol.nn.params import ModelParams, param_shapes
from prot2mol.nn.surgery import (
    COPY,
    RANDOM,
    classify,
    encoder_config,
    mlm_to_clm,
    warm_start_one_stage,
    warm_start_two_stage,
)
from prot2mol.nn.train import clm_batch, fit, pretrain_mlm, train_clm, train_seq2seq

SMALL = dict(n_layers=2, d_model=16, d_ff=32, n_heads=2, vocab_src=13, vocab_tgt=11, max_len=12)


def cfg(arch="enc_dec", **kw):
    return ModelConfig(**{**SMALL, **kw}, arch=arch)


def test_config_validation():
    with pytest.raises(ConfigError):
        ModelConfig(d_model=30, n_heads=4)
    with pytest.raises(ConfigError):
        ModelConfig(n_layers=0)
    with pytest.raises(ConfigError):
        ModelConfig(arch="lstm")
    d = TrainConfig()
    assert (d.warmup_steps, d.batch_size, d.grad_accum, d.epochs) == (2000, 8, 8, 5)
    assert d.effective_batch == 64


def test_output_shapes():
    rng = np.random.default_rng(0)
    p = ModelParams.init(cfg(), 0)
    src = rng.integers(4, 13, size=(3, 7))
    tgt = rng.integers(4, 11, size=(3, 5))
    assert forward_logits(p, src, tgt).shape == (3, 5, 11)
    q = ModelParams.init(cfg("dec_only"), 0)
    assert forward_logits(q, tgt_ids=tgt).shape == (3, 5, 11)
    r = ModelParams.init(cfg("enc_only"), 0)
    assert forward_logits(r, src_ids=src).shape == (3, 7, 13)


def test_input_errors():
    p = ModelParams.init(cfg(), 0)
    with pytest.raises(VocabOverflow):
        forward_logits(p, [[4, 99]], [[1, 4]])
    with pytest.raises(ShapeError):
        forward_logits(p, [[4] * 20], [[1, 4]])
    with pytest.raises(ShapeError):
        forward_logits(p, [[0, 0]], [[1, 4]])


def _perturbed(arch, seed=0):
    p = ModelParams.init(cfg(arch), seed)
    rng = np.random.default_rng(seed + 9)
    for v in p.tensors.values():
        v += (rng.standard_normal(v.shape) * 0.2).astype(v.dtype)
    return p


@pytest.mark.parametrize("arch", ["enc_dec", "dec_only"])
def test_causality(arch):
    p = _perturbed(arch)
    rng = np.random.default_rng(1)
    src = rng.integers(4, 13, size=(1, 6))
    tgt = rng.integers(4, 11, size=(1, 8))
    tgt2 = tgt.copy()
    tgt2[0, 5:] = rng.integers(4, 11, size=3)
    a = forward_logits(p, src if arch == "enc_dec" else None, tgt)
    b = forward_logits(p, src if arch == "enc_dec" else None, tgt2)
    np.testing.assert_allclose(a[0, :5], b[0, :5], atol=1e-6)
    assert not np.allclose(a[0, 5:], b[0, 5:])


def test_source_padding_invariance():
    p = _perturbed("enc_dec")
    src = np.array([[5, 6, 7, 8]])
    padded = np.array([[5, 6, 7, 8, 0, 0, 0]])
    tgt = np.array([[1, 4, 5]])
    np.testing.assert_allclose(forward_logits(p, src, tgt), forward_logits(p, padded, tgt), atol=1e-6)


def test_uniform_model_loss_is_log_vocab():
    c = cfg()
    p = ModelParams.init(c, 0)
    p.tensors["lm_head.w"][:] = 0
    p.tensors["lm_head.b"][:] = 0
    batch = {"src": [[4, 5, 6]], "tgt_in": [[1, 4, 5]], "tgt_out": [[4, 5, 2]]}
    loss, _ = loss_and_grads(p, batch)
    assert loss == pytest.approx(math.log(c.vocab_tgt), rel=1e-6)


def test_confident_model_loss_near_zero():
    c = cfg("dec_only")
    p = ModelParams.init(c, 0)
    p.tensors["lm_head.w"][:] = 0
    p.tensors["lm_head.b"][:] = 0
    p.tensors["lm_head.b"][7] = 40.0
    loss, _ = loss_and_grads(p, {"tgt_in": [[1, 7, 7]], "tgt_out": [[7, 7, 7]]})
    assert 0 <= loss < 1e-12


@pytest.mark.parametrize("arch", ["enc_dec", "dec_only", "enc_only"])
def test_grad_check_passes(arch):
    rep = grad_check(ModelConfig(**TINY, arch=arch), seed=0, tolerance=1e-6)
    assert rep.passed, rep.max_error
    assert set(rep.per_tensor) == {n for n, _ in param_shapes(ModelConfig(**TINY, arch=arch))}


def test_grad_check_catches_a_broken_backward():
    def broken(params, batch, rng=None, dropout=None, need_grads=True):
        loss, grads = loss_and_grads(params, batch, need_grads=need_grads)
        if grads is not None:
            grads["dec.layers.0.ffn.w1"] = grads["dec.layers.0.ffn.w1"] * 1.01
        return loss, grads

    rep = grad_check(ModelConfig(**TINY, arch="dec_only"), loss_fn=broken)
    assert not rep.passed
    bad = [k for k, e in rep.per_tensor.items() if e > 1e-6]
    assert bad == ["dec.layers.0.ffn.w1"]


# -- surgery ------------------------------------------------------------------


def _ckpts(seed=0):
    c = cfg()
    enc = ModelParams.init(encoder_config(c, c.vocab_src), seed + 1)
    dec = ModelParams.init(encoder_config(c, c.vocab_tgt), seed + 2)
    return c, enc, dec


def test_one_stage_surgery():
    c, enc, dec = _ckpts()
    p, audit = warm_start_one_stage(enc, dec, c, seed=5, return_audit=True)
    assert set(audit) == set(p.tensors)
    assert all(classify(n)[0] is not None for n in p.tensors)
    for name, (group, kind, src) in audit.items():
        if name.startswith("enc."):
            assert np.array_equal(p[name], enc[name])
        elif kind == COPY:
            assert np.array_equal(p[name], dec[src])
            assert src == "enc." + name[len("dec."):]
        else:
            assert group in ("cross_attention", "lm_head")
    assert {g for g, k, _ in audit.values() if k == RANDOM} == {"cross_attention", "lm_head"}


def test_two_stage_surgery_and_seed_scope():
    c, enc, dec = _ckpts()
    clm = mlm_to_clm(dec)
    assert np.array_equal(clm["lm_head.w"], dec["mlm_head.w"])
    p = warm_start_two_stage(enc, clm, c, seed=5)
    for name in p.tensors:
        group, kind = classify(name)
        if name.startswith("dec.") and kind == COPY:
            assert np.array_equal(p[name], clm[name])
    q = warm_start_two_stage(enc, clm, c, seed=6)
    diff = {n for n in p.tensors if not np.array_equal(p[n], q[n])}
    # the seed only touches freshly drawn tensors (zero-initialized biases agree anyway)
    assert diff and all(classify(n)[1] == RANDOM for n in diff)


def test_surgery_errors():
    c, enc, dec = _ckpts()
    with pytest.raises(ConfigMismatch):
        warm_start_one_stage(enc, dec, c.replace(n_layers=1))
    with pytest.raises(ConfigMismatch):
        warm_start_one_stage(dec, dec, c)  # vocabulary disagrees
    bad = ModelParams.init(encoder_config(c.replace(d_ff=8), c.vocab_tgt), 0)
    with pytest.raises(ShapeMismatch):
        warm_start_one_stage(enc, bad, c)
    with pytest.raises(ConfigMismatch):
        warm_start_two_stage(enc, dec, c)


# -- optimization --------------------------------------------------------------


def test_schedule_endpoints():
    assert linear_schedule(0, 1.0, 10, 100) == 0.0
    assert linear_schedule(5, 1.0, 10, 100) == 0.5
    assert linear_schedule(10, 1.0, 10, 100) == 1.0
    assert linear_schedule(55, 1.0, 10, 100) == 0.5
    assert linear_schedule(100, 1.0, 10, 100) == 0.0
    assert linear_schedule(3, 1.0, 2000, 6) == 0.5  # warm-up clipped to the run


def _toy_pairs():
    rng = np.random.default_rng(0)
    out = []
    for _ in range(12):
        src = [BOS] + rng.integers(4, 13, size=5).tolist() + [EOS]
        tgt = [BOS] + [4 + (s % 7) for s in src[1:-1]] + [EOS]
        out.append((src, tgt))
    return out


def test_training_is_deterministic():
    tc = TrainConfig(peak_lr=3e-3, warmup_steps=2, batch_size=4, grad_accum=1, epochs=3, seed=3)
    init = ModelParams.init(cfg(), 0)
    a, ha = train_seq2seq(init, _toy_pairs(), [], tc)
    b, hb = train_seq2seq(init, _toy_pairs(), [], tc)
    assert a.equal(b)
    assert ha == hb


def test_loss_decreases():
    tc = TrainConfig(peak_lr=3e-3, warmup_steps=5, batch_size=4, grad_accum=1, epochs=40,
                     max_steps=100, eval_every=20, seed=0)
    _, hist = train_seq2seq(ModelParams.init(cfg(), 0), _toy_pairs(), [], tc)
    probes = [loss for _, loss in hist["probes"]]
    assert len(probes) == 5
    assert all(b < a for a, b in zip(probes, probes[1:]))


def test_zero_steps_keeps_init():
    init = ModelParams.init(cfg(), 0)
    tc = TrainConfig(max_steps=0)
    out, hist = train_seq2seq(init, _toy_pairs(), [], tc)
    assert out.equal(init)
    assert hist["total_steps"] == 0


def test_gradient_accumulation_matches_big_batch():
    pairs = _toy_pairs()[:8]
    init = ModelParams.init(cfg(dropout=0.0), 0)
    big = TrainConfig(peak_lr=1e-3, warmup_steps=0, batch_size=8, grad_accum=1, epochs=1)
    acc = TrainConfig(peak_lr=1e-3, warmup_steps=0, batch_size=4, grad_accum=2, epochs=1)
    a, _ = train_seq2seq(init, pairs, [], big)
    b, _ = train_seq2seq(init, pairs, [], acc)
    # equal-length examples, so the two mean losses weight tokens identically
    for k in a.tensors:
        np.testing.assert_allclose(a[k], b[k], atol=1e-5)


def test_mlm_pretraining_runs():
    c = encoder_config(cfg(), 13)
    corpus = [s for s, _ in _toy_pairs()]
    tc = TrainConfig(peak_lr=2e-3, warmup_steps=2, batch_size=4, grad_accum=1, epochs=2)
    p, hist = pretrain_mlm(ModelParams.init(c, 0), corpus, tc)
    assert p.all_finite() and hist["total_steps"] == 6


def test_clm_overfits_single_sequence():
    c = cfg("dec_only", dropout=0.0)
    seq = [BOS, 4, 5, 6, 7, 8, 9, 10, EOS]
    tc = TrainConfig(peak_lr=5e-3, warmup_steps=10, batch_size=1, grad_accum=1, epochs=500,
                     max_steps=500, seed=0)
    p, hist = train_clm(ModelParams.init(c, 0), [seq], tc)
    loss, _ = loss_and_grads(p, clm_batch([seq]), need_grads=False)
    assert loss < 0.1


def test_checkpoint_round_trip(tmp_path):
    p = ModelParams.init(cfg(), 4)
    path = tmp_path / "m.mtf"
    checkpoint.save(p, path, meta={"seed": 4})
    q, meta = checkpoint.load(path)
    assert q.equal(p) and meta == {"seed": 4}
    assert path.read_bytes()[:4] == b"MTF1"
    buf = path.read_bytes()
    with pytest.raises(checkpoint.CheckpointError):
        checkpoint.loads(b"XXXX" + buf[4:])
    with pytest.raises(checkpoint.CheckpointError):
        checkpoint.loads(buf[:-8])


def test_fit_rejects_empty():
    from prot2mol.nn.config import EmptyDataset
    with pytest.raises(EmptyDataset):
        fit(ModelParams.init(cfg(), 0), [], [], TrainConfig(), clm_batch)
