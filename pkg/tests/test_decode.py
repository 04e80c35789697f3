import itertools
import math

import numpy as np
import pytest

from prot2mol.biotok import BOS, EOS, PAD, UNK
from prot2mol.decode import GenerationRequest, TransformerStepModel, beam_search, generate, sample
from prot2mol.nn.config import ModelConfig
from prot2mol.nn.params import ModelParams

A, B = 4, 5
V = 6


class TableModel:
    """Step model whose next-token distribution depends on the whole prefix."""

    def __init__(self, seed=0):
        self.rng = np.random.default_rng(seed)
        self.table = {}

    def dist(self, prefix):
        key = tuple(prefix)
        if key not in self.table:
            z = np.full(V, -np.inf)
            z[[EOS, A, B]] = self.rng.normal(size=3) * 1.5
            z -= np.logaddexp.reduce(z[[EOS, A, B]])
            self.table[key] = z
        return self.table[key]

    def log_probs(self, prefixes):
        return np.array([self.dist(p) for p in np.asarray(prefixes)])


def enumerate_all(model, max_len):
    """Every completed output (eos-terminated or max_len long) with its mean log-prob."""
    out = []
    for n in range(1, max_len + 1):
        for body in itertools.product([EOS, A, B], repeat=n):
            if EOS in body[:-1]:
                continue
            if body[-1] != EOS and n < max_len:
                continue
            lp = sum(model.dist((BOS,) + body[:k])[body[k]] for k in range(n))
            out.append((list(body), lp / n))
    return sorted(out, key=lambda r: (-r[1], r[0]))


@pytest.mark.parametrize("seed", range(5))
def test_wide_beam_is_exhaustive(seed):
    m = TableModel(seed)
    got = beam_search(m, GenerationRequest(n_outputs=27, max_len=3))
    got = [(s, sc) for s, sc in got if math.isfinite(sc)]
    want = enumerate_all(m, 3)
    assert [s for s, _ in got] == [s for s, _ in want]
    np.testing.assert_allclose([sc for _, sc in got], [sc for _, sc in want])


def greedy(model, max_len):
    seq = [BOS]
    for _ in range(max_len):
        lp = model.log_probs([seq])[0]
        tok = int(np.argmax(lp))
        seq.append(tok)
        if tok == EOS:
            break
    return seq[1:]


@pytest.mark.parametrize("seed", range(5))
def test_beam_one_is_greedy(seed):
    m = TableModel(seed)
    [(seq, _)] = beam_search(m, GenerationRequest(n_outputs=1, max_len=6))
    assert seq == greedy(m, 6)


def test_temperature_zero_is_greedy():
    m = TableModel(3)
    rows = sample(m, GenerationRequest(n_outputs=4, method="sampling", temperature=0, max_len=6))
    assert all(toks == greedy(m, 6) for toks, _ in rows)


def test_sampling_seeded():
    m = TableModel(1)
    r1 = generate(m, GenerationRequest(n_outputs=30, method="sampling", seed=7, max_len=5))
    r2 = generate(m, GenerationRequest(n_outputs=30, method="sampling", seed=7, max_len=5))
    r3 = generate(m, GenerationRequest(n_outputs=30, method="sampling", seed=8, max_len=5))
    assert r1 == r2 and r1 != r3


def test_sampling_frequencies():
    m = TableModel(2)
    rows = sample(m, GenerationRequest(n_outputs=10000, method="sampling", seed=0, max_len=1))
    first = np.array([toks[0] for toks, _ in rows])
    p = np.exp(m.dist((BOS,)))
    for tok in (EOS, A, B):
        assert abs((first == tok).mean() - p[tok]) <= 0.02
    assert not np.isin(first, [PAD, BOS, UNK]).any()


def test_request_validation():
    with pytest.raises(ValueError):
        GenerationRequest(n_outputs=0)
    with pytest.raises(ValueError):
        GenerationRequest(method="nucleus")
    assert GenerationRequest().n_outputs == 20


def test_transformer_step_model():
    cfg = ModelConfig(n_layers=1, d_model=8, d_ff=16, n_heads=2, vocab_src=9, vocab_tgt=7, max_len=10)
    p = ModelParams.init(cfg, 0)
    m = TransformerStepModel(p, [1, 4, 5, 2])
    lp = m.log_probs([[1, 4], [1, 5]])
    assert lp.shape == (2, 7)
    np.testing.assert_allclose(np.exp(lp).sum(axis=1), 1.0)
    rows = beam_search(m, GenerationRequest(n_outputs=5, max_len=4))
    assert len(rows) == 5
    assert len({tuple(s) for s, _ in rows}) == 5
    assert [sc for _, sc in rows] == sorted((sc for _, sc in rows), reverse=True)
