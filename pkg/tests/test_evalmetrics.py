import math

import numpy as np
import pytest

from prot2mol.chem import canonicalize, fingerprint, parse_smiles
from prot2mol.evalmetrics import (
    EMBED_DIM,
    EMBED_LAYOUT,
    DimensionMismatch,
    EmptyInput,
    TooFewSamples,
    basic_rates,
    cosine_counts,
    descriptor_embed,
    fcd,
    frechet_distance,
    freq_cosine_sim,
    int_div,
    jsd,
    metrics_report,
    protein_report,
    snn,
)
from prot2mol.frag import brics_fragments, murcko_scaffold


def bits(smi):
    return set(fingerprint(parse_smiles(smi)).on_bits())


def naive_tanimoto(a, b):
    u = a | b
    return len(a & b) / len(u) if u else 1.0


def test_rates_examples():
    assert basic_rates(["CCO"] * 10, set()).unique == pytest.approx(0.1)
    r = basic_rates(["CCO", "CCN"], {canonicalize("CCO"), canonicalize("CCN")})
    assert r.novel == 0
    r = basic_rates(["CCO", "C1CC", "CCO"], set())
    assert (r.valid, r.unique, r.novel) == (pytest.approx(2 / 3), 0.5, 1.0)
    with pytest.raises(EmptyInput):
        basic_rates([], set())


def test_snn_against_double_loop(corpus):
    gen, ref = corpus[:12], corpus[20:35]
    want = np.mean([max(naive_tanimoto(bits(g), bits(r)) for r in ref) for g in gen])
    assert snn(gen, ref) == pytest.approx(want, abs=1e-12)
    assert snn(gen, gen) == 1.0
    assert snn(["C"], ["c1ccccc1"]) == 0.0


def test_int_div_against_pairs(corpus):
    gen = corpus[:15]
    fps = [bits(s) for s in gen]
    for p in (1, 2):
        sims = [naive_tanimoto(a, b) ** p for a in fps for b in fps]
        want = 1 - np.mean(sims) ** (1 / p)
        assert int_div(gen, p) == pytest.approx(want, abs=1e-12)
    assert int_div(["CCO"] * 4) == 0.0


def test_cosine_against_naive(corpus):
    gen, ref = corpus[:18], corpus[18:36]

    def cos_naive(ka, kb):
        keys = set(ka) | set(kb)
        dot = sum(ka.get(k, 0) * kb.get(k, 0) for k in keys)
        na = math.sqrt(sum(v * v for v in ka.values()))
        nb = math.sqrt(sum(v * v for v in kb.values()))
        return dot / (na * nb) if na and nb else 0.0

    def count(ms, f):
        c = {}
        for s in ms:
            out = f(parse_smiles(s))
            items = out.items() if isinstance(out, dict) else [(out, 1)]
            for k, v in items:
                if k:
                    c[k] = c.get(k, 0) + v
        return c

    assert freq_cosine_sim(gen, ref, "scaffold") == pytest.approx(
        cos_naive(count(gen, murcko_scaffold), count(ref, murcko_scaffold)), abs=1e-12)
    assert freq_cosine_sim(gen, ref, "fragment") == pytest.approx(
        cos_naive(count(gen, brics_fragments), count(ref, brics_fragments)), abs=1e-12)


def test_cosine_examples():
    assert cosine_counts({"A": 2, "B": 1}, {"A": 1, "B": 2}) == pytest.approx(0.8)
    assert freq_cosine_sim(["c1ccccc1C"], ["C1CCCCC1C"]) == 0.0
    assert freq_cosine_sim(["c1ccccc1C", "c1ccncc1"], ["c1ccccc1C", "c1ccncc1"]) == pytest.approx(1.0)


def test_embedding_layout():
    assert EMBED_DIM == 64 == len(EMBED_LAYOUT)
    v = descriptor_embed(parse_smiles("C"))
    assert v[EMBED_LAYOUT.index("count_C")] == 1
    assert v[9:13].sum() == 0 and v[EMBED_LAYOUT.index("ring_count")] == 0
    b = descriptor_embed(parse_smiles("c1ccccc1"))
    assert b[EMBED_LAYOUT.index("bonds_aromatic")] == 6
    assert b[EMBED_LAYOUT.index("largest_ring")] == 6
    assert np.array_equal(descriptor_embed(parse_smiles("OCC")), descriptor_embed(parse_smiles("CCO")))


def test_frechet_closed_form():
    X = np.array([-1.0, 1.0])  # mean 0, sample var 2 with ddof=1
    X = X / math.sqrt(2)  # var 1
    Y = X + 1
    assert frechet_distance(X, Y) == pytest.approx(1.0, abs=1e-9)
    rng = np.random.default_rng(0)
    a, b = rng.normal(size=40), rng.normal(2, 3, size=30)
    want = (a.mean() - b.mean()) ** 2 + (a.std(ddof=1) - b.std(ddof=1)) ** 2
    assert frechet_distance(a, b) == pytest.approx(want, abs=1e-9)


def test_frechet_properties(corpus):
    rng = np.random.default_rng(1)
    X, Y = rng.normal(size=(30, 5)), rng.normal(1, 2, size=(25, 5))
    assert frechet_distance(X, X) <= 1e-6
    assert frechet_distance(X, Y) == pytest.approx(frechet_distance(Y, X), abs=1e-9)
    assert fcd(corpus[:20], corpus[:20]) <= 1e-6
    with pytest.raises(DimensionMismatch):
        frechet_distance(X, Y[:, :3])
    with pytest.raises(TooFewSamples):
        frechet_distance(X[:1], Y)


def test_jsd_properties():
    rng = np.random.default_rng(2)
    a, b = rng.normal(size=100), rng.normal(0.5, size=80)
    assert jsd(a, a) == 0.0
    assert jsd(a, b) == pytest.approx(jsd(b, a), abs=1e-12)
    assert 0 <= jsd(a, b) <= 1
    assert jsd([0, 0.1, 0.2], [10, 10.5]) == pytest.approx(1.0, abs=1e-6)
    with pytest.raises(EmptyInput):
        jsd([], [1.0])


def test_report_in_range(corpus):
    r = metrics_report(corpus[:30] + ["C1CC"], corpus[30:], set(canonicalize(s) for s in corpus[:5]))
    for k in ("valid", "unique", "novel", "filters", "snn", "frag", "scaf"):
        assert 0 <= getattr(r, k) <= 1
    assert r.fcd >= 0
    assert r.metadata["embedder"] == "descriptor-v1"


def test_protein_report_composes(corpus):
    gen = {"T1": corpus[:6], "T2": corpus[6:12], "T3": corpus[12:18], "T4": corpus[:3]}
    act = {"T1": corpus[:6], "T2": corpus[20:27], "T3": corpus[27:33], "T4": ["CCO"]}
    train = {"R1": corpus[:30], "R2": corpus[5:15]}
    rep = protein_report(gen, act, train, seed=3)
    rows = {r["protein_id"]: r for r in rep["test"]}
    assert set(rows) == {"T1", "T2", "T3"}
    assert rows["T1"]["fcd"] <= 1e-6
    for pid in ("T2", "T3"):
        assert rows[pid]["fcd"] == pytest.approx(fcd(gen[pid], act[pid]), abs=1e-12)
        assert rows[pid]["snn"] == pytest.approx(snn(gen[pid], act[pid]), abs=1e-12)
    assert {s["protein_id"] for s in rep["skipped"]} == {"T4", "R2"}
    assert [r["protein_id"] for r in rep["reference"]] == ["R1"]
    assert rep["reference"][0]["n_generated"] == 20 and rep["reference"][0]["n_actives"] == 10
    assert protein_report(gen, act, train, seed=3) == rep
