"""Molecule generation by beam search or ancestral sampling.

Both decoders talk to a *step model*: any object with ``log_probs(prefixes)``
taking an int matrix [n, t] of prefixes (all starting with bos) and returning
next-token log-probabilities [n, V]. ``TransformerStepModel`` adapts a
trained enc_dec or dec_only model.

Beam search keeps ``width - (number finished)`` live hypotheses, so a
finished hypothesis permanently takes one slot. With width 1 this is greedy
decoding. Finished hypotheses are ranked by summed log-probability divided
by the number of generated tokens (eos included).
"""

from dataclasses import dataclass

import numpy as np

from .biotok import BOS, EOS, PAD
from .nn.model import decoder_states, encode, head_logits

DEFAULT_N_OUTPUTS = 20
METHODS = ("beam", "sampling")


@dataclass(frozen=True)
class GenerationRequest:
    n_outputs: int = DEFAULT_N_OUTPUTS
    method: str = "beam"
    max_len: int = 64
    temperature: float = 1.0
    seed: int = 0
    top_k: int = 0
    top_p: float = 1.0

    def __post_init__(self):
        if self.n_outputs < 1:
            raise ValueError("n_outputs must be >= 1")
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}")
        if self.max_len < 1:
            raise ValueError("max_len must be >= 1")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0 (0 means argmax)")
        if self.top_k < 0 or not 0.0 < self.top_p <= 1.0:
            raise ValueError("top_k must be >= 0 and top_p in (0, 1]")


def log_softmax(z):
    z = z - z.max(axis=-1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=-1, keepdims=True))


class TransformerStepModel:
    """Next-token log-probabilities from a model, conditioned on ``src_ids``."""

    def __init__(self, params, src_ids=None):
        self.params = params
        self.mem = self.mem_allow = None
        if params.cfg.arch == "enc_dec":
            src = np.asarray(src_ids, dtype=np.int64).reshape(1, -1)
            self.mem, self.mem_allow = encode(params, src)
        elif params.cfg.arch != "dec_only":
            raise ValueError("generation needs an enc_dec or dec_only model")
        self.max_prefix = params.cfg.max_len

    def log_probs(self, prefixes):
        prefixes = np.asarray(prefixes, dtype=np.int64)
        n = prefixes.shape[0]
        if prefixes.shape[1] > self.max_prefix:
            prefixes = prefixes[:, -self.max_prefix :]
        mem = allow = None
        if self.mem is not None:
            mem = np.repeat(self.mem, n, axis=0)
            allow = np.repeat(self.mem_allow, n, axis=0)
        h = decoder_states(self.params, prefixes, mem, allow)
        return log_softmax(head_logits(self.params, h[:, -1]).astype(np.float64))


def beam_search(model, req):
    """Ranked list of (generated tokens, normalized score), best first.

    Generated tokens exclude the leading bos and include the final eos
    when one was emitted.
    """
    width = req.n_outputs
    live = [((BOS,), 0.0)]
    finished = []
    for t in range(req.max_len):
        slots = width - len(finished)
        if slots <= 0 or not live:
            break
        lp = model.log_probs(np.array([seq for seq, _ in live]))
        cands = []
        for b, (seq, score) in enumerate(live):
            for tok in range(lp.shape[1]):
                if tok == PAD or tok == BOS:
                    continue
                cands.append((score + float(lp[b, tok]), seq + (tok,)))
        # best raw score first; ties by token sequence for determinism
        cands.sort(key=lambda c: (-c[0], c[1]))
        live = []
        for score, seq in cands[:slots]:
            if seq[-1] == EOS or len(seq) - 1 >= req.max_len:
                finished.append((seq, score))
            else:
                live.append((seq, score))
    ranked = sorted(
        ((seq[1:], score / (len(seq) - 1)) for seq, score in finished),
        key=lambda r: (-r[1], r[0]),
    )
    assert len({seq for seq, _ in ranked}) == len(ranked)
    return [(list(seq), score) for seq, score in ranked]


def _truncate(probs, top_k, top_p):
    if top_k and top_k < probs.shape[-1]:
        kth = np.sort(probs)[-top_k]
        probs = np.where(probs >= kth, probs, 0.0)
    if top_p < 1.0:
        order = np.argsort(-probs, kind="stable")
        csum = np.cumsum(probs[order])
        keep = np.zeros_like(probs, dtype=bool)
        # smallest prefix whose mass reaches top_p
        cut = int(np.searchsorted(csum, top_p * csum[-1])) + 1
        keep[order[:cut]] = True
        probs = np.where(keep, probs, 0.0)
    return probs / probs.sum()


def sample(model, req):
    """``n_outputs`` independent samples as (generated tokens, model log-prob)."""
    rng = np.random.default_rng(req.seed)
    n = req.n_outputs
    seqs = [[BOS] for _ in range(n)]
    logp = [0.0] * n
    alive = list(range(n))
    for _ in range(req.max_len):
        if not alive:
            break
        lp = model.log_probs(np.array([seqs[i] for i in alive]))
        lp[:, PAD] = -np.inf
        lp[:, BOS] = -np.inf
        nxt = []
        for row, i in enumerate(alive):
            if req.temperature == 0:
                tok = int(np.argmax(lp[row]))
            else:
                z = lp[row] / req.temperature
                p = np.exp(z - z.max())
                p = _truncate(p / p.sum(), req.top_k, req.top_p)
                tok = int(np.searchsorted(np.cumsum(p), rng.random() * p.sum(), side="right"))
                tok = min(tok, p.size - 1)
            seqs[i].append(tok)
            logp[i] += float(lp[row, tok])
            if tok != EOS and len(seqs[i]) - 1 < req.max_len:
                nxt.append(i)
        alive = nxt
    return [(s[1:], lp_) for s, lp_ in zip(seqs, logp)]


def generate(model, req):
    """Dispatch on ``req.method``; returns ranked (tokens, score) rows.

    Sampling rows carry the length-normalized log-probability as score.
    """
    if req.method == "beam":
        return beam_search(model, req)
    rows = sample(model, req)
    return [(toks, lp / max(len(toks), 1)) for toks, lp in rows]


def generate_for_proteins(params, proteins, src_vocab, tgt_vocab, req):
    """Rows (protein_id, rank, smiles, score) for each (id, sequence)."""
    from .nn.train import frame

    out = []
    for k, (pid, seq) in enumerate(proteins):
        src = frame(src_vocab.encode(seq), params.cfg.max_len)
        preq = req
        if req.method == "sampling":
            # an independent, reproducible stream per protein
            preq = GenerationRequest(**{**req.__dict__, "seed": req.seed * 1000003 + k})
        model = TransformerStepModel(params, src)
        for rank, (toks, score) in enumerate(generate(model, preq), 1):
            out.append((pid, rank, tgt_vocab.decode([t for t in toks if t != EOS]), score))
    return out


def write_generated(rows, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("protein_id\trank\tsmiles\tscore\n")
        for pid, rank, smi, score in rows:
            fh.write(f"{pid}\t{rank}\t{smi}\t{score:.6f}\n")


def read_generated(path):
    out = []
    with open(path, encoding="utf-8") as fh:
        fh.readline()
        for line in fh:
            cols = line.rstrip("\n").split("\t")
            if len(cols) >= 4:
                out.append((cols[0], int(cols[1]), cols[2], float(cols[3])))
    return out
