"""Training loops: seq2seq fine-tuning, masked-LM and causal-LM pretraining."""

import math

import numpy as np

from ..biotok import BOS, EOS, PAD, SPECIALS, UNK, EmptyCorpus
from .config import EmptyDataset, NonFiniteLoss, TrainConfig
from .model import batch_loss, loss_and_grads
from .optim import Adam, linear_schedule

MASK = UNK  # the vocabularies carry no dedicated mask symbol


def frame(ids, max_len):
    """[bos] + ids + [eos], truncated so the eos survives."""
    ids = list(ids)[: max_len - 2]
    return [BOS] + ids + [EOS]


def pad_to(seqs, value=PAD):
    width = max(len(s) for s in seqs)
    out = np.full((len(seqs), width), value, dtype=np.int64)
    for i, s in enumerate(seqs):
        out[i, : len(s)] = s
    return out


def seq2seq_examples(pairs, src_vocab, tgt_vocab, max_len):
    """(protein, smiles) strings -> list of (src ids, framed tgt ids)."""
    out = []
    for prot, smi in pairs:
        src = frame(src_vocab.encode(prot), max_len)
        tgt = frame(tgt_vocab.encode(smi), max_len + 1)
        out.append((src, tgt))
    return out


def seq2seq_batch(examples, rng=None, mask_prob=None):
    src = pad_to([e[0] for e in examples])
    tgt = pad_to([e[1] for e in examples])
    return {"src": src, "tgt_in": tgt[:, :-1], "tgt_out": tgt[:, 1:]}


def clm_batch(examples, rng=None, mask_prob=None):
    tgt = pad_to(examples)
    return {"tgt_in": tgt[:, :-1], "tgt_out": tgt[:, 1:]}


def mlm_batch(examples, rng, mask_prob):
    """Replace a random subset of non-special tokens by the mask id."""
    src = pad_to(examples)
    maskable = src >= len(SPECIALS)
    pick = (rng.random(src.shape) < mask_prob) & maskable
    # every row gets at least one prediction target
    for i in np.flatnonzero(~pick.any(axis=1)):
        cand = np.flatnonzero(maskable[i])
        if cand.size:
            pick[i, cand[rng.integers(cand.size)]] = True
    if not pick.any():
        raise EmptyDataset("no maskable tokens in batch")
    tgt = np.where(pick, src, PAD)
    src = np.where(pick, MASK, src)
    return {"src": src, "tgt_out": tgt}


def mean_loss(params, examples, make_batch, batch_size=32, seed=0):
    """Token-weighted loss without dropout."""
    rng = np.random.default_rng(seed)
    total, count = 0.0, 0
    for k in range(0, len(examples), batch_size):
        s, n = batch_loss(params, make_batch(examples[k : k + batch_size], rng, 0.15))
        total += s
        count += n
    return total / count


def total_optimizer_steps(n_examples, tc):
    micro = math.ceil(n_examples / tc.batch_size)
    steps = tc.epochs * math.ceil(micro / tc.grad_accum)
    if tc.max_steps is not None:
        steps = min(steps, tc.max_steps)
    return steps


def fit(params, train, valid, tc, make_batch):
    """Generic loop shared by every training mode.

    Returns (best params, history). The checkpoint kept is the epoch with
    the lowest validation loss, or the last one when there is no
    validation data.
    """
    if not train:
        raise EmptyDataset("no training examples")
    params = params.copy()
    order_rng, drop_rng, mask_rng = (
        np.random.default_rng(s) for s in np.random.SeedSequence(tc.seed).spawn(3)
    )
    opt = Adam(params, tc.beta1, tc.beta2, tc.eps)
    total = total_optimizer_steps(len(train), tc)
    history = {"total_steps": total, "epochs": [], "probes": [], "lr": []}
    best, best_loss, best_epoch = params.copy(), math.inf, -1
    step = 0
    done = total == 0
    for epoch in range(tc.epochs):
        if done:
            break
        perm = order_rng.permutation(len(train))
        micro = [perm[k : k + tc.batch_size] for k in range(0, len(train), tc.batch_size)]
        run_loss, run_n = 0.0, 0
        acc, n_acc = None, 0
        for m, idx in enumerate(micro):
            batch = make_batch([train[i] for i in idx], mask_rng, tc.mask_prob)
            loss, grads = loss_and_grads(params, batch, rng=drop_rng)
            if not math.isfinite(loss):
                raise NonFiniteLoss(
                    f"loss={loss} at epoch {epoch}, micro-batch {m}, optimizer step {step}"
                )
            run_loss += loss
            run_n += 1
            if acc is None:
                acc = grads
            else:
                for k in acc:
                    acc[k] += grads[k]
            n_acc += 1
            if n_acc == tc.grad_accum or m == len(micro) - 1:
                lr = linear_schedule(step, tc.peak_lr, tc.warmup_steps, total)
                for k in acc:
                    acc[k] /= n_acc
                opt.step(params, acc, lr)
                history["lr"].append(lr)
                acc, n_acc = None, 0
                step += 1
                if tc.eval_every and step % tc.eval_every == 0:
                    history["probes"].append((step, mean_loss(params, train, make_batch)))
                if step >= total:
                    done = True
                    break
        val = mean_loss(params, valid, make_batch) if valid else math.nan
        history["epochs"].append(
            {"epoch": epoch, "train_loss": run_loss / max(run_n, 1), "valid_loss": val, "steps": step}
        )
        if not tc.eval_every:
            history["probes"].append((step, mean_loss(params, train, make_batch)))
        score = val if valid else -epoch
        if score < best_loss:
            best, best_loss, best_epoch = params.copy(), score, epoch
    if best_epoch < 0:
        best = params.copy()
    history["best_epoch"] = best_epoch
    history["best_valid_loss"] = best_loss if valid else math.nan
    return best, history


def train_seq2seq(init, train, valid, tc=None):
    """Fine-tune an enc_dec model on tokenized (src, tgt) examples."""
    tc = tc or TrainConfig()
    if init.cfg.arch != "enc_dec":
        raise ValueError("train_seq2seq needs an enc_dec model")
    return fit(init, list(train), list(valid or []), tc, seq2seq_batch)


def pretrain_mlm(init, corpus, tc=None):
    """Masked-LM pretraining of an enc_only model on framed token lists."""
    tc = tc or TrainConfig()
    corpus = [list(s) for s in corpus if len(s)]
    if not corpus:
        raise EmptyCorpus("masked-LM corpus is empty")
    if init.cfg.arch != "enc_only":
        raise ValueError("pretrain_mlm needs an enc_only model")
    return fit(init, corpus, [], tc, mlm_batch)


def train_clm(init, corpus, tc=None, valid=None):
    """Next-token training of a dec_only model on framed token lists."""
    tc = tc or TrainConfig()
    corpus = [list(s) for s in corpus if len(s) > 1]
    if not corpus:
        raise EmptyCorpus("causal-LM corpus is empty")
    return fit(init, corpus, list(valid or []), tc, clm_batch)
