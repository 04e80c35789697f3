"""Command-line entry point: ``prot2mol <command> [options]``.

Every command reads one optional TOML config (``--config``), lets flags
override it, and writes a ``<output>.manifest.json`` beside each output.
Exit status: 0 success, 1 invalid configuration or input, 2 runtime error.
"""

import argparse
import json
import math
import os
import shutil
import sys
import time
from collections import OrderedDict, defaultdict
from importlib import resources

from threadpoolctl import threadpool_limits

from . import biotok, config as cfgmod, datapipe, decode, dockstats, evalmetrics, runlog
from . import schemas, seqalign
from .nn import checkpoint, gradcheck, surgery
from .nn import train as nntrain
from .nn.config import (
    ARCHS,
    ConfigError,
    ConfigMismatch,
    EmptyDataset,
    ModelConfig,
    ShapeMismatch,
    TrainConfig,
)
from .nn.params import ModelParams

COMMANDS = (
    "prepare-data",
    "split",
    "train-bpe",
    "pretrain-lm",
    "train",
    "generate",
    "evaluate",
    "dock-eval",
    "grad-check",
)
EXTRA_COMMANDS = ("fixture", "smoke")

SCRATCH_LABEL = "scratch-initialized enc_dec"
INIT_LABELS = {
    "scratch": SCRATCH_LABEL,
    "one-stage": "warm-started enc_dec (one-stage)",
    "two-stage": "warm-started enc_dec (two-stage)",
}

FIXTURE_FILES = ("fixture_raw.tsv", "fixture_scores.csv", "smoke.toml")


class InputMissing(cfgmod.ConfigInvalid):
    pass


# errors caused by what the user handed us; everything else is a runtime failure
VALIDATION_ERRORS = (
    cfgmod.ConfigInvalid,
    datapipe.SchemaError,
    dockstats.ScoreFormatError,
    biotok.VocabFormatError,
    biotok.VocabTooSmall,
    biotok.EmptyCorpus,
    checkpoint.CheckpointError,
    seqalign.MissingFamily,
    seqalign.UnknownResidue,
    seqalign.EmptySequence,
    seqalign.InsufficientProteins,
    ConfigError,
    ConfigMismatch,
    ShapeMismatch,
    EmptyDataset,
)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise cfgmod.ConfigInvalid("", f"{self.prog}: {message}")


def _clean(obj):
    """JSON-safe copy: NaN/inf become null, tuples become lists."""
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def _write_json(obj, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(_clean(obj), fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")


def _ensure_parent(path):
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)


class Context:
    """Resolved config plus bookkeeping for one command invocation."""

    def __init__(self, command, cfg, threads, ci):
        self.command = command
        self.cfg = cfg
        self.threads = threads
        self.ci = ci
        self.seeds = {}
        self.inputs = []

    def path(self, key, flag=None, required=True, must_exist=True):
        value = flag if flag is not None else self.cfg["paths"][key]
        if value is None:
            if required:
                raise cfgmod.ConfigInvalid(f"paths.{key}", "required path is not set")
            return None
        cfgmod.override(self.cfg, "paths", key, str(value))
        if must_exist:
            if not os.path.exists(value):
                raise InputMissing(f"paths.{key}", f"input file not found: {value}")
            if os.path.isfile(value):
                self.inputs.append(value)
        return value

    def seed(self, name, flag=None):
        if flag is not None:
            cfgmod.override(self.cfg, "seeds", name, flag)
        elif self.ci and name not in self.cfg.explicit_seeds:
            raise cfgmod.ConfigInvalid(f"seeds.{name}", "seed must be set explicitly in CI mode")
        self.seeds[name] = self.cfg["seeds"][name]
        return self.seeds[name]

    def setting(self, section, key, flag=None):
        if flag is not None:
            cfgmod.override(self.cfg, section, key, flag)
        return self.cfg[section][key]

    def manifest(self, output, extra=None):
        path = runlog.write_manifest(
            output,
            self.command,
            self.cfg.digest(),
            dict(self.seeds),
            self.threads,
            self.inputs,
            extra,
        )
        runlog.event("wrote", output=output, manifest=os.path.basename(path))
        return path


def _model_config(ctx, vocab_src, vocab_tgt, arch):
    m = ctx.cfg["model"]
    return ModelConfig(
        n_layers=m["n_layers"],
        d_model=m["d_model"],
        d_ff=m["d_ff"],
        n_heads=m["n_heads"],
        vocab_src=vocab_src,
        vocab_tgt=vocab_tgt,
        max_len=m["max_len"],
        arch=arch,
        dropout=m["dropout"],
    )


def _train_config(ctx, section, seed):
    t = ctx.cfg[section]
    return TrainConfig(
        peak_lr=t["peak_lr"],
        warmup_steps=t["warmup_steps"],
        batch_size=t["batch_size"],
        grad_accum=t["grad_accum"],
        epochs=t["epochs"],
        seed=seed,
        beta1=t["beta1"],
        beta2=t["beta2"],
        eps=t["eps"],
        max_steps=t["max_steps"],
        eval_every=t["eval_every"],
        mask_prob=t.get("mask_prob", 0.15),
    )


def _read_lines(path):
    with open(path, encoding="utf-8") as fh:
        return [line.rstrip("\n") for line in fh if line.strip()]


def _read_protein_list(path):
    """(id, sequence) pairs from a proteins table or a pairs table, first wins."""
    out = OrderedDict()
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n").split("\t")
        if header[:2] not in (["protein_id", "sequence"], ["id", "sequence"]):
            raise datapipe.SchemaError(f"{path}: expected an id and a sequence column")
        for line in fh:
            cols = line.rstrip("\n").split("\t")
            if len(cols) >= 2 and cols[0] and cols[0] not in out:
                out[cols[0]] = cols[1]
    return list(out.items())


def _vocab_from(ctx, key, flag, ckpt_meta, meta_key):
    path = ctx.path(key, flag, required=False)
    if path is not None:
        return biotok.TokenVocab.load(path)
    for meta in ckpt_meta:
        if meta and meta.get(meta_key):
            return biotok.TokenVocab.loads(meta[meta_key])
    raise cfgmod.ConfigInvalid(f"paths.{key}", "vocabulary not given and not stored in a checkpoint")


# -- commands -------------------------------------------------------------------


def cmd_prepare_data(ctx, a):
    raw_path = ctx.path("raw", a.raw)
    split_path = ctx.path("split", a.split, required=False)
    outdir = ctx.path("outdir", a.outdir, must_exist=False)
    raw = datapipe.read_raw(raw_path)
    split = None
    if split_path:
        split = seqalign.read_split_tsv(split_path)
        bad = sorted({v for v in split.values() if v not in datapipe.SPLIT_FILES})
        if bad:
            raise datapipe.SchemaError(f"{split_path}: unknown split names {bad}")
    ds = datapipe.build_dataset(raw, split)
    for path in datapipe.write_outputs(ds, outdir, with_pairs=split is not None):
        ctx.manifest(path)
    rep = ds.report()
    runlog.event("prepared", rows=rep["input_rows"], kept=rep["kept_rows"],
                 records=rep["records"], proteins=len(ds.proteins))


def cmd_split(ctx, a):
    prot_path = ctx.path("proteins", a.proteins)
    out = ctx.path("split", a.out, must_exist=False)
    n = ctx.setting("split", "n_heldout", a.n)
    seed = ctx.seed("split", a.seed)
    proteins = seqalign.read_proteins_tsv(prot_path)
    assignment = seqalign.make_split(proteins, n, seed, workers=ctx.threads)
    _ensure_parent(out)
    seqalign.write_split_tsv(assignment, out)
    ctx.manifest(out, {"n_heldout": n})
    counts = defaultdict(int)
    for v in assignment.values():
        counts[v] += 1
    runlog.event("split", **{k: counts[k] for k in ("train", "validation", "test")})


def cmd_train_bpe(ctx, a):
    key = "src_vocab" if a.kind == "protein" else "tgt_vocab"
    corpus_key = "protein_corpus" if a.kind == "protein" else "ligand_corpus"
    src = ctx.path(corpus_key, a.input)
    out = ctx.path(key, a.out, must_exist=False)
    size = ctx.setting("bpe", f"{a.kind if a.kind == 'protein' else 'smiles'}_vocab_size",
                       a.vocab_size)
    vocab = biotok.train_bpe(_read_lines(src), size)
    _ensure_parent(out)
    vocab.save(out)
    ctx.manifest(out, {"vocab_size": size, "tokens": len(vocab), "merges": len(vocab.merges)})
    runlog.event("bpe", tokens=len(vocab), merges=len(vocab.merges))


def cmd_pretrain_lm(ctx, a):
    corpus_key = "protein_corpus" if a.corpus_kind == "protein" else "ligand_corpus"
    corpus_path = ctx.path(corpus_key, a.corpus)
    vocab_path = ctx.path("src_vocab" if a.corpus_kind == "protein" else "tgt_vocab", a.vocab)
    out_key = {"mlm": "enc_ckpt" if a.corpus_kind == "protein" else "dec_ckpt", "clm": "clm_ckpt"}
    out = ctx.path(out_key[a.kind], a.out, must_exist=False)
    seed = ctx.seed("train", a.seed)
    vocab = biotok.TokenVocab.load(vocab_path)
    max_len = ctx.cfg["model"]["max_len"]
    corpus = _read_lines(corpus_path)
    init_meta = None
    if a.init:
        if not os.path.isfile(a.init):
            raise InputMissing("init", f"input file not found: {a.init}")
        ctx.inputs.append(a.init)
        init_params, init_meta = checkpoint.load(a.init)
    tc = _train_config(ctx, "pretrain", seed)
    if a.kind == "mlm":
        if a.init:
            params = init_params
        else:
            base = _model_config(ctx, len(vocab), len(vocab), "enc_only")
            params = ModelParams.init(surgery.encoder_config(base, len(vocab)), seed)
        if params.cfg.arch != "enc_only" or params.cfg.vocab_src != len(vocab):
            raise ConfigMismatch("masked-LM pretraining needs an enc_only model over the vocabulary")
        examples = [nntrain.frame(vocab.encode(s), max_len) for s in corpus]
        best, history = nntrain.pretrain_mlm(params, examples, tc)
    else:
        if a.init:
            params = surgery.mlm_to_clm(init_params) if init_params.cfg.arch == "enc_only" else init_params
        else:
            params = ModelParams.init(_model_config(ctx, len(vocab), len(vocab), "dec_only"), seed)
        if params.cfg.arch != "dec_only" or params.cfg.vocab_tgt != len(vocab):
            raise ConfigMismatch("causal-LM pretraining needs a dec_only model over the vocabulary")
        examples = [nntrain.frame(vocab.encode(s), max_len + 1) for s in corpus]
        best, history = nntrain.train_clm(params, examples, tc)
    if init_meta and init_meta.get("vocab") and init_meta["vocab"] != vocab.dumps():
        raise ConfigMismatch("--init checkpoint was trained with a different vocabulary")
    _ensure_parent(out)
    meta = {
        "kind": a.kind,
        "corpus": a.corpus_kind,
        "vocab": vocab.dumps(),
        "seed": seed,
        "history": _clean(history),
    }
    checkpoint.save(best, out, meta)
    ctx.manifest(out, {"kind": a.kind, "steps": history["total_steps"]})
    last = history["epochs"][-1] if history["epochs"] else {}
    runlog.event("pretrained", kind=a.kind, steps=history["total_steps"],
                 train_loss=f"{last.get('train_loss', float('nan')):.4f}")


def cmd_train(ctx, a):
    train_path = ctx.path("train_pairs", a.train or (a.data and os.path.join(a.data, "train.tsv")))
    valid_path = ctx.path(
        "valid_pairs", a.valid or (a.data and os.path.join(a.data, "valid.tsv")), required=False
    )
    out = ctx.path("model", a.out, must_exist=False)
    seed = ctx.seed("train", a.seed)
    enc = dec = clm = None
    metas = []
    if a.init in ("one-stage", "two-stage"):
        enc, m = checkpoint.load(ctx.path("enc_ckpt", a.enc_ckpt))
        metas.append(("src", m))
    if a.init == "one-stage":
        dec, m = checkpoint.load(ctx.path("dec_ckpt", a.dec_ckpt))
        metas.append(("tgt", m))
    if a.init == "two-stage":
        clm, m = checkpoint.load(ctx.path("clm_ckpt", a.clm_ckpt))
        metas.append(("tgt", m))
    src_vocab = _vocab_from(ctx, "src_vocab", a.src_vocab,
                            [m for side, m in metas if side == "src"], "vocab")
    tgt_vocab = _vocab_from(ctx, "tgt_vocab", a.tgt_vocab,
                            [m for side, m in metas if side == "tgt"], "vocab")
    for side, m in metas:
        want = (src_vocab if side == "src" else tgt_vocab).dumps()
        if m.get("vocab") and m["vocab"] != want:
            raise ConfigMismatch(f"{side} checkpoint was pretrained with a different vocabulary")
    mcfg = _model_config(ctx, len(src_vocab), len(tgt_vocab), "enc_dec")
    if a.init == "scratch":
        params = surgery.scratch(mcfg, seed)
    elif a.init == "one-stage":
        params = surgery.warm_start_one_stage(enc, dec, mcfg, seed)
    else:
        params = surgery.warm_start_two_stage(enc, clm, mcfg, seed)
    max_len = mcfg.max_len
    train = nntrain.seq2seq_examples(
        [(s, m) for _, s, m in datapipe.read_pairs(train_path)], src_vocab, tgt_vocab, max_len
    )
    valid = []
    if valid_path:
        valid = nntrain.seq2seq_examples(
            [(s, m) for _, s, m in datapipe.read_pairs(valid_path)], src_vocab, tgt_vocab, max_len
        )
    tc = _train_config(ctx, "train", seed)
    best, history = nntrain.train_seq2seq(params, train, valid, tc)
    _ensure_parent(out)
    meta = {
        "kind": "seq2seq",
        "init": a.init,
        "label": INIT_LABELS[a.init],
        "src_vocab": src_vocab.dumps(),
        "tgt_vocab": tgt_vocab.dumps(),
        "seed": seed,
        "history": _clean(history),
    }
    checkpoint.save(best, out, meta)
    ctx.manifest(out, {"init": a.init, "label": INIT_LABELS[a.init],
                       "steps": history["total_steps"]})
    runlog.event("trained", init=a.init, steps=history["total_steps"],
                 best_epoch=history["best_epoch"],
                 best_valid_loss=f"{history['best_valid_loss']:.4f}")


def cmd_generate(ctx, a):
    model_path = ctx.path("model", a.model)
    prot_path = ctx.path("test_pairs", a.proteins)
    out = ctx.path("generated", a.out, must_exist=False)
    params, meta = checkpoint.load(model_path)
    if not (meta.get("src_vocab") and meta.get("tgt_vocab")):
        raise checkpoint.CheckpointError(f"{model_path}: no vocabularies stored in checkpoint")
    src_vocab = biotok.TokenVocab.loads(meta["src_vocab"])
    tgt_vocab = biotok.TokenVocab.loads(meta["tgt_vocab"])
    g = ctx.cfg["generate"]
    req = decode.GenerationRequest(
        n_outputs=ctx.setting("generate", "n_outputs", a.n),
        method=ctx.setting("generate", "method", a.method),
        max_len=min(ctx.setting("generate", "max_len", a.max_len), params.cfg.max_len),
        temperature=ctx.setting("generate", "temperature", a.temperature),
        seed=ctx.seed("generate", a.seed),
        top_k=g["top_k"],
        top_p=g["top_p"],
    )
    proteins = _read_protein_list(prot_path)
    rows = decode.generate_for_proteins(params, proteins, src_vocab, tgt_vocab, req)
    _ensure_parent(out)
    decode.write_generated(rows, out)
    ctx.manifest(out, {"method": req.method, "n_outputs": req.n_outputs,
                       "max_len": req.max_len, "model_label": meta.get("label", "")})
    runlog.event("generated", proteins=len(proteins), rows=len(rows), method=req.method)


def _parse_generated(spec):
    label, sep, path = spec.partition("=")
    if not sep:
        path = spec
        label = os.path.splitext(os.path.basename(spec))[0]
    model, _, decoding = label.partition("/")
    return label, model, decoding or "unspecified", path


def _jsd_or_none(a, b):
    if not a or not b:
        return None
    return evalmetrics.jsd(a, b)


def cmd_evaluate(ctx, a):
    specs = [_parse_generated(s) for s in (a.generated or [])]
    if not specs and ctx.cfg["paths"]["generated"]:
        specs = [_parse_generated(ctx.cfg["paths"]["generated"])]
    if not specs:
        raise cfgmod.ConfigInvalid("paths.generated", "required path is not set")
    labels = [s[0] for s in specs]
    if len(set(labels)) != len(labels):
        raise cfgmod.ConfigInvalid("paths.generated", f"duplicate labels in {labels}")
    for _, _, _, path in specs:
        ctx.path("generated", path)
    actives_path = ctx.path("test_pairs", a.actives)
    train_path = ctx.path("train_pairs", a.train)
    out = ctx.path("report", a.out, must_exist=False)
    seed = ctx.seed("eval", a.seed)
    embedder = evalmetrics.DescriptorEmbedder()

    actives = defaultdict(list)
    for pid, _, smi in datapipe.read_pairs(actives_path):
        actives[pid].append(smi)
    train_ref = defaultdict(list)
    for pid, _, smi in datapipe.read_pairs(train_path):
        train_ref[pid].append(smi)
    training_set = sorted({s for v in train_ref.values() for s in v})
    pooled_actives = [s for pid in sorted(actives) for s in actives[pid]]

    table3, table4, per_protein = [], [], {}
    fcd_lists, snn_lists = OrderedDict(), OrderedDict()
    reference = None
    for label, model, decoding, path in specs:
        rows = decode.read_generated(path)
        gen_all = [smi for _, _, smi, _ in rows]
        mr = evalmetrics.metrics_report(gen_all, pooled_actives, training_set, seed, embedder)
        table3.append({
            "model": model,
            "decoding": decoding,
            "Valid": mr.valid,
            "Unique": mr.unique,
            "Novel": mr.novel,
            "FCD": mr.fcd,
            "Scaf": mr.scaf,
            "SNN": mr.snn,
            "Frag": mr.frag,
            "IntDiv": mr.int_div,
            "IntDiv2": mr.int_div2,
            "Filters": mr.filters,
            "n_generated": len(gen_all),
        })
        by_protein = defaultdict(list)
        for pid, _, smi, _ in rows:
            by_protein[pid].append(smi)
        pr = evalmetrics.protein_report(dict(by_protein), dict(actives), dict(train_ref),
                                        seed, embedder)
        if reference is None:
            reference = {"rows": pr["reference"],
                         "skipped": [s for s in pr["skipped"] if s["protein_id"] in train_ref]}
        per_protein[label] = {
            "test": pr["test"],
            "skipped": [s for s in pr["skipped"] if s["protein_id"] not in train_ref],
        }
        fcd_lists[label] = [r["fcd"] for r in pr["test"]]
        snn_lists[label] = [r["snn"] for r in pr["test"]]
    ref_fcd = [r["fcd"] for r in reference["rows"]]
    ref_snn = [r["snn"] for r in reference["rows"]]
    for label, model, decoding, _ in specs:
        reason = None
        if not fcd_lists[label]:
            reason = "no test protein with enough valid generated molecules and actives"
        elif not ref_fcd:
            reason = "no training protein with enough actives for the reference distribution"
        table4.append({
            "model": model,
            "decoding": decoding,
            "JSD_FCD": _jsd_or_none(fcd_lists[label], ref_fcd),
            "JSD_SNN": _jsd_or_none(snn_lists[label], ref_snn),
            "n_test": len(fcd_lists[label]),
            "n_reference": len(ref_fcd),
            "reason": reason,
        })
    names = labels + ["reference"]
    fcd_lists["reference"], snn_lists["reference"] = ref_fcd, ref_snn
    matrix = {
        "labels": names,
        "fcd": [[_jsd_or_none(fcd_lists[x], fcd_lists[y]) for y in names] for x in names],
        "snn": [[_jsd_or_none(snn_lists[x], snn_lists[y]) for y in names] for x in names],
    }
    report = _clean({
        "format": "prot2mol-evaluate-v1",
        "table3": table3,
        "table4": table4,
        "jsd_matrix": matrix,
        "per_protein": per_protein,
        "reference": reference,
        "metadata": {
            "embedder": embedder.id,
            "fcd_warning": evalmetrics.FCD_WARNING,
            "seed": seed,
            "jsd": f"base-2 Jensen-Shannon distance, {evalmetrics.JSD_BINS} pooled bins",
            "reference_sample": evalmetrics.REFERENCE_SAMPLE,
            "n_test_proteins": len(actives),
            "n_train_proteins": len(train_ref),
        },
    })
    schemas.validate_evaluate(report)
    _ensure_parent(out)
    _write_json(report, out)
    ctx.manifest(out, {"labels": labels})
    runlog.event("evaluated", labels=",".join(labels), test_proteins=len(actives))


def cmd_dock_eval(ctx, a):
    scores = ctx.path("scores", a.scores)
    out = ctx.path("report", a.out, must_exist=False)
    alpha = ctx.setting("evaluate", "alpha", a.alpha)
    seed = ctx.seed("eval", a.seed)
    poses = dockstats.read_scores_csv(scores)
    if not poses:
        raise dockstats.ScoreFormatError(f"{scores}: no pose rows")
    report = _clean(dockstats.dock_report(poses, alpha, seed))
    schemas.validate_dock(report)
    _ensure_parent(out)
    _write_json(report, out)
    ctx.manifest(out, {"alpha": alpha})
    runlog.event("docked", targets=len(report["targets"]),
                 excluded=len(report["excluded_targets"]))


def cmd_grad_check(ctx, a):
    seed = ctx.seed("train", a.seed)
    archs = ARCHS if a.arch == "all" else (a.arch,)
    reports = []
    for arch in archs:
        cfg = ModelConfig(**gradcheck.TINY, arch=arch)
        rep = gradcheck.grad_check(cfg, seed=seed, tolerance=a.tolerance)
        reports.append(rep.to_dict())
        runlog.event("grad_check", arch=arch, passed=rep.passed,
                     max_error=f"{rep.max_error:.3e}", seconds=f"{rep.seconds:.1f}")
    passed = all(r["passed"] for r in reports)
    out = a.out
    doc = {"passed": passed, "tolerance": a.tolerance, "seed": seed, "reports": reports}
    if out:
        _ensure_parent(out)
        # timings vary from run to run; keep them out of the primary output
        _write_json({**doc, "reports": [{k: v for k, v in r.items() if k != "seconds"}
                                        for r in reports]}, out)
        ctx.manifest(out, {"seconds": {r["arch"]: r["seconds"] for r in reports}})
    print("PASS" if passed else "FAIL", "max_error=%.3e" % max(r["max_error"] for r in reports))
    return 0 if passed else 2


def cmd_fixture(ctx, a):
    os.makedirs(a.outdir, exist_ok=True)
    data = resources.files("prot2mol") / "data"
    for name in FIXTURE_FILES:
        target = os.path.join(a.outdir, name)
        with resources.as_file(data / name) as src:
            shutil.copyfile(src, target)
        runlog.event("fixture", file=target)


def smoke(workdir, config_path=None, threads=1):
    """The end-to-end pipeline on the bundled fixture; returns (exit code, seconds)."""
    t0 = time.perf_counter()
    os.makedirs(workdir, exist_ok=True)
    w = lambda *p: os.path.join(workdir, *p)  # noqa: E731
    if run("fixture", ["--outdir", workdir]) != 0:
        return 2, time.perf_counter() - t0
    cfg = ["--config", config_path or w("smoke.toml"), "--threads", str(threads)]
    steps = [
        ("prepare-data", ["--raw", w("fixture_raw.tsv"), "--outdir", w("all")]),
        ("split", ["--proteins", w("all", "proteins.tsv"), "--out", w("split.tsv")]),
        ("prepare-data", ["--raw", w("fixture_raw.tsv"), "--split", w("split.tsv"),
                          "--outdir", w("data")]),
        ("train-bpe", ["--kind", "protein", "--input", w("data", "protein_corpus.txt"),
                       "--out", w("protein.vocab")]),
        ("train-bpe", ["--kind", "smiles", "--input", w("data", "ligand_corpus.txt"),
                       "--out", w("smiles.vocab")]),
        ("pretrain-lm", ["--kind", "mlm", "--corpus-kind", "protein",
                         "--corpus", w("data", "protein_corpus.txt"),
                         "--vocab", w("protein.vocab"), "--out", w("protein_mlm.mtf")]),
        ("pretrain-lm", ["--kind", "mlm", "--corpus-kind", "smiles",
                         "--corpus", w("data", "ligand_corpus.txt"),
                         "--vocab", w("smiles.vocab"), "--out", w("smiles_mlm.mtf")]),
        ("train", ["--init", "one-stage", "--data", w("data"),
                   "--enc-ckpt", w("protein_mlm.mtf"), "--dec-ckpt", w("smiles_mlm.mtf"),
                   "--out", w("model.mtf")]),
        ("generate", ["--model", w("model.mtf"), "--proteins", w("data", "test.tsv"),
                      "--method", "beam", "--out", w("generated.tsv")]),
        ("evaluate", ["--generated", "one-stage/beam=" + w("generated.tsv"),
                      "--actives", w("data", "test.tsv"), "--train", w("data", "train.tsv"),
                      "--out", w("report.json")]),
        ("dock-eval", ["--scores", w("fixture_scores.csv"), "--out", w("dock_report.json")]),
    ]
    for command, argv in steps:
        code = run(command, argv + cfg)
        if code != 0:
            runlog.event("smoke_failed", level="error", command=command, code=code)
            return code, time.perf_counter() - t0
    return 0, time.perf_counter() - t0


def cmd_smoke(ctx, a):
    code, seconds = smoke(a.workdir, a.config, ctx.threads)
    runlog.event("smoke", code=code, seconds=f"{seconds:.1f}", workdir=a.workdir)
    return code


# -- argument parsing -----------------------------------------------------------


def _common(p):
    p.add_argument("--config", help="TOML run configuration")
    p.add_argument("--threads", type=int, help="inner parallelism (env MTF_THREADS)")
    p.add_argument("--ci", action="store_true", help="require explicit seeds (also env CI)")
    p.add_argument("--log-level", default="info", choices=("debug", "info", "warning", "error"))


def build_parser():
    parser = _Parser(prog="prot2mol", description="Protein-conditioned molecule generation")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("prepare-data", help="curate raw interactions into pair files")
    p.add_argument("--raw")
    p.add_argument("--split", help="id/split TSV; without it only proteins.tsv is written")
    p.add_argument("--outdir")

    p = sub.add_parser("split", help="family-stratified, identity-balanced held-out split")
    p.add_argument("--proteins")
    p.add_argument("--n", type=int, help="proteins per held-out set")
    p.add_argument("--seed", type=int)
    p.add_argument("--out")

    p = sub.add_parser("train-bpe", help="learn a BPE vocabulary")
    p.add_argument("--input")
    p.add_argument("--vocab-size", type=int)
    p.add_argument("--kind", choices=("protein", "smiles"), default="protein",
                   help="which default vocab size and path to use")
    p.add_argument("--out")

    p = sub.add_parser("pretrain-lm", help="masked-LM or causal-LM pretraining")
    p.add_argument("--kind", choices=("mlm", "clm"), required=True)
    p.add_argument("--corpus-kind", choices=("protein", "smiles"), default="smiles")
    p.add_argument("--corpus")
    p.add_argument("--vocab")
    p.add_argument("--init", help="checkpoint to start from (clm: a masked-LM checkpoint)")
    p.add_argument("--seed", type=int)
    p.add_argument("--out")

    p = sub.add_parser("train", help="train the encoder-decoder translation model")
    p.add_argument("--init", choices=tuple(INIT_LABELS), required=True)
    p.add_argument("--data", help="directory holding train.tsv and valid.tsv")
    p.add_argument("--train")
    p.add_argument("--valid")
    p.add_argument("--src-vocab")
    p.add_argument("--tgt-vocab")
    p.add_argument("--enc-ckpt")
    p.add_argument("--dec-ckpt")
    p.add_argument("--clm-ckpt")
    p.add_argument("--seed", type=int)
    p.add_argument("--out")

    p = sub.add_parser("generate", help="generate molecules for proteins")
    p.add_argument("--model")
    p.add_argument("--proteins")
    p.add_argument("--method", choices=decode.METHODS)
    p.add_argument("--n", type=int)
    p.add_argument("--max-len", type=int)
    p.add_argument("--temperature", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")

    p = sub.add_parser("evaluate", help="generation metrics report")
    p.add_argument("--generated", action="append", metavar="[MODEL/DECODING=]TSV")
    p.add_argument("--actives")
    p.add_argument("--train")
    p.add_argument("--seed", type=int)
    p.add_argument("--out")

    p = sub.add_parser("dock-eval", help="docking-score statistics report")
    p.add_argument("--scores")
    p.add_argument("--alpha", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")

    p = sub.add_parser("grad-check", help="finite-difference gradient check")
    p.add_argument("--arch", choices=(*ARCHS, "all"), default="all")
    p.add_argument("--tolerance", type=float, default=1e-6)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")

    p = sub.add_parser("fixture", help="write the bundled fixture files")
    p.add_argument("--outdir", required=True)

    p = sub.add_parser("smoke", help="run the end-to-end pipeline on the fixture")
    p.add_argument("--workdir", required=True)

    for p in sub.choices.values():
        _common(p)
    return parser


HANDLERS = {
    "prepare-data": cmd_prepare_data,
    "split": cmd_split,
    "train-bpe": cmd_train_bpe,
    "pretrain-lm": cmd_pretrain_lm,
    "train": cmd_train,
    "generate": cmd_generate,
    "evaluate": cmd_evaluate,
    "dock-eval": cmd_dock_eval,
    "grad-check": cmd_grad_check,
    "fixture": cmd_fixture,
    "smoke": cmd_smoke,
}


def _threads(flag):
    if flag is not None:
        return flag
    env = os.environ.get("MTF_THREADS")
    if env:
        try:
            return int(env)
        except ValueError:
            raise cfgmod.ConfigInvalid("run.threads", f"MTF_THREADS={env!r} is not an integer") from None
    return None


def run(command, argv=()):
    """Run one command with its own argument list; returns the exit status."""
    t0 = time.perf_counter()
    runlog.setup_logging("info")
    try:
        if command not in HANDLERS:
            raise cfgmod.ConfigInvalid("command", f"unknown command {command!r}")
        args = build_parser().parse_args([command, *argv])
        runlog.setup_logging(args.log_level)
        cfg = cfgmod.load_config(args.config) if args.config else cfgmod.default_config()
        threads = _threads(args.threads)
        if threads is not None:
            cfgmod.override(cfg, "run", "threads", threads)
        threads = cfg["run"]["threads"]
        ci = args.ci or os.environ.get("CI", "").lower() not in ("", "0", "false")
        ctx = Context(command, cfg, threads, ci)
        runlog.event("start", command=command, threads=threads)
        with threadpool_limits(limits=threads):
            code = HANDLERS[command](ctx, args) or 0
    except VALIDATION_ERRORS as exc:
        runlog.event("invalid", level="error", command=command, error=type(exc).__name__,
                     message=str(exc))
        return 1
    except FileNotFoundError as exc:
        runlog.event("invalid", level="error", command=command, error="InputMissing",
                     message=f"input file not found: {exc.filename}")
        return 1
    except Exception as exc:  # noqa: BLE001 - reported, mapped to exit 2
        runlog.event("failed", level="error", command=command, error=type(exc).__name__,
                     message=str(exc))
        return 2
    runlog.event("done", command=command, code=code, seconds=f"{time.perf_counter() - t0:.2f}")
    return code


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    if not argv or argv[0] in ("-h", "--help"):
        build_parser().print_help()
        return 0 if argv else 1
    if argv[0] == "--version":
        from . import __version__

        print(__version__)
        return 0
    return run(argv[0], argv[1:])


if __name__ == "__main__":
    sys.exit(main())
