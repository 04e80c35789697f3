"""Curate interaction tables into labelled protein-ligand pair files.

Input is a flat TSV, one affinity measurement per row::

    protein_id  sequence  n_chains  family  smiles  measure_kind  measure_value_nm

Rows are validated one at a time, grouped by (protein, canonical SMILES),
reduced to a geometric-mean IC50-equivalent score and labelled.
"""

import csv
import json
import math
import os
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum

from .chem import SmilesError, canonical_smiles, parse_smiles

ACTIVE_BELOW_NM = 100.0
INACTIVE_ABOVE_NM = 10000.0
KI_KD_FACTOR = 2.0
CHAIN_SEPARATORS = frozenset(":/|")

RAW_COLUMNS = (
    "protein_id",
    "sequence",
    "n_chains",
    "family",
    "smiles",
    "measure_kind",
    "measure_value_nm",
)

SPLIT_FILES = {"train": "train.tsv", "validation": "valid.tsv", "test": "test.tsv"}


class SchemaError(ValueError):
    pass


class EmptyMeasurements(ValueError):
    pass


class Kind(str, Enum):
    KI = "Ki"
    KD = "Kd"
    IC50 = "IC50"
    EC50 = "EC50"


class Label(str, Enum):
    ACTIVE = "active"
    INACTIVE = "inactive"
    DISCARDED = "discarded"


_KIND_LOOKUP = {k.value.lower(): k for k in Kind}


@dataclass(frozen=True)
class AffinityMeasurement:
    kind: Kind
    value_nm: float

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        if not (math.isfinite(self.value_nm) and self.value_nm > 0):
            raise ValueError(f"affinity must be positive and finite, got {self.value_nm}")


@dataclass
class InteractionRecord:
    protein_id: str
    protein_seq: str
    smiles: str
    measurements: list = field(default_factory=list)
    label: Label = Label.DISCARDED
    score_nm: float = float("nan")
    family: str = ""


def to_ic50(m):
    if m.kind in (Kind.KI, Kind.KD):
        return m.value_nm * KI_KD_FACTOR
    return m.value_nm


def aggregate(ms):
    if not ms:
        raise EmptyMeasurements("no measurements to aggregate")
    logs = [math.log(to_ic50(m)) for m in ms]
    return math.exp(math.fsum(logs) / len(logs))


def label(score_nm):
    if score_nm < ACTIVE_BELOW_NM:
        return Label.ACTIVE
    if score_nm > INACTIVE_ABOVE_NM:
        return Label.INACTIVE
    return Label.DISCARDED


def is_multichain(n_chains, sequence):
    try:
        if int(n_chains) > 1:
            return True
    except (TypeError, ValueError):
        pass
    return any(ch in CHAIN_SEPARATORS for ch in sequence)


def _row_problem(row):
    """Drop reason for a raw row, or None when the row is usable."""
    seq = (row.get("sequence") or "").strip()
    smi = (row.get("smiles") or "").strip()
    if not seq:
        return "missing_protein"
    if not smi:
        return "missing_smiles"
    if is_multichain(row.get("n_chains"), seq):
        return "multichain"
    if not (row.get("family") or "").strip():
        return "missing_family"
    kind = (row.get("measure_kind") or "").strip()
    value = (row.get("measure_value_nm") or "").strip()
    if not kind or not value:
        return "no_measurement"
    if kind.lower() not in _KIND_LOOKUP:
        return "bad_measurement"
    try:
        v = float(value.lstrip("<>="))
    except ValueError:
        return "bad_measurement"
    if not (math.isfinite(v) and v > 0):
        return "bad_measurement"
    return None


def read_raw(path):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh, delimiter="\t")
        missing = [c for c in RAW_COLUMNS if c not in (reader.fieldnames or [])]
        if missing:
            raise SchemaError(f"missing required columns: {', '.join(missing)}")
        return list(reader)


@dataclass
class Dataset:
    records: list
    pairs: dict  # split name -> list of active (protein_id, sequence, smiles)
    inactive: list  # (protein_id, sequence, smiles, split, score)
    ligand_corpus: list
    protein_corpus: list
    proteins: list  # (protein_id, sequence, family) with at least one active pair
    drops: Counter
    n_input: int
    n_kept: int

    def report(self):
        labels = Counter(r.label.value for r in self.records)
        return {
            "input_rows": self.n_input,
            "kept_rows": self.n_kept,
            "dropped": dict(sorted(self.drops.items())),
            "records": len(self.records),
            "labels": {lab.value: labels.get(lab.value, 0) for lab in Label},
            "active_pairs": {name: len(rows) for name, rows in self.pairs.items()},
            "inactive_pairs": len(self.inactive),
            "ligand_corpus": len(self.ligand_corpus),
        }


def build_dataset(raw, split=None):
    """Curate ``raw`` rows (dicts keyed by RAW_COLUMNS) under ``split``.

    Without a split every protein counts as training data; that mode exists
    to list the proteins the split is drawn from.
    """
    if raw:
        missing = [c for c in RAW_COLUMNS if c not in raw[0]]
        if missing:
            raise SchemaError(f"missing required columns: {', '.join(missing)}")
    drops = Counter()
    groups = {}
    canon_cache = {}
    kept = 0
    for row in raw:
        reason = _row_problem(row)
        pid = (row.get("protein_id") or "").strip()
        if reason is None and split is not None and pid not in split:
            reason = "unassigned_protein"
        if reason is None:
            smi = row["smiles"].strip()
            if smi not in canon_cache:
                try:
                    canon_cache[smi] = canonical_smiles(parse_smiles(smi))
                except SmilesError:
                    canon_cache[smi] = None
            if canon_cache[smi] is None:
                reason = "invalid_smiles"
        if reason is not None:
            drops[reason] += 1
            continue
        kept += 1
        key = (pid, canon_cache[smi])
        rec = groups.get(key)
        if rec is None:
            rec = groups[key] = InteractionRecord(
                pid, row["sequence"].strip().upper(), key[1], family=row["family"].strip()
            )
        kind = _KIND_LOOKUP[row["measure_kind"].strip().lower()]
        value = float(row["measure_value_nm"].strip().lstrip("<>="))
        rec.measurements.append(AffinityMeasurement(kind, value))
    pairs = {name: [] for name in SPLIT_FILES}
    inactive = []
    records = []
    for key in sorted(groups):
        rec = groups[key]
        rec.score_nm = aggregate(rec.measurements)
        rec.label = label(rec.score_nm)
        records.append(rec)
        where = split[rec.protein_id] if split is not None else "train"
        if rec.label is Label.ACTIVE:
            pairs[where].append((rec.protein_id, rec.protein_seq, rec.smiles))
        elif rec.label is Label.INACTIVE:
            inactive.append((rec.protein_id, rec.protein_seq, rec.smiles, where, rec.score_nm))
    corpus = sorted({smi for _, _, smi in pairs["train"]})
    prot_corpus = sorted({seq for _, seq, _ in pairs["train"]})
    proteins = {}
    for rec in records:
        if rec.label is Label.ACTIVE and rec.protein_id not in proteins:
            proteins[rec.protein_id] = (rec.protein_id, rec.protein_seq, rec.family)
    proteins = [proteins[k] for k in sorted(proteins)]
    return Dataset(records, pairs, inactive, corpus, prot_corpus, proteins, drops, len(raw), kept)


def write_pairs(rows, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("protein_id\tsequence\tsmiles\n")
        for pid, seq, smi in rows:
            fh.write(f"{pid}\t{seq}\t{smi}\n")


def read_pairs(path):
    out = []
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n").split("\t")
        if header[:3] != ["protein_id", "sequence", "smiles"]:
            raise SchemaError(f"{path}: expected protein_id, sequence, smiles header")
        for line in fh:
            cols = line.rstrip("\n").split("\t")
            if len(cols) >= 3:
                out.append((cols[0], cols[1], cols[2]))
    return out


def write_proteins(proteins, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("id\tsequence\tfamily\n")
        for pid, seq, fam in proteins:
            fh.write(f"{pid}\t{seq}\t{fam}\n")


def write_lines(lines, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for line in lines:
            fh.write(line + "\n")


def write_outputs(ds, outdir, with_pairs=True):
    """Write the curated files; returns their paths."""
    os.makedirs(outdir, exist_ok=True)
    written = []
    path = os.path.join(outdir, "proteins.tsv")
    write_proteins(ds.proteins, path)
    written.append(path)
    if not with_pairs:
        path = os.path.join(outdir, "drop_report.json")
        _write_json(ds.report(), path)
        return written + [path]
    for name, fname in SPLIT_FILES.items():
        path = os.path.join(outdir, fname)
        write_pairs(ds.pairs[name], path)
        written.append(path)
    path = os.path.join(outdir, "inactive.tsv")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("protein_id\tsequence\tsmiles\tsplit\tscore_nm\n")
        for pid, seq, smi, where, score in ds.inactive:
            fh.write(f"{pid}\t{seq}\t{smi}\t{where}\t{score:.6g}\n")
    written.append(path)
    for fname, lines in (
        ("ligand_corpus.txt", ds.ligand_corpus),
        ("protein_corpus.txt", ds.protein_corpus),
    ):
        path = os.path.join(outdir, fname)
        write_lines(lines, path)
        written.append(path)
    path = os.path.join(outdir, "drop_report.json")
    _write_json(ds.report(), path)
    written.append(path)
    return written


def _write_json(obj, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")
