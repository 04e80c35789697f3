"""Synthetic protein families and ligands with a learnable mapping.

Proteins in a family are point mutants of a family template. Each family
prefers one ring core; each protein additionally prefers a few
substituents, chosen from a hash of its sequence. Ligands are assembled as
``prefix + core [+ linker + core2] + suffix`` strings which are valid SMILES
by construction.
"""

import numpy as np

from .chem import canonicalize
from .seqalign import AMINO_ACIDS

CORES = (
    "c1ccccc1",
    "c1ccncc1",
    "C1CCNCC1",
    "c1ccsc1",
    "C1CCOC1",
    "c1cncnc1",
    "C1CCCCC1",
    "c1ccoc1",
    "C1CNCCN1",
    "c1ccc2ccccc2c1",
)
PREFIXES = ("C", "CC", "OC", "N#C", "NC(=O)", "FC(F)(F)", "Cl", "F", "CCO", "CN(C)")
SUFFIXES = ("C", "O", "N", "F", "Cl", "C(=O)N", "C(=O)O", "OC", "C#N", "CC(C)C", "NC(C)=O", "Br")
LINKERS = ("C", "CC", "CCN", "C(=O)N", "OCC", "NC(=O)C", "S(=O)(=O)N")


def _mutate(seq, rate, rng):
    out = list(seq)
    for i in range(len(out)):
        if rng.random() < rate:
            out[i] = AMINO_ACIDS[int(rng.integers(20))]
    return "".join(out)


def synthetic_proteins(n_families=8, per_family=8, length=40, mutation=0.15, seed=0):
    """List of (protein_id, sequence, family)."""
    rng = np.random.default_rng(seed)
    out = []
    for f in range(n_families):
        template = "M" + "".join(AMINO_ACIDS[i] for i in rng.integers(20, size=length - 1))
        for k in range(per_family):
            seq = template if k == 0 else _mutate(template, mutation, rng)
            out.append((f"P{f:02d}{k:03d}", seq, f"PF{f:05d}"))
    return out


def _prefs(seq, family_idx):
    h = sum((i + 1) * ord(c) for i, c in enumerate(seq))
    return {
        "core": CORES[family_idx % len(CORES)],
        "core2": CORES[(family_idx * 3 + 1) % len(CORES)],
        "prefix": PREFIXES[h % len(PREFIXES)],
        "suffix": SUFFIXES[(h // 7) % len(SUFFIXES)],
        "linker": LINKERS[(h // 13) % len(LINKERS)],
    }


def ligand(seq, family_idx, rng, noise=0.3):
    """One ligand for a protein; ``noise`` is the chance of each part varying."""
    p = _prefs(seq, family_idx)

    def pick(key, pool):
        return pool[int(rng.integers(len(pool)))] if rng.random() < noise else p[key]

    smi = pick("prefix", PREFIXES) + p["core"]
    if rng.random() < 0.5:
        smi += pick("linker", LINKERS) + p["core2"]
    smi += pick("suffix", SUFFIXES)
    return canonicalize(smi)


def family_index(family):
    return int("".join(ch for ch in family if ch.isdigit()) or 0)


def synthetic_pairs(proteins, per_protein, seed=0, noise=0.3):
    """(protein_id, sequence, smiles) rows, ``per_protein`` ligands each."""
    rng = np.random.default_rng(seed)
    rows = []
    for pid, seq, fam in proteins:
        for _ in range(per_protein):
            rows.append((pid, seq, ligand(seq, family_index(fam), rng, noise)))
    return rows


def random_molecules(n, seed=0):
    """Unconditioned molecules from the same grammar (a generic corpus)."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        smi = PREFIXES[int(rng.integers(len(PREFIXES)))] + CORES[int(rng.integers(len(CORES)))]
        if rng.random() < 0.5:
            smi += LINKERS[int(rng.integers(len(LINKERS)))] + CORES[int(rng.integers(len(CORES)))]
        smi += SUFFIXES[int(rng.integers(len(SUFFIXES)))]
        out.append(canonicalize(smi))
    return out


def raw_interactions(n_rows=200, n_families=6, per_family=6, seed=0, noise=0.6):
    """Rows for the raw interaction TSV, including rows meant to be dropped.

    Proteins are drawn with Zipf-like weights so that a few well-studied
    proteins carry many actives while most have a handful.
    """
    rng = np.random.default_rng(seed)
    proteins = synthetic_proteins(n_families, per_family, length=36, seed=seed)
    weights = 1.0 / np.arange(1, len(proteins) + 1)
    weights = rng.permutation(weights / weights.sum())
    header = ("protein_id", "sequence", "n_chains", "family", "smiles", "measure_kind",
              "measure_value_nm")
    rows = []
    kinds = ("Ki", "Kd", "IC50", "EC50")
    while len(rows) < n_rows:
        pid, seq, fam = proteins[int(rng.choice(len(proteins), p=weights))]
        smi = ligand(seq, family_index(fam), rng, noise)
        kind = kinds[int(rng.integers(4))]
        if rng.random() < 0.85:
            value = float(np.round(10 ** rng.uniform(0.0, 1.9), 3))  # active range
        else:
            value = float(np.round(10 ** rng.uniform(4.2, 5.5), 1))  # inactive range
        chains = "1"
        r = rng.random()
        if r < 0.03:
            smi = ""
        elif r < 0.05:
            chains = "2"
        elif r < 0.07:
            smi = "C1CC(" + smi
        elif r < 0.09:
            kind, value = "", ""
        elif r < 0.11:
            value = 500.0  # grey zone
        rows.append((pid, seq, chains, fam, smi, kind, "" if value == "" else repr(value)))
    return header, rows, proteins


# mean CNN affinity per group; actives dock best, random compounds worst
_DOCK_MEANS = {"active": 7.0, "generated": 6.4, "others": 5.6, "random": 5.0}


def docking_scores(n_targets=3, per_group=12, poses=3, seed=0):
    """Rows for a pose table (see ``dockstats.CSV_COLUMNS``).

    The last target gets overlapping active and random scores, so a
    report built from it exercises target exclusion.
    """
    rng = np.random.default_rng(seed)
    header = ("target_id", "ligand_id", "group", "pose_id", "cnn_score", "cnn_affinity")
    rows = []
    for t in range(n_targets):
        tid = f"T{t:02d}"
        flat = t == n_targets - 1 and n_targets > 1
        for group, mean in _DOCK_MEANS.items():
            if flat:
                mean = 5.5
            for k in range(per_group):
                lig = f"{tid}_{group}_{k:03d}"
                base = rng.normal(mean, 0.6)
                for pose in range(1, poses + 1):
                    aff = base - abs(rng.normal(0.0, 0.4)) * (pose > 1)
                    score = 1.0 / (1.0 + np.exp(-(aff - 5.5)))
                    rows.append((tid, lig, group, str(pose), f"{score:.4f}", f"{aff:.4f}"))
    return header, rows
