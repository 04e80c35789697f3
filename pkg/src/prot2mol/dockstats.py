"""Docking-score statistics: best poses, ROC AUC and Mann-Whitney U.

Docking itself runs elsewhere; this module consumes a pose table with
columns ``target_id,ligand_id,group,pose_id,cnn_score,cnn_affinity``.
Higher CNN affinity means stronger predicted binding.
"""

import csv
import itertools
import math
import zlib
from collections import defaultdict
from dataclasses import asdict, dataclass

import numpy as np

GROUPS = ("active", "random", "generated", "others")
GROUP_CAP = 100
MIN_GROUP = 3
EXACT_MAX_N = 20

# (name, positive group, negative group)
PAIRINGS = (
    ("active_vs_generated", "active", "generated"),
    ("active_vs_others", "active", "others"),
    ("generated_vs_others", "generated", "others"),
    ("generated_vs_random", "generated", "random"),
    ("active_vs_random", "active", "random"),
)

CSV_COLUMNS = ("target_id", "ligand_id", "group", "pose_id", "cnn_score", "cnn_affinity")


class EmptyGroup(ValueError):
    pass


class GroupTooSmall(ValueError):
    pass


class MissingGroup(KeyError):
    pass


class ScoreFormatError(ValueError):
    pass


@dataclass(frozen=True)
class PoseScore:
    ligand_id: str
    group: str
    pose_id: int
    cnn_affinity: float
    cnn_score: float
    target_id: str = ""

    def __post_init__(self):
        if self.group not in GROUPS:
            raise ScoreFormatError(f"unknown group {self.group!r}")
        if not (math.isfinite(self.cnn_affinity) and math.isfinite(self.cnn_score)):
            raise ScoreFormatError(f"non-finite score for ligand {self.ligand_id}")


@dataclass(frozen=True)
class ComparisonResult:
    auc: float
    u_statistic: float
    p_value: float
    n_pos: int
    n_neg: int

    def to_dict(self):
        return asdict(self)


def best_pose_per_ligand(poses):
    if not poses:
        raise EmptyGroup("no poses")
    best = {}
    for p in poses:
        if p.ligand_id not in best or p.cnn_affinity > best[p.ligand_id]:
            best[p.ligand_id] = p.cnn_affinity
    return best


def midranks(values):
    """1-based ranks with ties sharing their average rank."""
    values = np.asarray(values, dtype=np.float64)
    order = np.argsort(values, kind="mergesort")
    ranks = np.empty(len(values), dtype=np.float64)
    sorted_v = values[order]
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and sorted_v[j + 1] == sorted_v[i]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def u_statistic(pos, neg):
    n1 = len(pos)
    ranks = midranks(np.concatenate([np.asarray(pos, float), np.asarray(neg, float)]))
    return float(ranks[:n1].sum() - n1 * (n1 + 1) / 2.0)


def roc_auc(pos, neg):
    if len(pos) == 0 or len(neg) == 0:
        raise EmptyGroup("roc_auc needs two non-empty groups")
    return u_statistic(pos, neg) / (len(pos) * len(neg))


def _tie_term(values):
    _, counts = np.unique(np.asarray(values, dtype=np.float64), return_counts=True)
    return float(((counts.astype(np.float64) ** 3) - counts).sum())


def mann_whitney(pos, neg):
    """Two-sided U test, normal approximation with tie and continuity corrections."""
    n1, n2 = len(pos), len(neg)
    if n1 < MIN_GROUP or n2 < MIN_GROUP:
        raise GroupTooSmall(f"groups need >= {MIN_GROUP} values, got {n1} and {n2}")
    u = u_statistic(pos, neg)
    n = n1 + n2
    mu = n1 * n2 / 2.0
    var = n1 * n2 / 12.0 * ((n + 1) - _tie_term(np.concatenate([pos, neg])) / (n * (n - 1)))
    if var <= 0:
        p = 1.0
    else:
        z = max(abs(u - mu) - 0.5, 0.0) / math.sqrt(var)
        p = min(1.0, math.erfc(z / math.sqrt(2.0)))
    return ComparisonResult(u / (n1 * n2), u, p, n1, n2)


def mann_whitney_exact(pos, neg):
    """Exact two-sided permutation p-value of U, enumerating every split."""
    n1, n2 = len(pos), len(neg)
    if n1 + n2 > EXACT_MAX_N:
        raise ValueError(f"exact enumeration limited to {EXACT_MAX_N} values")
    if n1 == 0 or n2 == 0:
        raise EmptyGroup("exact test needs two non-empty groups")
    ranks = midranks(np.concatenate([np.asarray(pos, float), np.asarray(neg, float)]))
    u_obs = float(ranks[:n1].sum() - n1 * (n1 + 1) / 2.0)
    mu = n1 * n2 / 2.0
    dev = abs(u_obs - mu)
    hits = total = 0
    for idx in itertools.combinations(range(n1 + n2), n1):
        u = ranks[list(idx)].sum() - n1 * (n1 + 1) / 2.0
        total += 1
        if abs(u - mu) >= dev - 1e-9:
            hits += 1
    return ComparisonResult(u_obs / (n1 * n2), u_obs, hits / total, n1, n2)


def cap_group(values, cap=GROUP_CAP, seed=0, key=""):
    """Deterministic seeded subsample down to ``cap`` values."""
    values = list(values)
    if len(values) <= cap:
        return values
    rng = np.random.default_rng([seed, zlib.crc32(key.encode("utf-8"))])
    keep = sorted(rng.choice(len(values), size=cap, replace=False).tolist())
    return [values[i] for i in keep]


def compare_groups(target_id, scores, alpha=0.05, seed=0, cap=GROUP_CAP):
    """Per-target table over the pairings in PAIRINGS.

    ``scores`` maps group -> best-pose affinities. Pairings whose groups are
    missing or too small get a null result with a reason.
    """
    capped = {g: cap_group(v, cap, seed, f"{target_id}/{g}") for g, v in scores.items()}
    rows = {}
    for name, a, b in PAIRINGS:
        if a not in capped or b not in capped:
            missing = [g for g in (a, b) if g not in capped]
            rows[name] = {"result": None, "reason": f"missing group {', '.join(missing)}"}
            continue
        try:
            res = mann_whitney(np.asarray(capped[a]), np.asarray(capped[b]))
        except GroupTooSmall as exc:
            rows[name] = {"result": None, "reason": str(exc)}
            continue
        rows[name] = {
            "result": {**res.to_dict(), "significant": res.p_value < alpha},
            "reason": None,
        }
    ar = rows["active_vs_random"]["result"]
    return {
        "target_id": target_id,
        "group_sizes": {g: len(v) for g, v in sorted(capped.items())},
        "comparisons": rows,
        # actives indistinguishable from random: docking is not informative here
        "excluded": ar is not None and not ar["significant"],
    }


def read_scores_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = [c for c in CSV_COLUMNS if c not in (reader.fieldnames or [])]
        if missing:
            raise ScoreFormatError(f"missing columns: {', '.join(missing)}")
        out = []
        for n, row in enumerate(reader, 2):
            try:
                out.append(
                    PoseScore(
                        ligand_id=row["ligand_id"],
                        group=row["group"].strip(),
                        pose_id=int(row["pose_id"]),
                        cnn_affinity=float(row["cnn_affinity"]),
                        cnn_score=float(row["cnn_score"]),
                        target_id=row["target_id"],
                    )
                )
            except ValueError as exc:
                raise ScoreFormatError(f"line {n}: {exc}") from None
        return out


def dock_report(poses, alpha=0.05, seed=0, cap=GROUP_CAP):
    """Best pose per ligand, then compare_groups for every target."""
    by_target = defaultdict(lambda: defaultdict(list))
    for p in poses:
        by_target[p.target_id][(p.group, p.ligand_id)].append(p)
    targets = []
    for tid in sorted(by_target):
        groups = defaultdict(list)
        for (group, lig), ps in sorted(by_target[tid].items()):
            groups[group].append(max(q.cnn_affinity for q in ps))
        targets.append(compare_groups(tid, dict(groups), alpha, seed, cap))
    table5 = []
    for t in targets:
        for name, _, _ in PAIRINGS:
            cell = t["comparisons"][name]
            r = cell["result"]
            table5.append(
                {
                    "target_id": t["target_id"],
                    "pairing": name,
                    "p_value": None if r is None else r["p_value"],
                    "auc": None if r is None else r["auc"],
                    "significant": None if r is None else r["significant"],
                    "excluded_target": t["excluded"],
                }
            )
    kept = [t for t in targets if not t["excluded"]]
    aggregate = {}
    for name, _, _ in PAIRINGS:
        res = [t["comparisons"][name]["result"] for t in kept]
        aggregate[name] = {
            "n_significant": sum(1 for r in res if r is not None and r["significant"]),
            "n_tested": sum(1 for r in res if r is not None),
        }
    return {
        "alpha": alpha,
        "group_cap": cap,
        "seed": seed,
        "test": "Mann-Whitney U, two-sided, normal approximation",
        "targets": targets,
        "excluded_targets": [t["target_id"] for t in targets if t["excluded"]],
        "aggregate": aggregate,
        "table5": table5,
    }
