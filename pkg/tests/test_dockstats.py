import numpy as np
import pytest
from scipy import stats

from prot2mol import synth
from prot2mol.dockstats import (
    PAIRINGS,
    EmptyGroup,
    GroupTooSmall,
    PoseScore,
    ScoreFormatError,
    best_pose_per_ligand,
    cap_group,
    compare_groups,
    dock_report,
    mann_whitney,
    mann_whitney_exact,
    midranks,
    read_scores_csv,
    roc_auc,
    u_statistic,
)
from prot2mol.schemas import validate_dock


def pose(lig, aff, group="active", pose_id=0, target="T"):
    return PoseScore(lig, group, pose_id, aff, 0.5, target)


def test_best_pose():
    assert best_pose_per_ligand([pose("a", 5.0)]) == {"a": 5.0}
    ps = [pose("a", 5.1), pose("a", 6.3, pose_id=1), pose("a", 6.0, pose_id=2), pose("b", 1.0)]
    assert best_pose_per_ligand(ps) == {"a": 6.3, "b": 1.0}
    assert best_pose_per_ligand([pose("a", 2.0), pose("a", 2.0, pose_id=1)]) == {"a": 2.0}
    with pytest.raises(EmptyGroup):
        best_pose_per_ligand([])
    with pytest.raises(ScoreFormatError):
        pose("a", float("nan"))


def test_auc_examples():
    assert roc_auc([3, 4], [1, 2]) == 1.0
    assert roc_auc([1, 2, 2, 5], [1, 2, 2, 5]) == 0.5
    assert roc_auc([2, 4], [1, 3]) == 0.75
    with pytest.raises(EmptyGroup):
        roc_auc([], [1])


def test_auc_is_pair_count():
    rng = np.random.default_rng(0)
    for _ in range(30):
        pos = rng.integers(0, 6, size=int(rng.integers(1, 15))).astype(float)
        neg = rng.integers(0, 6, size=int(rng.integers(1, 15))).astype(float)
        wins = sum((p > n) + 0.5 * (p == n) for p in pos for n in neg)
        assert u_statistic(pos, neg) == pytest.approx(wins, abs=1e-12)
        assert roc_auc(pos, neg) * len(pos) * len(neg) == pytest.approx(wins, abs=1e-12)
        assert roc_auc(pos, neg) + roc_auc(neg, pos) == pytest.approx(1.0, abs=1e-12)


def test_midranks():
    assert midranks([10, 20, 20, 30]).tolist() == [1, 2.5, 2.5, 4]


def test_mann_whitney_examples():
    same = np.arange(1, 11, dtype=float)
    assert mann_whitney(same, same).p_value >= 0.9
    r = mann_whitney(np.arange(101, 121.0), np.arange(1, 21.0))
    assert r.auc == 1.0 and r.u_statistic == 400 and r.p_value < 1e-6
    s = mann_whitney(np.arange(1, 21.0), np.arange(101, 121.0))
    assert s.p_value == r.p_value and s.auc == 1 - r.auc
    with pytest.raises(GroupTooSmall):
        mann_whitney([1, 2], [3, 4, 5])


def test_matches_scipy():
    rng = np.random.default_rng(1)
    for _ in range(25):
        pos = np.round(rng.normal(0.3, 1, size=int(rng.integers(3, 60))), 1)
        neg = np.round(rng.normal(0, 1, size=int(rng.integers(3, 60))), 1)
        ref = stats.mannwhitneyu(pos, neg, alternative="two-sided", method="asymptotic",
                                 use_continuity=True)
        got = mann_whitney(pos, neg)
        assert got.u_statistic == pytest.approx(ref.statistic, abs=1e-9)
        assert got.p_value == pytest.approx(ref.pvalue, rel=1e-9, abs=1e-12)


def test_exact_oracle_agrees_loosely():
    rng = np.random.default_rng(2)
    for _ in range(10):
        pos, neg = rng.normal(0.5, 1, size=8), rng.normal(0, 1, size=8)
        assert abs(mann_whitney(pos, neg).p_value - mann_whitney_exact(pos, neg).p_value) < 0.05


def test_rank_invariance():
    rng = np.random.default_rng(3)
    pos, neg = rng.normal(1, 1, size=20), rng.normal(0, 1, size=25)
    a = mann_whitney(pos, neg)
    b = mann_whitney(np.exp(pos) * 3 + 1, np.exp(neg) * 3 + 1)
    assert a.p_value == pytest.approx(b.p_value, abs=1e-12) and a.auc == b.auc


def test_cap_group():
    vals = list(range(250))
    a = cap_group(vals, 100, seed=1, key="T/active")
    assert len(a) == 100 and a == cap_group(vals, 100, seed=1, key="T/active")
    assert a != cap_group(vals, 100, seed=2, key="T/active")
    assert cap_group(vals[:50], 100) == vals[:50]


def test_compare_groups_identical():
    x = list(np.linspace(0, 1, 12))
    t = compare_groups("T", {g: x for g in ("active", "random", "generated", "others")})
    assert all(not c["result"]["significant"] for c in t["comparisons"].values())
    assert t["excluded"]


def test_compare_groups_shifted():
    rng = np.random.default_rng(4)
    groups = {
        "active": rng.normal(7, 0.5, 60).tolist(),
        "generated": rng.normal(7, 0.5, 60).tolist(),
        "others": rng.normal(5.5, 0.5, 60).tolist(),
        "random": rng.normal(5, 0.5, 60).tolist(),
    }
    t = compare_groups("T", groups)
    c = t["comparisons"]
    assert c["generated_vs_random"]["result"]["significant"]
    assert c["generated_vs_random"]["result"]["auc"] > 0.5
    res = mann_whitney(np.asarray(groups["active"]), np.asarray(groups["generated"]))
    assert c["active_vs_generated"]["result"]["p_value"] == res.p_value
    assert not c["active_vs_generated"]["result"]["significant"]
    assert not t["excluded"]


def test_missing_group_gives_null_row():
    t = compare_groups("T", {"active": [1, 2, 3.0], "random": [4, 5, 6.0]})
    assert t["comparisons"]["active_vs_generated"]["result"] is None
    assert "generated" in t["comparisons"]["active_vs_generated"]["reason"]


def test_report_from_fixture(tmp_path):
    path = tmp_path / "s.csv"
    header, rows = synth.docking_scores()
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for r in rows:
            fh.write(",".join(str(x) for x in r) + "\n")
    rep = dock_report(read_scores_csv(path))
    validate_dock(rep)
    assert len(rep["table5"]) == len(rep["targets"]) * len(PAIRINGS)
    assert rep["excluded_targets"] == [rep["targets"][-1]["target_id"]]
    agg = rep["aggregate"]["active_vs_random"]
    assert agg["n_tested"] == len(rep["targets"]) - 1


def test_bad_csv(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("target_id,ligand_id\nT,a\n")
    with pytest.raises(ScoreFormatError):
        read_scores_csv(p)
