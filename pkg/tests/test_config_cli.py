import filecmp
import json
import os
import subprocess
import sys

import pytest

from prot2mol import cli
from prot2mol import config as cfgmod
from prot2mol.schemas import validate_dock, validate_evaluate

SMOKE_OUTPUTS = (
    "split.tsv", "data/train.tsv", "data/test.tsv", "protein.vocab", "smiles.vocab",
    "model.mtf", "generated.tsv", "report.json", "dock_report.json",
)


def test_defaults():
    c = cfgmod.default_config()
    assert c["train"]["warmup_steps"] == 2000
    assert (c["train"]["batch_size"], c["train"]["grad_accum"], c["train"]["epochs"]) == (8, 8, 5)
    assert c["generate"]["n_outputs"] == 20
    assert c["split"]["n_heldout"] == 200


@pytest.mark.parametrize(
    "text, exc",
    [
        ("[bpe]\nprotein_vocab_size = -5\n", cfgmod.RangeError),
        ("[model]\ndropout = 1.0\n", cfgmod.RangeError),
        ("[model]\nd_model = 30\nn_heads = 4\n", cfgmod.RangeError),
        ("[model]\nn_layers = 2\nn_layers = 3\n", cfgmod.ParseError),
        ("[model\n", cfgmod.ParseError),
        ("[modle]\n", cfgmod.UnknownKey),
        ("[train]\nbatch = 4\n", cfgmod.UnknownKey),
        ("[generate]\nmethod = 'nucleus'\n", cfgmod.RangeError),
        ("[seeds]\ntrain = 1.5\n", cfgmod.ConfigInvalid),
    ],
)
def test_invalid_configs(tmp_path, text, exc):
    p = tmp_path / "c.toml"
    p.write_text(text)
    with pytest.raises(exc):
        cfgmod.load_config(p)
    assert cli.run("grad-check", ["--config", str(p), "--arch", "dec_only"]) == 1


def test_error_field_is_reported(tmp_path):
    p = tmp_path / "c.toml"
    p.write_text("[bpe]\nsmiles_vocab_size = 0\n")
    with pytest.raises(cfgmod.RangeError) as info:
        cfgmod.load_config(p)
    assert info.value.field == "bpe.smiles_vocab_size"


def test_missing_input_exits_1(tmp_path):
    assert cli.run("prepare-data", ["--raw", str(tmp_path / "nope.tsv"),
                                    "--outdir", str(tmp_path)]) == 1
    assert cli.run("dock-eval", ["--scores", str(tmp_path / "nope.csv"),
                                 "--out", str(tmp_path / "r.json")]) == 1


def test_ci_requires_seeds(tmp_path):
    cli.run("fixture", ["--outdir", str(tmp_path)])
    argv = ["--scores", str(tmp_path / "fixture_scores.csv"), "--out", str(tmp_path / "r.json")]
    assert cli.run("dock-eval", argv + ["--ci"]) == 1
    assert cli.run("dock-eval", argv + ["--ci", "--seed", "0"]) == 0
    validate_dock(json.loads((tmp_path / "r.json").read_text()))
    assert (tmp_path / "r.json.manifest.json").exists()


def test_unknown_command():
    assert cli.main(["frobnicate"]) == 1


def test_grad_check_command(tmp_path):
    out = tmp_path / "gc.json"
    assert cli.run("grad-check", ["--arch", "enc_dec", "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["passed"] and doc["reports"][0]["max_error"] <= 1e-6


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "prot2mol", "--help"], capture_output=True, text=True)
    assert r.returncode == 0
    for cmd in cli.COMMANDS:
        assert cmd in r.stdout


@pytest.fixture(scope="module")
def smoke_runs(tmp_path_factory):
    dirs = [tmp_path_factory.mktemp(f"smoke{k}") for k in range(2)]
    results = [cli.smoke(str(d)) for d in dirs]
    return dirs, results


def test_smoke_pipeline(smoke_runs):
    dirs, results = smoke_runs
    assert all(code == 0 for code, _ in results)
    d = dirs[0]
    for name in SMOKE_OUTPUTS:
        assert (d / name).exists(), name
        if not name.startswith("data/"):
            assert (d / (name + ".manifest.json")).exists(), name
    validate_evaluate(json.loads((d / "report.json").read_text()))
    validate_dock(json.loads((d / "dock_report.json").read_text()))
    rows = (d / "generated.tsv").read_text().splitlines()
    assert rows[0] == "protein_id\trank\tsmiles\tscore"
    assert len(rows) > 1


def test_smoke_is_deterministic(smoke_runs):
    (a, b), _ = smoke_runs
    for name in SMOKE_OUTPUTS:
        assert filecmp.cmp(a / name, b / name, shallow=False), name


def test_manifest_contents(smoke_runs):
    d = smoke_runs[0][0]
    m = json.loads((d / "model.mtf.manifest.json").read_text())
    for key in ("command", "config_digest", "seeds", "threads", "versions", "inputs"):
        assert key in m
    assert m["command"] == "train"
    assert os.path.basename(m["output"]) == "model.mtf"
