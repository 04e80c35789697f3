"""Run configuration: one TOML file, every default in ``DEFAULTS``.

Sections and keys::

    [paths]     input/output locations (all optional, commands check theirs)
    [seeds]     split, train, generate, eval
    [model]     n_layers, d_model, d_ff, n_heads, max_len, dropout
    [train]     peak_lr, warmup_steps, batch_size, grad_accum, epochs,
                max_steps, eval_every, beta1, beta2, eps
    [pretrain]  same keys as [train] plus mask_prob
    [generate]  n_outputs, method, max_len, temperature, top_k, top_p
    [bpe]       protein_vocab_size, smiles_vocab_size
    [split]     n_heldout
    [evaluate]  alpha
    [run]       threads

Unknown sections or keys are rejected, as are out-of-range values.
"""

import copy
import hashlib
import json
from dataclasses import dataclass

import tomli

PATH_KEYS = (
    "raw",
    "proteins",
    "split",
    "outdir",
    "train_pairs",
    "valid_pairs",
    "test_pairs",
    "src_vocab",
    "tgt_vocab",
    "protein_corpus",
    "ligand_corpus",
    "enc_ckpt",
    "dec_ckpt",
    "clm_ckpt",
    "model",
    "generated",
    "scores",
    "report",
)

_TRAIN = {
    "peak_lr": 5e-5,
    "warmup_steps": 2000,
    "batch_size": 8,
    "grad_accum": 8,
    "epochs": 5,
    "max_steps": None,
    "eval_every": 0,
    "beta1": 0.9,
    "beta2": 0.999,
    "eps": 1e-8,
}

DEFAULTS = {
    "paths": {k: None for k in PATH_KEYS},
    "seeds": {"split": 0, "train": 0, "generate": 0, "eval": 0},
    "model": {
        "n_layers": 2,
        "d_model": 64,
        "d_ff": 128,
        "n_heads": 4,
        "max_len": 256,
        "dropout": 0.1,
    },
    "train": dict(_TRAIN),
    # the generic molecule-generator stage runs with library defaults
    "pretrain": {
        **_TRAIN,
        "warmup_steps": 0,
        "grad_accum": 1,
        "epochs": 10,
        "mask_prob": 0.15,
    },
    "generate": {
        "n_outputs": 20,
        "method": "beam",
        "max_len": 64,
        "temperature": 1.0,
        "top_k": 0,
        "top_p": 1.0,
    },
    "bpe": {"protein_vocab_size": 10000, "smiles_vocab_size": 8000},
    "split": {"n_heldout": 200},
    "evaluate": {"alpha": 0.05},
    "run": {"threads": 1},
}

_INT_KEYS = {
    "n_layers", "d_model", "d_ff", "n_heads", "max_len", "warmup_steps", "batch_size",
    "grad_accum", "epochs", "max_steps", "eval_every", "n_outputs", "top_k",
    "protein_vocab_size", "smiles_vocab_size", "n_heldout", "threads",
    "split", "train", "generate", "eval",
}

# (section, key) -> (low, high, low inclusive, high inclusive)
_RANGES = {
    ("model", "dropout"): (0.0, 1.0, True, False),
    ("generate", "temperature"): (0.0, None, True, True),
    ("generate", "top_p"): (0.0, 1.0, False, True),
    ("evaluate", "alpha"): (0.0, 1.0, False, False),
    ("pretrain", "mask_prob"): (0.0, 1.0, False, False),
}
_POSITIVE = {"n_layers", "d_model", "d_ff", "n_heads", "batch_size", "grad_accum", "epochs",
             "n_outputs", "protein_vocab_size", "smiles_vocab_size", "n_heldout", "threads"}
_NON_NEGATIVE = {"warmup_steps", "max_steps", "eval_every", "top_k", "split", "train",
                 "generate", "eval"}


class ConfigInvalid(ValueError):
    """Validation failure; ``field`` is the dotted path of the culprit."""

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}" if field else message)
        self.field = field


class ParseError(ConfigInvalid):
    pass


class UnknownKey(ConfigInvalid):
    pass


class RangeError(ConfigInvalid):
    pass


@dataclass
class RunConfig:
    data: dict
    source: str = None
    explicit_seeds: frozenset = frozenset()

    def __getitem__(self, section):
        return self.data[section]

    def digest(self):
        blob = json.dumps(self.data, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()

    def to_dict(self):
        return copy.deepcopy(self.data)


def _check_value(section, key, value, default):
    where = f"{section}.{key}"
    if section == "paths":
        if not isinstance(value, str):
            raise ConfigInvalid(where, "must be a string path")
        return value
    if key in _INT_KEYS or isinstance(default, int) and not isinstance(default, bool):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigInvalid(where, f"must be an integer, got {value!r}")
    elif isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigInvalid(where, f"must be a number, got {value!r}")
        value = float(value)
    elif isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigInvalid(where, f"must be a string, got {value!r}")
    if key in _POSITIVE and value <= 0:
        raise RangeError(where, f"must be > 0, got {value}")
    if key in _NON_NEGATIVE and value < 0:
        raise RangeError(where, f"must be >= 0, got {value}")
    if section in ("train", "pretrain") and key == "peak_lr" and value <= 0:
        raise RangeError(where, f"must be > 0, got {value}")
    rng = _RANGES.get((section, key))
    if rng:
        lo, hi, lo_inc, hi_inc = rng
        bad = (lo is not None and (value < lo or (value == lo and not lo_inc))) or (
            hi is not None and (value > hi or (value == hi and not hi_inc))
        )
        if bad:
            raise RangeError(where, f"value {value} outside the allowed range")
    if section == "generate" and key == "method" and value not in ("beam", "sampling"):
        raise RangeError(where, f"must be 'beam' or 'sampling', got {value!r}")
    return value


def from_dict(raw, source=None):
    data = copy.deepcopy(DEFAULTS)
    explicit = set()
    for section, body in raw.items():
        if section not in DEFAULTS:
            raise UnknownKey(section, "unknown section")
        if not isinstance(body, dict):
            raise ConfigInvalid(section, "must be a table")
        for key, value in body.items():
            if key not in DEFAULTS[section]:
                raise UnknownKey(f"{section}.{key}", "unknown key")
            data[section][key] = _check_value(section, key, value, DEFAULTS[section][key])
            if section == "seeds":
                explicit.add(key)
    m = data["model"]
    if m["d_model"] % m["n_heads"]:
        raise RangeError("model.n_heads", f"must divide d_model={m['d_model']}")
    return RunConfig(data, source, frozenset(explicit))


def load_config(path):
    try:
        with open(path, "rb") as fh:
            raw = tomli.load(fh)
    except FileNotFoundError:
        raise ConfigInvalid("", f"config file not found: {path}") from None
    except tomli.TOMLDecodeError as exc:
        raise ParseError("", f"{path}: {exc}") from None
    return from_dict(raw, source=str(path))


def default_config():
    return from_dict({})


def override(cfg, section, key, value):
    """Set ``section.key`` from a command-line flag, validated like the file."""
    if section not in DEFAULTS or key not in DEFAULTS[section]:
        raise UnknownKey(f"{section}.{key}", "unknown key")
    cfg.data[section][key] = _check_value(section, key, value, DEFAULTS[section][key])
    if section == "seeds":
        cfg.explicit_seeds = cfg.explicit_seeds | {key}
    m = cfg.data["model"]
    if m["d_model"] % m["n_heads"]:
        raise RangeError("model.n_heads", f"must divide d_model={m['d_model']}")
    return cfg.data[section][key]
