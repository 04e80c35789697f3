"""Structured ``level key=value`` logging and run manifests."""

import datetime as _dt
import hashlib
import json
import logging
import os
import platform
import sys

import numpy as np

from . import __version__, _kernels

LOGGER = "prot2mol"


def _fmt_value(v):
    s = str(v)
    if not s or any(c.isspace() for c in s) or '"' in s or "=" in s:
        return json.dumps(s)
    return s


class KeyValueFormatter(logging.Formatter):
    def format(self, record):
        parts = [record.levelname.lower(), f"event={_fmt_value(record.getMessage())}"]
        for k, v in getattr(record, "kv", {}).items():
            parts.append(f"{k}={_fmt_value(v)}")
        return " ".join(parts)


def setup_logging(level="info", stream=None):
    logger = logging.getLogger(LOGGER)
    for h in list(logger.handlers):
        logger.removeHandler(h)
    handler = logging.StreamHandler(stream or sys.stderr)
    handler.setFormatter(KeyValueFormatter())
    logger.addHandler(handler)
    logger.setLevel(level.upper())
    logger.propagate = False
    return logger


def event(name, level="info", **kv):
    logging.getLogger(LOGGER).log(logging.getLevelName(level.upper()), name, extra={"kv": kv})


def file_digest(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def versions():
    return {
        "prot2mol": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "kernel_backend": _kernels.BACKEND,
    }


def write_manifest(output, command, config_digest, seeds, threads, inputs, extra=None):
    """Write ``<output>.manifest.json`` describing how ``output`` was made."""
    manifest = {
        "command": command,
        "output": os.path.basename(output),
        "output_digest": file_digest(output) if os.path.isfile(output) else None,
        "config_digest": config_digest,
        "seeds": seeds,
        "threads": threads,
        "versions": versions(),
        "inputs": {
            os.path.basename(p): file_digest(p) for p in inputs if p and os.path.isfile(p)
        },
        "extra": extra or {},
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
    }
    path = output + ".manifest.json"
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path
