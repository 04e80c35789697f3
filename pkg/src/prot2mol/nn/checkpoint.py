"""MTF1 checkpoint files.

Layout: the 4 bytes ``MTF1``, a little-endian u64 header length, a UTF-8
JSON header, then every tensor as raw little-endian float32 in header
order. The header holds the model config, an ordered tensor index (name,
shape, byte offset into the data block) and free-form metadata.
"""

import json
import struct

import numpy as np

from .config import ModelConfig
from .params import ModelParams

MAGIC = b"MTF1"


class CheckpointError(ValueError):
    pass


def dumps(params, meta=None):
    index = []
    blobs = []
    offset = 0
    for name, t in params.tensors.items():
        data = np.ascontiguousarray(t, dtype="<f4").tobytes()
        index.append({"name": name, "shape": list(t.shape), "offset": offset})
        blobs.append(data)
        offset += len(data)
    header = {
        "config": params.cfg.to_dict(),
        "tensors": index,
        "meta": meta or {},
    }
    hbytes = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    return MAGIC + struct.pack("<Q", len(hbytes)) + hbytes + b"".join(blobs)


def save(params, path, meta=None):
    with open(path, "wb") as fh:
        fh.write(dumps(params, meta))


def loads(buf):
    if buf[:4] != MAGIC:
        raise CheckpointError("not an MTF1 checkpoint")
    if len(buf) < 12:
        raise CheckpointError("truncated header")
    (hlen,) = struct.unpack("<Q", buf[4:12])
    try:
        header = json.loads(buf[12 : 12 + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"bad header: {exc}") from None
    cfg = ModelConfig.from_dict(header["config"])
    data = memoryview(buf)[12 + hlen :]
    tensors = {}
    for entry in header["tensors"]:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape, dtype=np.int64))
        start = entry["offset"]
        end = start + 4 * count
        if end > len(data):
            raise CheckpointError(f"tensor {entry['name']} runs past end of file")
        tensors[entry["name"]] = (
            np.frombuffer(data[start:end], dtype="<f4").astype(np.float32).reshape(shape)
        )
    params = ModelParams(cfg, tensors)
    try:
        params.validate()
    except ValueError as exc:
        raise CheckpointError(str(exc)) from None
    return params, header.get("meta", {})


def load(path):
    with open(path, "rb") as fh:
        return loads(fh.read())
