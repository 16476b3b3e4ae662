"""Binary checkpoint container.

Layout: 8-byte magic "GLCKPT01", little-endian u64 header length, JSON
header (specs, array names/shapes, dtype, rng state, epoch), then the raw
little-endian float64 array payloads in header order.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field

import numpy as np

MAGIC = b"GLCKPT01"


@dataclass
class Checkpoint:
    specs: dict
    arrays: dict = field(default_factory=dict)
    rng_state: dict | None = None
    epoch: int = 0


def save_checkpoint(path, ckpt: Checkpoint) -> None:
    names = list(ckpt.arrays.keys())
    header = {
        "specs": ckpt.specs,
        "arrays": [{"name": n, "shape": list(np.asarray(ckpt.arrays[n]).shape)}
                   for n in names],
        "dtype": "<f8",
        "rng_state": ckpt.rng_state,
        "epoch": ckpt.epoch,
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<Q", len(blob)))
        fh.write(blob)
        for n in names:
            arr = np.ascontiguousarray(np.asarray(ckpt.arrays[n], dtype="<f8"))
            fh.write(arr.tobytes())


def load_checkpoint(path) -> Checkpoint:
    with open(path, "rb") as fh:
        magic = fh.read(8)
        if magic != MAGIC:
            raise ValueError(f"not a checkpoint file (magic {magic!r})")
        (hlen,) = struct.unpack("<Q", fh.read(8))
        header = json.loads(fh.read(hlen).decode("utf-8"))
        arrays = {}
        for entry in header["arrays"]:
            shape = tuple(entry["shape"])
            count = int(np.prod(shape)) if shape else 1
            buf = fh.read(8 * count)
            arrays[entry["name"]] = np.frombuffer(buf, dtype="<f8").reshape(shape).copy()
        tail = fh.read(1)
        if tail:
            raise ValueError("trailing bytes after declared arrays")
    return Checkpoint(specs=header["specs"], arrays=arrays,
                      rng_state=header["rng_state"], epoch=header["epoch"])
