"""Reproducible random streams.

Every randomized step draws from a Philox (counter-based) generator keyed by
(seed, label) so parallel components never share a stream and runs replay
bit-identically from one recorded seed.
"""

import zlib

import numpy as np


def stream(seed: int, label: str) -> np.random.Generator:
    """Independent generator for `label` under the run seed."""
    key = zlib.crc32(label.encode("utf-8"))
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(key,))
    return np.random.Generator(np.random.Philox(ss))


def state_to_json(gen: np.random.Generator) -> dict:
    """Serializable snapshot of a Philox generator's state."""
    st = gen.bit_generator.state
    out = {"bit_generator": st["bit_generator"],
           "counter": [int(v) for v in st["state"]["counter"]],
           "key": [int(v) for v in st["state"]["key"]],
           "buffer": [int(v) for v in st["buffer"]],
           "buffer_pos": int(st["buffer_pos"]),
           "has_uint32": int(st["has_uint32"]),
           "uinteger": int(st["uinteger"])}
    return out


def state_from_json(snap: dict) -> np.random.Generator:
    gen = np.random.Generator(np.random.Philox())
    gen.bit_generator.state = {
        "bit_generator": snap["bit_generator"],
        "state": {"counter": np.array(snap["counter"], dtype=np.uint64),
                  "key": np.array(snap["key"], dtype=np.uint64)},
        "buffer": np.array(snap["buffer"], dtype=np.uint64),
        "buffer_pos": snap["buffer_pos"],
        "has_uint32": snap["has_uint32"],
        "uinteger": snap["uinteger"],
    }
    return gen
