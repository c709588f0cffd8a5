"""Random streams and seed derivation.

Every stochastic choice in the package draws from a numpy ``Generator`` over
the PCG64 bit generator. Its state is two 128-bit integers (``state`` and
``inc``) plus the cached-uint32 pair, which makes it fully serializable as
JSON integers.

Seed derivation is a splitmix64 chain::

    h = splitmix64(seed mod 2**64)
    for key in keys:
        h = splitmix64(h XOR key64)

where ``key64`` is the key itself for integers and its CRC-32 for strings.
"""

from __future__ import annotations

import zlib

import numpy as np

MASK64 = (1 << 64) - 1


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def _key64(key) -> int:
    if isinstance(key, str):
        return zlib.crc32(key.encode("utf-8"))
    return int(key) & MASK64


def mix_seed(seed: int, *keys) -> int:
    h = splitmix64(int(seed) & MASK64)
    for key in keys:
        h = splitmix64(h ^ _key64(key))
    return h


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(int(seed) & MASK64))


def rng_state(rng: np.random.Generator) -> dict:
    st = rng.bit_generator.state
    return {
        "algorithm": st["bit_generator"],
        "state": int(st["state"]["state"]),
        "inc": int(st["state"]["inc"]),
        "has_uint32": int(st["has_uint32"]),
        "uinteger": int(st["uinteger"]),
    }


def rng_from_state(state: dict) -> np.random.Generator:
    if state.get("algorithm") != "PCG64":
        raise ValueError(f"unsupported generator {state.get('algorithm')!r}")
    bg = np.random.PCG64()
    bg.state = {
        "bit_generator": "PCG64",
        "state": {"state": int(state["state"]), "inc": int(state["inc"])},
        "has_uint32": int(state["has_uint32"]),
        "uinteger": int(state["uinteger"]),
    }
    return np.random.Generator(bg)
