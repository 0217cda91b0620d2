"""Deterministic RNG streams and checkpoint-safe state (de)serialization.

Every source of randomness in a run is a PCG64 generator derived from the
run seed plus a role path, so any participant's stream can be reconstructed
independently (e.g. to compare a federated trajectory against a centralized
one) and captured/restored exactly at a round boundary.
"""

from __future__ import annotations

import numpy as np

# Role tags used as the first element of the spawn key.
ROLE_INIT = 0       # model parameter initialization
ROLE_SERVER = 1     # server-side client sampling
ROLE_CLIENT = 2     # per-client training randomness (dropout masks)
ROLE_SPLIT = 3      # dataset splitters
ROLE_GEN = 4        # random-graph generation

_MASK64 = (1 << 64) - 1


def derive_rng(seed: int, *path: int) -> np.random.Generator:
    """Generator seeded from (seed, path) via SeedSequence spawn keys."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(p) for p in path))
    return np.random.Generator(np.random.PCG64(ss))


def init_rng(seed: int) -> np.random.Generator:
    return derive_rng(seed, ROLE_INIT)


def server_rng(seed: int) -> np.random.Generator:
    return derive_rng(seed, ROLE_SERVER)


def client_rng(seed: int, client_index: int) -> np.random.Generator:
    """Training-randomness stream of the client holding data shard `client_index`."""
    return derive_rng(seed, ROLE_CLIENT, client_index)


def rng_state_to_u64s(gen: np.random.Generator) -> list[int]:
    """Capture a PCG64 generator state as six u64 words.

    Layout: state lo/hi, inc lo/hi, has_uint32, cached uinteger.
    """
    st = gen.bit_generator.state
    if st["bit_generator"] != "PCG64":
        raise ValueError("only PCG64 generators are checkpointable")
    s = int(st["state"]["state"])
    inc = int(st["state"]["inc"])
    return [
        s & _MASK64,
        (s >> 64) & _MASK64,
        inc & _MASK64,
        (inc >> 64) & _MASK64,
        int(st["has_uint32"]),
        int(st["uinteger"]),
    ]


def rng_from_u64s(words: list[int]) -> np.random.Generator:
    """Rebuild a generator from :func:`rng_state_to_u64s` output."""
    if len(words) != 6:
        raise ValueError(f"expected 6 state words, got {len(words)}")
    w = [int(x) for x in words]
    gen = np.random.Generator(np.random.PCG64(0))
    gen.bit_generator.state = {
        "bit_generator": "PCG64",
        "state": {"state": w[0] | (w[1] << 64), "inc": w[2] | (w[3] << 64)},
        "has_uint32": w[4],
        "uinteger": w[5],
    }
    return gen
