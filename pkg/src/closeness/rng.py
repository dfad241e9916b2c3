"""Named random streams derived from a single 64-bit seed.

Each consumer draws from its own ``SeedSequence`` child, so adding a new
consumer never shifts the numbers an existing one sees.
"""

import numpy as np

#: Recorded in output headers; bump when the stream layout changes.
STREAM_LAYOUT = "rng-v1"

_STREAMS = {
    "sample": 1,
    "varopt": 2,
    "order": 3,
    "rank": 4,
    "queries": 5,
}


def stream(seed: int, name: str) -> np.random.Generator:
    if name not in _STREAMS:
        raise KeyError(f"unknown random stream {name!r}")
    seed = int(seed) & (2**64 - 1)
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(_STREAMS[name],))))
