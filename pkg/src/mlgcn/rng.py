"""Deterministic random streams.

One user-facing seed fans out into independent named streams so that, e.g.,
consuming extra dropout draws never perturbs the data split. Stream keys are
fixed integers; identical (seed, name) always yields the identical stream.
"""

from __future__ import annotations

import numpy as np

_STREAMS = {
    "init": 0,
    "dropout": 1,
    "split": 2,
    "synthetic": 3,
    "features": 4,
}


def rng_stream(seed: int, name: str) -> np.random.Generator:
    try:
        key = _STREAMS[name]
    except KeyError:
        raise ValueError(f"unknown rng stream {name!r}") from None
    return np.random.default_rng(np.random.SeedSequence(entropy=int(seed), spawn_key=(key,)))
