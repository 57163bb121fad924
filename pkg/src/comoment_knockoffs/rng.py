"""Seeded RNG construction.

All randomness in the package flows through Philox, a counter-based
generator, so a (seed, stream) pair reproduces bit-identical draws across
platforms and lets per-column work use independent deterministic streams.
"""

from __future__ import annotations

import numpy as np


def make_rng(seed, stream=None):
    seq = np.random.SeedSequence(seed)
    if stream is not None:
        seq = seq.spawn(stream + 1)[stream]
    return np.random.Generator(np.random.Philox(seq))
