"""Deterministic random streams for ensemble sampling.

Built on a counter-based bit generator (Philox) so that any substream
can be reconstructed from the pair (master_seed, substream_id) alone.
Each ensemble sample owns one substream; runs and scan points map to
disjoint id blocks, which makes every output reproducible bit for bit
regardless of worker count or execution order.
"""

from __future__ import annotations

import numpy as np


class RandomStream:
    """One independent substream of the counter-based RNG family.

    Parameters
    ----------
    master_seed : int
        Nonnegative seed shared by the whole experiment.
    substream_id : int
        Nonnegative index of this substream.  Distinct ids give
        statistically independent streams.
    """

    def __init__(self, master_seed: int, substream_id: int = 0):
        master_seed = int(master_seed)
        substream_id = int(substream_id)
        if master_seed < 0:
            raise ValueError("master_seed must be nonnegative")
        if substream_id < 0:
            raise ValueError("substream_id must be nonnegative")
        self.master_seed = master_seed
        self.substream_id = substream_id
        seq = np.random.SeedSequence(entropy=master_seed, spawn_key=(substream_id,))
        self._gen = np.random.Generator(np.random.Philox(seq))

    def standard_normal(self, n: int) -> np.ndarray:
        """Draw n iid standard normal variates.

        Successive calls continue the same substream, so the draw order
        inside a sample is part of the reproducibility contract.
        """
        n = int(n)
        if n < 1:
            raise ValueError("draw count must be at least 1")
        return self._gen.standard_normal(n)

    def __repr__(self) -> str:
        return f"RandomStream(master_seed={self.master_seed}, substream_id={self.substream_id})"


def gaussian_draws(stream: RandomStream, n: int) -> np.ndarray:
    """Draw n iid standard normal variates from the given substream."""
    return stream.standard_normal(n)
