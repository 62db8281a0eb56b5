"""Counter-based random streams.

Every replication owns a Philox substream addressed by
``(master_seed, domain, replication)``.  The master seed is the Philox key
and the (domain, replication) pair sits in the high words of the 256-bit
counter, so any stream is reached in O(1) and draws never overlap unless a
single stream consumes more than 2**128 blocks.  Results therefore depend
only on the stream address, never on execution order or worker count.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["RngStream", "generator", "PATH", "CHOLESKY", "FBM", "SHARED", "BLOCKS"]

# domain tags keep independent uses of the same (seed, replication) apart
PATH = 0
CHOLESKY = 1
FBM = 2
SHARED = 3
BLOCKS = 4

_MASK64 = (1 << 64) - 1


def generator(master_seed: int, replication: int, domain: int = PATH) -> np.random.Generator:
    """Return the generator for one substream address."""
    if replication < 0:
        raise ValueError("replication index must be >= 0")
    key = int(master_seed) & _MASK64
    counter = [0, 0, int(domain) & _MASK64, int(replication) & _MASK64]
    return np.random.Generator(np.random.Philox(key=key, counter=counter))


@dataclass(frozen=True)
class RngStream:
    """Address of one reproducible substream."""

    master_seed: int
    replication: int = 0

    def __post_init__(self):
        if self.replication < 0:
            raise ValueError("replication index must be >= 0")
        if not (0 <= int(self.master_seed) <= _MASK64):
            raise ValueError("master_seed must be an unsigned 64-bit integer")

    def generator(self, domain: int = PATH) -> np.random.Generator:
        return generator(self.master_seed, self.replication, domain)

    def child(self, replication: int) -> "RngStream":
        return RngStream(self.master_seed, replication)
