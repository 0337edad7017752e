"""Seeded randomness with a fixed, documented algorithm.

Every stage draws from a PCG64 bit generator seeded through numpy's
SeedSequence with ``(global_seed, stage_hash)``.  Only the raw 64-bit
output stream is consumed; bounded integers use rejection sampling and
shuffles are plain Fisher-Yates, so results do not depend on numpy's
higher-level Generator methods (which may change between releases).
"""

import hashlib

import numpy as np

ALGORITHM = "pcg64"

_MASK64 = (1 << 64) - 1


def stage_seed(seed: int, stage: str) -> int:
    digest = hashlib.sha256(f"{int(seed)}:{stage}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


class StageRng:
    def __init__(self, seed: int, stage: str = ""):
        self.seed = int(seed)
        self.stage = stage
        ss = np.random.SeedSequence([self.seed & _MASK64, stage_seed(self.seed, stage)])
        self._bitgen = np.random.PCG64(ss)

    def next_u64(self) -> int:
        return int(self._bitgen.random_raw())

    def below(self, n: int) -> int:
        """Uniform integer in [0, n)."""
        if n <= 0:
            raise ValueError("n must be positive")
        limit = (1 << 64) - ((1 << 64) % n)
        while True:
            x = self.next_u64()
            if x < limit:
                return x % n

    def shuffle(self, items: list) -> list:
        """In-place Fisher-Yates; returns the list for chaining."""
        for i in range(len(items) - 1, 0, -1):
            j = self.below(i + 1)
            items[i], items[j] = items[j], items[i]
        return items

    def sample(self, items, k: int) -> list:
        """k items without replacement, in draw order (partial Fisher-Yates)."""
        pool = list(items)
        if k > len(pool):
            raise ValueError(f"cannot sample {k} from {len(pool)}")
        for i in range(k):
            j = i + self.below(len(pool) - i)
            pool[i], pool[j] = pool[j], pool[i]
        return pool[:k]
