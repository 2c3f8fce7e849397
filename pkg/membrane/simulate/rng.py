"""
Counter-based random streams.

Paths are grouped into fixed-size chunks; chunk c of a run with master seed s
draws from Philox keyed by SeedSequence([s, c]). Results therefore do not
depend on how many workers run the chunks or in which order they finish.
"""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Chunk:
    index: int
    start: int
    stop: int

    @property
    def size(self) -> int:
        return self.stop - self.start

    @property
    def path_ids(self) -> np.ndarray:
        return np.arange(self.start, self.stop)


def chunk_plan(n_paths: int, chunk_size: int) -> list[Chunk]:
    """Split path ids 0..n_paths-1 into consecutive chunks."""
    if n_paths < 1:
        raise ValueError(f"need at least one path, got {n_paths}")
    if chunk_size < 1:
        raise ValueError(f"chunk size must be positive, got {chunk_size}")
    return [
        Chunk(index=i, start=start, stop=min(start + chunk_size, n_paths))
        for i, start in enumerate(range(0, n_paths, chunk_size))
    ]


def chunk_generator(master_seed: int, chunk_index: int) -> np.random.Generator:
    """Independent Philox stream for one chunk."""
    seq = np.random.SeedSequence([int(master_seed), int(chunk_index)])
    return np.random.Generator(np.random.Philox(seq))


def sibling_seed(master_seed: int, tag: int = 1) -> int:
    """A master seed for a second ensemble that shares no stream with master_seed's."""
    seq = np.random.SeedSequence([int(master_seed), 2**32 + int(tag)])
    return int(seq.generate_state(1, dtype=np.uint64)[0])
