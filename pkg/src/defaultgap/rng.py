"""Counter-based random streams.

Every simulated path owns one Philox stream keyed by ``(seed, stream_id)``.
Results therefore depend only on which stream a path uses, never on how the
paths are split between workers.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

_MASK64 = (1 << 64) - 1
LANE_BITS = 40


@dataclass(frozen=True)
class RngStream:
    seed: int
    stream_id: int

    def __post_init__(self):
        if not (0 <= self.seed <= _MASK64 and 0 <= self.stream_id <= _MASK64):
            raise ValueError("seed and stream_id must be unsigned 64-bit integers")

    def generator(self) -> np.random.Generator:
        key = np.array([self.stream_id, self.seed], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key))


def stream_id(index, lane=0):
    """Stream id of path ``index`` in an independent ``lane`` of draws."""
    if index < 0 or index >= (1 << LANE_BITS):
        raise ValueError("path index out of range")
    return (int(lane) << LANE_BITS) | int(index)


def generators(seed, start, count, lane=0):
    for i in range(start, start + count):
        yield RngStream(seed, stream_id(i, lane)).generator()


def chunk_bounds(n, chunk):
    return [(lo, min(n, lo + chunk)) for lo in range(0, n, chunk)]


def map_chunks(func, n, chunk=4096, workers=1):
    """Apply ``func(lo, hi)`` over contiguous path ranges, results in order.

    ``func`` must derive all randomness from the path indices it is given;
    then the output is identical for any ``workers``.
    """
    bounds = chunk_bounds(n, chunk)
    if workers is None or workers <= 1 or len(bounds) <= 1:
        return [func(lo, hi) for lo, hi in bounds]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda b: func(*b), bounds))
