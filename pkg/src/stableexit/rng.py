"""Counter-based random streams for reproducible parallel Monte Carlo.

Each simulated path owns one stream, keyed by (seed, stream_index).
Streams are backed by Philox4x64, so the draw sequence is a pure function
of the key and the draw counter: results do not depend on which worker
thread consumed which path.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["RngStream"]


@dataclass(frozen=True)
class RngStream:
    """One reproducible random stream, keyed by (seed, stream_index)."""

    seed: int
    stream_index: int = 0
    _gen: np.random.Generator | None = field(
        default=None, repr=False, compare=False
    )

    def __post_init__(self):
        if not (0 <= self.seed < 2**64):
            raise ValueError("seed must fit in 64 bits")
        if not (0 <= self.stream_index < 2**64):
            raise ValueError("stream_index must fit in 64 bits")

    @property
    def generator(self) -> np.random.Generator:
        """The underlying numpy generator (created lazily, then cached)."""
        if self._gen is None:
            object.__setattr__(self, "_gen", make_generator(self.seed, self.stream_index))
        return self._gen

    def spawn(self, stream_index: int) -> "RngStream":
        """A fresh stream with the same seed and a new index."""
        return RngStream(self.seed, stream_index)


def make_generator(seed: int, stream_index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=np.array([seed, stream_index], dtype=np.uint64)))
