"""Counter-based random streams.

Every stochastic operation in the package draws from a Philox generator whose
128-bit key encodes (seed, purpose tag, stream index).  Streams are therefore
independent, addressable, and reproducible: the same (seed, tag, index) always
yields the same draws, no matter how work is split across threads.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1

# Purpose tags keep the key spaces of unrelated draw sites disjoint.
TAG_TYPES = 1       # vertex-type sampling
TAG_NAIVE = 2       # naive generator, one stream per source vertex
TAG_BLOCK = 3       # block skip-sampling, one stream per ordered cell pair
TAG_RANK1 = 4       # sorted skip-sampling, one stream per source vertex
TAG_TREE = 5        # branching-process Monte Carlo


def stream(seed: int, tag: int, index: int = 0) -> np.random.Generator:
    """Generator for the (seed, tag, index) stream.

    `index` must fit in 56 bits, which holds for every use here (vertex ids,
    cell-pair ids, replication ids).
    """
    if not 0 <= index < (1 << 56):
        raise ValueError(f"stream index out of range: {index}")
    key = np.array([seed & _MASK64, ((tag & 0xFF) << 56) | index], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


class BufferedUniforms:
    """Scalar uniforms drawn from one stream in fixed order, batched for speed.

    Sequential skip-sampling consumes uniforms one at a time; drawing them in
    blocks amortises the cost of numpy scalar calls without changing the
    sequence of values.
    """

    __slots__ = ("_gen", "_buf", "_pos")

    def __init__(self, gen: np.random.Generator, block: int = 64):
        self._gen = gen
        self._buf = gen.random(block)
        self._pos = 0

    def next(self) -> float:
        buf = self._buf
        if self._pos == buf.shape[0]:
            self._buf = buf = self._gen.random(buf.shape[0] * 2)
            self._pos = 0
        u = buf[self._pos]
        self._pos += 1
        return u
