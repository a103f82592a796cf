"""Portable xoshiro256** generator seeded through splitmix64.

Draws are produced by ``lanes`` independent xoshiro256** states stepped in
lock-step with NumPy uint64 arithmetic. The output stream is fixed: step 0
lanes 0..L-1, then step 1, and so on, regardless of how callers chunk their
requests. Lane ``j`` is seeded with splitmix64 outputs ``4j .. 4j+3`` of the
user seed.
"""

from __future__ import annotations

import numpy as np

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def splitmix64(state: int) -> tuple[int, int]:
    """One splitmix64 step: returns (new_state, output)."""
    state = (state + _GOLDEN) & _MASK
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return state, z ^ (z >> 31)


def derive_seed(seed: int, *parts: int) -> int:
    """Deterministic child seed from a parent seed and integer coordinates."""
    _, h = splitmix64(seed & _MASK)
    for p in parts:
        _, h = splitmix64((h ^ (p & _MASK)) & _MASK)
    return h


def _rotl(x: np.ndarray, k: int) -> np.ndarray:
    return (x << np.uint64(k)) | (x >> np.uint64(64 - k))


class Xoshiro256:
    def __init__(self, seed: int, lanes: int = 64):
        if lanes < 1:
            raise ValueError("lanes must be >= 1")
        state = seed & _MASK
        words = []
        for _ in range(4 * lanes):
            state, out = splitmix64(state)
            words.append(out)
        s = np.array(words, dtype=np.uint64).reshape(lanes, 4).T.copy()
        self._s = s  # (4, lanes)
        self.lanes = lanes
        self._buf = np.zeros(0, dtype=np.uint64)

    @classmethod
    def from_state(cls, state: np.ndarray) -> Xoshiro256:
        """Build from an explicit (4, lanes) state, e.g. for reference vectors."""
        obj = cls.__new__(cls)
        obj._s = np.array(state, dtype=np.uint64).reshape(4, -1).copy()
        obj.lanes = obj._s.shape[1]
        obj._buf = np.zeros(0, dtype=np.uint64)
        return obj

    def _step(self) -> np.ndarray:
        s0, s1, s2, s3 = self._s
        result = _rotl(s1 * np.uint64(5), 7) * np.uint64(9)
        t = s1 << np.uint64(17)
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        self._s[3] = _rotl(s3, 45)
        return result

    def random_raw(self, n: int) -> np.ndarray:
        """Next ``n`` 64-bit outputs of the stream."""
        need = n - len(self._buf)
        chunks = [self._buf]
        if need > 0:
            steps = -(-need // self.lanes)
            block = np.empty((steps, self.lanes), dtype=np.uint64)
            for i in range(steps):
                block[i] = self._step()
            chunks.append(block.ravel())
        stream = np.concatenate(chunks)
        self._buf = stream[n:]
        return stream[:n]

    def uniform(self, size=None) -> np.ndarray | float:
        """Doubles in [0, 1) from the top 53 bits."""
        n = 1 if size is None else int(np.prod(size))
        u = (self.random_raw(n) >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53))
        return float(u[0]) if size is None else u.reshape(size)

    def uniform_range(self, low: float, high: float, size) -> np.ndarray:
        return low + (high - low) * self.uniform(size)

    def normal(self, size=None) -> np.ndarray | float:
        """Standard normals by Box-Muller (cosine branch), two uniforms each."""
        n = 1 if size is None else int(np.prod(size))
        u = self.uniform(2 * n)
        z = np.sqrt(-2.0 * np.log1p(-u[0::2])) * np.cos(2.0 * np.pi * u[1::2])
        return float(z[0]) if size is None else z.reshape(size)

    def integers(self, high: int, size=None) -> np.ndarray | int:
        """Integers in [0, high) by scaling a 53-bit uniform."""
        u = self.uniform(1 if size is None else size)
        k = np.minimum(np.floor(np.asarray(u) * high), high - 1).astype(np.int64)
        return int(k.ravel()[0]) if size is None else k

    def permutation(self, n: int) -> np.ndarray:
        """Fisher-Yates shuffle of range(n)."""
        perm = np.arange(n)
        if n < 2:
            return perm
        u = self.uniform(n - 1)
        for idx, i in enumerate(range(n - 1, 0, -1)):
            j = min(int(u[idx] * (i + 1)), i)
            perm[i], perm[j] = perm[j], perm[i]
        return perm
