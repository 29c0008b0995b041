"""Seed expansion streams.

Two interchangeable extendable-output streams: the real SHAKE-128 one used
for key material, and a cheap counter-mode SHA-256 stub for hermetic tests.
Both are deterministic for a given seed and single-owner (not thread safe).
"""

import hashlib


class Shake128Xof:
    def __init__(self, seed: bytes = b""):
        self._data = bytes(seed)
        self._buf = b""
        self._off = 0

    def absorb(self, data: bytes) -> None:
        if self._off:
            raise RuntimeError("cannot absorb after squeezing started")
        self._data += bytes(data)

    def squeeze(self, count: int) -> bytes:
        end = self._off + count
        if end > len(self._buf):
            # hashlib SHAKE re-derives the whole prefix; grow geometrically
            need = max(end, 2 * len(self._buf), 512)
            self._buf = hashlib.shake_128(self._data).digest(need)
        out = self._buf[self._off:end]
        self._off = end
        return out


class CounterXof:
    """Counter-mode SHA-256 stream. Test stub only, not a SHAKE replacement."""

    def __init__(self, seed: bytes = b""):
        self._seed = bytes(seed)
        self._ctr = 0
        self._pending = b""

    def absorb(self, data: bytes) -> None:
        if self._ctr or self._pending:
            raise RuntimeError("cannot absorb after squeezing started")
        self._seed += bytes(data)

    def squeeze(self, count: int) -> bytes:
        while len(self._pending) < count:
            block = hashlib.sha256(self._seed + self._ctr.to_bytes(8, "little")).digest()
            self._pending += block
            self._ctr += 1
        out, self._pending = self._pending[:count], self._pending[count:]
        return out
