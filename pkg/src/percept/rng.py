"""Counter-based random streams with labelled forking.

Every draw is ``mix64(key + counter * GOLDEN_GAMMA)`` where ``mix64`` is the
splitmix64 finalizer.  A child stream created with ``fork(label)`` has the key
``mix64(parent_key ^ mix64(fnv1a64(label)))``; it depends only on the parent's
key and the label, never on how many values the parent already produced.
The output is therefore identical across platforms and Python versions.
"""

from __future__ import annotations

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3


def mix64(z: int) -> int:
    """splitmix64 finalizer."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def fnv1a64(data: bytes) -> int:
    h = _FNV_OFFSET
    for byte in data:
        h = ((h ^ byte) * _FNV_PRIME) & MASK64
    return h


def _label_bytes(label) -> bytes:
    if isinstance(label, bytes):
        return label
    if isinstance(label, bool) or not isinstance(label, (str, int)):
        raise TypeError(f"fork label must be str, int or bytes, got {type(label).__name__}")
    return str(label).encode("utf-8")


class RngStream:
    """Deterministic 64-bit random stream.

    Streams are cheap; fork one per independent consumer instead of sharing.
    A single stream is not safe to share between threads.
    """

    __slots__ = ("key", "counter")

    def __init__(self, seed: int = 0, counter: int = 0):
        self.key = int(seed) & MASK64
        self.counter = int(counter)

    def __repr__(self):
        return f"RngStream(key=0x{self.key:016x}, counter={self.counter})"

    @property
    def state(self) -> int:
        """Current 64-bit generator state."""
        return (self.key + self.counter * GOLDEN_GAMMA) & MASK64

    def fork(self, label) -> "RngStream":
        return RngStream(mix64(self.key ^ mix64(fnv1a64(_label_bytes(label)))))

    def fork_path(self, *labels) -> "RngStream":
        stream = self
        for label in labels:
            stream = stream.fork(label)
        return stream

    def next_u64(self) -> int:
        self.counter += 1
        return mix64(self.key + self.counter * GOLDEN_GAMMA)

    def random(self) -> float:
        """Uniform float in [0, 1) with 53 random bits."""
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def uniform(self, low: float = 0.0, high: float = 1.0) -> float:
        return low + (high - low) * self.random()

    def bernoulli(self, p: float) -> bool:
        return self.random() < p

    def randbelow(self, n: int) -> int:
        """Unbiased integer in [0, n) (Lemire's multiply-and-reject)."""
        if n <= 0:
            raise ValueError("n must be positive")
        m = self.next_u64() * n
        low = m & MASK64
        if low < n:
            threshold = ((1 << 64) - n) % n
            while low < threshold:
                m = self.next_u64() * n
                low = m & MASK64
        return m >> 64
