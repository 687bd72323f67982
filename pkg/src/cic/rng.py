"""Injectable random sources.

Production paths use the operating system CSPRNG. The attack harness swaps
in a seeded stream (for reproducible transcripts) or a deliberately broken
source (for the reused-nonce scenario), so everything that needs entropy
takes a ``RandomSource`` instead of reaching for ``os.urandom`` directly.
"""

from __future__ import annotations

import hashlib
import os
from typing import Protocol

from .errors import RngFailure


class RandomSource(Protocol):
    def read(self, n: int) -> bytes:
        """Return exactly ``n`` fresh bytes."""
        ...


class SystemRandomSource:
    """OS CSPRNG."""

    def read(self, n: int) -> bytes:
        return os.urandom(n)


class SeededRandomSource:
    """Deterministic SHA-256 counter stream keyed by an integer seed.

    Not a security primitive; exists so harness runs replay byte-for-byte.
    """

    def __init__(self, seed: int, label: str = "") -> None:
        self._key = hashlib.sha256(
            b"cic-seeded-rng:" + str(seed).encode() + b":" + label.encode()
        ).digest()
        self._counter = 0
        self._buffer = b""

    def read(self, n: int) -> bytes:
        while len(self._buffer) < n:
            block = hashlib.sha256(self._key + self._counter.to_bytes(8, "big")).digest()
            self._buffer += block
            self._counter += 1
        out, self._buffer = self._buffer[:n], self._buffer[n:]
        return out

    def derive(self, label: str) -> "SeededRandomSource":
        """Independent stream for a sub-component, stable under call reordering."""
        child = SeededRandomSource.__new__(SeededRandomSource)
        child._key = hashlib.sha256(self._key + b"derive:" + label.encode()).digest()
        child._counter = 0
        child._buffer = b""
        return child


class FixedRandomSource:
    """Broken generator that replays the same pattern forever."""

    def __init__(self, pattern: bytes) -> None:
        if not pattern:
            raise ValueError("pattern must be non-empty")
        self._pattern = pattern

    def read(self, n: int) -> bytes:
        reps = -(-n // len(self._pattern))
        return (self._pattern * reps)[:n]


class FailingRandomSource:
    """Source whose reads always fail; exercises the error path."""

    def read(self, n: int) -> bytes:
        raise OSError("entropy source unavailable")


SYSTEM_RNG = SystemRandomSource()


def read_exact(rng: RandomSource, n: int) -> bytes:
    """Pull ``n`` bytes, converting any misbehavior into ``RngFailure``."""
    try:
        data = rng.read(n)
    except Exception as exc:
        raise RngFailure(f"random source failed: {exc}") from exc
    if not isinstance(data, bytes) or len(data) != n:
        raise RngFailure("random source returned the wrong amount of material")
    return data
