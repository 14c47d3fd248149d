"""Deterministic byte/bit expansion used everywhere randomness must be replayable.

The construction is counter-mode SHA-256: block i of the output stream is
``SHA256(seed || 0x00 || label || 0x00 || i_be32)``. Labels are ASCII and never
contain NUL, so the framing is injective. Every derived quantity in the
package (device parameters, noise streams, protocol challenges, shuffles)
flows from this expander so that a run is reproducible from its seeds alone.
"""

from __future__ import annotations

import hashlib

import numpy as np

from .errors import ValidationError

_BLOCK = 32


def _check_label(label: str) -> bytes:
    raw = label.encode("ascii")
    if b"\x00" in raw:
        raise ValidationError("expander label must not contain NUL")
    return raw


def expand(seed: bytes, label: str, n_bytes: int) -> bytes:
    """Derive ``n_bytes`` pseudo-random bytes from (seed, label)."""
    raw = _check_label(label)
    out = bytearray()
    counter = 0
    while len(out) < n_bytes:
        h = hashlib.sha256(seed + b"\x00" + raw + b"\x00" + counter.to_bytes(4, "big"))
        out += h.digest()
        counter += 1
    return bytes(out[:n_bytes])


def expand_bits(seed: bytes, label: str, n_bits: int) -> np.ndarray:
    """Derive ``n_bits`` bits as a uint8 array, most-significant bit first."""
    raw = expand(seed, label, (n_bits + 7) // 8)
    bits = np.unpackbits(np.frombuffer(raw, dtype=np.uint8))
    return bits[:n_bits]


def derive_rng(seed: bytes, label: str) -> np.random.Generator:
    """A numpy Generator whose state is fully determined by (seed, label)."""
    material = expand(seed, label, 16)
    return np.random.default_rng(int.from_bytes(material, "big"))


class XofStream:
    """Incremental byte stream over the counter-mode expander.

    Supports rejection-sampled bounded integers, which is what the
    documented Fisher-Yates shuffle below consumes.
    """

    def __init__(self, seed: bytes, label: str):
        self._seed = seed
        self._label = _check_label(label)
        self._counter = 0
        self._buf = b""

    def take(self, n: int) -> bytes:
        while len(self._buf) < n:
            h = hashlib.sha256(
                self._seed + b"\x00" + self._label + b"\x00" + self._counter.to_bytes(4, "big")
            )
            self._buf += h.digest()
            self._counter += 1
        out, self._buf = self._buf[:n], self._buf[n:]
        return out

    def randbelow(self, bound: int) -> int:
        """Uniform integer in [0, bound) via 4-byte rejection sampling."""
        if bound <= 0:
            raise ValidationError("randbelow bound must be positive")
        span = 1 << 32
        limit = span - span % bound
        while True:
            v = int.from_bytes(self.take(4), "big")
            if v < limit:
                return v % bound


def seeded_permutation(seed: bytes, label: str, n: int) -> np.ndarray:
    """Fisher-Yates permutation of range(n) driven by the expander stream.

    Implemented by hand (not via numpy) so the output is pinned to this
    construction rather than to a library's internal shuffle.
    """
    if n < 1:
        raise ValidationError("permutation length must be >= 1")
    stream = XofStream(seed, label)
    perm = np.arange(n, dtype=np.int64)
    for i in range(n - 1, 0, -1):
        j = stream.randbelow(i + 1)
        perm[i], perm[j] = perm[j], perm[i]
    return perm


def bits_to_bytes(bits: np.ndarray) -> bytes:
    """Pack a bit array (MSB-first) into bytes, zero-padding the tail."""
    arr = np.asarray(bits, dtype=np.uint8)
    return np.packbits(arr).tobytes()


def bytes_to_bits(raw: bytes, n_bits: int) -> np.ndarray:
    bits = np.unpackbits(np.frombuffer(raw, dtype=np.uint8))
    if len(bits) < n_bits:
        raise ValidationError("not enough bytes for requested bit count")
    return bits[:n_bits]
