"""AEAD blobs with a fixed wire layout: nonce || len_be4 || ciphertext || tag.

ChaCha20-Poly1305 (96-bit nonce, 128-bit tag) via the `cryptography`
package. Nonces come from a per-key counter so runs stay replayable while
never repeating under one key.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

from cryptography.exceptions import InvalidTag
from cryptography.hazmat.primitives.ciphers.aead import ChaCha20Poly1305

from ..errors import FormatError, TamperError
from .fuzzy import SecretKey

NONCE_BYTES = 12
TAG_BYTES = 16


@dataclass(frozen=True)
class CipheredBlob:
    nonce: bytes
    ciphertext: bytes
    tag: bytes

    def to_bytes(self) -> bytes:
        return (self.nonce + struct.pack(">I", len(self.ciphertext))
                + self.ciphertext + self.tag)

    @classmethod
    def from_bytes(cls, raw: bytes) -> "CipheredBlob":
        if len(raw) < NONCE_BYTES + 4 + TAG_BYTES:
            raise FormatError("blob too short")
        nonce = raw[:NONCE_BYTES]
        (ct_len,) = struct.unpack(">I", raw[NONCE_BYTES:NONCE_BYTES + 4])
        body = raw[NONCE_BYTES + 4:]
        if len(body) != ct_len + TAG_BYTES:
            raise FormatError("blob length field inconsistent")
        return cls(nonce, body[:ct_len], body[ct_len:])


class AeadBox:
    """Sealing/opening under one SecretKey with counter nonces."""

    def __init__(self, key: SecretKey):
        # ChaCha20-Poly1305 wants 32 key bytes; stretch the 128-bit key.
        self._key = key
        self._nonce_counter = 0

    def _cipher(self) -> ChaCha20Poly1305:
        material = self._key._reveal()
        return ChaCha20Poly1305(material + material)

    def _next_nonce(self) -> bytes:
        n = self._nonce_counter.to_bytes(NONCE_BYTES, "big")
        self._nonce_counter += 1
        return n

    def seal(self, plaintext: bytes, aad: bytes = b"") -> CipheredBlob:
        nonce = self._next_nonce()
        out = self._cipher().encrypt(nonce, plaintext, aad)
        return CipheredBlob(nonce, out[:-TAG_BYTES], out[-TAG_BYTES:])

    def open(self, blob: CipheredBlob, aad: bytes = b"") -> bytes:
        try:
            return self._cipher().decrypt(blob.nonce, blob.ciphertext + blob.tag, aad)
        except InvalidTag as exc:
            raise TamperError("AEAD authentication failed") from exc

    def close(self):
        self._key.zeroize()
