"""Code-offset fuzzy extractor over a pluggable block code.

Default code: repetition(5) concatenated over 128 message bits (n = 640),
which corrects up to 2 flips per 5-bit block and is small enough to test
exhaustively. Helper data is response XOR a random codeword; the key is a
KDF of the decoded message and is checked against a short digest so a
failed reproduction is reported, never silently wrong.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..errors import ValidationError
from ..xof import expand_bits

KEY_BYTES = 16
CHECK_BYTES = 8


class SecretKey:
    """128-bit symmetric key material. Deliberately opaque: no public
    operation serializes it, and reprs never show the bytes."""

    __slots__ = ("_material",)

    def __init__(self, material: bytes):
        if len(material) != KEY_BYTES:
            raise ValidationError("secret key must be 16 bytes")
        self._material = material

    def __repr__(self):
        return "SecretKey(<hidden>)"

    def __eq__(self, other):
        return isinstance(other, SecretKey) and self._material == other._material

    def __hash__(self):
        return hash(self._material)

    def _reveal(self) -> bytes:
        # internal use by the AEAD layer only
        return self._material

    def zeroize(self):
        self._material = b"\x00" * KEY_BYTES


@dataclass(frozen=True)
class HelperData:
    code_offset: np.ndarray  # response-length bit array
    key_check: bytes         # short digest binding the derived key


class RepetitionCode:
    """r-fold repetition over k message bits; majority decode, t = (r-1)//2."""

    def __init__(self, repeats: int = 5, message_bits: int = 128):
        if repeats < 1 or repeats % 2 == 0:
            raise ValidationError("repetition factor must be odd and >= 1")
        self.repeats = repeats
        self.message_bits = message_bits
        self.n = repeats * message_bits

    def encode(self, message: np.ndarray) -> np.ndarray:
        msg = np.asarray(message, dtype=np.uint8)
        if msg.shape != (self.message_bits,):
            raise ValidationError("message length mismatch")
        return np.repeat(msg, self.repeats)

    def decode(self, word: np.ndarray) -> np.ndarray:
        w = np.asarray(word, dtype=np.uint8)
        if w.shape != (self.n,):
            raise ValidationError("codeword length mismatch")
        blocks = w.reshape(self.message_bits, self.repeats)
        return (blocks.sum(axis=1) * 2 > self.repeats).astype(np.uint8)


def _kdf(message: np.ndarray) -> bytes:
    packed = np.packbits(message).tobytes()
    return hashlib.sha256(b"fe-kdf\x00" + packed).digest()[:KEY_BYTES]


def _key_check(key: bytes) -> bytes:
    return hashlib.sha256(b"fe-check\x00" + key).digest()[:CHECK_BYTES]


def fe_generate(response_bits: np.ndarray, randomness: bytes,
                code: Optional[RepetitionCode] = None) -> tuple[SecretKey, HelperData]:
    """Enroll a response: helper = response XOR codeword(random message)."""
    code = code if code is not None else RepetitionCode()
    resp = np.asarray(response_bits, dtype=np.uint8)
    if resp.shape != (code.n,):
        raise ValidationError(f"response length {resp.shape} != code length {code.n}")
    message = expand_bits(randomness, "fe-message", code.message_bits)
    codeword = code.encode(message)
    offset = np.bitwise_xor(resp, codeword)
    key = _kdf(message)
    return SecretKey(key), HelperData(offset, _key_check(key))


def fe_reproduce(noisy_bits: np.ndarray, helper: HelperData,
                 code: Optional[RepetitionCode] = None) -> Optional[SecretKey]:
    """Recover the enrolled key from a noisy re-read, or None on failure.

    Succeeds iff every block carries at most t errors; a miscorrected block
    yields a key that fails the helper's check digest.
    """
    code = code if code is not None else RepetitionCode()
    noisy = np.asarray(noisy_bits, dtype=np.uint8)
    if noisy.shape != (code.n,):
        raise ValidationError(f"response length {noisy.shape} != code length {code.n}")
    word = np.bitwise_xor(noisy, np.asarray(helper.code_offset, dtype=np.uint8))
    message = code.decode(word)
    key = _kdf(message)
    if _key_check(key) != helper.key_check:
        return None
    return SecretKey(key)
