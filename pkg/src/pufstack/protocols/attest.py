"""Remote software attestation via a PUF-seeded memory walk and hash chain.

The verifier sends (timestamp, challenge). The device derives a walk over
all memory chunks from KDF(r_1 || t), then folds every chunk into a hash
chain where each link also binds a fresh chained PUF response: r_{i+1} is
the response to the previous response (width-adapted), so the final hash
depends on every chunk, every response, and the timestamp. The verifier,
holding the golden memory and a noiseless model of the device, recomputes
h_n and enforces a time budget that a memory-relocating adversary cannot
meet.

Report wire format: type(1) || timestamp_be8 || h_n(32) || elapsed_be8.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..errors import FormatError, ValidationError
from ..puf import Challenge, PufInstance
from ..xof import bytes_to_bits, expand, seeded_permutation

MSG_ATTESTATION_REPORT = 0x04

# simulated latency model, integer time units (ns-scale)
PUF_BITRATE_BITS_PER_UNIT = 5   # "at least 5 Gb/s" -> 5 bits per ns
DEFAULT_HASH_UNITS_PER_CHUNK = 64
DEFAULT_CHUNK_BYTES = 4096


@dataclass(frozen=True)
class AttestationRequest:
    timestamp: int
    challenge: Challenge

    def __post_init__(self):
        if not 0 <= self.timestamp < 2 ** 64:
            raise ValidationError("timestamp must fit 64 bits")


@dataclass(frozen=True)
class AttestationReport:
    timestamp: int
    final_hash: bytes
    elapsed: int

    def to_bytes(self) -> bytes:
        return struct.pack(">BQ", MSG_ATTESTATION_REPORT, self.timestamp) \
            + self.final_hash + struct.pack(">Q", self.elapsed)

    @classmethod
    def from_bytes(cls, raw: bytes) -> "AttestationReport":
        if len(raw) != 1 + 8 + 32 + 8 or raw[0] != MSG_ATTESTATION_REPORT:
            raise FormatError("malformed attestation report")
        timestamp = struct.unpack(">Q", raw[1:9])[0]
        elapsed = struct.unpack(">Q", raw[41:49])[0]
        return cls(timestamp, raw[9:41], elapsed)


def memory_chunks(memory: bytes, chunk_size: int = DEFAULT_CHUNK_BYTES) -> list[bytes]:
    """Partition the image into fixed chunks, zero-padding the last one."""
    if len(memory) == 0:
        raise ValidationError("memory image must be non-empty")
    if chunk_size < 1:
        raise ValidationError("chunk size must be >= 1")
    n = -(-len(memory) // chunk_size)
    chunks = []
    for i in range(n):
        c = memory[i * chunk_size:(i + 1) * chunk_size]
        chunks.append(c.ljust(chunk_size, b"\x00"))
    return chunks


def derive_walk(first_response: bytes, timestamp: int, n_chunks: int) -> np.ndarray:
    """Deterministic permutation of chunk indices from (r_1, t).

    The seed concatenates the response bytes and the big-endian timestamp
    (collision-free framing), then drives the documented Fisher-Yates
    shuffle.
    """
    if n_chunks < 1:
        raise ValidationError("walk needs at least one chunk")
    seed = first_response + struct.pack(">Q", timestamp)
    return seeded_permutation(seed, "attestation-walk", n_chunks)


def _response_to_challenge(response: bytes, length: int) -> Challenge:
    """Width adaptation: expander truncation of the response bytes."""
    raw = expand(response, "attest-chain-challenge", (length + 7) // 8)
    return Challenge(bytes_to_bits(raw, length))


def _hash_chain(chunks: list[bytes], walk: np.ndarray, puf: PufInstance,
                first_response: bytes) -> bytes:
    r = first_response
    h = b""
    for step, idx in enumerate(walk):
        if step > 0:
            r = puf.evaluate(_response_to_challenge(r, puf.challenge_len)).to_bytes()
        h = hashlib.sha256(chunks[int(idx)] + r + h).digest()
    return h


def honest_elapsed(n_chunks: int, challenge_len: int,
                   hash_units: int = DEFAULT_HASH_UNITS_PER_CHUNK) -> int:
    puf_units = -(-challenge_len // PUF_BITRATE_BITS_PER_UNIT)
    return n_chunks * (hash_units + puf_units)


def device_attest(request: AttestationRequest, memory: bytes, puf: PufInstance,
                  chunk_size: int = DEFAULT_CHUNK_BYTES,
                  hash_units: int = DEFAULT_HASH_UNITS_PER_CHUNK,
                  per_chunk_overhead: float = 1.0) -> AttestationReport:
    """Run the attestation walk. ``per_chunk_overhead`` > 1 models an
    adversary paying extra latency per chunk (e.g. relocating memory)."""
    if len(request.challenge) != puf.challenge_len:
        raise ValidationError("request challenge length does not match the PUF")
    chunks = memory_chunks(memory, chunk_size)
    r1 = puf.evaluate(request.challenge).to_bytes()
    walk = derive_walk(r1, request.timestamp, len(chunks))
    final = _hash_chain(chunks, walk, puf, r1)
    elapsed = int(round(per_chunk_overhead
                        * honest_elapsed(len(chunks), puf.challenge_len, hash_units)))
    return AttestationReport(request.timestamp, final, elapsed)


@dataclass(frozen=True)
class AttestationVerdict:
    accepted: bool
    reason: Optional[str] = None  # "HashMismatch" or "Timeout" when rejected


def verifier_attest_check(request: AttestationRequest, report: AttestationReport,
                          golden_memory: bytes, puf_model: PufInstance,
                          time_budget: int,
                          chunk_size: int = DEFAULT_CHUNK_BYTES) -> AttestationVerdict:
    """Recompute h_n from the golden image and the PUF model; accept iff the
    hash matches and the reported time is within budget."""
    chunks = memory_chunks(golden_memory, chunk_size)
    r1 = puf_model.evaluate(request.challenge).to_bytes()
    walk = derive_walk(r1, request.timestamp, len(chunks))
    expected = _hash_chain(chunks, walk, puf_model, r1)
    if report.final_hash != expected:
        return AttestationVerdict(False, "HashMismatch")
    if report.elapsed > time_budget:
        return AttestationVerdict(False, "Timeout")
    return AttestationVerdict(True)
