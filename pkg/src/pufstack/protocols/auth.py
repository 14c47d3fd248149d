"""Mutual authentication with a single rolling CRP as the shared secret.

Session i: the device derives the next challenge from the current secret
r_i with the deterministic expander, reads the fresh response r_{i+1} from
its PUF, and sends it masked (XOR r_i) together with a memory hash, a clock
count, and a fresh nonce, all MAC'd under r_i. The verifier authenticates,
unmasks r_{i+1}, and proves knowledge of it by MACing the derived
challenge back. Both parties then roll over to r_{i+1}; the verifier keeps
the previous secret for one epoch so a lost confirmation cannot strand the
device.

Wire format (both messages): type(1) || session_be4 || length-prefixed
fields in declaration order (2-byte lengths) || HMAC-SHA256(32).
"""

from __future__ import annotations

import hashlib
import hmac
import struct
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..errors import (AuthenticationError, FormatError, ProtocolStateError,
                      ReplayError, ValidationError)
from ..puf import Challenge, PufInstance, stabilized_response
from ..xof import expand, bytes_to_bits

MSG_AUTH_REQUEST = 0x01
MSG_DEVICE_RESPONSE = 0x02
MSG_VERIFIER_CONFIRM = 0x03

MAC_BYTES = 32
NONCE_BYTES = 16
CHALLENGE_LABEL = "auth-next-challenge"


def derive_next_challenge(secret: bytes, length: int) -> Challenge:
    """The RNG known to both parties: expander keyed by the current secret."""
    raw = expand(secret, CHALLENGE_LABEL, (length + 7) // 8)
    return Challenge(bytes_to_bits(raw, length))


def _mac(key: bytes, payload: bytes) -> bytes:
    return hmac.new(key, payload, hashlib.sha256).digest()


def _frame_fields(msg_type: int, session: int, fields: list[bytes]) -> bytes:
    head = struct.pack(">BI", msg_type, session)
    body = b"".join(struct.pack(">H", len(f)) + f for f in fields)
    return head + body


def _parse_fields(raw: bytes, expected_type: int, n_fields: int):
    if len(raw) < 5 + MAC_BYTES:
        raise FormatError("message too short")
    msg_type, session = struct.unpack(">BI", raw[:5])
    if msg_type != expected_type:
        raise FormatError(f"unexpected message type {msg_type:#x}")
    body, mac = raw[5:-MAC_BYTES], raw[-MAC_BYTES:]
    fields = []
    offset = 0
    for _ in range(n_fields):
        if offset + 2 > len(body):
            raise FormatError("truncated field block")
        (n,) = struct.unpack_from(">H", body, offset)
        offset += 2
        fields.append(body[offset:offset + n])
        if len(fields[-1]) != n:
            raise FormatError("truncated field")
        offset += n
    if offset != len(body):
        raise FormatError("trailing bytes in field block")
    return session, fields, mac


@dataclass(frozen=True)
class AuthRequest:
    session: int

    def to_bytes(self) -> bytes:
        return struct.pack(">BI", MSG_AUTH_REQUEST, self.session)

    @classmethod
    def from_bytes(cls, raw: bytes) -> "AuthRequest":
        if len(raw) != 5 or raw[0] != MSG_AUTH_REQUEST:
            raise FormatError("malformed auth request")
        return cls(struct.unpack(">BI", raw)[1])


@dataclass(frozen=True)
class AuthMessage1:
    session: int
    masked: bytes       # r_{i+1} XOR r_i
    mem_hash: bytes     # H: SHA-256 of the device memory image
    clock_count: int    # CC: asserted cycle-count metadata
    nonce: bytes        # N: freshness
    mac: bytes

    def _fields(self) -> list[bytes]:
        return [self.masked, self.mem_hash,
                struct.pack(">Q", self.clock_count), self.nonce]

    def signed_payload(self) -> bytes:
        return _frame_fields(MSG_DEVICE_RESPONSE, self.session, self._fields())

    def to_bytes(self) -> bytes:
        return self.signed_payload() + self.mac

    @classmethod
    def from_bytes(cls, raw: bytes) -> "AuthMessage1":
        session, fields, mac = _parse_fields(raw, MSG_DEVICE_RESPONSE, 4)
        if len(fields[1]) != 32 or len(fields[2]) != 8:
            raise FormatError("bad auth message field widths")
        return cls(session, fields[0], fields[1],
                   struct.unpack(">Q", fields[2])[0], fields[3], mac)


@dataclass(frozen=True)
class AuthMessage2:
    session: int
    mac: bytes  # MAC(c_{i+1}, r_{i+1})

    def to_bytes(self) -> bytes:
        return _frame_fields(MSG_VERIFIER_CONFIRM, self.session, []) + self.mac

    @classmethod
    def from_bytes(cls, raw: bytes) -> "AuthMessage2":
        session, _, mac = _parse_fields(raw, MSG_VERIFIER_CONFIRM, 0)
        return cls(session, mac)


def _confirm_payload(session: int, challenge: Challenge) -> bytes:
    return _frame_fields(MSG_VERIFIER_CONFIRM, session, [challenge.to_bytes()])


class DeviceSession:
    """Device-side state machine. Single-owner, strictly sequential."""

    def __init__(self, puf: PufInstance, initial_secret: bytes,
                 memory_image: bytes = b"",
                 nonce_rng: Optional[np.random.Generator] = None,
                 noise_rng: Optional[np.random.Generator] = None,
                 clock_count: int = 1000, stabilize_votes: int = 9):
        self.puf = puf
        self.secret = initial_secret
        self.memory_image = memory_image
        self.counter = 0
        self.status = "stable"
        self.clock_count = clock_count
        self._nonce_rng = nonce_rng
        self._noise_rng = noise_rng
        self._votes = stabilize_votes
        self._pending_secret: Optional[bytes] = None
        self._pending_challenge: Optional[Challenge] = None

    def _fresh_nonce(self) -> bytes:
        if self._nonce_rng is None:
            raise ValidationError("device session needs a nonce rng")
        return self._nonce_rng.bytes(NONCE_BYTES)

    def respond(self, request: AuthRequest) -> AuthMessage1:
        if self.status != "stable":
            raise ProtocolStateError("respond() requires a stable session")
        challenge = derive_next_challenge(self.secret, self.puf.challenge_len)
        fresh = stabilized_response(self.puf, challenge, self._noise_rng,
                                    self._votes).to_bytes()
        masked = bytes(a ^ b for a, b in zip(fresh, self.secret))
        msg = AuthMessage1(
            session=self.counter,
            masked=masked,
            mem_hash=hashlib.sha256(self.memory_image).digest(),
            clock_count=self.clock_count,
            nonce=self._fresh_nonce(),
            mac=b"",
        )
        mac = _mac(self.secret, msg.signed_payload())
        msg = AuthMessage1(msg.session, msg.masked, msg.mem_hash,
                           msg.clock_count, msg.nonce, mac)
        self._pending_secret = fresh
        self._pending_challenge = challenge
        self.status = "pending_verifier"
        return msg

    def confirm(self, msg2: AuthMessage2) -> None:
        if self.status != "pending_verifier":
            raise ProtocolStateError("confirm() requires a pending session")
        expected = _mac(self._pending_secret,
                        _confirm_payload(msg2.session, self._pending_challenge))
        if not hmac.compare_digest(expected, msg2.mac):
            self._pending_secret = None
            self._pending_challenge = None
            self.status = "stable"
            raise AuthenticationError("verifier confirmation MAC mismatch")
        self.secret = self._pending_secret
        self._pending_secret = None
        self._pending_challenge = None
        self.counter += 1
        self.status = "stable"

    def abort(self) -> None:
        """Drop any pending state, e.g. after a lost confirmation."""
        self._pending_secret = None
        self._pending_challenge = None
        self.status = "stable"


class VerifierSession:
    """Verifier-side state machine with one-epoch desync recovery.

    Storage is constant in the number of sessions: the current secret, at
    most one previous secret, and the nonce windows for those two epochs.
    """

    def __init__(self, initial_secret: bytes, challenge_len: int = 64,
                 golden_memory_hash: Optional[bytes] = None):
        self.secret = initial_secret
        self.previous: Optional[bytes] = None
        self.challenge_len = challenge_len
        self.golden_memory_hash = golden_memory_hash
        self.counter = 0
        self._seen_nonces: dict[bytes, set[bytes]] = {initial_secret: set()}

    def request(self) -> AuthRequest:
        return AuthRequest(self.counter)

    def _match_epoch(self, msg1: AuthMessage1) -> Optional[bytes]:
        payload = msg1.signed_payload()
        for key in (self.secret, self.previous):
            if key is not None and hmac.compare_digest(_mac(key, payload), msg1.mac):
                return key
        return None

    def check_device(self, msg1: AuthMessage1) -> AuthMessage2:
        key = self._match_epoch(msg1)
        if key is None:
            raise AuthenticationError("device MAC mismatch")
        window = self._seen_nonces.setdefault(key, set())
        if msg1.nonce in window:
            raise ReplayError("nonce already seen in this epoch")
        if (self.golden_memory_hash is not None
                and msg1.mem_hash != self.golden_memory_hash):
            raise AuthenticationError("memory hash does not match golden image")
        window.add(msg1.nonce)

        fresh = bytes(a ^ b for a, b in zip(msg1.masked, key))
        challenge = derive_next_challenge(key, self.challenge_len)
        mac2 = _mac(fresh, _confirm_payload(msg1.session, challenge))

        # commit: matched epoch becomes "previous", fresh secret current
        self.previous = key
        self.secret = fresh
        self.counter += 1
        self._seen_nonces = {k: v for k, v in self._seen_nonces.items()
                             if k in (self.secret, self.previous)}
        self._seen_nonces.setdefault(self.secret, set())
        return AuthMessage2(msg1.session, mac2)


def enroll_secret(puf: PufInstance, label: str = "provisioning",
                  noise_rng: Optional[np.random.Generator] = None,
                  votes: int = 9) -> bytes:
    """Manufacturing-time shared secret: response to a fixed enrollment
    challenge derived from the device seed."""
    challenge = puf.random_challenges(label, 1)[0]
    return stabilized_response(puf, challenge, noise_rng, votes).to_bytes()
