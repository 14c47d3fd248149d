"""Mutual-authentication and software-attestation protocol state machines."""

from .attest import (AttestationReport, AttestationRequest, AttestationVerdict,
                     derive_walk, device_attest, honest_elapsed, memory_chunks,
                     verifier_attest_check)
from .auth import (AuthMessage1, AuthMessage2, AuthRequest, DeviceSession,
                   VerifierSession, derive_next_challenge, enroll_secret)

__all__ = [
    "AttestationReport", "AttestationRequest", "AttestationVerdict",
    "AuthMessage1", "AuthMessage2", "AuthRequest", "DeviceSession",
    "VerifierSession", "derive_next_challenge", "derive_walk",
    "device_attest", "enroll_secret", "honest_elapsed", "memory_chunks",
    "verifier_attest_check",
]
