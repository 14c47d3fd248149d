"""End-to-end attack scenarios over the simulated channel."""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from typing import Callable, Optional

from ..errors import (AuthenticationError, FormatError, ProtocolStateError,
                      ReplayError, ValidationError)
from ..protocols.attest import (AttestationRequest, device_attest,
                                honest_elapsed, verifier_attest_check)
from ..protocols.auth import (AuthMessage1, AuthMessage2, AuthRequest,
                              DeviceSession, VerifierSession,
                              MSG_DEVICE_RESPONSE, enroll_secret)
from ..puf import Challenge, create_puf
from ..xof import derive_rng, expand
from .channel import AdversaryPolicy, Channel

AUTH_ADVERSARIES = ("passive", "replay", "bitflip", "drop", "modify")
ATTEST_ADVERSARIES = ("none", "tamper", "relocate")


@dataclass
class ScenarioConfig:
    protocol: str = "auth"          # "auth" | "attest"
    adversary: str = "passive"
    adversary_p: float = 1.0
    trials: int = 100
    run_seed: int = 0
    puf_kind: str = "photonic"
    challenge_len: int = 64
    response_len: int = 128
    noise_sigma: float = 0.02
    memory_bytes: int = 16384
    chunk_bytes: int = 1024
    budget_factor: float = 1.2
    overhead_factor: float = 1.5

    def validate(self):
        if self.protocol not in ("auth", "attest"):
            raise ValidationError("protocol must be 'auth' or 'attest'")
        if self.trials < 1:
            raise ValidationError("trials must be >= 1")
        if self.protocol == "auth" and self.adversary not in AUTH_ADVERSARIES:
            raise ValidationError(f"auth adversary must be one of {AUTH_ADVERSARIES}")
        if self.protocol == "attest" and self.adversary not in ATTEST_ADVERSARIES:
            raise ValidationError(f"attest adversary must be one of {ATTEST_ADVERSARIES}")

    def to_kv(self) -> dict[str, str]:
        return {k: str(getattr(self, k)) for k in (
            "protocol", "adversary", "adversary_p", "trials", "run_seed",
            "puf_kind", "challenge_len", "response_len", "noise_sigma",
            "memory_bytes", "chunk_bytes", "budget_factor", "overhead_factor")}

    @classmethod
    def from_kv(cls, kv: dict[str, str]) -> "ScenarioConfig":
        known = {f.name for f in cls.__dataclass_fields__.values()}  # type: ignore[attr-defined]
        unknown = set(kv) - known
        if unknown:
            raise ValidationError(f"unknown scenario keys: {sorted(unknown)}")
        kwargs: dict = {}
        for key, value in kv.items():
            target = cls.__dataclass_fields__[key].type
            if target == "int":
                kwargs[key] = int(value)
            elif target == "float":
                kwargs[key] = float(value)
            else:
                kwargs[key] = value
        cfg = cls(**kwargs)
        cfg.validate()
        return cfg

    def seed_bytes(self) -> bytes:
        return struct.pack(">q", self.run_seed).rjust(32, b"\x00")


@dataclass
class ScenarioReport:
    protocol: str
    trials: int
    accepts: int
    rejects: dict[str, int]
    adversary_attempts: int
    adversary_successes: int
    adversary_actions: int
    secrets_in_sync: Optional[bool] = None
    trial_rows: list[tuple] = field(default_factory=list, repr=False)

    def to_kv(self) -> dict[str, str]:
        kv = {
            "protocol": self.protocol,
            "trials": str(self.trials),
            "accepts": str(self.accepts),
            "adversary_attempts": str(self.adversary_attempts),
            "adversary_successes": str(self.adversary_successes),
            "adversary_actions": str(self.adversary_actions),
        }
        for reason, count in sorted(self.rejects.items()):
            kv[f"reject_{reason}"] = str(count)
        if self.secrets_in_sync is not None:
            kv["secrets_in_sync"] = str(self.secrets_in_sync)
        return kv


def _bump(d: dict[str, int], key: str):
    d[key] = d.get(key, 0) + 1


def run_scenario(config: ScenarioConfig,
                 modify_rule: Optional[Callable[[bytes], Optional[bytes]]] = None
                 ) -> ScenarioReport:
    config.validate()
    if config.protocol == "auth":
        return _run_auth(config, modify_rule)
    return _run_attest(config)


def _run_auth(config: ScenarioConfig, modify_rule) -> ScenarioReport:
    seed = config.seed_bytes()
    puf = create_puf(config.puf_kind, expand(seed, "scenario-device-seed", 32), {
        "L": config.challenge_len, "M": config.response_len,
        "noise_sigma": config.noise_sigma,
    })
    noise_rng = derive_rng(seed, "scenario-noise")
    secret = enroll_secret(puf, noise_rng=noise_rng)
    memory = expand(seed, "scenario-memory", 1024)
    device = DeviceSession(puf, secret, memory_image=memory,
                           nonce_rng=derive_rng(seed, "scenario-nonce"),
                           noise_rng=noise_rng)
    verifier = VerifierSession(secret, config.challenge_len)
    policy = AdversaryPolicy(mode=config.adversary, p=config.adversary_p,
                             rule=modify_rule)
    channel = Channel(policy, rng=derive_rng(seed, "scenario-adversary"))
    pick_rng = derive_rng(seed, "scenario-replay-pick")

    accepts = 0
    rejects: dict[str, int] = {}
    adv_attempts = 0
    adv_successes = 0
    rows = []

    for trial in range(config.trials):
        outcome, reason, adversarial = _auth_trial(device, verifier, channel)
        if outcome:
            accepts += 1
            if adversarial:
                adv_successes += 1
        else:
            _bump(rejects, reason)
        rows.append((trial, "accept" if outcome else "reject", reason or "", adversarial))

        if config.adversary == "replay":
            msg1s = [p for p in channel.harvested
                     if p and p[0] == MSG_DEVICE_RESPONSE]
            if msg1s:
                adv_attempts += 1
                payload = msg1s[int(pick_rng.integers(0, len(msg1s)))]
                injected = channel.inject(payload)
                try:
                    verifier.check_device(AuthMessage1.from_bytes(injected.payload))
                except (AuthenticationError, FormatError):
                    _bump(rejects, "ReplayRejected")
                else:
                    adv_successes += 1
                    _bump(rejects, "ReplayAccepted")

    return ScenarioReport(
        protocol="auth", trials=config.trials, accepts=accepts, rejects=rejects,
        adversary_attempts=adv_attempts, adversary_successes=adv_successes,
        adversary_actions=len(channel.log),
        secrets_in_sync=(device.secret == verifier.secret
                         or device.secret == verifier.previous),
        trial_rows=rows,
    )


def _auth_trial(device: DeviceSession, verifier: VerifierSession,
                channel: Channel) -> tuple[bool, Optional[str], bool]:
    """One session through the channel: (accepted, reject reason, adversarial)."""
    adversarial = False
    try:
        deliv = channel.transmit(verifier.request().to_bytes(), "verifier")
        if not deliv:
            return False, "Drop", False
        adversarial |= deliv[0].adversarial
        request = AuthRequest.from_bytes(deliv[0].payload)

        msg1 = device.respond(request)
        deliv = channel.transmit(msg1.to_bytes(), "device")
        if not deliv:
            device.abort()
            return False, "Drop", False
        adversarial |= deliv[0].adversarial
        msg2 = verifier.check_device(AuthMessage1.from_bytes(deliv[0].payload))

        deliv = channel.transmit(msg2.to_bytes(), "verifier")
        if not deliv:
            device.abort()
            return False, "Drop", False
        adversarial |= deliv[0].adversarial
        device.confirm(AuthMessage2.from_bytes(deliv[0].payload))
        return True, None, adversarial
    except ReplayError:
        device.abort()
        return False, "Replay", adversarial
    except AuthenticationError:
        device.abort()
        return False, "AuthFailure", adversarial
    except FormatError:
        device.abort()
        return False, "Malformed", adversarial
    except ProtocolStateError:
        device.abort()
        return False, "ProtocolState", adversarial


def _run_attest(config: ScenarioConfig) -> ScenarioReport:
    seed = config.seed_bytes()
    # noiseless device: the verifier's model must agree bit-exactly
    puf = create_puf(config.puf_kind, expand(seed, "scenario-device-seed", 32), {
        "L": config.challenge_len, "M": config.response_len, "noise_sigma": 0.0,
    })
    memory = expand(seed, "scenario-attest-memory", config.memory_bytes)
    chal_rng = derive_rng(seed, "scenario-attest-challenges")
    tamper_rng = derive_rng(seed, "scenario-attest-tamper")
    n_chunks = -(-config.memory_bytes // config.chunk_bytes)
    budget = int(config.budget_factor
                 * honest_elapsed(n_chunks, config.challenge_len))

    accepts = 0
    rejects: dict[str, int] = {}
    adv_attempts = 0
    adv_successes = 0
    rows = []

    for trial in range(config.trials):
        request = AttestationRequest(
            timestamp=trial + 1,
            challenge=Challenge.random(chal_rng, config.challenge_len))
        device_memory = memory
        overhead = 1.0
        adversarial = config.adversary != "none"
        if config.adversary == "tamper":
            pos = int(tamper_rng.integers(0, len(memory)))
            tampered = bytearray(memory)
            tampered[pos] ^= 0xFF
            device_memory = bytes(tampered)
            adv_attempts += 1
        elif config.adversary == "relocate":
            overhead = config.overhead_factor
            adv_attempts += 1

        report = device_attest(request, device_memory, puf,
                               chunk_size=config.chunk_bytes,
                               per_chunk_overhead=overhead)
        verdict = verifier_attest_check(request, report, memory, puf, budget,
                                        chunk_size=config.chunk_bytes)
        if verdict.accepted:
            accepts += 1
            if adversarial:
                adv_successes += 1
        else:
            _bump(rejects, verdict.reason)
        rows.append((trial, "accept" if verdict.accepted else "reject",
                     verdict.reason or "", adversarial))

    return ScenarioReport(
        protocol="attest", trials=config.trials, accepts=accepts,
        rejects=rejects, adversary_attempts=adv_attempts,
        adversary_successes=adv_successes, adversary_actions=adv_attempts,
        trial_rows=rows,
    )
