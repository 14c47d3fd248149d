"""Shared PUF types: challenges, responses, environment, CRP records."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..errors import ChallengeShapeError, ValidationError
from ..xof import bits_to_bytes, bytes_to_bits, derive_rng, expand_bits

SUPPORTED_CHALLENGE_LENGTHS = (32, 64, 128)


@dataclass(frozen=True)
class Challenge:
    """A fixed-length challenge bit-string (MSB-first when serialized)."""

    bits: np.ndarray

    def __post_init__(self):
        bits = np.asarray(self.bits, dtype=np.uint8)
        if bits.ndim != 1:
            raise ValidationError("challenge bits must be a 1-D array")
        if not np.isin(bits, (0, 1)).all():
            raise ValidationError("challenge bits must be 0/1")
        object.__setattr__(self, "bits", bits)

    def __len__(self) -> int:
        return len(self.bits)

    def to_bytes(self) -> bytes:
        return bits_to_bytes(self.bits)

    @classmethod
    def from_bytes(cls, raw: bytes, length: int) -> "Challenge":
        return cls(bytes_to_bits(raw, length))

    @classmethod
    def random(cls, rng: np.random.Generator, length: int) -> "Challenge":
        return cls(rng.integers(0, 2, size=length, dtype=np.uint8))


@dataclass(frozen=True)
class Response:
    """Quantized response bits plus the analog photocurrent vector behind them."""

    bits: np.ndarray
    analog: np.ndarray

    def __post_init__(self):
        bits = np.asarray(self.bits, dtype=np.uint8)
        analog = np.asarray(self.analog, dtype=np.float64)
        if bits.shape != analog.shape:
            raise ValidationError("response bits and analog vector must align")
        if not np.isfinite(analog).all():
            raise ValidationError("analog response values must be finite")
        object.__setattr__(self, "bits", bits)
        object.__setattr__(self, "analog", analog)

    def __len__(self) -> int:
        return len(self.bits)

    def to_bytes(self) -> bytes:
        return bits_to_bytes(self.bits)

    def fractional_hd(self, other: "Response") -> float:
        if len(self) != len(other):
            raise ValidationError("responses must have equal length")
        return float(np.mean(self.bits != other.bits))


@dataclass
class EnvironmentState:
    """Operating conditions applied at evaluation time."""

    temperature_delta: float = 0.0
    noise_sigma: float = 0.02

    def __post_init__(self):
        if self.noise_sigma < 0:
            raise ValidationError("noise_sigma must be >= 0")


@dataclass
class CrpRecord:
    """One harvested challenge-response pair with its analog margins."""

    challenge: Challenge
    response: Response
    margins: np.ndarray
    device_id: Optional[str] = None
    temperature_delta: float = 0.0


class PufInstance:
    """Base class for simulated devices.

    Instances are immutable after calibration and hold no per-evaluation
    state, so they are safe to share read-only across concurrent
    evaluators; noise enters only through the caller-supplied generator.
    """

    kind = "abstract"

    def __init__(self, device_seed: bytes, challenge_len: int, response_len: int,
                 env: Optional[EnvironmentState] = None):
        if len(device_seed) != 32:
            raise ValidationError("device_seed must be 32 bytes (256 bits)")
        if challenge_len not in SUPPORTED_CHALLENGE_LENGTHS:
            raise ValidationError(
                f"challenge length L={challenge_len} unsupported; choose one of "
                f"{SUPPORTED_CHALLENGE_LENGTHS}"
            )
        if response_len < 1:
            raise ValidationError("response length M must be >= 1")
        self.device_seed = device_seed
        self.challenge_len = challenge_len
        self.response_len = response_len
        self.env = env if env is not None else EnvironmentState()

    def _check_challenge(self, challenge: Challenge):
        if len(challenge) != self.challenge_len:
            raise ChallengeShapeError(
                f"challenge length {len(challenge)} != device L={self.challenge_len}"
            )

    def evaluate_analog(self, bits_matrix: np.ndarray) -> np.ndarray:
        """Noiseless analog outputs for a (B, L) matrix of challenges."""
        raise NotImplementedError

    @property
    def thresholds(self) -> np.ndarray:
        raise NotImplementedError

    def evaluate(self, challenge: Challenge,
                 noise_draw: Optional[np.random.Generator] = None) -> Response:
        """Evaluate one challenge. ``noise_draw=None`` means noiseless."""
        self._check_challenge(challenge)
        analog = self.evaluate_analog(challenge.bits[None, :])[0]
        if noise_draw is not None and self.env.noise_sigma > 0:
            analog = analog + noise_draw.normal(0.0, self.env.noise_sigma, size=analog.shape)
        bits = (analog >= self.thresholds).astype(np.uint8)
        return Response(bits, analog)

    def evaluate_many(self, challenges: list[Challenge],
                      noise_draw: Optional[np.random.Generator] = None) -> list[Response]:
        for c in challenges:
            self._check_challenge(c)
        mat = np.stack([c.bits for c in challenges])
        analog = self.evaluate_analog(mat)
        if noise_draw is not None and self.env.noise_sigma > 0:
            analog = analog + noise_draw.normal(0.0, self.env.noise_sigma, size=analog.shape)
        bits = (analog >= self.thresholds[None, :]).astype(np.uint8)
        return [Response(b, a) for b, a in zip(bits, analog)]

    def noise_rng(self, label: str = "noise") -> np.random.Generator:
        """Convenience: a reproducible noise stream bound to this device."""
        return derive_rng(self.device_seed, "env-" + label)

    def random_challenges(self, label: str, count: int) -> list[Challenge]:
        """Deterministic uniform challenges derived from the device seed."""
        bits = expand_bits(self.device_seed, label, count * self.challenge_len)
        mat = bits.reshape(count, self.challenge_len)
        return [Challenge(row) for row in mat]
