"""In-order simulated channel with a pluggable adversary.

The channel is discrete-event with integer latency; protocol logic, not
network realism, is what the harness exercises. Every adversarial action is
logged so scenario reports can trace each success to a concrete action.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from ..errors import ValidationError

MODES = ("passive", "replay", "bitflip", "drop", "modify")


@dataclass
class AdversaryPolicy:
    mode: str = "passive"
    p: float = 0.0                      # action probability for bitflip/drop
    rule: Optional[Callable[[bytes], Optional[bytes]]] = None  # for modify
    harvest: bool = False

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValidationError(f"adversary mode must be one of {MODES}")
        if not 0.0 <= self.p <= 1.0:
            raise ValidationError("adversary probability must lie in [0, 1]")
        if self.mode == "modify" and self.rule is None:
            raise ValidationError("modify mode needs a rule")
        if self.mode in ("replay",):
            self.harvest = True


@dataclass
class ChannelMessage:
    payload: bytes
    sender: str
    time: int
    adversarial: bool = False


class Channel:
    """One-direction-agnostic in-order pipe between two endpoints."""

    def __init__(self, policy: AdversaryPolicy,
                 rng: Optional[np.random.Generator] = None,
                 latency: int = 1):
        self.policy = policy
        self.rng = rng
        self.latency = latency
        self.clock = 0
        self.log: list[dict] = []
        self.harvested: list[bytes] = []

    def _log(self, action: str, sender: str):
        self.log.append({"time": self.clock, "action": action, "sender": sender})

    def transmit(self, payload: bytes, sender: str) -> list[ChannelMessage]:
        """Push one message through the adversary; returns delivered copies
        (possibly none, possibly altered)."""
        self.clock += self.latency
        if self.policy.harvest:
            self.harvested.append(payload)

        mode = self.policy.mode
        if mode in ("passive", "replay"):
            return [ChannelMessage(payload, sender, self.clock)]

        if mode == "drop":
            if self.rng is not None and self.rng.random() < self.policy.p:
                self._log("drop", sender)
                return []
            return [ChannelMessage(payload, sender, self.clock)]

        if mode == "bitflip":
            if self.rng is not None and self.rng.random() < self.policy.p and payload:
                pos = int(self.rng.integers(0, len(payload) * 8))
                flipped = bytearray(payload)
                flipped[pos // 8] ^= 1 << (7 - pos % 8)
                self._log(f"bitflip@{pos}", sender)
                return [ChannelMessage(bytes(flipped), sender, self.clock,
                                       adversarial=True)]
            return [ChannelMessage(payload, sender, self.clock)]

        # modify
        altered = self.policy.rule(payload)
        if altered is None or altered == payload:
            return [ChannelMessage(payload, sender, self.clock)]
        self._log("modify", sender)
        return [ChannelMessage(altered, sender, self.clock, adversarial=True)]

    def inject(self, payload: bytes) -> ChannelMessage:
        """Adversary-originated traffic (replay or forgery)."""
        self.clock += self.latency
        self._log("inject", "adversary")
        return ChannelMessage(payload, "adversary", self.clock, adversarial=True)
