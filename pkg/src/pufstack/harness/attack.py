"""CRP harvesting and the linear-threshold modeling attack.

The attack is the classical one against arbiter-style PUFs: logistic
regression over the parity feature map, trained by full-batch gradient
descent. It serves as the yardstick separating the linearly separable
arbiter baseline from the photonic model.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from ..errors import ValidationError
from ..puf import Challenge, CrpRecord, PufInstance, parity_features


def harvest_crps(puf: PufInstance, n: int,
                 challenge_rng: Optional[np.random.Generator] = None,
                 noise_rng: Optional[np.random.Generator] = None,
                 device_id: Optional[str] = None) -> list[CrpRecord]:
    """Record n challenge-response pairs under uniform random challenges."""
    if n < 1:
        raise ValidationError("harvest needs n >= 1")
    if challenge_rng is None:
        challenges = puf.random_challenges("harvest", n)
    else:
        challenges = [Challenge.random(challenge_rng, puf.challenge_len)
                      for _ in range(n)]
    responses = puf.evaluate_many(challenges, noise_rng)
    out = []
    for c, r in zip(challenges, responses):
        margins = np.abs(r.analog - puf.thresholds)
        out.append(CrpRecord(c, r, margins, device_id=device_id,
                             temperature_delta=puf.env.temperature_delta))
    return out


@dataclass
class AttackConfig:
    learning_rate: float = 0.5
    iterations: int = 500
    target_bits: Sequence[int] = (0,)


@dataclass
class ModelingAttackResult:
    train_size: int
    test_size: int
    model_kind: str
    train_accuracy: float
    test_accuracy: float
    per_bit_test_accuracy: dict[int, float]
    iterations: int
    status: str = "ok"  # "degenerate" when a target bit is single-class

    def to_kv(self) -> dict[str, str]:
        kv = {
            "train_size": str(self.train_size),
            "test_size": str(self.test_size),
            "model_kind": self.model_kind,
            "train_accuracy": repr(self.train_accuracy),
            "test_accuracy": repr(self.test_accuracy),
            "iterations": str(self.iterations),
            "status": self.status,
        }
        for b, acc in self.per_bit_test_accuracy.items():
            kv[f"bit_{b}_test_accuracy"] = repr(acc)
        return kv


def _sigmoid(z: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def fit_logistic(features: np.ndarray, labels: np.ndarray,
                 learning_rate: float, iterations: int) -> np.ndarray:
    """Full-batch gradient descent on logistic loss; returns the weights."""
    n = features.shape[0]
    w = np.zeros(features.shape[1])
    for _ in range(iterations):
        p = _sigmoid(features @ w)
        w -= learning_rate * (features.T @ (p - labels)) / n
    return w


def modeling_attack(crps_train: Sequence[CrpRecord],
                    crps_test: Sequence[CrpRecord],
                    config: Optional[AttackConfig] = None) -> ModelingAttackResult:
    """Fit one linear-threshold model per target response bit."""
    config = config if config is not None else AttackConfig()
    if not crps_train or not crps_test:
        raise ValidationError("attack needs non-empty train and test sets")
    train_keys = {r.challenge.to_bytes() for r in crps_train}
    if any(r.challenge.to_bytes() in train_keys for r in crps_test):
        raise ValidationError("test challenges must be disjoint from training")

    x_train = parity_features(np.stack([r.challenge.bits for r in crps_train]))
    x_test = parity_features(np.stack([r.challenge.bits for r in crps_test]))
    status = "ok"
    per_bit: dict[int, float] = {}
    train_accs = []
    for b in config.target_bits:
        y_train = np.array([r.response.bits[b] for r in crps_train], dtype=np.float64)
        y_test = np.array([r.response.bits[b] for r in crps_test], dtype=np.float64)
        if y_train.min() == y_train.max():
            # single-class training set: trivial constant classifier
            status = "degenerate"
            const = y_train[0]
            per_bit[b] = float(np.mean(y_test == const))
            train_accs.append(1.0)
            continue
        w = fit_logistic(x_train, y_train, config.learning_rate, config.iterations)
        train_accs.append(float(np.mean((x_train @ w >= 0) == y_train)))
        per_bit[b] = float(np.mean((x_test @ w >= 0) == y_test))

    return ModelingAttackResult(
        train_size=len(crps_train),
        test_size=len(crps_test),
        model_kind="linear-threshold-parity",
        train_accuracy=float(np.mean(train_accs)),
        test_accuracy=float(np.mean(list(per_bit.values()))),
        per_bit_test_accuracy=per_bit,
        iterations=config.iterations,
        status=status,
    )
