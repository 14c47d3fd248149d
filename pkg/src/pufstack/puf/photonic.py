"""Coherent photonic strong-PUF model.

A challenge drives an input field sequence through a cascade of passive,
device-unique scattering stages. A resonant memory term mixes each stage's
field with the decayed state left by earlier bits, and a Kerr-style
intensity-dependent phase supplies the in-loop nonlinearity that lets a
single flipped challenge bit scramble the whole output trace. Detection is
intensity-only (photodiode model): M taps read |field|^2 projections, and
bits are quantized against per-tap calibrated thresholds.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..errors import ValidationError
from ..xof import derive_rng, expand_bits
from .base import Challenge, EnvironmentState, PufInstance


@dataclass
class PhotonicParams:
    n_paths: int = 32           # optical paths P
    detect_count: int = 128     # photodiode taps M
    mem_decay: float = 0.6      # resonant state coefficient a, in [0, 1)
    kerr_coeff: float = 40.0    # intensity-to-phase coefficient of the nonlinearity
    phase_temp_coeff: float = 0.01  # radians of per-stage phase per kelvin
    target_mean: float = 0.2    # normalized mean photocurrent after gain calibration
    calib_samples: int = 256    # challenges used for creation-time calibration

    def validate(self):
        if self.n_paths < 2:
            raise ValidationError("n_paths P must be >= 2")
        if self.detect_count < 1:
            raise ValidationError("detect_count M must be >= 1")
        if not 0.0 <= self.mem_decay < 1.0:
            raise ValidationError("mem_decay a must lie in [0, 1)")
        if self.target_mean <= 0:
            raise ValidationError("target_mean must be positive")
        if self.calib_samples < 100:
            raise ValidationError("calib_samples must be >= 100")


def _stable_matmul(x: np.ndarray, m: np.ndarray) -> np.ndarray:
    """x @ m with a summation order that depends only on the contracted
    length, never on the batch size.

    Plain ``@`` dispatches to different BLAS kernels for different batch
    shapes, and their differing reduction orders produce last-ulp
    discrepancies that the Kerr term amplifies into macroscopic ones.
    """
    return (x[:, :, None] * m[None, :, :]).sum(axis=1)


def _unitary(rng: np.random.Generator, p: int) -> np.ndarray:
    """Haar-ish unitary from a complex Gaussian draw (QR with phase fix)."""
    g = rng.normal(size=(p, p)) + 1j * rng.normal(size=(p, p))
    q, r = np.linalg.qr(g)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


class PhotonicPuf(PufInstance):
    kind = "photonic"

    def __init__(self, device_seed: bytes, challenge_len: int = 64,
                 params: Optional[PhotonicParams] = None,
                 env: Optional[EnvironmentState] = None):
        params = params if params is not None else PhotonicParams()
        params.validate()
        super().__init__(device_seed, challenge_len, params.detect_count, env)
        self.params = params
        p = params.n_paths

        rng = derive_rng(device_seed, "photonic-fabrication")
        # One scatter matrix per challenge-bit stage, unitary so the cascade
        # is passive (operator norm exactly 1) without per-stage power loss.
        self.scatter = np.stack([_unitary(rng, p) for _ in range(challenge_len)])
        inj = rng.normal(size=(2, p)) + 1j * rng.normal(size=(2, p))
        inj /= np.linalg.norm(inj, axis=1, keepdims=True)
        self.inject0, self.inject1 = inj[0], inj[1]
        det = rng.normal(size=(params.detect_count, p)) + 1j * rng.normal(size=(params.detect_count, p))
        self.detect = det / np.linalg.norm(det, ord=2)

        self.gain = 1.0
        self._thresholds = np.zeros(params.detect_count)
        self.calibrate(params.calib_samples)

    # -- propagation ------------------------------------------------------

    def _propagate(self, bits_matrix: np.ndarray, trace: bool = False):
        """Run the stage cascade; returns final fields (B, P), optionally the
        per-stage raw intensity trace (B, L, M)."""
        bits = np.asarray(bits_matrix, dtype=np.uint8)
        if bits.ndim != 2 or bits.shape[1] != self.challenge_len:
            raise ValidationError("challenge matrix must be (B, L)")
        a = self.params.mem_decay
        chi = self.params.kerr_coeff
        tphase = np.exp(1j * self.params.phase_temp_coeff * self.env.temperature_delta)
        b = bits.shape[0]
        state = np.zeros((b, self.params.n_paths), dtype=np.complex128)
        stages = [] if trace else None
        for t in range(self.challenge_len):
            inj = np.where(bits[:, t:t + 1] == 1, self.inject1[None, :], self.inject0[None, :])
            field = inj + a * state
            state = _stable_matmul(field, (tphase * self.scatter[t]).T)
            state = state * np.exp(1j * chi * (state.real ** 2 + state.imag ** 2))
            if trace:
                stages.append(np.abs(_stable_matmul(state, self.detect.T)) ** 2)
        if trace:
            return state, np.stack(stages, axis=1)
        return state, None

    def raw_intensities(self, bits_matrix: np.ndarray) -> np.ndarray:
        """Noiseless detected intensities in raw (pre-gain) units, (B, M)."""
        state, _ = self._propagate(bits_matrix)
        return np.abs(_stable_matmul(state, self.detect.T)) ** 2

    def stage_trace(self, challenge: Challenge) -> np.ndarray:
        """Per-stage noiseless intensities (L, M); used to probe the memory term."""
        self._check_challenge(challenge)
        _, trace = self._propagate(challenge.bits[None, :], trace=True)
        return trace[0]

    def evaluate_analog(self, bits_matrix: np.ndarray) -> np.ndarray:
        return self.gain * self.raw_intensities(bits_matrix)

    @property
    def thresholds(self) -> np.ndarray:
        return self._thresholds

    # -- calibration ------------------------------------------------------

    def _calibration_challenges(self, n_samples: int) -> np.ndarray:
        bits = expand_bits(self.device_seed, "calibration-challenges",
                           n_samples * self.challenge_len)
        return bits.reshape(n_samples, self.challenge_len)

    def calibrate(self, n_samples: int) -> np.ndarray:
        """Set gain and per-tap thresholds from noiseless medians.

        The gain normalizes the mean photocurrent to ``target_mean`` so the
        additive noise sigma is meaningful in normalized units; thresholds
        are per-tap medians, which forces balanced quantization.
        """
        if n_samples < 100:
            raise ValidationError("calibration needs n_samples >= 100")
        raw = self.raw_intensities(self._calibration_challenges(n_samples))
        self.gain = self.params.target_mean / float(np.mean(raw))
        self._thresholds = np.median(self.gain * raw, axis=0)
        return self._thresholds

    # -- audits -----------------------------------------------------------

    def power_audit(self, challenge: Challenge) -> tuple[float, float]:
        """(detected, injected) noiseless power in raw units; passivity says
        detected <= injected because every element has operator norm <= 1."""
        self._check_challenge(challenge)
        detected = float(np.sum(self.raw_intensities(challenge.bits[None, :])))
        injected = float(self.challenge_len)  # unit-norm field per stage
        return detected, injected
