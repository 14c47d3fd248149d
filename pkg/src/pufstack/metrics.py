"""Population-level PUF quality metrics and margin-band CRP filtering."""

from __future__ import annotations

from dataclasses import dataclass
from math import erfc, sqrt
from typing import Optional, Sequence

import numpy as np

from .errors import ValidationError
from .puf.base import CrpRecord


def _as_bit_matrix(matrix) -> np.ndarray:
    mat = np.asarray(matrix, dtype=np.uint8)
    if mat.ndim != 2 or mat.size == 0:
        raise ValidationError("response matrix must be a non-empty 2-D array")
    return mat


def bit_entropy(p: np.ndarray) -> np.ndarray:
    """Per-bit Shannon entropy of a Bernoulli(p) array, with H(0)=H(1)=0."""
    p = np.asarray(p, dtype=np.float64)
    out = np.zeros_like(p)
    inner = (p > 0) & (p < 1)
    q = p[inner]
    out[inner] = -q * np.log2(q) - (1 - q) * np.log2(1 - q)
    return out


@dataclass
class MetricsReport:
    uniformity: float
    uniqueness: float
    bit_alias_p: np.ndarray
    bit_alias_entropy: np.ndarray
    mean_alias_entropy: float
    reliability: Optional[float] = None
    far: Optional[float] = None
    frr: Optional[float] = None

    def to_kv(self) -> dict[str, str]:
        kv = {
            "uniformity": repr(self.uniformity),
            "uniqueness": repr(self.uniqueness),
            "mean_alias_entropy": repr(self.mean_alias_entropy),
        }
        if self.reliability is not None:
            kv["reliability"] = repr(self.reliability)
        if self.far is not None:
            kv["far"] = repr(self.far)
        if self.frr is not None:
            kv["frr"] = repr(self.frr)
        return kv

    def per_bit_rows(self):
        """Rows (bit_index, p_one, entropy) for the per-bit CSV."""
        for j, (p, h) in enumerate(zip(self.bit_alias_p, self.bit_alias_entropy)):
            yield j, float(p), float(h)


def compute_metrics(matrix, revaluations=None) -> MetricsReport:
    """Uniformity, uniqueness, bit-aliasing entropy, optional reliability.

    ``matrix`` is (devices, bits); ``revaluations`` is (repeats, devices, bits)
    noisy re-reads of the same cells, with the matrix as golden reference.
    """
    mat = _as_bit_matrix(matrix)
    d = mat.shape[0]
    if d < 2:
        raise ValidationError("inter-device metrics need at least 2 devices")

    uniformity = float(mat.mean())

    fm = mat.astype(np.float64)
    gram = fm @ fm.T
    ones = fm.sum(axis=1)
    # pairwise Hamming distance via inner products
    hd = ones[:, None] + ones[None, :] - 2 * gram
    iu = np.triu_indices(d, k=1)
    uniqueness = float(np.mean(hd[iu]) / mat.shape[1])

    p = fm.mean(axis=0)
    entropy = bit_entropy(p)

    reliability = None
    if revaluations is not None:
        rev = np.asarray(revaluations, dtype=np.uint8)
        if rev.ndim != 3 or rev.shape[1:] != mat.shape:
            raise ValidationError("revaluations must be (repeats, devices, bits)")
        if rev.shape[0] < 2:
            raise ValidationError("reliability needs at least 2 re-evaluations")
        ber = np.mean(rev != mat[None, :, :])
        reliability = float(1.0 - ber)

    return MetricsReport(
        uniformity=uniformity,
        uniqueness=uniqueness,
        bit_alias_p=p,
        bit_alias_entropy=entropy,
        mean_alias_entropy=float(entropy.mean()),
        reliability=reliability,
    )


@dataclass(frozen=True)
class FilterBand:
    """Margin band [delta_min, delta_max]: below is unreliable, above aliased."""

    delta_min: float
    delta_max: float

    def __post_init__(self):
        if not (0 <= self.delta_min < self.delta_max):
            raise ValidationError("band requires 0 <= delta_min < delta_max")

    def contains(self, margins: np.ndarray) -> np.ndarray:
        m = np.abs(np.asarray(margins, dtype=np.float64))
        return (m >= self.delta_min) & (m <= self.delta_max)


@dataclass
class FilteredCrp:
    record: CrpRecord
    mask: np.ndarray  # boolean keep-mask over response bits


@dataclass
class FilterReport:
    retention: float
    predicted_reliability: Optional[float]
    predicted_alias_entropy: Optional[float]
    status: str = "ok"  # "ok" or "empty"


def _gauss_keep_prob(margins: np.ndarray, sigma: float) -> np.ndarray:
    # probability a bit with this noiseless margin does not flip
    z = margins / (sigma * sqrt(2.0))
    return 1.0 - 0.5 * np.array([erfc(v) for v in z])


def filter_crps(crps: Sequence[CrpRecord], band: FilterBand,
                noise_sigma: float = 0.02) -> tuple[list[FilteredCrp], FilterReport]:
    """Keep response bits whose analog margin falls inside the band.

    Predicted reliability uses the Gaussian read-noise model on the kept
    margins; predicted aliasing entropy is empirical, over cells where at
    least two devices answered the same challenge and kept the bit.
    """
    if len(crps) == 0:
        raise ValidationError("filter_crps needs at least one record")

    kept: list[FilteredCrp] = []
    margins_kept: list[np.ndarray] = []
    for rec in crps:
        mask = band.contains(rec.margins)
        kept.append(FilteredCrp(rec, mask))
        if mask.any():
            margins_kept.append(np.abs(rec.margins)[mask])

    total = sum(len(r.margins) for r in crps)
    n_kept = sum(int(f.mask.sum()) for f in kept)
    if n_kept == 0:
        return kept, FilterReport(0.0, None, None, status="empty")

    retention = n_kept / total
    all_margins = np.concatenate(margins_kept)
    pred_rel = float(np.mean(_gauss_keep_prob(all_margins, noise_sigma)))

    # group by challenge across devices for the aliasing estimate
    groups: dict[bytes, list[FilteredCrp]] = {}
    for f in kept:
        groups.setdefault(f.record.challenge.to_bytes(), []).append(f)
    cell_entropies: list[float] = []
    for members in groups.values():
        if len(members) < 2:
            continue
        nbits = len(members[0].record.response.bits)
        for j in range(nbits):
            votes = [int(f.record.response.bits[j]) for f in members if f.mask[j]]
            if len(votes) >= 2:
                cell_entropies.append(float(bit_entropy(np.array([np.mean(votes)]))[0]))
    pred_alias = float(np.mean(cell_entropies)) if cell_entropies else None

    return kept, FilterReport(retention, pred_rel, pred_alias)


def population_responses(pufs, challenges, n_reevals: int = 0,
                         noise_rng: Optional[np.random.Generator] = None):
    """Evaluate a device population on a shared challenge list.

    Returns (golden, margins, reevals): golden and margins are (D, N) with
    N = challenges * bits, reevals is (R, D, N) noisy re-reads (or None
    when n_reevals == 0). Golden responses are noiseless.
    """
    if len(pufs) == 0 or len(challenges) == 0:
        raise ValidationError("population needs devices and challenges")
    golden_rows, margin_rows = [], []
    for puf in pufs:
        resp = puf.evaluate_many(challenges, None)
        golden_rows.append(np.concatenate([r.bits for r in resp]))
        margin_rows.append(np.concatenate(
            [np.abs(r.analog - puf.thresholds) for r in resp]))
    golden = np.stack(golden_rows)
    margins = np.stack(margin_rows)
    reevals = None
    if n_reevals > 0:
        if noise_rng is None:
            raise ValidationError("re-evaluations need a noise rng")
        reps = []
        for _ in range(n_reevals):
            rows = []
            for puf in pufs:
                resp = puf.evaluate_many(challenges, noise_rng)
                rows.append(np.concatenate([r.bits for r in resp]))
            reps.append(np.stack(rows))
        reevals = np.stack(reps)
    return golden, margins, reevals


@dataclass
class BandSweepRow:
    band: FilterBand
    retention: float
    reliability: Optional[float]
    mean_alias_entropy: Optional[float]


def band_sweep(golden: np.ndarray, margins: np.ndarray,
               reevals: Optional[np.ndarray],
               bands: Sequence[FilterBand]) -> list[BandSweepRow]:
    """Empirical retention / reliability / aliasing-entropy trade-off table.

    For each band the keep-mask is per (device, bit) cell; reliability is
    measured on kept cells against the noisy re-reads, and aliasing entropy
    is computed per bit over the devices that kept it (needs >= 2).
    """
    if len(bands) == 0:
        raise ValidationError("band grid must be non-empty")
    golden = _as_bit_matrix(golden)
    rows = []
    for band in bands:
        mask = band.contains(margins)
        retention = float(mask.mean())
        if not mask.any():
            rows.append(BandSweepRow(band, 0.0, None, None))
            continue
        reliability = None
        if reevals is not None:
            errs = (reevals != golden[None, :, :]) & mask[None, :, :]
            reliability = float(1.0 - errs.sum() / (mask.sum() * reevals.shape[0]))
        counts = mask.sum(axis=0)
        usable = counts >= 2
        entropy = None
        if usable.any():
            p = np.where(usable, (golden * mask).sum(axis=0) / np.maximum(counts, 1), 0.0)
            entropy = float(np.mean(bit_entropy(p[usable])))
        rows.append(BandSweepRow(band, retention, reliability, entropy))
    return rows


def decision_rates(genuine_distances, impostor_distances,
                   hd_threshold: float) -> tuple[float, float]:
    """(FAR, FRR) at a fractional-Hamming-distance accept threshold."""
    gen = np.asarray(genuine_distances, dtype=np.float64)
    imp = np.asarray(impostor_distances, dtype=np.float64)
    if gen.size == 0 or imp.size == 0:
        raise ValidationError("both distance samples must be non-empty")
    if not 0.0 <= hd_threshold <= 1.0:
        raise ValidationError("hd_threshold must lie in [0, 1]")
    far = float(np.mean(imp <= hd_threshold))
    frr = float(np.mean(gen > hd_threshold))
    return far, frr
