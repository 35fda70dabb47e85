"""Replications of a differential-illuminance ZIP scheme and an audio ZIA scheme,
plus the evaluation metrics used to compare them (EER, balanced keys, min-entropy).
"""

from __future__ import annotations

import csv
import enum
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from .config import Config, resolve
from .series import AudioClip, TimeSeries
from .sigproc import similarity_score

BitsLike = Union["Fingerprint", np.ndarray, Sequence[int]]


# ---------------------------------------------------------------------------
# ZIP: fingerprints from window means
# ---------------------------------------------------------------------------

@dataclass
class Fingerprint:
    bits: np.ndarray
    window_seconds: float = 30.0
    device_id: str = ""

    def __post_init__(self):
        self.bits = np.asarray(self.bits, dtype=np.uint8)

    def __len__(self) -> int:
        return len(self.bits)

    def complement(self) -> "Fingerprint":
        return Fingerprint(1 - self.bits, self.window_seconds, self.device_id)


@dataclass(frozen=True)
class ZipThresholds:
    t_abs: float = 8.0
    t_rel: float = 0.01

    def __post_init__(self):
        if not (self.t_abs > 0 and self.t_rel > 0):
            raise ValueError("both ZIP thresholds must be positive")


def _bits(f: BitsLike) -> np.ndarray:
    return f.bits if isinstance(f, Fingerprint) else np.asarray(f, dtype=np.uint8)


def window_means(series: TimeSeries, window: float) -> np.ndarray:
    per = int(round(window * series.sample_rate))
    nw = len(series) // per
    v = np.asarray(series.values, dtype=float)
    if v.ndim > 1:
        v = v.mean(axis=1)
    return v[:nw * per].reshape(nw, per).mean(axis=1)


def zip_fingerprint(series: TimeSeries, thresholds: ZipThresholds | None = None,
                    window: float = 30.0, device_id: str = "") -> Fingerprint:
    """One bit per window boundary: did the window mean jump by enough?

    A bit is 1 when the absolute change of consecutive window means exceeds
    ``t_abs`` and the change relative to the earlier mean exceeds ``t_rel``.
    """
    th = thresholds or ZipThresholds()
    m = window_means(series, window)
    if len(m) < 2:
        raise ValueError(f"need at least two {window} s windows, got {len(series) / series.sample_rate:.1f} s")
    delta = np.abs(np.diff(m))
    rel = delta / np.maximum(m[:-1], 1e-6)
    bits = (delta > th.t_abs) & (rel > th.t_rel)
    return Fingerprint(bits.astype(np.uint8), window, device_id)


def fingerprint_similarity(f1: BitsLike, f2: BitsLike) -> float:
    """Percentage of agreeing bits (longer input truncated to the shorter)."""
    a, b = _bits(f1), _bits(f2)
    n = min(len(a), len(b))
    if n == 0:
        raise ValueError("cannot compare empty fingerprints")
    return 100.0 * float(np.mean(a[:n] == b[:n]))


def key_windows(f: BitsLike, key_bits: int = 20, step: int = 4) -> list:
    """Overlapping ``key_bits``-long slices taken every ``step`` bits."""
    b = _bits(f)
    return [b[s:s + key_bits] for s in range(0, len(b) - key_bits + 1, step)]


def balanced_keys(f: BitsLike, key_bits: int = 20, step: int = 4,
                  balance: tuple = (8, 12)) -> tuple[int, float]:
    """Count (and percentage) of key windows whose ones-count lies in ``balance``."""
    wins = key_windows(f, key_bits, step)
    if not wins:
        return 0, 0.0
    lo, hi = balance
    count = sum(1 for w in wins if lo <= int(w.sum()) <= hi)
    return count, 100.0 * count / len(wins)


def min_entropy_mcv(bits: BitsLike) -> float:
    """Most-common-value min-entropy per bit, ``-log2(p_max)``."""
    b = _bits(bits)
    if len(b) == 0:
        raise ValueError("no bits")
    p1 = float(b.mean())
    p = max(p1, 1.0 - p1)
    return float(-np.log2(p)) if p < 1.0 else 0.0


def shannon_entropy_bits(bits: BitsLike) -> float:
    b = _bits(bits)
    p = float(b.mean())
    if p in (0.0, 1.0):
        return 0.0
    return float(-(p * np.log2(p) + (1 - p) * np.log2(1 - p)))


# ---------------------------------------------------------------------------
# ZIA: power gate + similarity score
# ---------------------------------------------------------------------------

# Scores come from single-precision spectra; identical clips may land a few
# ulps below 1.0, so decisions tolerate that much.
SCORE_TOLERANCE = 1e-6


class ZiaDecision(enum.Enum):
    ACCEPT = "accept"
    REJECT = "reject"
    INSUFFICIENT_POWER = "insufficient_power"


def snippet_power_db(clip: AudioClip, offset: float = 120.0) -> float:
    """Pseudo-SPL of a clip: ``20 log10(rms) + offset`` (-inf for silence)."""
    rms = clip.rms()
    return float(20.0 * np.log10(rms) + offset) if rms > 0 else float("-inf")


def zia_authenticate(a: AudioClip, b: AudioClip, decision_threshold: float,
                     cfg: Config | None = None, score: Optional[float] = None) -> ZiaDecision:
    """Accept when both snippets are loud enough and similar enough.

    ``score`` may be passed when the similarity was already computed.
    """
    cfg = resolve(cfg)
    if len(a) != len(b):
        raise ValueError("snippets must have equal length")
    gate = cfg["zia.power_gate_db"]
    offset = cfg["audio.db_offset"]
    if snippet_power_db(a, offset) < gate or snippet_power_db(b, offset) < gate:
        return ZiaDecision.INSUFFICIENT_POWER
    if score is None:
        score = similarity_score(a, b, cfg, min_length=0.0).value
    return ZiaDecision.ACCEPT if score >= decision_threshold - SCORE_TOLERANCE else ZiaDecision.REJECT


# ---------------------------------------------------------------------------
# Error rates
# ---------------------------------------------------------------------------

@dataclass
class EvalReport:
    eer: float
    thresholds: list = field(default_factory=list)
    far_curve: list = field(default_factory=list)
    frr_curve: list = field(default_factory=list)
    n_colocated: int = 0
    n_noncolocated: int = 0
    percent_ones: Optional[tuple] = None  # (mean, sd)
    min_entropy_per_bit: Optional[float] = None
    balanced_key_percent: Optional[float] = None
    enough_power_percent: Optional[float] = None

    def to_dict(self, curves: bool = True) -> dict:
        d = asdict(self)
        if not curves:
            for k in ("thresholds", "far_curve", "frr_curve"):
                d.pop(k)
        if d["percent_ones"] is not None:
            d["percent_ones"] = list(d["percent_ones"])
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def write_curves_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["threshold", "far", "frr"])
            for t, a, r in zip(self.thresholds, self.far_curve, self.frr_curve):
                w.writerow([repr(float(t)), repr(float(a)), repr(float(r))])


def far_frr_curves(colocated, noncolocated) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """FAR and FRR when accepting ``score >= t``, for every distinct score ``t``."""
    pos = np.sort(np.asarray(colocated, dtype=float))
    neg = np.sort(np.asarray(noncolocated, dtype=float))
    thr = np.unique(np.concatenate([pos, neg]))
    far = 1.0 - np.searchsorted(neg, thr, side="left") / len(neg)
    frr = np.searchsorted(pos, thr, side="left") / len(pos)
    return thr, far, frr


def _upper_hull(pts: np.ndarray) -> np.ndarray:
    hull: list = []
    for p in pts:
        while len(hull) >= 2:
            (x1, y1), (x2, y2) = hull[-2], hull[-1]
            if (x2 - x1) * (p[1] - y1) - (y2 - y1) * (p[0] - x1) >= 0:
                hull.pop()
            else:
                break
        hull.append(tuple(p))
    return np.array(hull)


def rocch_eer(far: np.ndarray, frr: np.ndarray) -> float:
    """EER on the ROC convex hull: where the hull meets ``FAR = FRR``."""
    pts = np.vstack([[0.0, 0.0], np.column_stack([far, 1.0 - frr]), [1.0, 1.0]])
    pts = pts[np.lexsort((pts[:, 1], pts[:, 0]))]
    hull = _upper_hull(pts)
    # g(x) = tpr - (1 - x) is -1 at x=0 and +1 at x=1 along the hull
    for (x1, y1), (x2, y2) in zip(hull[:-1], hull[1:]):
        g1, g2 = y1 - (1.0 - x1), y2 - (1.0 - x2)
        if g1 <= 0.0 <= g2:
            if g2 == g1:
                return float(x1)
            t = -g1 / (g2 - g1)
            return float(x1 + t * (x2 - x1))
    return 0.5  # unreachable for a valid hull


def compute_eer(colocated_scores, noncolocated_scores) -> EvalReport:
    """Equal error rate where FAR and FRR cross, plus the full sweep.

    Accepting means ``score >= threshold``. The crossing is taken on the
    convex hull of the ROC so that it can fall between sweep points; this is
    also what makes the EER invariant to monotone rescaling of the scores.
    """
    pos = np.asarray(colocated_scores, dtype=float)
    neg = np.asarray(noncolocated_scores, dtype=float)
    if len(pos) == 0 or len(neg) == 0:
        raise ValueError("both score lists must be non-empty")
    thr, far, frr = far_frr_curves(pos, neg)
    eer = min(max(rocch_eer(far, frr), 0.0), 0.5)
    return EvalReport(eer=eer, thresholds=thr.tolist(), far_curve=far.tolist(),
                      frr_curve=frr.tolist(), n_colocated=len(pos), n_noncolocated=len(neg))
