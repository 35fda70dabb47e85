"""Preprocessing, synchronisation, similarity metrics and entropy estimation."""

from __future__ import annotations

import functools
import warnings
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence, Union

import numpy as np
import scipy.fft as sfft
from scipy import signal
from scipy.ndimage import gaussian_filter1d

from ._kernels import dtw_raw
from .config import Config, resolve
from .series import AudioClip, TimeSeries


@dataclass
class SimilarityResult:
    metric: str  # "similarity_score" | "dtw_distance"
    value: Optional[float]  # in [0, 1]; None for a DTW distance not yet normalised
    raw: float
    labels: tuple = ()
    snippet_length: Optional[float] = None
    band_values: Optional[np.ndarray] = field(default=None, repr=False)
    silent_bands: tuple = ()


@dataclass
class EntropyResult:
    value: float
    bins: int
    modality: str = ""


# ---------------------------------------------------------------------------
# Synchronisation and smoothing
# ---------------------------------------------------------------------------

class SyncResult(NamedTuple):
    a: AudioClip
    b: AudioClip
    lag: int  # samples by which b trails a
    confident: bool

    @property
    def lag_seconds(self) -> float:
        return self.lag / self.a.sample_rate


def sync_audio(a: AudioClip, b: AudioClip, max_lag: float | None = None,
               min_overlap: float = 1.0) -> SyncResult:
    """Align ``b`` to ``a`` at the cross-correlation peak and keep the overlap.

    ``confident`` is False when the peak is below three times the largest
    value expected from unrelated recordings. For ``L`` candidate lags that
    null maximum is about ``mean|c| * sqrt(pi * ln L)`` (Gaussian extreme
    value), so the rule stays meaningful for any lag range.
    """
    if a.sample_rate != b.sample_rate:
        raise ValueError("clips must share a sample rate")
    xa = np.asarray(a.samples, dtype=float)
    xb = np.asarray(b.samples, dtype=float)
    c = signal.correlate(xb, xa, mode="full", method="fft")
    lags = signal.correlation_lags(len(xb), len(xa), mode="full")
    if max_lag is not None:
        keep = np.abs(lags) <= int(round(max_lag * a.sample_rate))
        c, lags = c[keep], lags[keep]
    mag = np.abs(c)
    k = int(np.argmax(mag))
    lag = int(lags[k])
    null_peak = mag.mean() * np.sqrt(np.pi * np.log(max(len(mag), 2)))
    confident = bool(mag[k] >= 3.0 * null_peak)
    if lag >= 0:
        sa, sb = xa, xb[lag:]
    else:
        sa, sb = xa[-lag:], xb
    n = min(len(sa), len(sb))
    if n < min_overlap * a.sample_rate:
        raise ValueError(f"overlap after alignment is shorter than {min_overlap} s")
    return SyncResult(AudioClip(sa[:n], a.sample_rate), AudioClip(sb[:n], a.sample_rate), lag, confident)


def preprocess_scalar(series: TimeSeries, sg_window: int = 3, sg_order: int = 2,
                      sigma: float = 1.4) -> TimeSeries:
    """Mean removal, Savitzky-Golay, then Gaussian smoothing (reflective edges).

    RGB series are processed channel by channel.
    """
    if len(series) < sg_window:
        raise ValueError(f"series needs at least {sg_window} samples")
    v = series.values - series.values.mean(axis=0)
    v = signal.savgol_filter(v, sg_window, sg_order, axis=0, mode="mirror")
    v = gaussian_filter1d(v, sigma, axis=0, mode="reflect")
    return TimeSeries(series.timestamps.copy(), v, series.modality, series.sample_rate)


# ---------------------------------------------------------------------------
# One-third-octave band similarity score
# ---------------------------------------------------------------------------

def third_octave_centers(lo: float = 50.0, hi: float = 4000.0) -> np.ndarray:
    """Base-2 one-third-octave centres (1000 * 2**(k/3)) within [lo, hi] nominal."""
    k = np.arange(-20, 15)
    fc = 1000.0 * 2.0 ** (k / 3.0)
    return fc[(fc >= lo * 2 ** (-1 / 6)) & (fc <= hi * 2 ** (1 / 6))]


def band_edges(fc: float) -> tuple[float, float]:
    return fc * 2 ** (-1 / 6), fc * 2 ** (1 / 6)


def band_sos(fc: float, fs: float, order: int = 4) -> np.ndarray:
    """Butterworth band-pass of total order ``order`` around centre ``fc``."""
    lo, hi = band_edges(fc)
    return signal.butter(order // 2, [lo, hi], btype="bandpass", fs=fs, output="sos")


def filter_bank(clip: AudioClip, centers: Sequence[float] | None = None, order: int = 4) -> np.ndarray:
    """Time-domain band signals, shape ``(n_bands, n_samples)``."""
    centers = third_octave_centers() if centers is None else centers
    x = np.asarray(clip.samples, dtype=float)
    return np.stack([signal.sosfilt(band_sos(fc, clip.sample_rate, order), x) for fc in centers])


@functools.lru_cache(maxsize=16)
def _band_layout(fs: int, nfft: int, order: int, floor: float, centers: tuple):
    """Per band: first bin, |H|^2 weights over the bins where |H|^2 >= floor."""
    freqs = np.arange(nfft // 2 + 1) * (fs / nfft)
    layout = []
    for fc in centers:
        lo, hi = band_edges(fc)
        # search window generous enough for any order >= 2
        k0 = int(np.searchsorted(freqs, lo / 8))
        k1 = int(np.searchsorted(freqs, min(hi * 8, fs / 2)))
        _, h = signal.sosfreqz(band_sos(fc, fs, order), worN=freqs[k0:k1], fs=fs)
        w = np.abs(h) ** 2
        idx = np.nonzero(w >= floor)[0]
        a, b = k0 + idx[0], k0 + idx[-1] + 1
        layout.append((a, w[idx[0]:idx[-1] + 1].astype(np.float32)))
    top = max(a + len(w) for a, w in layout)
    return layout, top


class BandSpectrum:
    """Cached one-sided spectrum of a clip plus per-band energies.

    Building this once per clip lets many pairwise scores share the FFT.
    """

    def __init__(self, clip: AudioClip, cfg: Config | None = None, nfft: int | None = None):
        cfg = resolve(cfg)
        self.fs = int(clip.sample_rate)
        self.n = len(clip)
        self.max_lag = float(cfg["analysis.max_lag"])
        self.order = int(cfg["analysis.band_order"])
        self.floor = float(cfg["analysis.band_floor"])
        self.oversample = int(cfg["analysis.envelope_oversample"])
        self.centers = tuple(float(c) for c in third_octave_centers())
        lag_n = int(np.ceil(self.max_lag * self.fs))
        self.nfft = nfft or sfft.next_fast_len(self.n + lag_n + 1, real=True)
        self.layout, top = _band_layout(self.fs, self.nfft, self.order, self.floor, self.centers)
        x = np.asarray(clip.samples, dtype=np.float64)
        spec = sfft.rfft(x, self.nfft)[:top]
        p = spec.real ** 2 + spec.imag ** 2
        self.energy = np.array([np.dot(w, p[a:a + len(w)]) for a, w in self.layout])
        # single precision is ample for correlation peaks and halves the IFFT cost
        self.spec = spec.astype(np.complex64)


def similarity_from_spectra(sa: BandSpectrum, sb: BandSpectrum) -> SimilarityResult:
    """Mean over bands of the peak normalised cross-correlation within the lag bound.

    The per-band peak is taken on the magnitude of the analytic (one-sided)
    cross-correlation, which equals the largest correlation reachable by any
    (possibly fractional-sample) shift inside the bound.
    """
    if sa.nfft != sb.nfft or sa.fs != sb.fs:
        raise ValueError("spectra were computed with different layouts")
    scores = np.zeros(len(sa.layout))
    silent = []
    for i, (a, w) in enumerate(sa.layout):
        ea, eb = sa.energy[i], sb.energy[i]
        if ea <= 1e-30 or eb <= 1e-30:
            silent.append(i)
            continue
        cross = sa.spec[a:a + len(w)] * np.conj(sb.spec[a:a + len(w)])
        cross *= w.astype(np.float32)
        m = sfft.next_fast_len(max(1, sa.oversample) * len(w))
        z = sfft.ifft(cross, m) * m
        # lag of index j is j * nfft / (m * fs) seconds
        jmax = int(np.floor(sa.max_lag * m * sa.fs / sa.nfft))
        jmax = min(jmax, m // 2)
        env = np.abs(z)
        peak = max(env[:jmax + 1].max(), env[m - jmax:].max() if jmax > 0 else 0.0)
        scores[i] = min(1.0, peak / np.sqrt(ea * eb))
    if silent:
        warnings.warn(f"{len(silent)} silent band(s) scored as 0", RuntimeWarning, stacklevel=2)
    return SimilarityResult("similarity_score", float(scores.mean()), float(scores.mean()),
                            snippet_length=sa.n / sa.fs, band_values=scores,
                            silent_bands=tuple(silent))


def similarity_score(a: AudioClip, b: AudioClip, cfg: Config | None = None,
                     min_length: float = 10.0) -> SimilarityResult:
    """Audio similarity score of two synchronised, equal-length clips."""
    if a.sample_rate != b.sample_rate:
        raise ValueError("clips must share a sample rate")
    if len(a) != len(b):
        raise ValueError("clips must have equal length")
    if len(a) < min_length * a.sample_rate:
        raise ValueError(f"clips must be at least {min_length} s long")
    return similarity_from_spectra(BandSpectrum(a, cfg), BandSpectrum(b, cfg))


def similarity_score_direct(a: AudioClip, b: AudioClip, max_lag: float = 0.15, order: int = 4) -> float:
    """Time-domain reference: causal band filters, integer-lag correlation peak.

    Slow; used to cross-check :func:`similarity_score`.
    """
    fa, fb = filter_bank(a, order=order), filter_bank(b, order=order)
    lag_n = int(round(max_lag * a.sample_rate))
    out = []
    for xa, xb in zip(fa, fb):
        den = np.sqrt(np.dot(xa, xa) * np.dot(xb, xb))
        if den <= 0:
            out.append(0.0)
            continue
        c = signal.correlate(xb, xa, mode="full", method="fft")
        lags = signal.correlation_lags(len(xb), len(xa), mode="full")
        out.append(float(np.max(np.abs(c[np.abs(lags) <= lag_n])) / den))
    return float(np.mean(out))


# ---------------------------------------------------------------------------
# DTW
# ---------------------------------------------------------------------------

def _as_array(x) -> np.ndarray:
    v = x.values if isinstance(x, TimeSeries) else np.asarray(x, dtype=float)
    return v


def dtw_distance(a: Union[TimeSeries, np.ndarray], b: Union[TimeSeries, np.ndarray],
                 labels: tuple = ()) -> SimilarityResult:
    """Raw DTW distance (absolute-difference cost, L1 across RGB channels).

    ``value`` stays ``None`` until :func:`normalize_dtw` scales a comparison set.
    """
    va, vb = _as_array(a), _as_array(b)
    if len(va) == 0 or len(vb) == 0:
        raise ValueError("DTW needs non-empty series")
    length = a.duration if isinstance(a, TimeSeries) else None
    return SimilarityResult("dtw_distance", None, dtw_raw(va, vb), labels=labels, snippet_length=length)


def normalize_dtw(results: Sequence[SimilarityResult]) -> list[SimilarityResult]:
    """Min-max scale raw DTW distances of one comparison set into [0, 1]."""
    raw = np.array([r.raw for r in results], dtype=float)
    if len(raw) == 0:
        return []
    lo, hi = raw.min(), raw.max()
    span = hi - lo
    out = []
    for r, v in zip(results, raw):
        val = 0.0 if span <= 0 else float((v - lo) / span)
        out.append(SimilarityResult(r.metric, val, r.raw, r.labels, r.snippet_length))
    return out


# ---------------------------------------------------------------------------
# Entropy and snippets
# ---------------------------------------------------------------------------

def _entropy_1d(v: np.ndarray, bins: int) -> float:
    lo, hi = float(np.min(v)), float(np.max(v))
    if not hi > lo:
        return 0.0
    counts, _ = np.histogram(v, bins=bins, range=(lo, hi))
    p = counts[counts > 0] / len(v)
    return float(-(p * np.log2(p)).sum() / np.log2(bins))


def entropy(series: Union[TimeSeries, AudioClip, np.ndarray], bins: int) -> EntropyResult:
    """Normalised histogram entropy with ``bins`` equal-width bins over [min, max].

    For RGB data the per-channel entropies are averaged.
    """
    if bins < 2:
        raise ValueError("need at least 2 bins")
    modality = ""
    if isinstance(series, TimeSeries):
        v, modality = series.values, series.modality
    elif isinstance(series, AudioClip):
        v, modality = series.samples, "audio"
    else:
        v = np.asarray(series, dtype=float)
    if v.size == 0:
        raise ValueError("series is empty")
    if v.ndim == 2:
        h = float(np.mean([_entropy_1d(v[:, c], bins) for c in range(v.shape[1])]))
    else:
        h = _entropy_1d(v, bins)
    return EntropyResult(min(max(h, 0.0), 1.0), bins, modality)


def snippet_split(data: Union[TimeSeries, AudioClip], length: float) -> list:
    """Consecutive, non-overlapping snippets; the trailing remainder is dropped."""
    rate = data.sample_rate
    per = int(round(length * rate))
    if per <= 0:
        raise ValueError("snippet length must be positive")
    if per > len(data):
        raise ValueError(f"snippet length {length} s exceeds the {len(data) / rate:.1f} s of data")
    return [data.slice(k * per, (k + 1) * per) for k in range(len(data) // per)]
