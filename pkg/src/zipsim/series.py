"""Sampled-signal containers shared by every module."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

MODALITIES = ("audio", "light", "rgb", "co2")


@dataclass
class TimeSeries:
    """Uniformly sampled scalar or RGB readings of one modality.

    ``values`` is 1-D for scalar sensors and ``(n, 3)`` for RGB.
    """

    timestamps: np.ndarray
    values: np.ndarray
    modality: str
    sample_rate: float

    def __post_init__(self):
        self.timestamps = np.asarray(self.timestamps, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if len(self.timestamps) != len(self.values):
            raise ValueError("timestamps and values differ in length")
        if len(self.timestamps) > 1:
            dt = np.diff(self.timestamps)
            if np.any(dt <= 0):
                bad = int(np.argmax(dt <= 0)) + 1
                raise ValueError(f"timestamps not strictly increasing at index {bad}")
            tick = 1.0 / self.sample_rate
            if np.any(np.abs(dt - tick) > tick):
                raise ValueError("timestamps are not uniform within one tick")

    @classmethod
    def from_values(cls, values, sample_rate: float, modality: str, t0: float = 0.0) -> "TimeSeries":
        values = np.asarray(values, dtype=float)
        ts = t0 + np.arange(len(values)) / sample_rate
        return cls(ts, values, modality, sample_rate)

    def __len__(self) -> int:
        return len(self.values)

    @property
    def duration(self) -> float:
        return len(self.values) / self.sample_rate

    @property
    def is_rgb(self) -> bool:
        return self.values.ndim == 2

    def slice(self, start: int, stop: int) -> "TimeSeries":
        return TimeSeries(self.timestamps[start:stop], self.values[start:stop],
                          self.modality, self.sample_rate)


@dataclass
class AudioClip:
    """PCM-style mono buffer with amplitudes in [-1, 1]."""

    samples: np.ndarray
    sample_rate: int = 44100
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        self.samples = np.asarray(self.samples)
        if self.samples.dtype.kind != "f":
            self.samples = self.samples.astype(np.float64)
        np.clip(self.samples, -1.0, 1.0, out=self.samples)

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate

    def rms(self) -> float:
        if len(self.samples) == 0:
            return 0.0
        x = self.samples.astype(np.float64, copy=False)
        return float(np.sqrt(np.mean(x * x)))

    def slice(self, start: int, stop: int) -> "AudioClip":
        return AudioClip(self.samples[start:stop], self.sample_rate)
