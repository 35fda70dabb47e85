"""PRNG-driven stimulus schedules and waveforms for speakers, bulbs and humidifiers.

Each actuator owns one deterministic stream. Event ``i`` of stream ``s`` under
seed ``seed`` draws from ``event_rng(seed, s, i)``, so adding or removing an
actuator never shifts the random numbers seen by another one.
"""

from __future__ import annotations

import json
import math
from abc import ABC, abstractmethod
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .config import Config, resolve
from .series import AudioClip, TimeSeries

STIM_MODALITIES = ("audio", "light", "co2")

_SEED_MASK = (1 << 64) - 1


def event_rng(seed: int, stream: int = 0, index: int = 0, sub: int = 0) -> np.random.Generator:
    """Independent generator for event ``index`` of actuator ``stream``.

    ``sub`` > 0 selects a further independent stream for the same event, e.g.
    for waveform synthesis after the parameters were drawn with ``sub=0``.
    """
    words = [seed & _SEED_MASK, stream, index] + ([sub] if sub else [])
    return np.random.default_rng(np.random.SeedSequence(words))


# ---------------------------------------------------------------------------
# Parameters and schedules
# ---------------------------------------------------------------------------

@dataclass
class StimulusParams:
    modality: str
    occurrence_interval: float
    duration: float
    intensity: object  # loudness (audio), brightness (light), "low"/"high" (co2)
    pattern: str
    blink_hz: Optional[float] = None
    color: Optional[tuple] = None
    spectrum: Optional[tuple] = None

    def to_dict(self) -> dict:
        d = asdict(self)
        for k in ("color", "spectrum"):
            if d[k] is not None:
                d[k] = list(d[k])
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "StimulusParams":
        d = dict(d)
        for k in ("color", "spectrum"):
            if d.get(k) is not None:
                d[k] = tuple(d[k])
        return cls(**d)


@dataclass
class StimulusSchedule:
    modality: str
    events: list = field(default_factory=list)  # [(start_time, StimulusParams)]
    total_duration: float = 0.0
    seed: int = 0
    stream: int = 0

    def __len__(self) -> int:
        return len(self.events)

    @property
    def starts(self) -> np.ndarray:
        return np.array([s for s, _ in self.events], dtype=float)

    def to_dict(self) -> dict:
        return {
            "modality": self.modality,
            "total_duration": self.total_duration,
            "seed": self.seed,
            "stream": self.stream,
            "events": [{"start_time": s, "params": p.to_dict()} for s, p in self.events],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "StimulusSchedule":
        events = [(float(e["start_time"]), StimulusParams.from_dict(e["params"])) for e in d["events"]]
        return cls(d["modality"], events, float(d["total_duration"]), int(d["seed"]), int(d.get("stream", 0)))

    @classmethod
    def from_json(cls, text: str) -> "StimulusSchedule":
        return cls.from_dict(json.loads(text))


def _uniform(rng: np.random.Generator, lo_hi) -> float:
    lo, hi = lo_hi
    return float(rng.uniform(lo, hi))


def sample_params(modality: str, rng: np.random.Generator, cfg: Config | None = None) -> StimulusParams:
    """Draw one stimulus uniformly from the configured parameter ranges."""
    cfg = resolve(cfg)
    if modality == "audio":
        return StimulusParams(
            modality="audio",
            occurrence_interval=_uniform(rng, cfg["stim.audio.interval"]),
            duration=_uniform(rng, cfg["stim.audio.duration"]),
            intensity=_uniform(rng, cfg["stim.audio.loudness"]),
            pattern="speech+noise",
            spectrum=tuple(float(v) for v in cfg["stim.audio.spectrum"]),
        )
    if modality == "light":
        interval = _uniform(rng, cfg["stim.light.interval"])
        duration = _uniform(rng, cfg["stim.light.duration"])
        lo, hi = cfg["stim.light.brightness"]
        brightness = int(rng.integers(lo, hi + 1))
        blink = bool(rng.random() < cfg["stim.light.blink_probability"])
        blink_hz = _uniform(rng, cfg["stim.light.blink_hz"]) if blink else None
        color = tuple(int(c) for c in rng.integers(0, 256, size=3))
        return StimulusParams("light", interval, duration, brightness,
                              "blink" if blink else "constant", blink_hz=blink_hz, color=color)
    if modality == "co2":
        interval = _uniform(rng, cfg["stim.co2.interval"])
        duration = _uniform(rng, cfg["stim.co2.duration"])
        level = "high" if rng.random() < cfg["stim.co2.high_probability"] else "low"
        return StimulusParams("co2", interval, duration, level, "none")
    raise ValueError(f"unknown stimulus modality {modality!r}")


def build_schedule(modality: str, total_duration: float, seed: int, stream: int = 0,
                   cfg: Config | None = None) -> StimulusSchedule:
    """Sequence of stimuli covering ``[0, total_duration]``.

    The first event starts at 0. Each event is followed by a pause of its own
    ``occurrence_interval`` before the next one starts, so events of one
    actuator never overlap. The last event may run past ``total_duration``;
    renderers truncate it.
    """
    cfg = resolve(cfg)
    if modality not in STIM_MODALITIES:
        raise ValueError(f"unknown stimulus modality {modality!r}")
    min_interval = cfg[f"stim.{modality}.interval"][0]
    if not total_duration >= min_interval:
        raise ValueError(
            f"total_duration {total_duration} s is shorter than the minimum "
            f"{modality} occurrence interval ({min_interval} s)")
    events = []
    t = 0.0
    i = 0
    while t < total_duration:
        params = sample_params(modality, event_rng(seed, stream, i), cfg)
        events.append((t, params))
        t = t + params.duration + params.occurrence_interval
        i += 1
    return StimulusSchedule(modality, events, float(total_duration), int(seed), int(stream))


# ---------------------------------------------------------------------------
# Audio
# ---------------------------------------------------------------------------

class SpeechSource(ABC):
    """Produces spoken-word-like audio; plug in recorded corpora by subclassing."""

    sample_rate: int = 44100
    words_per_minute: float = 120.0

    @property
    def word_duration(self) -> float:
        return 60.0 / self.words_per_minute

    @abstractmethod
    def next_utterance(self, word_count: int, rng: np.random.Generator) -> AudioClip:
        """Return an utterance of ``word_count`` words (``meta['word_samples']`` if fixed)."""


class FormantSpeech(SpeechSource):
    """Each word is a short stack of formant tones followed by a short silence."""

    def __init__(self, sample_rate: int = 44100, words_per_minute: float = 120.0,
                 word_duration: float | None = None, cfg: Config | None = None):
        cfg = resolve(cfg)
        self.sample_rate = int(sample_rate)
        self.words_per_minute = float(words_per_minute)
        self._word_duration = word_duration or cfg["speech.word_duration"] or None
        self.formants = cfg["speech.formants"]
        self.n_formants = int(cfg["speech.n_formants"])
        self.envelope = float(cfg["speech.envelope"])
        self.gap = float(cfg["speech.gap"])

    @property
    def word_duration(self) -> float:
        return self._word_duration or 60.0 / self.words_per_minute

    def next_utterance(self, word_count: int, rng: np.random.Generator) -> AudioClip:
        fs = self.sample_rate
        n_word = int(round(self.word_duration * fs))
        n_gap = min(int(round(self.gap * fs)), n_word // 2)
        n_voice = n_word - n_gap
        n_env = min(int(round(self.envelope * fs)), n_voice // 2)
        env = np.ones(n_voice)
        if n_env > 0:
            ramp = 0.5 - 0.5 * np.cos(np.pi * np.arange(n_env) / n_env)
            env[:n_env] = ramp
            env[n_voice - n_env:] = ramp[::-1]
        t = np.arange(n_voice) / fs
        out = np.zeros(word_count * n_word)
        lo, hi = self.formants
        for w in range(word_count):
            freqs = rng.uniform(lo, hi, self.n_formants)
            amps = rng.uniform(0.3, 1.0, self.n_formants)
            phases = rng.uniform(0, 2 * np.pi, self.n_formants)
            voiced = np.zeros(n_voice)
            for f, a, p in zip(freqs, amps, phases):
                voiced += a * np.sin(2 * np.pi * f * t + p)
            voiced *= env / amps.sum()
            out[w * n_word: w * n_word + n_voice] = voiced
        return AudioClip(out, fs, meta={"word_samples": n_word, "words": word_count})


def burst_count(word_count: int) -> int:
    return int(min(3, max(1, math.ceil(word_count / 10))))


def sine_burst(freq: float, duration: float, loudness: float, sample_rate: int,
               fade: float = 0.01, phase: float = 0.0) -> np.ndarray:
    """Pure sine with raised-cosine fades (the fades keep the spectrum clean)."""
    n = int(round(duration * sample_rate))
    t = np.arange(n) / sample_rate
    x = loudness * np.sin(2 * np.pi * freq * t + phase)
    n_f = min(int(round(fade * sample_rate)), n // 2)
    if n_f > 0:
        ramp = 0.5 - 0.5 * np.cos(np.pi * np.arange(n_f) / n_f)
        x[:n_f] *= ramp
        x[n - n_f:] *= ramp[::-1]
    return x


def _split_points(n_speech: int, n_bursts: int, word_samples: int | None) -> list[int]:
    pts = []
    for k in range(1, n_bursts + 1):
        p = n_speech * k / (n_bursts + 1)
        if word_samples:
            p = round(p / word_samples) * word_samples
        pts.append(int(min(max(p, 0), n_speech)))
    return pts


def synth_utterance(speech_source: SpeechSource, rng: np.random.Generator,
                    cfg: Config | None = None) -> np.ndarray:
    """One utterance of random length with 1-3 sine bursts spread evenly through it."""
    cfg = resolve(cfg)
    fs = speech_source.sample_rate
    w_lo, w_hi = cfg["stim.audio.words"]
    words = int(rng.integers(w_lo, w_hi + 1))
    speech = speech_source.next_utterance(words, rng)
    s = np.asarray(speech.samples, dtype=float)
    n_b = burst_count(words)
    f_lo, f_hi = cfg["stim.audio.spectrum"]
    f_hi = min(f_hi, 0.499 * fs)
    pieces = []
    last = 0
    for p in _split_points(len(s), n_b, speech.meta.get("word_samples")):
        pieces.append(s[last:p])
        last = p
        pieces.append(sine_burst(
            freq=_uniform(rng, (f_lo, f_hi)),
            duration=_uniform(rng, cfg["stim.audio.burst_duration"]),
            loudness=_uniform(rng, cfg["stim.audio.burst_loudness"]),
            sample_rate=fs,
            fade=cfg["stim.audio.burst_fade"],
            phase=float(rng.uniform(0, 2 * np.pi)),
        ))
    pieces.append(s[last:])
    return np.concatenate(pieces)


def synth_audio_stimulus(params: StimulusParams, speech_source: SpeechSource,
                         rng: np.random.Generator, cfg: Config | None = None) -> AudioClip:
    """Speech interleaved with sine bursts, filling exactly ``params.duration``.

    Utterances are generated back to back until the stimulus duration is
    covered; the last one is cut at the boundary. The whole clip is scaled by
    the sampled loudness and clipped to [-1, 1].
    """
    if params.modality != "audio":
        raise ValueError("synth_audio_stimulus needs audio parameters")
    cfg = resolve(cfg)
    fs = speech_source.sample_rate
    n_total = int(round(params.duration * fs))
    out = np.zeros(n_total)
    pos = 0
    while pos < n_total:
        u = synth_utterance(speech_source, rng, cfg)
        take = min(len(u), n_total - pos)
        out[pos:pos + take] = u[:take]
        pos += take
    out *= float(params.intensity)
    return AudioClip(out, fs)


# ---------------------------------------------------------------------------
# Light
# ---------------------------------------------------------------------------

# sRGB (D65) primaries
_RGB_TO_XYZ = np.array([
    [0.4124, 0.3576, 0.1805],
    [0.2126, 0.7152, 0.0722],
    [0.0193, 0.1192, 0.9505],
])
_XYZ_TO_RGB = np.linalg.inv(_RGB_TO_XYZ)
# Colour gamut of a typical smart bulb (CIE 1931 xy)
BULB_GAMUT = ((0.6915, 0.3083), (0.17, 0.7), (0.1532, 0.0475))


def _srgb_decode(c):
    c = np.asarray(c, dtype=float) / 255.0
    return np.where(c <= 0.04045, c / 12.92, ((c + 0.055) / 1.055) ** 2.4)


def _srgb_encode(c):
    c = np.clip(np.asarray(c, dtype=float), 0.0, 1.0)
    return np.where(c <= 0.0031308, 12.92 * c, 1.055 * c ** (1 / 2.4) - 0.055) * 255.0


def rgb_to_xy(rgb) -> tuple[float, float]:
    """CIE 1931 chromaticity of an 8-bit sRGB colour (black maps to D65 white)."""
    xyz = _RGB_TO_XYZ @ _srgb_decode(rgb)
    s = xyz.sum()
    if s <= 0:
        return 0.3127, 0.3290
    return float(xyz[0] / s), float(xyz[1] / s)


def _closest_on_segment(p, a, b):
    ap, ab = p - a, b - a
    t = np.clip(np.dot(ap, ab) / np.dot(ab, ab), 0.0, 1.0)
    return a + t * ab


def clamp_to_gamut(xy, gamut=BULB_GAMUT) -> tuple[float, float]:
    """Nearest point of the gamut triangle (identity for in-gamut points)."""
    p = np.asarray(xy, dtype=float)
    r, g, b = (np.asarray(v, dtype=float) for v in gamut)

    def cross(o, a, c):
        return (a[0] - o[0]) * (c[1] - o[1]) - (a[1] - o[1]) * (c[0] - o[0])

    d1, d2, d3 = cross(r, g, p), cross(g, b, p), cross(b, r, p)
    neg = (d1 < 0) or (d2 < 0) or (d3 < 0)
    pos = (d1 > 0) or (d2 > 0) or (d3 > 0)
    if not (neg and pos):
        return float(p[0]), float(p[1])
    cands = [_closest_on_segment(p, r, g), _closest_on_segment(p, g, b), _closest_on_segment(p, b, r)]
    best = min(cands, key=lambda c: np.sum((c - p) ** 2))
    return float(best[0]), float(best[1])


def xy_to_linear_rgb(xy) -> np.ndarray:
    """Linear RGB (max channel = 1) with chromaticity ``xy``."""
    x, y = xy
    y = max(y, 1e-9)
    xyz = np.array([x / y, 1.0, (1.0 - x - y) / y])
    lin = np.clip(_XYZ_TO_RGB @ xyz, 0.0, None)
    m = lin.max()
    return lin / m if m > 0 else np.ones(3)


def xy_to_rgb(xy) -> tuple[int, int, int]:
    """8-bit sRGB colour at full brightness with chromaticity ``xy``."""
    enc = _srgb_encode(xy_to_linear_rgb(xy))
    return tuple(int(v) for v in np.round(enc))


def map_color(rgb, gamut=BULB_GAMUT) -> tuple[int, int, int]:
    """Colour the bulb actually shows for a requested sRGB triplet."""
    return xy_to_rgb(clamp_to_gamut(rgb_to_xy(rgb), gamut))


def blink_mask(n: int, rate: float, freq: float) -> np.ndarray:
    """On/off square wave, on for the first half of each period."""
    t = np.arange(n) / rate
    return np.mod(t * freq, 1.0) < 0.5


def synth_light_profile(params: StimulusParams, tick_rate: float = 5.0) -> tuple[TimeSeries, TimeSeries]:
    """Brightness and shown-colour profiles of one light stimulus."""
    if params.modality != "light":
        raise ValueError("synth_light_profile needs light parameters")
    n = int(round(params.duration * tick_rate))
    on = np.ones(n, dtype=bool)
    if params.pattern == "blink":
        on = blink_mask(n, tick_rate, params.blink_hz)
    bright = np.where(on, float(params.intensity), 0.0)
    shown = np.asarray(map_color(params.color), dtype=float)
    rgb = np.where(on[:, None], shown[None, :], 0.0)
    return (TimeSeries.from_values(bright, tick_rate, "light"),
            TimeSeries.from_values(rgb, tick_rate, "rgb"))


# ---------------------------------------------------------------------------
# CO2
# ---------------------------------------------------------------------------

def emission_rate(level: str, cfg: Config | None = None) -> float:
    cfg = resolve(cfg)
    if level not in ("low", "high"):
        raise ValueError(f"mist level must be 'low' or 'high', got {level!r}")
    return float(cfg["stim.co2.rate_high"] if level == "high" else cfg["stim.co2.rate_low"])


def synth_co2_emission(params: StimulusParams, cfg: Config | None = None,
                       tick_rate: float = 1.0) -> TimeSeries:
    """Rectangular source-strength profile (ppm*m^3/s) of one mist emission."""
    if params.modality != "co2":
        raise ValueError("synth_co2_emission needs co2 parameters")
    n = int(round(params.duration * tick_rate))
    return TimeSeries.from_values(np.full(n, emission_rate(params.intensity, cfg)), tick_rate, "co2")
