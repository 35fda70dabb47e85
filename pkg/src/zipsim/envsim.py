"""Room-scale propagation of stimuli to colocated and adversarial sensors.

The model is deliberately simple: geometric attenuation, insertion losses at
the door and a couple of one-pole filters for audio; inverse-square
illuminance with line-of-sight tests for light; a two-zone (room, corridor)
linear mixing model with a per-sensor transport lag for CO2.

The room is the axis-aligned box ``[0, Lx] x [0, Ly] x [0, Lz]``; its door is
in the wall ``x = Lx`` and the corridor lies at ``x > Lx``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np
from scipy import signal
from scipy.interpolate import CubicSpline
from scipy.linalg import expm

from ._kernels import lti_run, one_pole_lowpass
from .config import Config, resolve
from .series import AudioClip, TimeSeries
from .stimgen import (
    FormantSpeech,
    StimulusSchedule,
    event_rng,
    map_color,
    synth_audio_stimulus,
    synth_co2_emission,
    synth_light_profile,
)

SETTINGS = ("PA", "AA", "PA+H", "AA+H")
SENSOR_RATES = {"microphone": 44100, "light": 5.0, "rgb": 5.0, "co2": 1.0}
SENSOR_MODALITY = {"microphone": "audio", "light": "light", "rgb": "rgb", "co2": "co2"}
ALL_SENSORS = ("microphone", "light", "rgb", "co2")

# Fixed stream ids for environment randomness; actuators use their list index.
_STREAMS = {
    "audio_noise": 1001, "attack_audio": 1002, "human_speech": 1003,
    "daylight": 1011, "corridor_light": 1012, "lamp": 1013, "light_noise": 1014,
    "shade": 1015,
    "co2_noise": 1021, "co2_offset": 1022, "draft": 1023, "corridor_co2": 1024,
    "humans": 1031,
}


def _rng(scenario: "Scenario", name: str, index: int = 0) -> np.random.Generator:
    return event_rng(scenario.seed, _STREAMS[name], index)


# ---------------------------------------------------------------------------
# Scenario description
# ---------------------------------------------------------------------------

@dataclass
class Room:
    size: tuple = (4.5, 3.6, 2.5)
    door_y: float = 1.8
    door_z: float = 1.0

    @property
    def volume(self) -> float:
        return float(np.prod(self.size))

    @property
    def door(self) -> np.ndarray:
        return np.array([self.size[0], self.door_y, self.door_z], dtype=float)

    def contains(self, p) -> bool:
        p = np.asarray(p, dtype=float)
        return bool(np.all(p >= 0.0) and np.all(p <= np.asarray(self.size)))


@dataclass
class Obstacle:
    """Opaque axis-aligned box (furniture) that blocks light paths."""

    lo: tuple
    hi: tuple
    name: str = ""

    def blocks(self, p, q) -> bool:
        """True when the open segment p->q passes through the box (slab test)."""
        p, q = np.asarray(p, dtype=float), np.asarray(q, dtype=float)
        d = q - p
        t0, t1 = 0.0, 1.0
        for k in range(3):
            lo, hi = self.lo[k], self.hi[k]
            if abs(d[k]) < 1e-12:
                if p[k] < lo or p[k] > hi:
                    return False
                continue
            a, b = (lo - p[k]) / d[k], (hi - p[k]) / d[k]
            if a > b:
                a, b = b, a
            t0, t1 = max(t0, a), min(t1, b)
            if t0 > t1:
                return False
        # touching only at an end point (a device sitting on a desk) is not a block
        return t1 - t0 > 1e-9 and t0 < 1.0 - 1e-9 and t1 > 1e-9


@dataclass
class DeviceSpec:
    id: str
    position: tuple
    obstructed: bool = False
    sensors: tuple = ALL_SENSORS

    def __post_init__(self):
        bad = [s for s in self.sensors if s not in SENSOR_RATES]
        if bad:
            raise ValueError(f"device {self.id}: unknown sensor(s) {bad}")


@dataclass
class Actuator:
    id: str
    modality: str  # audio | light | co2
    position: tuple
    schedule: Optional[StimulusSchedule] = None


@dataclass
class AttackSpec:
    audio_attack: str = "none"  # none | constant_sine | staircase
    tone_hz: float = 150.0
    staircase_dwell: float = 2.0
    light_attack: str = "none"  # none | colored_lamp | flashlight
    lamp_color: tuple = (255, 60, 0)
    lamp_brightness: int = 254
    co2_attack: str = "none"  # none | fan
    fan_factor: float = 5.0
    attacker_offset: float = 0.0

    def __post_init__(self):
        if self.audio_attack not in ("none", "constant_sine", "staircase"):
            raise ValueError(f"unknown audio attack {self.audio_attack!r}")
        if self.light_attack not in ("none", "colored_lamp", "flashlight"):
            raise ValueError(f"unknown light attack {self.light_attack!r}")
        if self.co2_attack not in ("none", "fan"):
            raise ValueError(f"unknown co2 attack {self.co2_attack!r}")

    @property
    def active(self) -> bool:
        return (self.audio_attack, self.light_attack, self.co2_attack) != ("none",) * 3


@dataclass
class AmbientSpec:
    audio_noise_floor: float = 42.0  # dB pseudo-SPL inside the room
    corridor_noise_floor: float = 42.0
    daylight_profile: Optional[TimeSeries] = None  # overrides the generated daylight
    co2_ambient: float = 420.0
    human_activity: str = "none"  # none | office_two_persons

    def __post_init__(self):
        if not self.co2_ambient > 0:
            raise ValueError("co2_ambient must be positive")
        if self.human_activity not in ("none", "office_two_persons"):
            raise ValueError(f"unknown human activity {self.human_activity!r}")


@dataclass
class Scenario:
    name: str
    room: Room
    devices: list
    actuators: list
    adversary_id: str
    setting: str
    door_state: str  # closed | half_open
    attack: AttackSpec = field(default_factory=AttackSpec)
    ambient: AmbientSpec = field(default_factory=AmbientSpec)
    durations: dict = field(default_factory=lambda: {"audio": 1800.0, "light": 1800.0, "co2": 3600.0})
    seed: int = 0
    obstacles: list = field(default_factory=list)
    modalities: tuple = ("audio", "light", "co2")

    @property
    def room_volume(self) -> float:
        return self.room.volume

    @property
    def duration(self) -> float:
        return max(self.durations[m] for m in self.modalities)

    def device(self, device_id: str) -> DeviceSpec:
        for d in self.devices:
            if d.id == device_id:
                return d
        raise KeyError(device_id)

    @property
    def adversary(self) -> DeviceSpec:
        return self.device(self.adversary_id)

    def labels(self) -> dict:
        """``device_id -> 'colocated' | 'adversarial'`` from geometry alone."""
        return {d.id: "colocated" if self.room.contains(d.position) else "adversarial"
                for d in self.devices}

    def attack_position(self) -> np.ndarray:
        """Adversarial actuators sit just outside the door, pushed back by the offset."""
        return self.room.door + np.array([0.3 + self.attack.attacker_offset, 0.0, 0.0])

    def to_dict(self) -> dict:
        d = {
            "name": self.name,
            "room": asdict(self.room),
            "devices": [asdict(x) for x in self.devices],
            "actuators": [{"id": a.id, "modality": a.modality, "position": list(a.position),
                           "schedule": a.schedule.to_dict() if a.schedule else None}
                          for a in self.actuators],
            "adversary_id": self.adversary_id,
            "setting": self.setting,
            "door_state": self.door_state,
            "attack": asdict(self.attack),
            "ambient": {k: v for k, v in asdict(self.ambient).items() if k != "daylight_profile"},
            "durations": dict(self.durations),
            "seed": self.seed,
            "obstacles": [asdict(o) for o in self.obstacles],
            "modalities": list(self.modalities),
        }
        return _jsonable(d)


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.generic):
        return x.item()
    return x


def validate_scenario(sc: Scenario) -> None:
    """Reject scenarios whose setting, door, schedules and attack disagree."""
    if sc.setting not in SETTINGS:
        raise ValueError(f"unknown setting {sc.setting!r}; expected one of {SETTINGS}")
    labels = sc.labels()
    adversarial = [k for k, v in labels.items() if v == "adversarial"]
    if adversarial != [sc.adversary_id]:
        raise ValueError("exactly one device, the adversary, must lie outside the room; "
                         f"outside: {adversarial}, adversary_id: {sc.adversary_id!r}")
    want_door = "closed" if sc.setting.startswith("PA") else "half_open"
    if sc.door_state != want_door:
        raise ValueError(f"setting {sc.setting} requires a {want_door} door, got {sc.door_state}")
    injecting = sc.setting.endswith("+H")
    scheduled = [a.id for a in sc.actuators if a.schedule is not None and len(a.schedule)]
    if not injecting and scheduled:
        raise ValueError(f"setting {sc.setting} runs without injection but actuators "
                         f"{scheduled} carry schedules")
    if injecting and not scheduled:
        raise ValueError(f"setting {sc.setting} needs at least one stimulus schedule")
    if sc.setting.startswith("AA") and not sc.attack.active:
        raise ValueError(f"setting {sc.setting} needs an active attack (AttackSpec is all 'none')")
    if sc.setting.startswith("PA") and sc.attack.active:
        raise ValueError(f"setting {sc.setting} is passive but an attack is configured")
    for a in sc.actuators:
        if a.schedule is not None and a.schedule.modality != a.modality:
            raise ValueError(f"actuator {a.id}: {a.modality} actuator with a "
                             f"{a.schedule.modality} schedule")
        if a.schedule is not None and a.modality in sc.durations:
            last = max((s for s, _ in a.schedule.events), default=0.0)
            if last >= sc.durations[a.modality]:
                raise ValueError(f"actuator {a.id}: schedule extends past the "
                                 f"{sc.durations[a.modality]} s scenario duration")


# ---------------------------------------------------------------------------
# Recordings
# ---------------------------------------------------------------------------

@dataclass
class Recording:
    device_id: str
    modality: str  # audio | light | rgb | co2
    data: object  # AudioClip or TimeSeries
    label: str  # colocated | adversarial


@dataclass
class RecordingBundle:
    scenario: dict
    recordings: list = field(default_factory=list)

    @property
    def labels(self) -> dict:
        out = {}
        for r in self.recordings:
            out[r.device_id] = r.label
        return out

    def get(self, device_id: str, modality: str):
        for r in self.recordings:
            if r.device_id == device_id and r.modality == modality:
                return r.data
        raise KeyError((device_id, modality))

    def devices(self, modality: str) -> list:
        return [r.device_id for r in self.recordings if r.modality == modality]

    def modalities(self) -> list:
        seen = []
        for r in self.recordings:
            if r.modality not in seen:
                seen.append(r.modality)
        return seen

    def colocated(self, modality: str) -> list:
        return [r.device_id for r in self.recordings
                if r.modality == modality and r.label == "colocated"]

    def adversarial(self, modality: str) -> list:
        return [r.device_id for r in self.recordings
                if r.modality == modality and r.label == "adversarial"]


# ---------------------------------------------------------------------------
# Geometry helpers
# ---------------------------------------------------------------------------

def _path(sc: Scenario, src, dst) -> tuple[float, bool]:
    """Path length and whether the path crosses the door."""
    src, dst = np.asarray(src, dtype=float), np.asarray(dst, dtype=float)
    if sc.room.contains(src) == sc.room.contains(dst):
        return float(np.linalg.norm(dst - src)), False
    door = sc.room.door
    return float(np.linalg.norm(door - src) + np.linalg.norm(dst - door)), True


def _line_of_sight(sc: Scenario, src, dst) -> bool:
    return not any(o.blocks(src, dst) for o in sc.obstacles)


def _smooth_drift(rng: np.random.Generator, n: int, rate: float, knot: float, sd: float) -> np.ndarray:
    """Zero-mean cubic-spline wander sampled at ``rate`` with knots every ``knot`` s."""
    if sd <= 0 or n == 0:
        return np.zeros(n)
    span = n / rate
    k = max(2, int(math.ceil(span / knot)) + 1)
    tk = np.arange(k) * knot
    return CubicSpline(tk, rng.normal(0.0, sd, k))(np.arange(n) / rate)


def _step_events(rng: np.random.Generator, n: int, rate: float, per_second: float,
                 depth, length) -> np.ndarray:
    """Sum of rectangular excursions arriving as a Poisson process."""
    out = np.zeros(n)
    span = n / rate
    t = rng.exponential(1.0 / per_second) if per_second > 0 else span
    while t < span:
        mag = rng.uniform(*depth) * rng.choice([-1.0, 1.0])
        dur = rng.uniform(*length)
        a, b = int(t * rate), min(n, int((t + dur) * rate))
        out[a:b] += mag
        t += dur + rng.exponential(1.0 / per_second)
    return out


def _human_positions(sc: Scenario, cfg: Config) -> list:
    if sc.ambient.human_activity != "office_two_persons":
        return []
    rng = _rng(sc, "humans")
    lx, ly, _ = sc.room.size
    n = int(cfg["human.persons"])
    return [np.array([rng.uniform(0.5, lx - 0.5), rng.uniform(0.5, ly - 0.5), cfg["human.seat_height"]])
            for _ in range(n)]


# ---------------------------------------------------------------------------
# Audio
# ---------------------------------------------------------------------------

def _db_to_rms(db: float, cfg: Config) -> float:
    return 10.0 ** ((db - cfg["audio.db_offset"]) / 20.0)


def render_stimulus_track(schedule: StimulusSchedule, n: int, fs: int,
                          cfg: Config | None = None) -> np.ndarray:
    """Digital (full-scale) waveform of a speaker schedule, ``n`` samples long."""
    cfg = resolve(cfg)
    speech = FormantSpeech(fs, cfg["speech.wpm"], cfg=cfg)
    track = np.zeros(n, dtype=np.float32)
    for i, (start, params) in enumerate(schedule.events):
        s0 = int(round(start * fs))
        if s0 >= n:
            break
        clip = synth_audio_stimulus(params, speech, event_rng(schedule.seed, schedule.stream, i, sub=1), cfg)
        take = min(len(clip), n - s0)
        track[s0:s0 + take] += clip.samples[:take]
    return track


def third_octave_staircase_centers() -> np.ndarray:
    k = np.arange(-14, 14)  # 39.4 Hz .. 20.2 kHz
    return 1000.0 * 2.0 ** (k / 3.0)


def render_attack_track(sc: Scenario, n: int, fs: int, cfg: Config) -> np.ndarray:
    """Pressure-scaled (at 1 m) waveform of the adversarial speaker."""
    kind = sc.attack.audio_attack
    out = np.zeros(n, dtype=np.float32)
    if kind == "none":
        return out
    rms = _db_to_rms(cfg["attack.tone_level_db"], cfg)
    if kind == "constant_sine":
        t = np.arange(n, dtype=np.float64) / fs
        out[:] = math.sqrt(2.0) * rms * np.sin(2 * np.pi * sc.attack.tone_hz * t)
        return out
    # staircase: band-limited noise stepping up through third-octave bands
    rng = _rng(sc, "attack_audio")
    dwell = int(round(sc.attack.staircase_dwell * fs))
    centers = third_octave_staircase_centers()
    for k, s0 in enumerate(range(0, n, dwell)):
        fc = centers[k % len(centers)]
        lo, hi = fc * 2 ** (-1 / 6), min(fc * 2 ** (1 / 6), 0.49 * fs)
        sos = signal.butter(2, [lo, hi], btype="bandpass", fs=fs, output="sos")
        m = min(dwell, n - s0)
        seg = signal.sosfilt(sos, rng.standard_normal(m + 2048))[2048:]
        seg *= rms / max(np.sqrt(np.mean(seg * seg)), 1e-12)
        out[s0:s0 + m] = seg
    return out


def _audio_sources(sc: Scenario, n: int, fs: int, cfg: Config) -> list:
    """List of (position, pressure track, inside_room) for every emitting source."""
    srcs = []
    scale = _db_to_rms(cfg["audio.speaker_level_db"], cfg)
    for a in sc.actuators:
        if a.modality == "audio" and a.schedule is not None and len(a.schedule):
            track = render_stimulus_track(a.schedule, n, fs, cfg)
            track *= np.float32(scale)
            srcs.append((np.asarray(a.position, dtype=float), track))
    if sc.attack.audio_attack != "none":
        srcs.append((sc.attack_position(), render_attack_track(sc, n, fs, cfg)))
    return srcs


def _human_utterances(sc: Scenario, n: int, fs: int, cfg: Config) -> list:
    """(position, start sample, pressure-scaled samples) for each utterance."""
    people = _human_positions(sc, cfg)
    if not people:
        return []
    rng = _rng(sc, "human_speech")
    speech = FormantSpeech(fs, cfg["speech.wpm"], cfg=cfg)
    rate = cfg["human.utterances_per_min"] / 60.0
    level = _db_to_rms(cfg["human.speech_level_db"], cfg)
    w_lo, w_hi = cfg["stim.audio.words"]
    out = []
    t = rng.exponential(1.0 / rate)
    while t < n / fs:
        who = int(rng.integers(len(people)))
        words = int(rng.integers(w_lo, w_hi + 1))
        clip = speech.next_utterance(words, rng).samples
        rms = max(np.sqrt(np.mean(clip * clip)), 1e-12)
        out.append((people[who], int(t * fs), (clip * (level / rms)).astype(np.float32)))
        t += len(clip) / fs + rng.exponential(1.0 / rate)
    return out


def _audio_chain(sc: Scenario, dev: DeviceSpec, src_pos, cfg: Config) -> tuple[float, float, tuple]:
    """Distance, insertion gain and low-pass cutoffs for one source -> device path."""
    d, crosses = _path(sc, src_pos, dev.position)
    gain = 1.0
    cutoffs = []
    if crosses:
        if sc.door_state == "closed":
            gain *= 10 ** (-cfg["audio.door_closed_loss_db"] / 20.0)
            cutoffs.append(cfg["audio.door_closed_cutoff"])
        else:
            gain *= 10 ** (-cfg["audio.door_half_open_loss_db"] / 20.0)
    if dev.obstructed and sc.room.contains(src_pos) and sc.room.contains(dev.position):
        cutoffs.append(cfg["audio.obstructed_cutoff"])
    return max(d, cfg["audio.min_distance"]), gain, tuple(sorted(cutoffs))


# 1/f ("pink") shaping filter; three pole/zero pairs spread over the audio band
_PINK_B = np.array([0.049922035, -0.095993537, 0.050612699, -0.004408786])
_PINK_A = np.array([1.0, -2.494956002, 2.017265875, -0.522189400])


def _pink_gain() -> float:
    """Scale that gives the filtered unit-variance white noise unit variance."""
    impulse = np.zeros(1 << 16)
    impulse[0] = 1.0
    h = signal.lfilter(_PINK_B, _PINK_A, impulse)
    return float(1.0 / np.sqrt(np.sum(h * h)))


def ambient_noise(rng: np.random.Generator, n: int, color: str = "pink",
                  chunk: int = 1 << 20) -> np.ndarray:
    """Unit-RMS float32 noise, white or pink (filtered in chunks to bound memory)."""
    x = rng.standard_normal(n, dtype=np.float32)
    if color == "white":
        return x
    if color != "pink":
        raise ValueError(f"unknown noise colour {color!r}")
    g = _pink_gain()
    zi = np.zeros(len(_PINK_A) - 1)
    for s0 in range(0, n, chunk):
        seg, zi = signal.lfilter(_PINK_B, _PINK_A, x[s0:s0 + chunk], zi=zi)
        x[s0:s0 + chunk] = g * seg
    return x


def _add_delayed(acc: np.ndarray, x: np.ndarray, start: int, gain: float) -> None:
    n = len(acc)
    if start >= n or gain == 0.0:
        return
    lo = max(start, 0)
    seg = x[lo - start: lo - start + (n - lo)]
    acc[lo:lo + len(seg)] += np.float32(gain) * seg


def propagate_audio(sc: Scenario, cfg: Config | None = None) -> dict:
    """Microphone clip per device (devices without a microphone are omitted)."""
    cfg = resolve(cfg)
    fs = SENSOR_RATES["microphone"]
    n = int(round(sc.durations["audio"] * fs))
    c = cfg["audio.speed_of_sound"]
    sources = _audio_sources(sc, n, fs, cfg)
    utterances = _human_utterances(sc, n, fs, cfg)
    out = {}
    for k, dev in enumerate(sc.devices):
        if "microphone" not in dev.sensors:
            continue
        groups: dict = {}
        contributions = [(p, 0, x) for p, x in sources] + utterances
        for pos, start, x in contributions:
            d, gain, chain = _audio_chain(sc, dev, pos, cfg)
            acc = groups.get(chain)
            if acc is None:
                acc = groups[chain] = np.zeros(n, dtype=np.float32)
            _add_delayed(acc, x, start + int(round(d / c * fs)), gain / d)
        y = np.zeros(n, dtype=np.float32)
        for chain, acc in sorted(groups.items()):
            for fc in chain:
                one_pole_lowpass(acc, fc, fs)
            y += acc
        del groups
        inside = sc.room.contains(dev.position)
        floor = sc.ambient.audio_noise_floor if inside else sc.ambient.corridor_noise_floor
        noise = ambient_noise(event_rng(sc.seed, _STREAMS["audio_noise"], k), n, cfg["audio.noise_color"])
        y += np.float32(_db_to_rms(floor, cfg)) * noise
        del noise
        out[dev.id] = AudioClip(y, fs, meta={"device": dev.id})
    return out


# ---------------------------------------------------------------------------
# Light
# ---------------------------------------------------------------------------

def _bulb_tracks(a: Actuator, n: int, rate: float) -> tuple[np.ndarray, np.ndarray]:
    """Brightness (0-254) and shown linear-RGB share per tick for one bulb."""
    bright = np.zeros(n)
    share = np.full((n, 3), 1.0 / 3.0)
    if a.schedule is None:
        return bright, share
    for start, params in a.schedule.events:
        s0 = int(round(start * rate))
        if s0 >= n:
            break
        b, _ = synth_light_profile(params, rate)
        m = min(len(b), n - s0)
        bright[s0:s0 + m] = b.values[:m]
        share[s0:s0 + m] = _rgb_share(map_color(params.color))
    return bright, share


def _rgb_share(rgb) -> np.ndarray:
    lin = np.asarray(rgb, dtype=float) / 255.0
    lin = np.where(lin <= 0.04045, lin / 12.92, ((lin + 0.055) / 1.055) ** 2.4)
    s = lin.sum()
    return lin / s if s > 0 else np.full(3, 1.0 / 3.0)


def _lamp_track(sc: Scenario, n: int, rate: float, cfg: Config) -> np.ndarray:
    """On/off state of the adversarial light, toggling after random periods."""
    on = np.zeros(n)
    if sc.attack.light_attack == "none":
        return on
    rng = _rng(sc, "lamp")
    state = bool(rng.random() < 0.5)
    t = 0.0
    while t < n / rate:
        dur = rng.uniform(*cfg["light.lamp_period"])
        a, b = int(t * rate), min(n, int((t + dur) * rate))
        on[a:b] = float(state)
        state = not state
        t += dur
    return on


def _daylight(sc: Scenario, n: int, rate: float, cfg: Config) -> np.ndarray:
    if sc.ambient.daylight_profile is not None:
        v = np.asarray(sc.ambient.daylight_profile.values, dtype=float)
        if len(v) < n:
            raise ValueError("daylight profile is shorter than the light duration")
        return v[:n]
    rng = _rng(sc, "daylight")
    base = cfg["light.daylight_lux"]
    drift = _smooth_drift(rng, n, rate, cfg["light.daylight_knot"], cfg["light.daylight_drift_lux"])
    steps = _step_events(rng, n, rate, cfg["light.daylight_step_rate"],
                         cfg["light.daylight_step_lux"], cfg["light.daylight_step_duration"])
    return np.clip(base + drift + steps, 0.0, None)


def _corridor_light(sc: Scenario, n: int, rate: float, cfg: Config) -> np.ndarray:
    rng = _rng(sc, "corridor_light")
    drift = _smooth_drift(rng, n, rate, cfg["light.daylight_knot"], cfg["light.corridor_drift_lux"])
    return np.clip(cfg["light.corridor_lux"] + drift, 0.0, None)


def _shade_factor(sc: Scenario, dev_index: int, n: int, rate: float, cfg: Config) -> np.ndarray:
    """Multiplicative shadowing of a device by people moving around it."""
    f = np.ones(n)
    people = _human_positions(sc, cfg)
    if not people or not sc.room.contains(sc.devices[dev_index].position):
        return f
    rng = _rng(sc, "shade", dev_index)
    per_second = cfg["human.shade_rate"] * len(people)
    t = rng.exponential(1.0 / per_second)
    while t < n / rate:
        dur = rng.uniform(*cfg["human.shade_duration"])
        a, b = int(t * rate), min(n, int((t + dur) * rate))
        f[a:b] *= 1.0 - rng.uniform(*cfg["human.shade_depth"])
        t += dur + rng.exponential(1.0 / per_second)
    return f


def _sense(rng: np.random.Generator, x: np.ndarray, noise: float, quantum: float) -> np.ndarray:
    y = x + rng.normal(0.0, noise, x.shape) if noise > 0 else x.copy()
    if quantum > 0:
        y = np.round(y / quantum) * quantum
    return np.clip(y, 0.0, None)


def propagate_light(sc: Scenario, cfg: Config | None = None) -> dict:
    """``device_id -> (illuminance TimeSeries, RGB TimeSeries)`` at 5 Hz."""
    cfg = resolve(cfg)
    rate = SENSOR_RATES["light"]
    n = int(round(sc.durations["light"] * rate))
    day = _daylight(sc, n, rate, cfg)
    corridor = _corridor_light(sc, n, rate, cfg)
    bulbs = [(a, *_bulb_tracks(a, n, rate)) for a in sc.actuators if a.modality == "light"]
    lamp_on = _lamp_track(sc, n, rate, cfg)
    lamp_int = (cfg["light.flashlight_intensity"] if sc.attack.light_attack == "flashlight"
                else cfg["light.lamp_intensity"] * sc.attack.lamp_brightness / 254.0)
    lamp_share = _rgb_share(map_color(sc.attack.lamp_color)) if sc.attack.light_attack == "colored_lamp" \
        else np.full(3, 1.0 / 3.0)
    lamp_pos = sc.attack_position()
    leak = cfg["light.door_leak"] if sc.door_state == "half_open" else 0.0
    white = np.full(3, 1.0 / 3.0)
    imax = cfg["light.bulb_max_intensity"]
    diffuse = cfg["light.diffuse_gain"]
    out = {}
    for k, dev in enumerate(sc.devices):
        want = [s for s in ("light", "rgb") if s in dev.sensors]
        if not want:
            continue
        pos = np.asarray(dev.position, dtype=float)
        inside = sc.room.contains(pos)
        # per-tick illuminance of each source class and its colour share
        parts = []
        room_gain = max(0.2, 1.0 - cfg["light.window_falloff"] * pos[0]) if inside else leak
        parts.append((day * room_gain, white))
        parts.append((corridor * (leak if inside else 1.0), white))
        for a, bright, share in bulbs:
            d, crosses = _path(sc, a.position, pos)
            if crosses:
                g = leak
            else:
                g = 1.0 if _line_of_sight(sc, a.position, pos) else 0.0
            # direct beam (line of sight) plus light bounced off walls and ceiling,
            # which reaches every point of the room about equally
            lux = g * imax / max(d, 0.25) ** 2 + (leak if crosses else 1.0) * diffuse * imax
            if lux > 0:
                parts.append((lux * (bright / 254.0), share))
        if sc.attack.light_attack != "none":
            if dev.id == sc.adversary_id:
                lamp_lux = cfg["light.lamp_self_gain"] * lamp_int
            else:
                d, _ = _path(sc, lamp_pos, pos)
                lamp_lux = leak * lamp_int / max(d, 0.25) ** 2
            parts.append((lamp_lux * lamp_on, lamp_share))
        shade = _shade_factor(sc, k, n, rate, cfg)
        lux = shade * sum(p for p, _ in parts)
        rgb = shade[:, None] * sum(p[:, None] * np.broadcast_to(s, (n, 3)) for p, s in parts)
        rng = event_rng(sc.seed, _STREAMS["light_noise"], k)
        lux = _sense(rng, lux, cfg["sensor.light_noise"], cfg["sensor.light_quantum"])
        rgb = _sense(rng, rgb, cfg["sensor.light_noise"], cfg["sensor.light_quantum"])
        out[dev.id] = (TimeSeries.from_values(lux, rate, "light"),
                       TimeSeries.from_values(rgb, rate, "rgb"))
    return out


# ---------------------------------------------------------------------------
# CO2
# ---------------------------------------------------------------------------

def co2_system(volume: float, decay: float, exchange: float, corridor_factor: float,
               dt: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """Zero-order-hold discretisation of the two-zone excess-concentration model.

    States are (room, corridor) excess in ppm; the single input is a room
    source strength in ppm*m^3/s.
    """
    vc = volume * corridor_factor
    a = np.array([[-decay - exchange, exchange],
                  [exchange * volume / vc, -decay - exchange * volume / vc]])
    b = np.array([[1.0 / volume], [0.0]])
    m = np.zeros((3, 3))
    m[:2, :2], m[:2, 2:] = a, b
    e = expm(m * dt)
    return e[:2, :2], e[:2, 2:]


def _emission_track(sc: Scenario, n: int, rate: float, cfg: Config) -> tuple[np.ndarray, Optional[np.ndarray]]:
    e = np.zeros(n)
    pos = None
    for a in sc.actuators:
        if a.modality != "co2":
            continue
        pos = np.asarray(a.position, dtype=float) if pos is None else pos
        if a.schedule is None:
            continue
        for start, params in a.schedule.events:
            s0 = int(round(start * rate))
            if s0 >= n:
                break
            prof = synth_co2_emission(params, cfg, rate).values
            m = min(len(prof), n - s0)
            e[s0:s0 + m] += prof[:m]
    return e, pos


def propagate_co2(sc: Scenario, cfg: Config | None = None) -> dict:
    """CO2 concentration (ppm) per device at 1 Hz."""
    cfg = resolve(cfg)
    rate = SENSOR_RATES["co2"]
    n = int(round(sc.durations["co2"] * rate))
    kx = cfg["co2.exchange"] if sc.door_state == "half_open" else 0.0
    if sc.attack.co2_attack == "fan":
        kx *= sc.attack.fan_factor
    phi, gamma = co2_system(sc.room.volume, cfg["co2.decay"], kx, cfg["co2.corridor_volume_factor"], 1.0 / rate)
    emission, hum_pos = _emission_track(sc, n, rate, cfg)
    people = _human_positions(sc, cfg)
    exhale = np.full(n, len(people) * cfg["co2.person_rate"])
    # superposition: humidifier-driven states get a per-sensor transport lag
    x_hum = lti_run(phi, gamma, emission[:, None], np.zeros(2))
    x_other = lti_run(phi, gamma, exhale[:, None], np.zeros(2))
    draft = -np.abs(_step_events(_rng(sc, "draft"), n, rate, cfg["co2.draft_rate"],
                                 cfg["co2.draft_depth"], cfg["co2.draft_duration"]))
    draft = _soften(draft, int(30 * rate))
    corridor = cfg["co2.corridor_ambient"] + _smooth_drift(
        _rng(sc, "corridor_co2"), n, rate, cfg["co2.corridor_knot"], cfg["co2.corridor_drift"])
    offsets = _rng(sc, "co2_offset").normal(0.0, cfg["sensor.co2_offset_sd"], len(sc.devices))
    lag_per_m = cfg["co2.lag_per_meter"]
    out = {}
    for k, dev in enumerate(sc.devices):
        if "co2" not in dev.sensors:
            continue
        inside = sc.room.contains(dev.position)
        zone = 0 if inside else 1
        hum = np.zeros(n)
        if hum_pos is not None:
            d, _ = _path(sc, hum_pos, dev.position)
            lag = int(round(d * lag_per_m * rate))
            if lag < n:
                hum[lag:] = x_hum[:n - lag, zone]
        base = sc.ambient.co2_ambient + draft if inside else corridor
        c = base + offsets[k] + hum + x_other[:, zone]
        rng = event_rng(sc.seed, _STREAMS["co2_noise"], k)
        c = _sense(rng, c, cfg["sensor.co2_noise"], cfg["sensor.co2_quantum"])
        out[dev.id] = TimeSeries.from_values(c, rate, "co2")
    return out


def _soften(x: np.ndarray, width: int) -> np.ndarray:
    """Moving-average the edges of rectangular excursions."""
    if width <= 1:
        return x
    k = np.ones(width) / width
    return np.convolve(x, k, mode="same")


# ---------------------------------------------------------------------------
# Orchestration
# ---------------------------------------------------------------------------

def run_setting(sc: Scenario, cfg: Config | None = None) -> RecordingBundle:
    """Simulate every requested modality; returns recordings tagged with labels."""
    cfg = resolve(cfg)
    validate_scenario(sc)
    labels = sc.labels()
    bundle = RecordingBundle(scenario=sc.to_dict())
    if "audio" in sc.modalities:
        for dev_id, clip in propagate_audio(sc, cfg).items():
            bundle.recordings.append(Recording(dev_id, "audio", clip, labels[dev_id]))
    if "light" in sc.modalities:
        for dev_id, (lux, rgb) in propagate_light(sc, cfg).items():
            dev = sc.device(dev_id)
            if "light" in dev.sensors:
                bundle.recordings.append(Recording(dev_id, "light", lux, labels[dev_id]))
            if "rgb" in dev.sensors:
                bundle.recordings.append(Recording(dev_id, "rgb", rgb, labels[dev_id]))
    if "co2" in sc.modalities:
        for dev_id, series in propagate_co2(sc, cfg).items():
            bundle.recordings.append(Recording(dev_id, "co2", series, labels[dev_id]))
    return bundle
