"""Flat, dotted-key configuration for every tunable constant.

Every module reads its constants from a plain ``dict`` built by
:func:`default_config`. Overrides are ``key=value`` strings; unknown keys fail
fast so a typo never silently falls back to a default.
"""

from __future__ import annotations

from typing import Any, Iterable, Mapping

Config = dict

_DEFAULTS: dict[str, Any] = {
    # --- stimulus parameter ranges -------------------------------------
    "stim.audio.interval": (60.0, 180.0),
    "stim.audio.duration": (4.5, 75.0),
    "stim.audio.loudness": (0.1, 1.0),
    "stim.audio.spectrum": (50.0, 22100.0),
    "stim.audio.words": (2, 30),
    "stim.audio.burst_duration": (0.5, 5.0),
    "stim.audio.burst_loudness": (0.1, 1.0),
    "stim.audio.burst_fade": 0.01,
    "stim.light.interval": (30.0, 90.0),
    "stim.light.duration": (5.0, 60.0),
    "stim.light.brightness": (1, 254),
    "stim.light.blink_hz": (0.2, 1.0),
    "stim.light.blink_probability": 0.5,
    "stim.co2.interval": (300.0, 600.0),
    "stim.co2.duration": (600.0, 900.0),
    "stim.co2.high_probability": 0.5,
    "stim.co2.rate_low": 30.0,
    "stim.co2.rate_high": 60.0,
    # --- speech proxy ---------------------------------------------------
    "speech.wpm": 120.0,
    "speech.word_duration": 0.0,  # 0 -> 60 / wpm
    "speech.formants": (300.0, 3000.0),
    "speech.n_formants": 3,
    "speech.envelope": 0.05,
    "speech.gap": 0.1,
    # --- sensors ----------------------------------------------------------
    "sensor.audio_rate": 44100,
    "sensor.light_rate": 5.0,
    "sensor.co2_rate": 1.0,
    "sensor.light_noise": 0.3,
    "sensor.light_quantum": 1.0,
    "sensor.co2_noise": 0.3,
    "sensor.co2_quantum": 1.0,
    "sensor.co2_offset_sd": 15.0,
    # --- acoustics ----------------------------------------------------------
    "audio.speed_of_sound": 343.0,
    "audio.min_distance": 0.25,
    "audio.speaker_level_db": 90.0,
    "audio.obstructed_cutoff": 4000.0,
    "audio.door_closed_loss_db": 25.0,
    "audio.door_closed_cutoff": 2000.0,
    "audio.door_half_open_loss_db": 8.0,
    "audio.noise_floor_db": 42.0,
    "audio.corridor_noise_floor_db": 60.0,
    "audio.silent_floor_db": 20.0,
    "audio.noise_color": "pink",
    "audio.external_noise_db": 0.0,  # <= 0 disables the shared external source
    "audio.chunk_seconds": 30.0,
    "audio.db_offset": 120.0,
    # --- light ----------------------------------------------------------------
    "light.bulb_max_intensity": 64.0,
    "light.diffuse_gain": 0.3,
    "light.daylight_lux": 120.0,
    "light.daylight_drift_lux": 0.4,
    "light.daylight_step_rate": 1.0 / 1800.0,
    "light.daylight_step_lux": (10.0, 40.0),
    "light.daylight_step_duration": (60.0, 600.0),
    "light.corridor_lux": 60.0,
    "light.door_leak": 0.05,
    "light.lamp_intensity": 4000.0,
    "light.lamp_self_gain": 0.02,
    "light.lamp_period": (60.0, 300.0),
    "light.flashlight_intensity": 1500.0,
    "light.daylight_knot": 300.0,
    "light.corridor_drift_lux": 0.4,
    "light.window_falloff": 0.08,
    # --- CO2 ------------------------------------------------------------------
    "co2.ambient": 420.0,
    "co2.corridor_ambient": 455.0,
    "co2.decay": 1.0 / 300.0,
    "co2.exchange": 0.002,
    "co2.lag_per_meter": 60.0,
    "co2.draft_rate": 1.0 / 3600.0,
    "co2.draft_depth": (10.0, 30.0),
    "co2.draft_duration": (60.0, 240.0),
    "co2.corridor_drift": 12.0,
    "co2.corridor_knot": 600.0,
    "co2.corridor_volume_factor": 4.0,
    "co2.person_rate": 5.0,
    # --- human activity ---------------------------------------------------------
    "human.persons": 2,
    "human.utterances_per_min": 6.0,
    "human.speech_level_db": 65.0,
    "human.seat_height": 1.1,
    "human.shade_rate": 1.0 / 1500.0,
    "human.shade_depth": (0.1, 0.4),
    "human.shade_duration": (10.0, 60.0),
    # --- attacks -----------------------------------------------------------------
    "attack.audio": "constant_sine",
    "attack.light": "colored_lamp",
    "attack.co2": "fan",
    "attack.offset": 0.0,
    "attack.tone_hz": 150.0,
    "attack.tone_level_db": 72.0,
    "attack.staircase_dwell": 2.0,
    "attack.fan_factor": 5.0,
    # --- analysis ---------------------------------------------------------------
    "analysis.max_lag": 0.15,
    "analysis.band_order": 4,
    "analysis.band_floor": 1e-3,
    "analysis.envelope_oversample": 1,
    "analysis.audio_snippets": (60.0,),
    "analysis.light_snippets": (),
    "analysis.co2_snippets": (),
    "analysis.bins.audio": 19,
    "analysis.bins.light": 20,
    "analysis.bins.rgb": 100,
    "analysis.bins.co2": 20,
    "analysis.sync_audio": False,
    "analysis.dtw": True,
    # --- schemes -----------------------------------------------------------------
    "zip.window": 30.0,
    "zip.t_abs": 8.0,
    "zip.t_rel": 0.01,
    "zip.key_bits": 20,
    "zip.key_step": 4,
    "zip.balance": (8, 12),
    "zia.snippet": 60.0,
    "zia.power_gate_db": 40.0,
    # --- durations (seconds) -------------------------------------------------------
    "run.audio_duration": 1800.0,
    "run.light_duration": 1800.0,
    "run.co2_duration": 3600.0,
}


def default_config() -> Config:
    """Return a fresh, mutable copy of the default constants."""
    return dict(_DEFAULTS)


def _parse(default: Any, raw: str) -> Any:
    raw = raw.strip()
    if isinstance(default, bool):
        if raw.lower() in ("1", "true", "yes", "on"):
            return True
        if raw.lower() in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"expected a boolean, got {raw!r}")
    if isinstance(default, int):
        return int(raw)
    if isinstance(default, float):
        return float(raw)
    if isinstance(default, tuple):
        parts = [p for p in raw.replace(";", ",").split(",") if p.strip()]
        kind = type(default[0]) if default else float
        return tuple(kind(float(p)) if kind is int else kind(p) for p in parts)
    return raw


def apply_overrides(cfg: Config, overrides: Iterable[str] | Mapping[str, Any]) -> Config:
    """Apply ``key=value`` overrides in place and return ``cfg``.

    Raises:
        KeyError: an override names a constant that does not exist.
        ValueError: the value cannot be parsed as the constant's type.
    """
    items = overrides.items() if isinstance(overrides, Mapping) else (
        _split(o) for o in overrides)
    for key, value in items:
        if key not in _DEFAULTS:
            close = [k for k in _DEFAULTS if k.split(".")[-1] == key.split(".")[-1]]
            hint = f" (did you mean {close[0]!r}?)" if close else ""
            raise KeyError(f"unknown config key {key!r}{hint}")
        if isinstance(value, str):
            value = _parse(_DEFAULTS[key], value)
        cfg[key] = value
    return cfg


def _split(item: str) -> tuple[str, str]:
    if "=" not in item:
        raise ValueError(f"override must look like key=value, got {item!r}")
    key, value = item.split("=", 1)
    return key.strip(), value


def resolve(cfg: Config | None) -> Config:
    return default_config() if cfg is None else cfg
