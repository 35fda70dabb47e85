"""Home and office layouts and the four experimental settings.

Coordinates are in metres. Both rooms have their door in the wall at
``x = Lx``; the adversarial device waits in the corridor right outside it.
"""

from __future__ import annotations

import json
import zlib
from pathlib import Path

from .config import Config, resolve
from .envsim import (
    SETTINGS,
    Actuator,
    AmbientSpec,
    AttackSpec,
    DeviceSpec,
    Obstacle,
    Room,
    Scenario,
)
from .stimgen import build_schedule

PRESETS = ("home", "office")


def _layout(name: str) -> dict:
    if name == "office":
        room = Room(size=(4.5, 3.6, 2.5), door_y=1.8, door_z=1.0)
        devices = [
            DeviceSpec("desk1", (1.0, 0.8, 0.8)),
            DeviceSpec("desk2", (3.2, 0.8, 0.8)),
            DeviceSpec("desk3", (1.0, 2.8, 0.8)),
            DeviceSpec("desk4", (3.2, 2.8, 0.8)),
        ]
        actuators = [
            Actuator("bulb1", "light", (1.1, 0.9, 2.4)),
            Actuator("bulb2", "light", (3.4, 0.9, 2.4)),
            Actuator("bulb3", "light", (1.1, 2.7, 2.4)),
            Actuator("bulb4", "light", (3.4, 2.7, 2.4)),
            Actuator("speaker", "audio", (2.25, 0.3, 1.0)),
            Actuator("humidifier", "co2", (0.2, 1.8, 0.6)),
        ]
        obstacles = [Obstacle((2.0, 3.3, 0.0), (2.6, 3.6, 2.0), "bookshelf")]
    elif name == "home":
        room = Room(size=(4.0, 4.0, 2.5), door_y=3.2, door_z=1.0)
        devices = [
            DeviceSpec("tv", (0.5, 2.0, 1.0)),
            DeviceSpec("fridge", (3.5, 0.5, 1.2)),
            DeviceSpec("assistant", (2.0, 3.6, 0.9)),
            DeviceSpec("vacuum_dock", (0.6, 0.4, 0.3), obstructed=True),
        ]
        actuators = [
            Actuator("robot_speaker", "audio", (2.0, 2.0, 0.1)),
            Actuator("bulb", "light", (2.0, 2.0, 2.4)),
            Actuator("humidifier", "co2", (1.0, 3.5, 0.8)),
        ]
        obstacles = [Obstacle((0.0, 0.8, 0.0), (2.0, 2.2, 0.6), "bed")]
    else:
        raise ValueError(f"unknown preset {name!r}; expected one of {PRESETS}")
    adv_pos = (room.size[0] + 0.6, room.door_y + 0.3, 1.0)
    devices.append(DeviceSpec("adversary", adv_pos))
    return {"room": room, "devices": devices, "actuators": actuators, "obstacles": obstacles}


def actuator_stream(actuator_id: str) -> int:
    """Stable RNG stream id derived from the actuator's name, not its position in a list."""
    return zlib.crc32(actuator_id.encode("utf-8"))


def default_attack(setting: str, cfg: Config | None = None) -> AttackSpec:
    cfg = resolve(cfg)
    if setting.startswith("PA"):
        return AttackSpec()
    return AttackSpec(audio_attack=cfg["attack.audio"], tone_hz=cfg["attack.tone_hz"],
                      staircase_dwell=cfg["attack.staircase_dwell"],
                      light_attack=cfg["attack.light"], co2_attack=cfg["attack.co2"],
                      fan_factor=cfg["attack.fan_factor"], attacker_offset=cfg["attack.offset"])


def _durations(cfg: Config) -> dict:
    return {"audio": float(cfg["run.audio_duration"]),
            "light": float(cfg["run.light_duration"]),
            "co2": float(cfg["run.co2_duration"])}


def assemble(name: str, layout: dict, setting: str, seed: int, cfg: Config | None = None,
             humans: str = "auto", attack: AttackSpec | None = None,
             modalities=("audio", "light", "co2"), silent: bool = False) -> Scenario:
    """Turn a layout into a runnable scenario for one setting and seed.

    Args:
        humans: ``"auto"`` occupies only the office PA run (two people; every
            other run is empty); ``"none"`` or ``"office_two_persons"`` force it.
        silent: drop the ambient audio floor to a near-silent level.
    """
    cfg = resolve(cfg)
    if setting not in SETTINGS:
        raise ValueError(f"unknown setting {setting!r}; expected one of {SETTINGS}")
    durations = _durations(cfg)
    inject = setting.endswith("+H")
    actuators = []
    for a in layout["actuators"]:
        sched = None
        if inject and a.modality in modalities:
            sched = build_schedule(a.modality, durations[a.modality], seed,
                                   actuator_stream(a.id), cfg)
        actuators.append(Actuator(a.id, a.modality, tuple(a.position), sched))
    if humans == "auto":
        humans = "office_two_persons" if (name == "office" and setting == "PA") else "none"
    floor = cfg["audio.noise_floor_db"]
    corridor_floor = cfg["audio.corridor_noise_floor_db"]
    if silent:
        floor = corridor_floor = cfg["audio.silent_floor_db"]
    ambient = AmbientSpec(audio_noise_floor=floor, corridor_noise_floor=corridor_floor,
                          co2_ambient=cfg["co2.ambient"], human_activity=humans)
    return Scenario(
        name=name,
        room=layout["room"],
        devices=list(layout["devices"]),
        actuators=actuators,
        adversary_id="adversary" if "adversary_id" not in layout else layout["adversary_id"],
        setting=setting,
        door_state="closed" if setting.startswith("PA") else "half_open",
        attack=attack if attack is not None else default_attack(setting, cfg),
        ambient=ambient,
        durations=durations,
        seed=int(seed),
        obstacles=list(layout["obstacles"]),
        modalities=tuple(modalities),
    )


def make_scenario(preset: str, setting: str, seed: int, cfg: Config | None = None, **kw) -> Scenario:
    """Scenario for a named preset (``home`` or ``office``)."""
    return assemble(preset, _layout(preset), setting, seed, cfg, **kw)


def load_layout(path: str | Path) -> tuple[str, dict]:
    """Read a custom layout from JSON.

    Expected keys: ``room`` (size, door_y, door_z), ``devices`` (id, position,
    optional obstructed/sensors), ``actuators`` (id, modality, position),
    optional ``obstacles`` (lo, hi) and ``adversary_id``.
    """
    path = Path(path)
    try:
        d = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise FileNotFoundError(f"scenario file {path} does not exist") from None
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path}: line {exc.lineno}: {exc.msg}") from None
    for key in ("room", "devices", "actuators"):
        if key not in d:
            raise ValueError(f"{path}: missing key {key!r}")
    layout = {
        "room": Room(tuple(d["room"]["size"]), d["room"].get("door_y", d["room"]["size"][1] / 2),
                     d["room"].get("door_z", 1.0)),
        "devices": [DeviceSpec(x["id"], tuple(x["position"]), bool(x.get("obstructed", False)),
                               tuple(x.get("sensors", ("microphone", "light", "rgb", "co2"))))
                    for x in d["devices"]],
        "actuators": [Actuator(x["id"], x["modality"], tuple(x["position"])) for x in d["actuators"]],
        "obstacles": [Obstacle(tuple(o["lo"]), tuple(o["hi"]), o.get("name", ""))
                      for o in d.get("obstacles", [])],
        "adversary_id": d.get("adversary_id", "adversary"),
    }
    return d.get("name", path.stem), layout


def scenario_for(preset_or_path: str, setting: str, seed: int, cfg: Config | None = None, **kw) -> Scenario:
    if preset_or_path in PRESETS:
        return make_scenario(preset_or_path, setting, seed, cfg, **kw)
    if not Path(preset_or_path).exists():
        raise ValueError(f"unknown preset {preset_or_path!r}: not one of {PRESETS} and not a file")
    name, layout = load_layout(preset_or_path)
    return assemble(name, layout, setting, seed, cfg, **kw)
