"""On-disk formats: 16-bit PCM WAV, timestamped CSV and a JSON manifest.

A bundle directory holds one file per (device, sensor) plus ``manifest.json``::

    manifest.json
    desk1_audio.wav          PCM16 mono
    desk1_light.csv          timestamp,value
    desk1_rgb.csv            timestamp,r,g,b
    desk1_co2.csv            timestamp,value

The same layout is accepted from external datasets by :func:`import_dataset`.
"""

from __future__ import annotations

import csv
import json
import wave
from pathlib import Path

import numpy as np

from .envsim import Recording, RecordingBundle
from .series import AudioClip, TimeSeries

MANIFEST = "manifest.json"
FORMAT = "zipsim-bundle/1"
SCALAR_MODALITIES = ("light", "rgb", "co2")


class SchemaError(ValueError):
    """A dataset file does not follow the bundle schema."""


# ---------------------------------------------------------------------------
# WAV
# ---------------------------------------------------------------------------

def write_wav(path: str | Path, clip: AudioClip) -> None:
    """16-bit PCM mono; samples are already within [-1, 1]."""
    pcm = np.round(np.clip(clip.samples, -1.0, 1.0) * 32767.0).astype("<i2")
    with wave.open(str(path), "wb") as w:
        w.setnchannels(1)
        w.setsampwidth(2)
        w.setframerate(int(clip.sample_rate))
        w.writeframes(pcm.tobytes())


def read_wav(path: str | Path) -> AudioClip:
    path = Path(path)
    try:
        with wave.open(str(path), "rb") as w:
            if w.getsampwidth() != 2:
                raise SchemaError(f"{path}: expected 16-bit PCM, got {8 * w.getsampwidth()}-bit")
            if w.getnchannels() != 1:
                raise SchemaError(f"{path}: expected mono, got {w.getnchannels()} channels")
            rate = w.getframerate()
            raw = w.readframes(w.getnframes())
    except wave.Error as exc:
        raise SchemaError(f"{path}: not a readable WAV file ({exc})") from None
    x = np.frombuffer(raw, dtype="<i2").astype(np.float32) / np.float32(32767.0)
    return AudioClip(x, rate)


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------

def write_series_csv(path: str | Path, series: TimeSeries) -> None:
    header = ["timestamp", "r", "g", "b"] if series.is_rgb else ["timestamp", "value"]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        vals = series.values if series.is_rgb else series.values[:, None]
        for t, row in zip(series.timestamps, vals):
            w.writerow([repr(float(t))] + [repr(float(v)) for v in row])


def read_series_csv(path: str | Path, modality: str, sample_rate: float | None = None) -> TimeSeries:
    """Parse a sensor CSV, naming the file and line of the first schema violation."""
    path = Path(path)
    want = ["timestamp", "r", "g", "b"] if modality == "rgb" else ["timestamp", "value"]
    with open(path, newline="", encoding="utf-8") as fh:
        rows = csv.reader(fh)
        header = next(rows, None)
        if header is None:
            raise SchemaError(f"{path}: empty file")
        if [h.strip().lower() for h in header] != want:
            raise SchemaError(f"{path}: line 1: header {header} should be {want}")
        ts, vals = [], []
        for lineno, row in enumerate(rows, start=2):
            if not row:
                continue
            if len(row) != len(want):
                raise SchemaError(f"{path}: line {lineno}: expected {len(want)} fields, got {len(row)}")
            try:
                nums = [float(x) for x in row]
            except ValueError:
                raise SchemaError(f"{path}: line {lineno}: non-numeric field in {row}") from None
            if ts and nums[0] <= ts[-1]:
                raise SchemaError(f"{path}: line {lineno}: timestamp {nums[0]} is not after "
                                  f"the previous one ({ts[-1]})")
            ts.append(nums[0])
            vals.append(nums[1:] if modality == "rgb" else nums[1])
    if len(ts) < 2:
        raise SchemaError(f"{path}: need at least two samples")
    if sample_rate is None:
        sample_rate = 1.0 / float(np.median(np.diff(ts)))
    try:
        return TimeSeries(np.array(ts), np.array(vals), modality, float(sample_rate))
    except ValueError as exc:
        raise SchemaError(f"{path}: {exc}") from None


# ---------------------------------------------------------------------------
# Bundles
# ---------------------------------------------------------------------------

def _filename(device_id: str, modality: str) -> str:
    return f"{device_id}_{modality}.{'wav' if modality == 'audio' else 'csv'}"


def save_bundle(bundle: RecordingBundle, directory: str | Path) -> Path:
    """Write every recording and the manifest; returns the manifest path."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    entries = []
    for rec in bundle.recordings:
        name = _filename(rec.device_id, rec.modality)
        if rec.modality == "audio":
            write_wav(directory / name, rec.data)
        else:
            write_series_csv(directory / name, rec.data)
        entries.append({"device_id": rec.device_id, "modality": rec.modality, "label": rec.label,
                        "file": name, "sample_rate": rec.data.sample_rate})
    manifest = {"format": FORMAT, "scenario": bundle.scenario, "recordings": entries}
    path = directory / MANIFEST
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def import_dataset(path: str | Path) -> RecordingBundle:
    """Load a bundle directory (simulated or external) into memory.

    Raises:
        SchemaError: missing manifest, missing files or malformed contents.
    """
    # TODO: accept datasets that keep WAV timestamps in sidecar text files
    # (one per recording) once such a release exists to test against.
    path = Path(path)
    mpath = path / MANIFEST
    if not mpath.is_file():
        raise SchemaError(f"{path}: no {MANIFEST} found")
    try:
        manifest = json.loads(mpath.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{mpath}: line {exc.lineno}: {exc.msg}") from None
    entries = manifest.get("recordings")
    if not isinstance(entries, list) or not entries:
        raise SchemaError(f"{mpath}: 'recordings' must be a non-empty list")
    bundle = RecordingBundle(scenario=manifest.get("scenario", {}))
    for i, e in enumerate(entries):
        missing = [k for k in ("device_id", "modality", "label", "file") if k not in e]
        if missing:
            raise SchemaError(f"{mpath}: recordings[{i}] lacks {missing}")
        if e["label"] not in ("colocated", "adversarial"):
            raise SchemaError(f"{mpath}: recordings[{i}]: label must be colocated or adversarial")
        f = path / e["file"]
        if not f.is_file():
            raise SchemaError(f"{mpath}: recordings[{i}] points to missing file {e['file']}")
        if e["modality"] == "audio":
            data = read_wav(f)
        elif e["modality"] in SCALAR_MODALITIES:
            data = read_series_csv(f, e["modality"], e.get("sample_rate"))
        else:
            raise SchemaError(f"{mpath}: recordings[{i}]: unknown modality {e['modality']!r}")
        bundle.recordings.append(Recording(e["device_id"], e["modality"], data, e["label"]))
    return bundle


def write_json(path: str | Path, obj) -> None:
    """Stable, UTF-8 JSON (sorted keys, trailing newline) so equal content means equal bytes."""
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n",
                          encoding="utf-8")
