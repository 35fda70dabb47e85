"""Experiment orchestration: simulate seeds, analyse them, run the schemes, report.

A run is described by an :class:`ExperimentConfig`. Each seed is processed
end to end by :func:`process_seed` (optionally in a worker process); the
results are then reduced into a :class:`RunSummary` in seed order, so the
summary does not depend on how many workers were used.
"""

from __future__ import annotations

import csv
import itertools
import json
import logging
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .config import Config, apply_overrides, default_config
from .envsim import SETTINGS, RecordingBundle, run_setting, validate_scenario
from .io import import_dataset, save_bundle, write_json
from .presets import PRESETS, scenario_for
from .schemes import (
    ZipThresholds,
    balanced_keys,
    compute_eer,
    fingerprint_similarity,
    key_windows,
    min_entropy_mcv,
    snippet_power_db,
    zip_fingerprint,
)
from .series import AudioClip
from .sigproc import (
    BandSpectrum,
    dtw_distance,
    entropy,
    preprocess_scalar,
    similarity_from_spectra,
    snippet_split,
    sync_audio,
)

log = logging.getLogger(__name__)

ANALYSES = ("similarity", "entropy", "zip", "zia")
MODALITIES = ("audio", "light", "rgb", "co2")
_SIM_MODALITY = {"audio": "audio", "light": "light", "rgb": "light", "co2": "co2"}


@dataclass
class ExperimentConfig:
    scenario: str = "office"  # preset name or path to a layout JSON
    setting: str = "PA+H"
    modalities: tuple = MODALITIES
    seeds: tuple = (0, 1, 2)
    out: Optional[str] = None
    overrides: tuple = ()  # "key=value" strings
    snippets: Optional[dict] = None  # modality -> tuple of seconds; None = config defaults
    analyses: tuple = ANALYSES
    humans: str = "auto"
    silent: bool = False
    save_recordings: bool = True
    workers: int = 1

    def build_config(self) -> Config:
        """Default constants with the overrides applied (unknown keys raise)."""
        return apply_overrides(default_config(), list(self.overrides))

    def validate(self) -> None:
        if self.scenario not in PRESETS and not Path(self.scenario).is_file():
            raise ValueError(f"unknown preset {self.scenario!r}; expected one of {PRESETS} or a file")
        if self.setting not in SETTINGS:
            raise ValueError(f"unknown setting {self.setting!r}; expected one of {SETTINGS}")
        bad = [m for m in self.modalities if m not in MODALITIES]
        if bad:
            raise ValueError(f"unknown modalities {bad}")
        bad = [a for a in self.analyses if a not in ANALYSES]
        if bad:
            raise ValueError(f"unknown analyses {bad}")
        if not self.seeds:
            raise ValueError("need at least one seed")
        self.build_config()

    def snippet_lengths(self, cfg: Config) -> dict:
        if self.snippets is not None:
            return {m: tuple(self.snippets.get(m, ())) for m in self.modalities}
        key = {"audio": "analysis.audio_snippets", "light": "analysis.light_snippets",
               "rgb": "analysis.light_snippets", "co2": "analysis.co2_snippets"}
        return {m: tuple(cfg[key[m]]) for m in self.modalities}

    def sim_modalities(self) -> tuple:
        return tuple(dict.fromkeys(_SIM_MODALITY[m] for m in self.modalities))

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario, "setting": self.setting,
            "modalities": list(self.modalities), "seeds": [int(s) for s in self.seeds],
            "overrides": list(self.overrides),
            "snippets": None if self.snippets is None else {k: list(v) for k, v in self.snippets.items()},
            "analyses": list(self.analyses), "humans": self.humans, "silent": self.silent,
        }


def make_scenario_for(config: ExperimentConfig, seed: int, cfg: Config):
    return scenario_for(config.scenario, config.setting, seed, cfg, humans=config.humans,
                        modalities=config.sim_modalities(), silent=config.silent)


# ---------------------------------------------------------------------------
# Per-seed analysis
# ---------------------------------------------------------------------------

def _pairs(bundle: RecordingBundle, modality: str):
    col = sorted(bundle.colocated(modality))
    adv = sorted(bundle.adversarial(modality))
    for a, b in itertools.combinations(col, 2):
        yield a, b, "colocated"
    for a in col:
        for b in adv:
            yield a, b, "noncolocated"


def _synced_audio(bundle: RecordingBundle, cfg: Config) -> dict:
    """Audio per device, aligned to the first colocated device when enabled."""
    devices = bundle.devices("audio")
    clips = {d: bundle.get(d, "audio") for d in devices}
    if not cfg["analysis.sync_audio"] or len(devices) < 2:
        return clips
    ref_id = sorted(bundle.colocated("audio"))[0]
    ref = clips[ref_id]
    n = len(ref)
    out = {ref_id: ref}
    probe = min(n, int(10 * ref.sample_rate))
    for d in devices:
        if d == ref_id:
            continue
        lag = sync_audio(ref.slice(0, probe), clips[d].slice(0, probe),
                         max_lag=cfg["analysis.max_lag"]).lag
        x = np.zeros(n, dtype=np.float32)
        src = clips[d].samples
        if lag >= 0:
            x[:n - lag] = src[lag:n]
        else:
            x[-lag:] = src[:n + lag]
        out[d] = AudioClip(x, ref.sample_rate)
    return out


def analyze_bundle(bundle: RecordingBundle, cfg: Config, snippets: dict,
                   analyses: Sequence[str] = ANALYSES, seed: int = 0) -> dict:
    """Similarity pairs, entropies and scheme inputs for one simulated (or imported) bundle."""
    result = {"seed": seed, "pairs": [], "entropy": [], "zip": None, "zia": None}
    present = bundle.modalities()
    audio = _synced_audio(bundle, cfg) if "audio" in present else {}

    if "similarity" in analyses:
        for modality, lengths in snippets.items():
            if modality not in present:
                continue
            for length in (lengths or (None,)):
                result["pairs"].extend(_similarity_pairs(bundle, audio, modality, length, cfg, seed))

    if "entropy" in analyses:
        for modality in snippets:
            if modality not in present:
                continue
            bins = cfg[f"analysis.bins.{modality}"]
            for d in sorted(bundle.colocated(modality)):
                data = audio[d] if modality == "audio" else bundle.get(d, modality)
                result["entropy"].append({"seed": seed, "modality": modality, "device": d,
                                          "bins": bins, "value": entropy(data, bins).value})

    if "zip" in analyses and "light" in present:
        result["zip"] = _zip_inputs(bundle, cfg, seed)
    if "zia" in analyses and "audio" in present:
        result["zia"] = _zia_inputs(bundle, audio, cfg, seed)
    return result


def _similarity_pairs(bundle, audio, modality, length, cfg, seed) -> list:
    rows = []
    devices = bundle.devices(modality)
    if modality == "audio":
        length = length or cfg["zia.snippet"]
        snips = {d: snippet_split(audio[d], length) for d in devices}
        count = min(len(v) for v in snips.values())
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            for k in range(count):
                spec = {d: BandSpectrum(snips[d][k], cfg) for d in devices}
                for a, b, kind in _pairs(bundle, modality):
                    r = similarity_from_spectra(spec[a], spec[b])
                    rows.append({"seed": seed, "modality": modality, "snippet": length, "index": k,
                                 "a": a, "b": b, "kind": kind, "metric": r.metric, "raw": r.value})
        return rows
    series = {d: bundle.get(d, modality) for d in devices}
    if length is None:
        snips = {d: [s] for d, s in series.items()}
    else:
        snips = {d: snippet_split(s, length) for d, s in series.items()}
    count = min(len(v) for v in snips.values())
    for k in range(count):
        prep = {d: preprocess_scalar(snips[d][k]) for d in devices}
        for a, b, kind in _pairs(bundle, modality):
            r = dtw_distance(prep[a], prep[b])
            rows.append({"seed": seed, "modality": modality,
                         "snippet": length if length is not None else series[a].duration,
                         "index": k, "a": a, "b": b, "kind": kind, "metric": r.metric, "raw": r.raw})
    return rows


def _zip_inputs(bundle: RecordingBundle, cfg: Config, seed: int) -> dict:
    th = ZipThresholds(cfg["zip.t_abs"], cfg["zip.t_rel"])
    window = cfg["zip.window"]
    fps = {d: zip_fingerprint(bundle.get(d, "light"), th, window, d) for d in bundle.devices("light")}
    kb, step = int(cfg["zip.key_bits"]), int(cfg["zip.key_step"])
    scores = {"colocated": [], "noncolocated": []}
    for a, b, kind in _pairs(bundle, "light"):
        for wa, wb in zip(key_windows(fps[a], kb, step), key_windows(fps[b], kb, step)):
            scores[kind].append(fingerprint_similarity(wa, wb))
    col = sorted(bundle.colocated("light"))
    return {
        "scores": scores,
        "bits": {d: fps[d].bits.tolist() for d in sorted(fps)},
        "colocated": col,
        "balanced": {d: balanced_keys(fps[d], kb, step, tuple(cfg["zip.balance"]))[1] for d in col},
    }


def _zia_inputs(bundle: RecordingBundle, audio: dict, cfg: Config, seed: int) -> dict:
    length = cfg["zia.snippet"]
    gate = cfg["zia.power_gate_db"]
    offset = cfg["audio.db_offset"]
    devices = bundle.devices("audio")
    snips = {d: snippet_split(audio[d], length) for d in devices}
    count = min(len(v) for v in snips.values())
    power = {d: [snippet_power_db(s, offset) for s in snips[d][:count]] for d in devices}
    ok = {d: [p >= gate for p in power[d]] for d in devices}
    return {"seed": seed, "power": {d: [float(p) for p in v] for d, v in sorted(power.items())},
            "passes": {d: v for d, v in sorted(ok.items())},
            "colocated": sorted(bundle.colocated("audio")), "count": count}


def process_seed(config: ExperimentConfig, seed: int) -> dict:
    """Simulate, (optionally) save and analyse one seed; returns plain data."""
    cfg = config.build_config()
    sc = make_scenario_for(config, seed, cfg)
    bundle = run_setting(sc, cfg)
    files = []
    if config.out and config.save_recordings:
        rec_dir = Path(config.out) / "recordings" / f"seed_{seed}"
        save_bundle(bundle, rec_dir)
        files = [str(Path("recordings") / f"seed_{seed}" / "manifest.json")]
    result = analyze_bundle(bundle, cfg, config.snippet_lengths(cfg), config.analyses, seed)
    result["files"] = files
    return result


# ---------------------------------------------------------------------------
# Reduction
# ---------------------------------------------------------------------------

def _stats(values) -> dict:
    v = np.asarray(list(values), dtype=float)
    if len(v) == 0:
        return {"mean": None, "sd": None, "n": 0}
    return {"mean": float(v.mean()), "sd": float(v.std(ddof=1)) if len(v) > 1 else 0.0, "n": int(len(v))}


def normalize_pairs(pairs: list) -> list:
    """Fill ``value``: audio scores as is; DTW min-max scaled per (modality, snippet)."""
    out = [dict(p) for p in pairs]
    groups: dict = {}
    for p in out:
        if p["metric"] == "dtw_distance":
            groups.setdefault((p["modality"], p["snippet"]), []).append(p)
        else:
            p["value"] = p["raw"]
    for rows in groups.values():
        raw = np.array([r["raw"] for r in rows])
        lo, span = raw.min(), raw.max() - raw.min()
        for r, x in zip(rows, raw):
            r["value"] = 0.0 if span <= 0 else float((x - lo) / span)
    return out


@dataclass
class RunSummary:
    config: dict
    similarity: dict = field(default_factory=dict)
    entropy: dict = field(default_factory=dict)
    schemes: dict = field(default_factory=dict)
    artifacts: list = field(default_factory=list)
    wall_clock: float = 0.0  # seconds; kept out of to_dict() so summaries stay reproducible

    def to_dict(self) -> dict:
        return {"config": self.config, "similarity": self.similarity, "entropy": self.entropy,
                "schemes": self.schemes, "artifacts": self.artifacts}

    @classmethod
    def from_dict(cls, d: dict) -> "RunSummary":
        return cls(d["config"], d.get("similarity", {}), d.get("entropy", {}),
                   d.get("schemes", {}), d.get("artifacts", []))

    # Convenience accessors used by reports and tests
    def sim(self, modality: str, kind: str, snippet=None) -> Optional[float]:
        m = self.similarity.get(modality, {})
        key = str(snippet) if snippet is not None else (sorted(m)[0] if m else None)
        if key is None or key not in m:
            return None
        return m[key][kind]["mean"]

    def ent(self, modality: str) -> Optional[float]:
        return self.entropy.get(modality, {}).get("mean")


def summarize(config: ExperimentConfig, cfg: Config, results: list) -> RunSummary:
    results = sorted(results, key=lambda r: r["seed"])
    summary = RunSummary(config={"experiment": config.to_dict(), "constants": _constants(cfg)})
    pairs = normalize_pairs([p for r in results for p in r["pairs"]])
    for modality in sorted({p["modality"] for p in pairs}):
        per_len = {}
        for length in sorted({p["snippet"] for p in pairs if p["modality"] == modality}):
            rows = [p for p in pairs if p["modality"] == modality and p["snippet"] == length]
            per_len[_key(length)] = {
                "metric": rows[0]["metric"],
                "colocated": _stats(p["value"] for p in rows if p["kind"] == "colocated"),
                "noncolocated": _stats(p["value"] for p in rows if p["kind"] == "noncolocated"),
            }
        summary.similarity[modality] = per_len
    ent = [e for r in results for e in r["entropy"]]
    for modality in sorted({e["modality"] for e in ent}):
        summary.entropy[modality] = _stats(e["value"] for e in ent if e["modality"] == modality)
        summary.entropy[modality]["bins"] = int(next(e["bins"] for e in ent if e["modality"] == modality))
    zips = [r["zip"] for r in results if r.get("zip")]
    if zips:
        summary.schemes["zip"] = _zip_report(zips)
    zias = [r["zia"] for r in results if r.get("zia")]
    if zias:
        summary.schemes["zia"] = _zia_report(zias, pairs, cfg)
    summary._pairs = pairs  # type: ignore[attr-defined]
    summary._entropies = ent  # type: ignore[attr-defined]
    summary.artifacts = [f for r in results for f in r.get("files", [])]
    return summary


def _key(length) -> str:
    return repr(float(length))


def _constants(cfg: Config) -> dict:
    return {k: list(v) if isinstance(v, tuple) else v for k, v in sorted(cfg.items())}


def _zip_report(zips: list) -> dict:
    pos = [s for z in zips for s in z["scores"]["colocated"]]
    neg = [s for z in zips for s in z["scores"]["noncolocated"]]
    ones, ment, bal = [], [], []
    for z in zips:
        for d in z["colocated"]:
            bits = np.asarray(z["bits"][d])
            ones.append(100.0 * bits.mean())
            ment.append(min_entropy_mcv(bits))
            bal.append(z["balanced"][d])
    quality = {
        "percent_ones": [float(np.mean(ones)), float(np.std(ones, ddof=1)) if len(ones) > 1 else 0.0],
        "min_entropy_per_bit": float(np.mean(ment)),
        "balanced_key_percent": float(np.mean(bal)),
    }
    if pos and neg:
        rep = compute_eer(pos, neg)
        rep.percent_ones = tuple(quality["percent_ones"])
        rep.min_entropy_per_bit = quality["min_entropy_per_bit"]
        rep.balanced_key_percent = quality["balanced_key_percent"]
        out = rep.to_dict(curves=True)
    else:
        out = dict(quality, eer=None)
    out["colocated_similarity"], out["noncolocated_similarity"] = _stats(pos), _stats(neg)
    return out


def _zia_report(zias: list, pairs: list, cfg: Config) -> dict:
    length = cfg["zia.snippet"]
    col_pass = [p for z in zias for d in z["colocated"] for p in z["passes"][d]]
    out = {"enough_power_percent": 100.0 * float(np.mean(col_pass)) if col_pass else None,
           "power_gate_db": cfg["zia.power_gate_db"], "snippet": length}
    gate = {(z["seed"], d, k): f for z in zias for d, flags in z["passes"].items()
            for k, f in enumerate(flags)}
    pos, neg = [], []
    for p in pairs:
        if p["modality"] != "audio" or float(p["snippet"]) != float(length):
            continue
        s = p["seed"]
        if gate.get((s, p["a"], p["index"])) and gate.get((s, p["b"], p["index"])):
            (pos if p["kind"] == "colocated" else neg).append(p["value"])
    if pos and neg:
        rep = compute_eer(pos, neg)
        rep.enough_power_percent = out["enough_power_percent"]
        out.update(rep.to_dict(curves=True))
    else:
        out["eer"] = None
    out["n_gated_colocated"], out["n_gated_noncolocated"] = len(pos), len(neg)
    return out


# ---------------------------------------------------------------------------
# Artifacts and entry points
# ---------------------------------------------------------------------------

def _write_artifacts(summary: RunSummary, out: Path) -> None:
    files = list(summary.artifacts)
    pairs = getattr(summary, "_pairs", [])
    for modality in sorted({p["modality"] for p in pairs}):
        name = f"pairs_{modality}.csv"
        with open(out / name, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["seed", "snippet", "index", "a", "b", "kind", "metric", "raw", "value"])
            for p in pairs:
                if p["modality"] == modality:
                    w.writerow([p["seed"], repr(float(p["snippet"])), p["index"], p["a"], p["b"],
                                p["kind"], p["metric"], repr(float(p["raw"])), repr(float(p["value"]))])
        files.append(name)
    ent = getattr(summary, "_entropies", [])
    if ent:
        with open(out / "entropy.csv", "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["seed", "modality", "device", "bins", "entropy"])
            for e in ent:
                w.writerow([e["seed"], e["modality"], e["device"], e["bins"], repr(float(e["value"]))])
        files.append("entropy.csv")
    for scheme, rep in sorted(summary.schemes.items()):
        if rep.get("thresholds"):
            name = f"{scheme}_far_frr.csv"
            with open(out / name, "w", newline="", encoding="utf-8") as fh:
                w = csv.writer(fh)
                w.writerow(["threshold", "far", "frr"])
                for t, a, r in zip(rep["thresholds"], rep["far_curve"], rep["frr_curve"]):
                    w.writerow([repr(float(t)), repr(float(a)), repr(float(r))])
            files.append(name)
    files.append("summary.json")
    summary.artifacts = files
    write_json(out / "summary.json", summary.to_dict())


def _prepare_out(out: str | None) -> Optional[Path]:
    if not out:
        return None
    path = Path(out)
    try:
        path.mkdir(parents=True, exist_ok=True)
        probe = path / ".write_test"
        probe.write_text("", encoding="utf-8")
        probe.unlink()
    except OSError as exc:
        raise OSError(f"output directory {path} is not writable: {exc}") from None
    return path


def run_experiment(config: ExperimentConfig) -> RunSummary:
    """Run every seed of ``config`` and write artifacts when ``config.out`` is set.

    All validation (preset, setting, override keys, setting/attack
    consistency) happens before any file is written.
    """
    t0 = time.perf_counter()
    config.validate()
    cfg = config.build_config()
    # build every scenario first so inconsistent settings fail before any output
    for seed in config.seeds:
        validate_scenario(make_scenario_for(config, seed, cfg))
    out = _prepare_out(config.out)
    if config.workers > 1 and len(config.seeds) > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            results = list(pool.map(process_seed, [config] * len(config.seeds), config.seeds))
    else:
        results = [process_seed(config, s) for s in config.seeds]
    summary = summarize(config, cfg, results)
    if out is not None:
        _write_artifacts(summary, out)
    summary.wall_clock = time.perf_counter() - t0
    if out is not None:
        write_json(out / "timing.json", {"wall_clock_seconds": summary.wall_clock})
    log.info("%s %s: %d seed(s) in %.1f s", config.scenario, config.setting,
             len(config.seeds), summary.wall_clock)
    return summary


def analyze_bundles(bundles: Sequence[tuple[int, RecordingBundle]], config: ExperimentConfig) -> RunSummary:
    """Summaries for already simulated or imported bundles ``[(seed, bundle), ...]``."""
    cfg = config.build_config()
    results = []
    for seed, bundle in bundles:
        r = analyze_bundle(bundle, cfg, config.snippet_lengths(cfg), config.analyses, seed)
        r["files"] = []
        results.append(r)
    return summarize(config, cfg, results)


# ---------------------------------------------------------------------------
# Comparison across settings
# ---------------------------------------------------------------------------

def compare_settings(summaries: Sequence, out: str | Path | None = None) -> list:
    """Side-by-side rows of similarity, entropy and EER across runs.

    Entropy ratios are taken against the first run (typically the idle
    setting), so comparing a run with itself yields ratios of exactly 1.
    """
    runs = [s if isinstance(s, RunSummary) else RunSummary.from_dict(s) for s in summaries]
    if len(runs) < 2:
        raise ValueError("need at least two runs to compare")
    mods = [sorted(set(r.similarity) | set(r.entropy)) for r in runs]
    if any(m != mods[0] for m in mods):
        raise ValueError(f"runs analysed different modalities: {mods}")
    base = runs[0]
    rows = []
    for r in runs:
        exp = r.config.get("experiment", {})
        label = f"{exp.get('scenario', '?')}:{exp.get('setting', '?')}"
        for m in mods[0]:
            e, e0 = r.ent(m), base.ent(m)
            row = {"run": label, "modality": m,
                   "colocated": r.sim(m, "colocated"), "noncolocated": r.sim(m, "noncolocated"),
                   "entropy": e,
                   "entropy_ratio": (e / e0) if (e is not None and e0) else None}
            scheme = "zia" if m == "audio" else "zip" if m == "light" else None
            row["eer"] = r.schemes.get(scheme, {}).get("eer") if scheme else None
            rows.append(row)
    if out is not None:
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
        cols = ["run", "modality", "colocated", "noncolocated", "entropy", "entropy_ratio", "eer"]
        with open(out / "comparison.csv", "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(cols)
            for row in rows:
                w.writerow(["" if row[c] is None else row[c] for c in cols])
        write_json(out / "comparison.json", rows)
    return rows


# ---------------------------------------------------------------------------
# Split pipeline used by the CLI: simulate to disk, then analyse from disk
# ---------------------------------------------------------------------------

def _simulate_one(config: ExperimentConfig, seed: int) -> str:
    cfg = config.build_config()
    bundle = run_setting(make_scenario_for(config, seed, cfg), cfg)
    rel = Path("recordings") / f"seed_{seed}"
    save_bundle(bundle, Path(config.out) / rel)
    return str(rel / "manifest.json")


def simulate_to_disk(config: ExperimentConfig) -> list:
    """Simulate every seed and save the bundles under ``out/recordings/seed_N``.

    Writes ``run.json`` describing the run so a later evaluation can recover
    the experiment settings. Returns the manifest paths (relative to ``out``).
    """
    if not config.out:
        raise ValueError("simulate needs an output directory")
    config.validate()
    cfg = config.build_config()
    for seed in config.seeds:
        validate_scenario(make_scenario_for(config, seed, cfg))
    out = _prepare_out(config.out)
    if config.workers > 1 and len(config.seeds) > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            manifests = list(pool.map(_simulate_one, [config] * len(config.seeds), config.seeds))
    else:
        manifests = [_simulate_one(config, s) for s in config.seeds]
    write_json(out / "run.json", {"experiment": config.to_dict(), "manifests": manifests})
    return manifests


def load_run(directory: str | Path) -> tuple[ExperimentConfig, list]:
    """Read back a directory written by :func:`simulate_to_disk` (or an imported bundle).

    Returns the experiment settings and ``[(seed, bundle), ...]``. A bare
    bundle directory (only ``manifest.json``) is treated as a single seed.
    """
    directory = Path(directory)
    run_file = directory / "run.json"
    if run_file.is_file():
        meta = json.loads(run_file.read_text(encoding="utf-8"))
        exp = meta["experiment"]
        config = ExperimentConfig(
            scenario=exp["scenario"], setting=exp["setting"], modalities=tuple(exp["modalities"]),
            seeds=tuple(exp["seeds"]), overrides=tuple(exp["overrides"]),
            snippets=None if exp.get("snippets") is None else {k: tuple(v) for k, v in exp["snippets"].items()},
            analyses=tuple(exp["analyses"]), humans=exp.get("humans", "auto"),
            silent=bool(exp.get("silent", False)))
        bundles = [(seed, import_dataset(directory / Path(m).parent))
                   for seed, m in zip(config.seeds, meta["manifests"])]
        return config, bundles
    bundle = import_dataset(directory)
    sc = bundle.scenario or {}
    mods = tuple(m for m in MODALITIES if m in bundle.modalities())
    config = ExperimentConfig(scenario=str(sc.get("name", directory.name)),
                              setting=str(sc.get("setting", "PA+H")), modalities=mods,
                              seeds=(int(sc.get("seed", 0)),))
    return config, [(config.seeds[0], bundle)]


def evaluate_directory(directory: str | Path, out: str | Path | None = None,
                       analyses: Sequence[str] = ANALYSES, overrides: Sequence[str] = ()) -> RunSummary:
    """Analyse and evaluate recordings on disk; writes artifacts into ``out`` (default: ``directory``)."""
    config, bundles = load_run(directory)
    config.analyses = tuple(analyses)
    if overrides:
        config.overrides = tuple(config.overrides) + tuple(overrides)
    config.build_config()
    config.out = str(out if out is not None else directory)
    target = _prepare_out(config.out)
    t0 = time.perf_counter()
    summary = analyze_bundles(bundles, config)
    _write_artifacts(summary, target)
    summary.wall_clock = time.perf_counter() - t0
    write_json(target / "timing.json", {"wall_clock_seconds": summary.wall_clock})
    return summary
