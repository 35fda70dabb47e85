import json
from pathlib import Path

import pytest

from zipsim.cli import main
from zipsim.harness import ExperimentConfig, compare_settings, run_experiment

SHORT = ("run.audio_duration=120", "run.light_duration=900", "run.co2_duration=900")


def experiment(tmp_path=None, name="run", **kw):
    base = dict(scenario="office", setting="PA+H", seeds=(0, 1, 2), overrides=SHORT,
                out=str(tmp_path / name) if tmp_path else None)
    base.update(kw)
    return ExperimentConfig(**base)


@pytest.fixture(scope="module")
def pah(tmp_path_factory):
    d = tmp_path_factory.mktemp("pah")
    return run_experiment(experiment(d)), d / "run"


class TestRunExperiment:
    def test_colocated_audio_above_noncolocated(self, pah):
        s, _ = pah
        assert s.sim("audio", "colocated") > s.sim("audio", "noncolocated")
        assert s.similarity["audio"]["60.0"]["colocated"]["n"] == 3 * 2 * 6

    def test_artifacts_exist(self, pah):
        s, out = pah
        assert (out / "summary.json").is_file() and (out / "timing.json").is_file()
        summary = json.loads((out / "summary.json").read_text())
        for f in summary["artifacts"]:
            assert (out / f).is_file(), f
        assert "wall_clock" not in json.dumps(summary)

    def test_rerun_identical(self, pah, tmp_path):
        _, out = pah
        run_experiment(experiment(tmp_path))
        assert (tmp_path / "run" / "summary.json").read_bytes() == (out / "summary.json").read_bytes()

    def test_scheme_reports(self, pah):
        s, _ = pah
        assert 0.0 <= s.schemes["zip"]["eer"] <= 0.5
        assert s.schemes["zia"]["enough_power_percent"] == pytest.approx(100.0)
        assert s.entropy["light"]["bins"] == 20 and s.entropy["rgb"]["bins"] == 100

    def test_workers_do_not_change_results(self, tmp_path):
        kw = dict(modalities=("light",), analyses=("similarity", "zip"), seeds=(0, 1))
        one = run_experiment(experiment(**kw)).to_dict()
        two = run_experiment(experiment(workers=2, **kw)).to_dict()
        assert one == two

    def test_aa_without_attack_errors_before_output(self, tmp_path):
        cfg = experiment(tmp_path, setting="AA",
                         overrides=SHORT + ("attack.audio=none", "attack.light=none", "attack.co2=none"))
        with pytest.raises(ValueError, match="active attack"):
            run_experiment(cfg)
        assert not (tmp_path / "run").exists()

    def test_unknown_preset(self, tmp_path):
        with pytest.raises(ValueError, match="unknown preset"):
            run_experiment(experiment(tmp_path, scenario="castle"))

    def test_unknown_override(self, tmp_path):
        with pytest.raises(KeyError):
            run_experiment(experiment(tmp_path, overrides=("zip.tabs=3",)))
        assert not (tmp_path / "run").exists()

    def test_unwritable_output(self, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("x")
        with pytest.raises(OSError, match="not writable"):
            run_experiment(experiment(out=str(blocker / "sub"), modalities=("co2",)))


class TestCompare:
    def test_identical_ratios_one(self, pah):
        s, _ = pah
        rows = compare_settings([s, s])
        assert all(r["entropy_ratio"] == 1.0 for r in rows)

    def test_mismatched_modalities(self, pah):
        s, _ = pah
        other = run_experiment(experiment(modalities=("co2",), seeds=(0,)))
        with pytest.raises(ValueError, match="modalities"):
            compare_settings([s, other])

    def test_needs_two(self, pah):
        with pytest.raises(ValueError):
            compare_settings([pah[0]])

    def test_attack_raises_adversarial_audio(self, pah, tmp_path):
        s, _ = pah
        aah = run_experiment(experiment(setting="AA+H"))
        rows = compare_settings([s, aah], tmp_path / "cmp")
        adv = {r["run"]: r["noncolocated"] for r in rows if r["modality"] == "audio"}
        assert adv["office:AA+H"] > adv["office:PA+H"]
        assert (tmp_path / "cmp" / "comparison.csv").is_file()
        assert (tmp_path / "cmp" / "comparison.json").is_file()


class TestCli:
    def args(self, *extra):
        out = []
        for o in SHORT:
            out += ["--set", o]
        return list(extra) + out

    def test_simulate_evaluate_compare_import(self, tmp_path, capsys):
        a, b = tmp_path / "a", tmp_path / "b"
        for d in (a, b):
            assert main(self.args("simulate", "--setting", "PA+H", "--seeds", "0", "1",
                                  "--modalities", "light", "co2", "--out", str(d))) == 0
            assert main(["evaluate", str(d)]) == 0
        assert (a / "summary.json").read_bytes() == (b / "summary.json").read_bytes()
        assert main(["compare", str(a), str(b), "--out", str(tmp_path / "cmp")]) == 0
        assert main(["analyze", str(a), "--out", str(tmp_path / "an")]) == 0
        assert json.loads((tmp_path / "an" / "summary.json").read_text())["schemes"] == {}
        assert main(["import", str(a / "recordings" / "seed_0"), "--out", str(tmp_path / "imp")]) == 0
        assert (tmp_path / "imp" / "manifest.json").is_file()
        assert main(["evaluate", str(tmp_path / "imp")]) == 0
        out = capsys.readouterr().out
        assert "zip" in out and "entropy" in out

    def test_one_go_evaluate(self, tmp_path):
        assert main(self.args("evaluate", "--setting", "AA", "--modalities", "co2",
                              "--out", str(tmp_path / "x"), "--no-recordings")) == 0
        assert not (tmp_path / "x" / "recordings").exists()

    def test_errors_exit_two(self, tmp_path, capsys):
        assert main(["simulate", "--scenario", "castle", "--out", str(tmp_path / "x")]) == 2
        assert main(self.args("simulate", "--out", str(tmp_path / "y"), "--set", "nope=1")) == 2
        assert main(["import", str(tmp_path)]) == 2
        err = capsys.readouterr().err
        assert "unknown preset" in err and "nope" in err and "manifest" in err
        assert not (tmp_path / "x").exists() and not (tmp_path / "y").exists()

    def test_custom_layout_file(self, tmp_path):
        layout = {
            "name": "studio",
            "room": {"size": [3.0, 3.0, 2.5], "door_y": 1.5},
            "devices": [{"id": "a", "position": [1, 1, 1]}, {"id": "b", "position": [2, 2, 1]},
                        {"id": "adversary", "position": [3.5, 1.5, 1]}],
            "actuators": [{"id": "lamp", "modality": "light", "position": [1.5, 1.5, 2.4]}],
        }
        p = tmp_path / "studio.json"
        p.write_text(json.dumps(layout))
        assert main(self.args("evaluate", "--scenario", str(p), "--setting", "PA+H",
                              "--modalities", "light", "--out", str(tmp_path / "s"))) == 0
        s = json.loads((tmp_path / "s" / "summary.json").read_text())
        assert s["config"]["experiment"]["scenario"] == str(p)
