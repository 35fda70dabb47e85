import csv
import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from zipsim.schemes import (
    Fingerprint,
    ZiaDecision,
    ZipThresholds,
    balanced_keys,
    compute_eer,
    far_frr_curves,
    fingerprint_similarity,
    key_windows,
    min_entropy_mcv,
    shannon_entropy_bits,
    snippet_power_db,
    zia_authenticate,
    zip_fingerprint,
)
from zipsim.series import AudioClip, TimeSeries


def lux(values, per_window=150, rate=5.0):
    return TimeSeries.from_values(np.repeat(np.asarray(values, float), per_window), rate, "light")


class TestZipFingerprint:
    def test_constant(self):
        f = zip_fingerprint(lux([100] * 6))
        assert len(f) == 5 and f.bits.sum() == 0

    def test_big_step(self):
        assert zip_fingerprint(lux([100, 200])).bits.tolist() == [1]

    def test_small_step(self):
        assert zip_fingerprint(lux([100, 104])).bits.tolist() == [0]

    def test_relative_threshold_blocks(self):
        # |d| = 9 > 8 but 9 / 1000 < 0.01
        assert zip_fingerprint(lux([1000, 1009])).bits.tolist() == [0]

    def test_bit_count_drops_partial_window(self):
        ts = TimeSeries.from_values(np.zeros(int(5 * 300 + 40)), 5.0, "light")
        assert len(zip_fingerprint(ts)) == 300 // 30 - 1

    def test_too_short(self):
        with pytest.raises(ValueError):
            zip_fingerprint(lux([100], per_window=100))

    def test_thresholds_positive(self):
        with pytest.raises(ValueError):
            ZipThresholds(0, 0.01)
        with pytest.raises(ValueError):
            ZipThresholds(8, -1)


class TestSimilarityAndKeys:
    def test_similarity_examples(self):
        f = Fingerprint(np.array([1, 0, 1, 1, 0, 0, 1, 0, 1, 1]))
        assert fingerprint_similarity(f, f) == 100.0
        assert fingerprint_similarity(f, f.complement()) == 0.0
        g = f.bits.copy()
        g[:2] ^= 1
        assert fingerprint_similarity(f, g) == 80.0

    def test_similarity_truncates_and_rejects_empty(self):
        assert fingerprint_similarity([1, 0, 1], [1, 0]) == 100.0
        with pytest.raises(ValueError):
            fingerprint_similarity([], [1])

    def test_balanced_examples(self):
        assert balanced_keys([0, 1] * 12) == (2, 100.0)
        assert balanced_keys(np.zeros(40, dtype=int))[0] == 0
        thirteen = [1] * 13 + [0] * 7
        assert balanced_keys(thirteen)[0] == 0
        assert balanced_keys([1, 0] * 5) == (0, 0.0)  # too short: no windows

    def test_key_windows(self):
        assert len(key_windows(np.zeros(36), 20, 4)) == 5

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.integers(0, 1), min_size=0, max_size=80))
    def test_balanced_complement_invariant(self, bits):
        f = Fingerprint(np.array(bits, dtype=np.uint8))
        assert balanced_keys(f) == balanced_keys(f.complement())


class TestMinEntropy:
    def test_examples(self):
        assert min_entropy_mcv([0, 1] * 10) == 1.0
        assert min_entropy_mcv(np.zeros(20)) == 0.0
        assert min_entropy_mcv([0] * 9 + [1]) == pytest.approx(-np.log2(0.9), abs=1e-12)
        assert min_entropy_mcv([0] * 9 + [1]) == pytest.approx(0.152, abs=1e-3)

    def test_empty(self):
        with pytest.raises(ValueError):
            min_entropy_mcv([])

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.integers(0, 1), min_size=1, max_size=100))
    def test_below_shannon(self, bits):
        m = min_entropy_mcv(bits)
        assert 0.0 <= m <= shannon_entropy_bits(bits) + 1e-12 <= 1.0 + 1e-12


class TestEER:
    def test_perfect(self):
        assert compute_eer([0.9] * 5, [0.1] * 5).eer == 0.0

    def test_identical(self):
        s = np.random.default_rng(0).uniform(size=50)
        assert compute_eer(s, s).eer == pytest.approx(0.5)

    def test_worked_example(self):
        assert compute_eer([0.8, 0.6], [0.7, 0.2]).eer == pytest.approx(0.25, abs=1e-12)

    def test_curves(self):
        thr, far, frr = far_frr_curves([0.8, 0.6], [0.7, 0.2])
        assert thr.tolist() == [0.2, 0.6, 0.7, 0.8]
        assert far.tolist() == [1.0, 0.5, 0.5, 0.0]
        assert frr.tolist() == [0.0, 0.0, 0.5, 0.5]

    def test_empty(self):
        with pytest.raises(ValueError):
            compute_eer([], [0.1])

    @settings(max_examples=60, deadline=None)
    @given(st.lists(st.integers(0, 100), min_size=1, max_size=30),
           st.lists(st.integers(0, 100), min_size=1, max_size=30))
    def test_bounds_and_monotone_invariance(self, pos, neg):
        pos, neg = np.array(pos) / 100, np.array(neg) / 100
        e = compute_eer(pos, neg).eer
        assert 0.0 <= e <= 0.5
        f = lambda v: np.exp(3 * np.asarray(v)) - 7.0  # noqa: E731
        assert compute_eer(f(pos), f(neg)).eer == pytest.approx(e, abs=1e-9)

    def test_report_serialisation(self, tmp_path):
        r = compute_eer([0.8, 0.6], [0.7, 0.2])
        d = json.loads(r.to_json())
        assert d["eer"] == pytest.approx(0.25) and d["n_colocated"] == 2
        assert "far_curve" not in r.to_dict(curves=False)
        r.write_curves_csv(tmp_path / "c.csv")
        rows = list(csv.reader(open(tmp_path / "c.csv")))
        assert rows[0] == ["threshold", "far", "frr"] and len(rows) == 5


class TestZia:
    def test_zero_snippet(self, cfg):
        z = AudioClip(np.zeros(44100 * 2))
        assert snippet_power_db(z) == float("-inf")
        assert zia_authenticate(z, z, 0.0, cfg, score=1.0) is ZiaDecision.INSUFFICIENT_POWER

    def test_full_scale_calibration(self):
        t = np.arange(44100) / 44100
        x = np.sqrt(2) * 0.5 * np.sin(2 * np.pi * 440 * t)  # rms 0.5
        assert snippet_power_db(AudioClip(x)) == pytest.approx(120 + 20 * np.log10(0.5), abs=1e-3)

    def test_identical_accepts(self, cfg):
        a = AudioClip(np.random.default_rng(0).normal(0, 0.05, 44100 * 12))
        for th in (0.0, 0.5, 1.0):
            assert zia_authenticate(a, a, th, cfg) is ZiaDecision.ACCEPT

    def test_gate_before_score(self, cfg):
        loud = AudioClip(np.random.default_rng(1).normal(0, 0.05, 44100))
        quiet = AudioClip(np.random.default_rng(2).normal(0, 1e-6, 44100))  # ~0 dB
        assert zia_authenticate(loud, quiet, 0.0, cfg, score=1.0) is ZiaDecision.INSUFFICIENT_POWER

    def test_length_mismatch(self, cfg):
        with pytest.raises(ValueError):
            zia_authenticate(AudioClip(np.ones(10)), AudioClip(np.ones(11)), 0.5, cfg)

    def test_independent_noise_rejected(self, cfg):
        # threshold from an EER sweep over matched vs independent pairs
        rng = np.random.default_rng(5)
        n = 44100 * 12
        pairs_same, pairs_diff = [], []
        from zipsim.sigproc import similarity_score
        clips = [AudioClip(rng.normal(0, 0.05, n)) for _ in range(8)]
        for i in range(4):
            noisy = AudioClip(clips[i].samples + rng.normal(0, 0.02, n))
            pairs_same.append(similarity_score(clips[i], noisy, cfg).value)
            pairs_diff.append(similarity_score(clips[i], clips[i + 4], cfg).value)
        rep = compute_eer(pairs_same, pairs_diff)
        thr = min(t for t, a, r in zip(rep.thresholds, rep.far_curve, rep.frr_curve) if a == 0.0)
        rejected = 0
        for s in range(20):
            a = AudioClip(np.random.default_rng(100 + s).normal(0, 0.05, n))
            b = AudioClip(np.random.default_rng(900 + s).normal(0, 0.05, n))
            rejected += zia_authenticate(a, b, thr, cfg) is ZiaDecision.REJECT
        assert rejected >= 19
