import itertools
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import signal

from zipsim.series import AudioClip, TimeSeries
from zipsim.sigproc import (
    BandSpectrum,
    dtw_distance,
    entropy,
    normalize_dtw,
    preprocess_scalar,
    similarity_from_spectra,
    similarity_score,
    similarity_score_direct,
    snippet_split,
    sync_audio,
    third_octave_centers,
)

FS = 44100


def noise(seed, seconds, fs=FS):
    return np.random.default_rng(seed).normal(0, 0.1, int(seconds * fs))


def brute_dtw(a, b):
    """Minimum over every monotone warping path, enumerated step by step."""
    n, m = len(a), len(b)
    best = np.inf

    def walk(i, j, acc):
        nonlocal best
        acc += abs(a[i] - b[j])
        if acc >= best:
            return
        if i == n - 1 and j == m - 1:
            best = acc
            return
        for di, dj in ((1, 0), (0, 1), (1, 1)):
            if i + di < n and j + dj < m:
                walk(i + di, j + dj, acc)

    walk(0, 0, 0.0)
    return best


# --- synchronisation --------------------------------------------------------

class TestSync:
    def test_recovers_delay(self):
        x = noise(1, 5)
        d = int(0.3 * FS)
        y = np.concatenate([np.zeros(d), x])[: len(x)]
        r = sync_audio(AudioClip(x), AudioClip(y))
        assert abs(r.lag - d) <= 1
        assert r.lag_seconds == pytest.approx(0.3, abs=1 / FS)
        assert r.confident

    def test_identity_zero_lag(self):
        x = noise(2, 3)
        r = sync_audio(AudioClip(x), AudioClip(x.copy()))
        assert r.lag == 0 and len(r.a) == len(x)

    def test_uncorrelated_low_confidence(self):
        flags = [sync_audio(AudioClip(noise(s, 2)), AudioClip(noise(s + 500, 2))).confident
                 for s in range(20)]
        assert not any(flags)

    def test_short_overlap_rejected(self):
        x = noise(3, 0.5)
        with pytest.raises(ValueError):
            sync_audio(AudioClip(x), AudioClip(x))

    def test_rate_mismatch(self):
        with pytest.raises(ValueError):
            sync_audio(AudioClip(noise(1, 2)), AudioClip(noise(1, 2, 22050), 22050))


# --- preprocessing ---------------------------------------------------------

class TestPreprocess:
    def test_constant_to_zero(self):
        ts = TimeSeries.from_values(np.full(50, 7.5), 5.0, "light")
        assert np.allclose(preprocess_scalar(ts).values, 0.0, atol=1e-12)

    def test_mean_zero_and_length(self):
        v = np.random.default_rng(0).normal(300, 20, 400)
        out = preprocess_scalar(TimeSeries.from_values(v, 1.0, "co2"))
        assert len(out) == 400
        assert abs(out.values.mean()) < 1e-9

    def test_impulse_matches_gaussian_oracle(self):
        # SG(3, 2) is the identity, so the impulse response is the Gaussian kernel
        n, c = 101, 50
        v = np.zeros(n)
        v[c] = 1.0
        out = preprocess_scalar(TimeSeries.from_values(v, 5.0, "light")).values
        sigma, radius = 1.4, int(4.0 * 1.4 + 0.5)
        k = np.exp(-0.5 * (np.arange(-radius, radius + 1) / sigma) ** 2)
        k /= k.sum()
        expected = np.convolve(v - v.mean(), k, mode="same")
        # away from the edges, where the oracle zero-pads and the filter reflects
        inner = slice(radius + 2, n - radius - 2)
        assert np.allclose(out[inner], expected[inner], atol=1e-12)

    def test_too_short(self):
        with pytest.raises(ValueError):
            preprocess_scalar(TimeSeries.from_values([1.0, 2.0], 1.0, "co2"))

    def test_rgb_channelwise(self):
        v = np.random.default_rng(1).uniform(0, 255, (60, 3))
        out = preprocess_scalar(TimeSeries.from_values(v, 5.0, "rgb"))
        for c in range(3):
            one = preprocess_scalar(TimeSeries.from_values(v[:, c], 5.0, "light"))
            assert np.allclose(out.values[:, c], one.values)

    def test_deterministic(self):
        v = np.random.default_rng(2).normal(size=80)
        ts = TimeSeries.from_values(v, 5.0, "light")
        assert np.array_equal(preprocess_scalar(ts).values, preprocess_scalar(ts).values)


# --- similarity score ------------------------------------------------------

class TestSimilarity:
    def test_band_centres(self):
        fc = third_octave_centers()
        assert len(fc) == 20
        assert fc[0] == pytest.approx(50, rel=0.01) and fc[-1] == pytest.approx(4000, rel=1e-9)

    def test_identical_is_one(self):
        a = AudioClip(noise(4, 10))
        assert similarity_score(a, a).value == pytest.approx(1.0, abs=1e-6)

    def test_symmetry(self):
        x = noise(5, 10)
        y = 0.5 * x + noise(6, 10)
        a, b = AudioClip(x), AudioClip(y)
        assert similarity_score(a, b).value == pytest.approx(similarity_score(b, a).value, abs=1e-6)

    def test_noisy_copy_and_independent(self):
        for s in range(5):
            x = noise(s, 10)
            y = x + noise(1000 + s, 10) * 0.1  # 20 dB SNR
            assert similarity_score(AudioClip(x), AudioClip(y)).value >= 0.7
            assert similarity_score(AudioClip(x), AudioClip(noise(2000 + s, 10))).value <= 0.3

    def test_agrees_with_time_domain_oracle(self):
        x = noise(7, 10)
        d = int(0.05 * FS)
        y = np.concatenate([np.zeros(d), x[:-d]]) + noise(8, 10) * 0.3
        fast = similarity_score(AudioClip(x), AudioClip(y)).value
        slow = similarity_score_direct(AudioClip(x), AudioClip(y))
        assert fast == pytest.approx(slow, abs=0.02)

    def test_lag_outside_bound_not_found(self):
        x = noise(9, 10)
        d = int(0.4 * FS)
        y = np.concatenate([np.zeros(d), x[:-d]])
        assert similarity_score(AudioClip(x), AudioClip(y)).value < 0.3

    def test_silent_band_flagged(self):
        t = np.arange(10 * FS) / FS
        tone = 0.5 * np.sin(2 * np.pi * 1000 * t)
        zero = AudioClip(np.zeros_like(t))
        with pytest.warns(RuntimeWarning):
            r = similarity_score(AudioClip(tone), zero)
        assert r.value == 0.0 and len(r.silent_bands) == 20

    def test_preconditions(self):
        a = AudioClip(noise(1, 10))
        with pytest.raises(ValueError):
            similarity_score(a, AudioClip(noise(1, 11)))
        with pytest.raises(ValueError):
            similarity_score(AudioClip(noise(1, 5)), AudioClip(noise(2, 5)))

    def test_spectra_reuse(self):
        a, b = AudioClip(noise(10, 10)), AudioClip(noise(11, 10))
        sa, sb = BandSpectrum(a), BandSpectrum(b)
        assert similarity_from_spectra(sa, sb).value == pytest.approx(similarity_score(a, b).value)


# --- DTW ---------------------------------------------------------------------

class TestDTW:
    def test_examples(self):
        assert dtw_distance(np.array([1., 2, 3]), np.array([1., 2, 2, 3])).raw == 0.0
        assert dtw_distance(np.zeros(3), np.ones(3)).raw == 3.0
        x = np.random.default_rng(0).normal(size=20)
        assert dtw_distance(x, x).raw == 0.0

    def test_brute_force_small(self):
        rng = np.random.default_rng(3)
        for _ in range(200):
            a = rng.integers(0, 4, rng.integers(1, 7)).astype(float)
            b = rng.integers(0, 4, rng.integers(1, 7)).astype(float)
            assert dtw_distance(a, b).raw == brute_dtw(a, b)

    @settings(max_examples=80, deadline=None)
    @given(st.lists(st.floats(-5, 5), min_size=1, max_size=12),
           st.lists(st.floats(-5, 5), min_size=1, max_size=12))
    def test_symmetric_nonnegative(self, a, b):
        d1 = dtw_distance(np.array(a), np.array(b)).raw
        d2 = dtw_distance(np.array(b), np.array(a)).raw
        assert d1 >= 0 and d1 == pytest.approx(d2)

    def test_rgb_l1(self):
        a = np.zeros((4, 3))
        b = np.ones((4, 3))
        assert dtw_distance(a, b).raw == 12.0

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            dtw_distance(np.array([]), np.array([1.0]))

    def test_normalisation(self):
        rs = [dtw_distance(np.zeros(3), np.full(3, k)) for k in (1.0, 2.0, 5.0)]
        vals = [r.value for r in normalize_dtw(rs)]
        assert vals == [0.0, 0.25, 1.0]
        assert rs[0].value is None


# --- entropy -------------------------------------------------------------------

class TestEntropy:
    @pytest.mark.parametrize("b", [19, 20, 100])
    def test_uniform(self, b):
        v = np.random.default_rng(b).uniform(0, 1, 100_000)
        assert entropy(v, b).value >= 0.99

    def test_constant(self):
        assert entropy(np.full(100, 3.0), 20).value == 0.0

    def test_two_values_b4(self):
        assert entropy(np.array([0.0, 1.0] * 50), 4).value == pytest.approx(0.5, abs=1e-9)

    def test_errors(self):
        with pytest.raises(ValueError):
            entropy(np.array([1.0, 2.0]), 1)
        with pytest.raises(ValueError):
            entropy(np.array([]), 10)

    @settings(max_examples=80, deadline=None)
    @given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=200), st.integers(2, 120))
    def test_bounds(self, v, b):
        h = entropy(np.array(v), b).value
        assert 0.0 <= h <= 1.0

    @settings(max_examples=50, deadline=None)
    @given(st.integers(1, 200), st.integers(1, 50), st.integers(2, 40))
    def test_mixing_never_decreases(self, n_const, n_spread, b):
        base = np.zeros(n_const)
        spread = np.linspace(-1, 1, n_spread)
        assert entropy(np.concatenate([base, spread]), b).value >= entropy(base, b).value

    def test_rgb_average(self):
        rng = np.random.default_rng(0)
        v = np.column_stack([rng.uniform(size=1000), np.zeros(1000), rng.uniform(size=1000)])
        h = entropy(TimeSeries.from_values(v, 5.0, "rgb"), 100)
        assert h.modality == "rgb"
        assert h.value == pytest.approx((entropy(v[:, 0], 100).value + entropy(v[:, 2], 100).value) / 3)


# --- snippets ---------------------------------------------------------------------

class TestSnippets:
    def test_audio_counts(self):
        assert len(snippet_split(AudioClip(np.zeros(600 * 100), 100), 60)) == 10
        assert len(snippet_split(AudioClip(np.zeros(65 * 100), 100), 60)) == 1

    def test_co2_exact_length(self):
        ts = TimeSeries.from_values(np.arange(600.0), 1.0, "co2")
        parts = snippet_split(ts, 300)
        assert [len(p) for p in parts] == [300, 300]
        assert parts[1].timestamps[0] == 300.0

    def test_too_long(self):
        with pytest.raises(ValueError):
            snippet_split(TimeSeries.from_values(np.arange(10.0), 1.0, "co2"), 20)
