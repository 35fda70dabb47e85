import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from zipsim.stimgen import (
    FormantSpeech,
    SpeechSource,
    StimulusParams,
    StimulusSchedule,
    blink_mask,
    build_schedule,
    burst_count,
    emission_rate,
    event_rng,
    map_color,
    rgb_to_xy,
    sample_params,
    sine_burst,
    synth_audio_stimulus,
    synth_co2_emission,
    synth_light_profile,
    synth_utterance,
    xy_to_rgb,
)
from zipsim.series import AudioClip


class TestSampleParams:
    def test_audio_seed_one_in_range(self):
        p = sample_params("audio", event_rng(1))
        assert 60 <= p.occurrence_interval <= 180
        assert 4.5 <= p.duration <= 75
        assert 0.1 <= p.intensity <= 1.0
        assert p.spectrum == (50.0, 22100.0)
        assert p.color is None

    def test_light_fields(self):
        for seed in range(50):
            p = sample_params("light", event_rng(seed))
            assert 1 <= p.intensity <= 254
            assert p.color is not None and p.spectrum is None
            if p.pattern == "blink":
                assert 0.2 <= p.blink_hz <= 1.0
            else:
                assert p.pattern == "constant" and p.blink_hz is None

    def test_co2_fields(self):
        for seed in range(50):
            p = sample_params("co2", event_rng(seed))
            assert 600 <= p.duration <= 900
            assert 300 <= p.occurrence_interval <= 600
            assert p.intensity in ("low", "high")

    @pytest.mark.parametrize("modality", ["audio", "light", "co2"])
    def test_range_safety_many_draws(self, modality):
        rng = np.random.default_rng(7)
        lim = {"audio": ((60, 180), (4.5, 75)), "light": ((30, 90), (5, 60)),
               "co2": ((300, 600), (600, 900))}[modality]
        iv, du = [], []
        for _ in range(100_000 if modality == "co2" else 20_000):
            p = sample_params(modality, rng)
            iv.append(p.occurrence_interval)
            du.append(p.duration)
        assert lim[0][0] <= min(iv) and max(iv) <= lim[0][1]
        assert lim[1][0] <= min(du) and max(du) <= lim[1][1]

    def test_unknown_modality(self):
        with pytest.raises(ValueError):
            sample_params("smell", event_rng(0))

    def test_rng_advances_deterministically(self):
        a, b = event_rng(3), event_rng(3)
        assert [sample_params("light", a) for _ in range(3)] == [sample_params("light", b) for _ in range(3)]


class TestSchedule:
    def test_light_twice_identical(self):
        s1 = build_schedule("light", 3600, seed=99)
        s2 = build_schedule("light", 3600, seed=99)
        assert s1.to_json() == s2.to_json()

    def test_audio_event_count_bounds(self):
        # pause semantics: 3600 / (180 + 75) -> 15 .. 3600 / (60 + 4.5) -> 56 events
        counts = [len(build_schedule("audio", 3600, seed=s)) for s in range(200)]
        assert 15 <= min(counts) and max(counts) <= 56

    def test_co2_too_short(self):
        with pytest.raises(ValueError):
            build_schedule("co2", 100, seed=0)

    def test_sorted_non_overlapping_and_gaps(self):
        s = build_schedule("co2", 20_000, seed=4)
        ev = s.events
        for (t0, p0), (t1, _) in zip(ev[:-1], ev[1:]):
            assert t1 > t0
            assert t0 + p0.duration <= t1
            assert t1 - (t0 + p0.duration) == pytest.approx(p0.occurrence_interval)

    def test_coverage(self):
        s = build_schedule("light", 1800, seed=2)
        last_t, last_p = s.events[-1]
        assert last_t < 1800 <= last_t + last_p.duration + last_p.occurrence_interval
        assert s.events[0][0] == 0.0

    def test_streams_independent(self):
        # adding another actuator (stream) never perturbs this one's events
        a = build_schedule("light", 1800, seed=5, stream=11)
        _ = build_schedule("light", 1800, seed=5, stream=12)
        b = build_schedule("light", 1800, seed=5, stream=11)
        assert a.to_dict() == b.to_dict()
        c = build_schedule("light", 1800, seed=5, stream=12)
        assert a.to_dict()["events"] != c.to_dict()["events"]

    def test_json_round_trip(self):
        s = build_schedule("audio", 900, seed=8)
        back = StimulusSchedule.from_json(s.to_json())
        assert back.to_dict() == s.to_dict()
        assert json.loads(s.to_json())["events"][0]["params"]["modality"] == "audio"


class TestAudio:
    def test_sine_purity(self):
        fs, f = 44100, 1000.0
        x = sine_burst(f, 1.0, 0.8, fs, fade=0.01)
        spec = np.abs(np.fft.rfft(x * np.hanning(len(x))))
        k = int(np.argmax(spec))
        assert abs(k * fs / len(x) - f) <= fs / len(x)
        others = np.delete(spec, np.arange(k - 3, k + 4))
        assert 20 * np.log10(spec[k] / others.max()) >= 40.0

    def test_burst_count_mapping(self):
        assert [burst_count(w) for w in (2, 10, 11, 20, 21, 30)] == [1, 1, 2, 2, 3, 3]

    def test_speech_duration_thirty_words(self):
        src = FormantSpeech(words_per_minute=120)
        clip = src.next_utterance(30, np.random.default_rng(0))
        assert clip.duration == pytest.approx(15.0, rel=0.05)

    @pytest.mark.parametrize("words", [2, 7, 30])
    def test_speech_duration_word_count(self, words):
        clip = FormantSpeech().next_utterance(words, np.random.default_rng(words))
        assert clip.duration == pytest.approx(words * 0.5, rel=0.05)

    def test_zero_word_source_is_bursts_only(self, cfg):
        class Silent(SpeechSource):
            def next_utterance(self, word_count, rng):
                return AudioClip(np.zeros(0), self.sample_rate)

        u = synth_utterance(Silent(), np.random.default_rng(1), cfg)
        assert len(u) > 0
        assert np.all(np.abs(u) <= 1.0)

    def test_stimulus_fills_duration_and_scaled(self, cfg):
        p = StimulusParams("audio", 60.0, 12.0, 0.4, "speech+noise", spectrum=(50.0, 22100.0))
        clip = synth_audio_stimulus(p, FormantSpeech(), np.random.default_rng(3), cfg)
        assert len(clip) == 12 * 44100
        assert np.max(np.abs(clip.samples)) <= 0.4 + 1e-12

    def test_stimulus_deterministic(self, cfg):
        p = sample_params("audio", event_rng(2))
        a = synth_audio_stimulus(p, FormantSpeech(), event_rng(2, 0, 0, 1), cfg)
        b = synth_audio_stimulus(p, FormantSpeech(), event_rng(2, 0, 0, 1), cfg)
        assert np.array_equal(a.samples, b.samples)

    def test_wrong_modality(self, cfg):
        with pytest.raises(ValueError):
            synth_audio_stimulus(sample_params("light", event_rng(0)), FormantSpeech(), event_rng(0), cfg)


class TestLight:
    def test_constant_profile(self):
        p = StimulusParams("light", 30.0, 10.0, 200, "constant", color=(255, 255, 255))
        bright, rgb = synth_light_profile(p, 5.0)
        assert len(bright) == 50
        assert np.all(bright.values == 200)
        assert rgb.values.shape == (50, 3)

    def test_blink_cycles(self):
        p = StimulusParams("light", 30.0, 10.0, 120, "blink", blink_hz=1.0, color=(0, 0, 255))
        bright, _ = synth_light_profile(p, 5.0)
        on = bright.values > 0
        rises = int(np.sum(on[1:] & ~on[:-1])) + int(on[0])
        assert rises == 10

    def test_blink_mask_duty(self):
        m = blink_mask(1000, 100.0, 0.5)
        assert m.mean() == pytest.approx(0.5, abs=0.01)

    def test_red_round_trip(self):
        r = xy_to_rgb(rgb_to_xy((255, 0, 0)))
        assert int(np.argmax(r)) == 0
        assert r[0] >= 250 and r[1] <= 5 and r[2] <= 5

    def test_xy_matches_cie_reference(self):
        # sRGB red primary sits at x=0.64, y=0.33; D65 white at (0.3127, 0.3290)
        assert rgb_to_xy((255, 0, 0)) == pytest.approx((0.64, 0.33), abs=2e-3)
        assert rgb_to_xy((255, 255, 255)) == pytest.approx((0.3127, 0.3290), abs=2e-3)

    @settings(max_examples=60, deadline=None)
    @given(st.tuples(*[st.integers(0, 255)] * 3))
    def test_map_color_idempotent(self, rgb):
        once = map_color(rgb)
        twice = map_color(once)
        assert np.max(np.abs(np.subtract(once, twice))) <= 2


class TestCO2:
    def test_low_rectangle(self, cfg):
        p = StimulusParams("co2", 400.0, 600.0, "low", "none")
        ts = synth_co2_emission(p, cfg)
        assert len(ts) == 600
        assert np.all(ts.values == emission_rate("low", cfg))

    def test_high_above_low(self, cfg):
        assert emission_rate("high", cfg) > emission_rate("low", cfg)

    @pytest.mark.parametrize("dur", [600.0, 900.0])
    def test_bounds_accepted(self, dur, cfg):
        ts = synth_co2_emission(StimulusParams("co2", 300.0, dur, "high", "none"), cfg)
        assert ts.duration == dur

    def test_bad_level(self, cfg):
        with pytest.raises(ValueError):
            emission_rate("medium", cfg)


def test_event_rng_sub_streams_differ():
    a = event_rng(1, 2, 3).random(4)
    b = event_rng(1, 2, 3, sub=1).random(4)
    assert not np.allclose(a, b)
    assert math.isclose(event_rng(1, 2, 3).random(), a[0])
