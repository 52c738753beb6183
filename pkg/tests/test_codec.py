import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from soundsight.codec import (
    UndecodableGeometryError,
    column_bounds,
    decode,
    encode,
    goertzel_magnitude,
    goertzel_magnitudes,
    min_row_spacing_hz,
    row_frequencies,
    sample_count,
)
from soundsight.dsp import AudioClip
from soundsight.image import GrayImage
from soundsight.schemes import EncodingScheme, ExponentialMap
from soundsight.stimuli import StimulusSpec, render_shape


def white_pixel(rows, cols, r, c):
    px = np.zeros((rows, cols), dtype=np.uint8)
    px[r, c] = 255
    return GrayImage(px)


def dft_magnitude_oracle(x, freq_hz, rate):
    """Straight complex-exponential projection, independent of Goertzel."""
    n = np.arange(len(x))
    return abs(np.sum(x * np.exp(-2j * np.pi * freq_hz * n / rate)))


class TestGeometry:
    def test_sample_counts_match_scan_durations(self, primary, long_scheme, tanh_scheme):
        assert sample_count(primary) == 16800
        assert sample_count(long_scheme) == 32000
        assert sample_count(tanh_scheme) == 16800

    def test_row_frequencies_descend_from_top(self, primary):
        freqs = row_frequencies(primary, 64)
        assert freqs[0] == pytest.approx(5000.0)
        assert freqs[-1] == pytest.approx(500.0)
        assert np.all(np.diff(freqs) < 0)

    @given(n=st.integers(1, 100000), cols=st.integers(1, 128))
    def test_column_bounds_partition(self, n, cols):
        bounds = column_bounds(n, cols)
        lengths = np.diff(bounds)
        assert bounds[0] == 0 and bounds[-1] == n
        assert lengths.sum() == n
        assert lengths.max() - lengths.min() <= 1

    def test_min_row_spacing(self, primary):
        freqs = row_frequencies(primary, 64)
        assert min_row_spacing_hz(primary, 64) == pytest.approx(
            np.min(np.abs(np.diff(freqs)))
        )


class TestEncode:
    def test_black_image_is_silence(self, black64, primary):
        clip = encode(black64, primary)
        assert len(clip) == 16800
        assert np.all(clip.samples == 0.0)

    def test_deterministic_bit_identical(self, primary):
        img = white_pixel(64, 64, 20, 30)
        a = encode(img, primary)
        b = encode(img, primary)
        assert np.array_equal(a.samples, b.samples)

    def test_never_clips_even_all_white(self, primary):
        img = GrayImage(np.full((64, 64), 255, dtype=np.uint8))
        clip = encode(img, primary)
        assert np.max(np.abs(clip.samples)) <= 1.0

    def test_constant_image_is_pure_oscillator_sum(self, primary):
        # constant brightness -> flat envelopes -> the crossfade machinery
        # must vanish, leaving exactly the fixed-order oscillator sum
        img = GrayImage(np.full((4, 8), 255, dtype=np.uint8))
        clip = encode(img, primary)
        n = np.arange(len(clip))
        want = np.zeros(len(clip))
        for f in row_frequencies(primary, 4):
            want += 0.25 * np.sin(2 * np.pi * f / 16000 * n)
        assert np.array_equal(clip.samples, want)

    def test_single_pixel_tone_is_column_localized_without_crossfade(self):
        scheme = EncodingScheme(
            "sharp", ExponentialMap(500.0, 5000.0), 1.05, crossfade_fraction=0.0
        )
        clip = encode(white_pixel(8, 4, 3, 1), scheme)
        bounds = column_bounds(len(clip), 4)
        assert np.all(clip.samples[: bounds[1]] == 0.0)
        assert np.any(clip.samples[bounds[1] : bounds[2]] != 0.0)
        assert np.all(clip.samples[bounds[2] :] == 0.0)

    def test_crossfade_leaks_only_into_neighbor_columns(self, primary):
        clip = encode(white_pixel(8, 8, 3, 4), primary)
        bounds = column_bounds(len(clip), 8)
        ramp = int(0.1 * len(clip) / 8 / 2) + 1
        assert np.all(clip.samples[: bounds[3] - ramp] == 0.0)
        assert np.all(clip.samples[bounds[5] + ramp :] == 0.0)
        assert np.any(clip.samples[bounds[4] : bounds[5]] != 0.0)

    def test_brightness_scales_amplitude_linearly(self, primary):
        full = encode(white_pixel(8, 4, 2, 1), primary)
        px = np.zeros((8, 4), dtype=np.uint8)
        px[2, 1] = 51  # exactly a fifth of full brightness
        dim = encode(GrayImage(px), primary)
        assert np.allclose(dim.samples, full.samples / 5.0)

    def test_single_pixel_dominant_frequency_fft_oracle(self, primary):
        # independent of the Goertzel decoder: locate the slice's spectral
        # peak with a plain FFT and compare against the intended row tone
        rng = np.random.default_rng(11)
        bounds = column_bounds(16800, 64)
        freqs = row_frequencies(primary, 64)
        for _ in range(10):
            r, c = int(rng.integers(64)), int(rng.integers(64))
            clip = encode(white_pixel(64, 64, r, c), primary)
            chunk = clip.samples[bounds[c] : bounds[c + 1]]
            spectrum = np.abs(np.fft.rfft(chunk, 1 << 16))
            fft_freqs = np.fft.rfftfreq(1 << 16, d=1 / 16000)
            peak_hz = fft_freqs[np.argmax(spectrum)]
            resolution = 16000 / len(chunk)
            assert abs(peak_hz - freqs[r]) < resolution

    def test_top_row_sounds_higher_than_bottom(self, primary):
        top = encode(white_pixel(64, 1, 0, 0), primary)
        bottom = encode(white_pixel(64, 1, 63, 0), primary)

        def peak_hz(clip):
            spectrum = np.abs(np.fft.rfft(clip.samples))
            return np.fft.rfftfreq(len(clip), d=1 / 16000)[np.argmax(spectrum)]

        assert peak_hz(top) > peak_hz(bottom)

    def test_rejects_more_columns_than_samples(self):
        scheme = EncodingScheme("tiny", ExponentialMap(500.0, 5000.0), 0.001)
        with pytest.raises(ValueError):
            encode(GrayImage(np.zeros((2, 32), dtype=np.uint8)), scheme)


class TestGoertzel:
    @given(
        seed=st.integers(0, 2**31),
        freq=st.floats(50.0, 7900.0),
        length=st.integers(16, 600),
    )
    @settings(max_examples=60, deadline=None)
    def test_matches_direct_dft_projection(self, seed, freq, length):
        rng = np.random.default_rng(seed)
        x = rng.uniform(-1, 1, length)
        want = dft_magnitude_oracle(x, freq, 16000)
        got = goertzel_magnitude(x, freq, 16000)
        assert got == pytest.approx(want, rel=1e-8, abs=1e-9)

    def test_matches_fft_at_bin_frequencies(self):
        rng = np.random.default_rng(5)
        x = rng.uniform(-1, 1, 256)
        fft = np.abs(np.fft.rfft(x))
        for k in (0, 1, 17, 64, 128):
            got = goertzel_magnitude(x, k * 16000 / 256, 16000)
            assert got == pytest.approx(fft[k], rel=1e-9)

    def test_batched_equals_scalar(self):
        rng = np.random.default_rng(6)
        segs = rng.uniform(-1, 1, (3, 100))
        freqs = np.array([440.0, 1000.0, 3333.3])
        batch = goertzel_magnitudes(segs, freqs, 16000)
        for i in range(3):
            for j, f in enumerate(freqs):
                assert batch[i, j] == pytest.approx(
                    goertzel_magnitude(segs[i], f, 16000), rel=1e-10
                )

    def test_pure_tone_detection(self):
        n = np.arange(400)
        x = 0.7 * np.sin(2 * np.pi * 1000.0 * n / 16000)
        on_target = goertzel_magnitude(x, 1000.0, 16000)
        off_target = goertzel_magnitude(x, 3000.0, 16000)
        assert on_target > 50 * off_target


class TestDecode:
    def test_undecodable_geometry_rejected(self, primary):
        clip = encode(white_pixel(64, 64, 10, 10), primary)
        with pytest.raises(UndecodableGeometryError):
            decode(clip, primary, 64, 64)

    def test_single_pixel_round_trip_argmax(self, tanh2):
        rng = np.random.default_rng(9)
        for _ in range(5):
            r, c = int(rng.integers(64)), int(rng.integers(64))
            clip = encode(white_pixel(64, 64, r, c), tanh2)
            back = decode(clip, tanh2, 64, 64)
            assert np.unravel_index(np.argmax(back.pixels), (64, 64)) == (r, c)

    def test_solid_shape_round_trip_correlation(self, tanh2):
        img = render_shape(StimulusSpec("shapes", "circle"), 64)
        back = decode(encode(img, tanh2), tanh2, 64, 64)
        a = img.pixels.ravel().astype(float)
        b = back.pixels.ravel().astype(float)
        r = np.corrcoef(a, b)[0, 1]
        assert r >= 0.95

    def test_silent_clip_decodes_black(self, tanh2):
        clip = AudioClip(np.zeros(sample_count(tanh2)), 16000)
        img = decode(clip, tanh2, 64, 64)
        assert np.all(img.pixels == 0)

    def test_wrong_length_rejected(self, tanh2):
        clip = AudioClip(np.zeros(1000), 16000)
        with pytest.raises(ValueError):
            decode(clip, tanh2, 64, 64)

    def test_bad_geometry_rejected(self, tanh2):
        clip = AudioClip(np.zeros(sample_count(tanh2)), 16000)
        with pytest.raises(ValueError):
            decode(clip, tanh2, 1, 64)

    def test_brightest_detection_maps_to_255(self, tanh2):
        clip = encode(white_pixel(64, 64, 30, 30), tanh2)
        back = decode(clip, tanh2, 64, 64)
        assert back.pixels.max() == 255
