"""Decoding, resampling, and segmentation behavior."""

import numpy as np
import pytest

from stemextract.audio import Clip, load_wav, resample_linear, segment_clip
from stemextract.errors import SkippedInput

from conftest import sine, write_wav, write_wav_pcm


class TestLoadWav:
    def test_16bit_values_decode_exactly(self, tmp_path):
        pcm = np.array([0, 16384, -16384, 32767, -32767], dtype="<i2")
        path = tmp_path / "x.wav"
        write_wav_pcm(path, pcm, rate=8000)
        clip = load_wav(path)
        assert clip.rate == 8000
        np.testing.assert_array_equal(
            clip.samples, pcm.astype(np.float64) / 32767.0
        )

    def test_8bit_is_unsigned_with_midpoint_128(self, tmp_path):
        pcm = np.array([128, 255, 0, 192], dtype=np.uint8)
        path = tmp_path / "x.wav"
        write_wav_pcm(path, pcm)
        clip = load_wav(path)
        np.testing.assert_array_equal(
            clip.samples, (pcm.astype(np.float64) - 128.0) / 127.0
        )

    def test_32bit_full_scale(self, tmp_path):
        pcm = np.array([2147483647, -2147483647, 0], dtype="<i4")
        path = tmp_path / "x.wav"
        write_wav_pcm(path, pcm)
        clip = load_wav(path)
        np.testing.assert_array_equal(clip.samples, [1.0, -1.0, 0.0])

    def test_stereo_averages_to_mono(self, tmp_path):
        left = np.array([1000, -2000, 30000], dtype="<i2")
        right = np.array([3000, 2000, -30000], dtype="<i2")
        path = tmp_path / "x.wav"
        write_wav_pcm(path, np.stack([left, right], axis=1), channels=2)
        clip = load_wav(path)
        expected = (left.astype(np.float64) + right) / 2.0 / 32767.0
        np.testing.assert_array_equal(clip.samples, expected)

    def test_missing_file_is_skipped_input(self, tmp_path):
        with pytest.raises(SkippedInput, match="cannot decode"):
            load_wav(tmp_path / "absent.wav")

    def test_non_wav_bytes_are_skipped_input(self, tmp_path):
        path = tmp_path / "junk.wav"
        path.write_bytes(b"this is not audio at all, not even close")
        with pytest.raises(SkippedInput, match="cannot decode"):
            load_wav(path)

    def test_zero_frames_are_skipped_input(self, tmp_path):
        path = tmp_path / "empty.wav"
        write_wav_pcm(path, np.array([], dtype="<i2"))
        with pytest.raises(SkippedInput, match="no audio frames"):
            load_wav(path)

    def test_24bit_width_is_skipped_input(self, tmp_path):
        import wave

        path = tmp_path / "deep.wav"
        with wave.open(str(path), "wb") as handle:
            handle.setnchannels(1)
            handle.setsampwidth(3)
            handle.setframerate(8000)
            handle.writeframes(b"\x00\x01\x02" * 10)
        with pytest.raises(SkippedInput, match="unsupported sample width 3"):
            load_wav(path)


class TestResampleLinear:
    def test_matching_rate_returns_clip_unchanged(self):
        clip = Clip(samples=np.array([0.1, 0.2, 0.3]), rate=8000)
        assert resample_linear(clip, 8000) is clip

    def test_output_length_follows_duration(self):
        clip = Clip(samples=np.zeros(1000), rate=8000)
        out = resample_linear(clip, 12000)
        assert out.rate == 12000
        assert out.samples.shape[0] == round(1000 / 8000 * 12000)

    def test_sine_tracks_the_analytic_signal(self):
        rate_in, rate_out, freq = 8000, 48000, 50.0
        clip = Clip(samples=sine(freq, 1.0, rate=rate_in, amp=1.0), rate=rate_in)
        out = resample_linear(clip, rate_out)
        # linear interpolation of a sine is off by at most (w*dt)^2 / 8
        bound = (2 * np.pi * freq / rate_in) ** 2 / 8
        # the last input sample time, past which interpolation clamps
        t_max = (clip.samples.shape[0] - 1) / rate_in
        t = np.arange(out.samples.shape[0]) / rate_out
        inside = t <= t_max
        analytic = np.sin(2 * np.pi * freq * t[inside])
        assert np.max(np.abs(out.samples[inside] - analytic)) < bound

    def test_downsample_preserves_endpoint_values(self):
        # output grid points that coincide with input samples are exact
        clip = Clip(samples=np.arange(8.0), rate=4000)
        out = resample_linear(clip, 2000)
        np.testing.assert_array_equal(out.samples, [0.0, 2.0, 4.0, 6.0])

    def test_bad_target_rate_raises(self):
        clip = Clip(samples=np.zeros(10), rate=8000)
        with pytest.raises(ValueError, match="target rate"):
            resample_linear(clip, 0)


class TestSegmentClip:
    def test_windows_tile_the_clip_with_short_tail(self):
        clip = Clip(samples=np.arange(1000.0), rate=100)
        segments = segment_clip(clip, 3.0)
        assert [(s.start, s.end) for s in segments] == [
            (0, 300),
            (300, 600),
            (600, 900),
            (900, 1000),
        ]
        for seg in segments:
            np.testing.assert_array_equal(
                seg.samples, clip.samples[seg.start : seg.end]
            )

    def test_exact_multiple_has_no_tail(self):
        clip = Clip(samples=np.zeros(600), rate=100)
        spans = [(s.start, s.end) for s in segment_clip(clip, 3.0)]
        assert spans == [(0, 300), (300, 600)]

    def test_clip_shorter_than_window_is_one_segment(self):
        clip = Clip(samples=np.zeros(120), rate=100)
        segments = segment_clip(clip, 3.0)
        assert [(s.start, s.end) for s in segments] == [(0, 120)]

    def test_span_ms_rounds_sample_offsets(self):
        clip = Clip(samples=np.zeros(1000), rate=22050)
        segments = segment_clip(clip, 0.02)
        # window = round(0.02 * 22050) = 441 samples = 20 ms exactly
        assert segments[0].span_ms() == (0, 20)
        assert segments[1].span_ms() == (20, 40)

    def test_non_positive_window_raises(self):
        clip = Clip(samples=np.zeros(10), rate=100)
        with pytest.raises(ValueError, match="segment length"):
            segment_clip(clip, 0.0)
