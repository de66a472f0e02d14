"""Shared fixtures: WAV builders that do not depend on stemextract."""

import wave

import numpy as np
import pytest

RATE = 22050


def write_wav_pcm(path, pcm, rate=RATE, channels=1):
    """Write raw integer PCM frames exactly as given.

    dtype u1 means 8-bit unsigned; i2/i4 are signed little-endian. For
    multi-channel audio pass an (n, channels) array; it is interleaved.
    """
    pcm = np.asarray(pcm)
    with wave.open(str(path), "wb") as handle:
        handle.setnchannels(channels)
        handle.setsampwidth(pcm.dtype.itemsize)
        handle.setframerate(rate)
        handle.writeframes(np.ascontiguousarray(pcm).tobytes())


def write_wav(path, samples, rate=RATE, width=2):
    """Write float samples in [-1, 1] as PCM of the given byte width."""
    clipped = np.clip(np.asarray(samples, dtype=np.float64), -1.0, 1.0)
    channels = 1 if clipped.ndim == 1 else clipped.shape[1]
    if width == 1:
        pcm = (np.round(clipped * 127.0) + 128).astype(np.uint8)
    elif width == 2:
        pcm = np.round(clipped * 32767.0).astype("<i2")
    elif width == 4:
        pcm = np.round(clipped * 2147483647.0).astype("<i4")
    else:
        raise ValueError(f"unsupported width {width}")
    write_wav_pcm(path, pcm, rate=rate, channels=channels)


def sine(freq, seconds, rate=RATE, amp=0.5):
    t = np.arange(int(round(seconds * rate))) / rate
    return amp * np.sin(2 * np.pi * freq * t)


@pytest.fixture()
def song_pair(tmp_path):
    """Two short WAV tracks with distinct names and spectra."""
    a = tmp_path / "song_a.wav"
    b = tmp_path / "song_b.wav"
    write_wav(a, sine(110, 2.2) + sine(880, 2.2, amp=0.25))
    write_wav(b, sine(220, 2.2) + sine(3500, 2.2, amp=0.25))
    return [a, b]


@pytest.fixture()
def ground_truth_dir(tmp_path):
    """A per-stem directory: bass + keys (piano alias) + flute (residual)."""
    root = tmp_path / "track_gt"
    root.mkdir()
    write_wav(root / "bass.wav", sine(80, 2.2))
    write_wav(root / "keys.wav", sine(700, 2.2, amp=0.3))
    write_wav(root / "flute.wav", sine(1500, 2.2, amp=0.2))
    return root
