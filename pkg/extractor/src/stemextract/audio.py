"""WAV decoding, mono mixdown, resampling, and fixed-window segmentation."""

from __future__ import annotations

import wave
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import SkippedInput

# PCM integer full-scale per sample width in bytes
_SCALE = {1: 127.0, 2: 32767.0, 4: 2147483647.0}


@dataclass(frozen=True)
class Clip:
    """A decoded mono waveform (float64 in [-1, 1]) and its sample rate."""

    samples: np.ndarray
    rate: int

    @property
    def duration_samples(self) -> int:
        return int(self.samples.shape[0])


def load_wav(path: str | Path) -> Clip:
    """Decode a PCM WAV file to mono float64.

    8-bit files are unsigned per the format; 16- and 32-bit are signed
    little-endian. Multi-channel audio is averaged to mono.

    Raises:
        SkippedInput: missing file, non-WAV bytes, or an unsupported
            sample format.
    """
    try:
        with wave.open(str(path), "rb") as handle:
            n_channels = handle.getnchannels()
            width = handle.getsampwidth()
            rate = handle.getframerate()
            frames = handle.readframes(handle.getnframes())
    except (OSError, wave.Error, EOFError) as exc:
        raise SkippedInput(f"{path}: cannot decode: {exc}") from None
    if width not in _SCALE:
        raise SkippedInput(f"{path}: unsupported sample width {width}")
    if width == 1:
        raw = np.frombuffer(frames, dtype=np.uint8).astype(np.float64) - 128.0
    else:
        dtype = np.dtype(f"<i{width}")
        raw = np.frombuffer(frames, dtype=dtype).astype(np.float64)
    if n_channels > 1:
        raw = raw[: len(raw) - len(raw) % n_channels]
        raw = raw.reshape(-1, n_channels).mean(axis=1)
    samples = raw / _SCALE[width]
    if samples.size == 0:
        raise SkippedInput(f"{path}: no audio frames")
    return Clip(samples=samples, rate=rate)


def resample_linear(clip: Clip, target_rate: int) -> Clip:
    """Resample by linear interpolation onto the target rate's grid.

    Deliberately simple and fully deterministic; the job sidecar records
    that this method was used.
    """
    if target_rate <= 0:
        raise ValueError(f"target rate must be positive, got {target_rate}")
    if clip.rate == target_rate:
        return clip
    duration = clip.samples.shape[0] / clip.rate
    n_out = max(1, int(round(duration * target_rate)))
    old_t = np.arange(clip.samples.shape[0]) / clip.rate
    new_t = np.arange(n_out) / target_rate
    return Clip(samples=np.interp(new_t, old_t, clip.samples), rate=target_rate)


@dataclass(frozen=True)
class Segment:
    """A fixed-window excerpt of a clip.

    ``start``/``end`` are sample offsets at the clip's rate; the final
    segment of a clip may be shorter than the window.
    """

    samples: np.ndarray
    rate: int
    start: int
    end: int

    def span_ms(self) -> tuple[int, int]:
        return (
            int(round(self.start * 1000 / self.rate)),
            int(round(self.end * 1000 / self.rate)),
        )


def segment_clip(clip: Clip, segment_seconds: float) -> list[Segment]:
    """Cut a clip into consecutive fixed-length windows.

    The tail is kept even when shorter than the window; encoders handle
    padding natively.
    """
    if segment_seconds <= 0:
        raise ValueError(
            f"segment length must be positive, got {segment_seconds}"
        )
    window = max(1, int(round(segment_seconds * clip.rate)))
    segments = []
    for start in range(0, clip.samples.shape[0], window):
        end = min(start + window, clip.samples.shape[0])
        segments.append(
            Segment(
                samples=clip.samples[start:end],
                rate=clip.rate,
                start=start,
                end=end,
            )
        )
    return segments
