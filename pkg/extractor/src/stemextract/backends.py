"""Deterministic stand-in separation and encoding backends.

Real deployments plug production source-separation and audio-encoder
models in behind these two interfaces. The reference backends shipped
here are intentionally simple, fully deterministic, and version-stamped,
so packs are reproducible byte for byte and verification can demand
bitwise equality. The job sidecar records which backend produced a pack
and whether it is bit-deterministic.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass

import numpy as np

from .errors import JobError

# frequency bands (hz, half-open) per separated stem; anything not
# claimed by a named band lands in residuals
SIX_STEM_BANDS = {
    "bass": (0.0, 180.0),
    "drums": (180.0, 420.0),
    "guitar": (420.0, 1300.0),
    "piano": (1300.0, 3200.0),
    "vocals": (3200.0, 8000.0),
}
FOUR_STEM_BANDS = {
    "bass": (0.0, 200.0),
    "drums": (200.0, 1200.0),
    "vocals": (1200.0, 6000.0),
}


@dataclass(frozen=True)
class BandSplitSeparator:
    """Splits a waveform into stems by disjoint spectral bands.

    A linear partition of the spectrum: the named stems take their bands
    and residuals takes every remaining bin, so the stems sum back to the
    input waveform up to float rounding.
    """

    bands: dict[str, tuple[float, float]]

    name = "bandsplit"
    version = "1"
    deterministic = True

    @property
    def stems(self) -> tuple[str, ...]:
        return tuple(self.bands) + ("residuals",)

    def separate(self, samples: np.ndarray, rate: int) -> dict[str, np.ndarray]:
        n = samples.shape[0]
        spectrum = np.fft.rfft(samples)
        freqs = np.fft.rfftfreq(n, d=1.0 / rate)
        claimed = np.zeros(freqs.shape[0], dtype=bool)
        out: dict[str, np.ndarray] = {}
        for stem, (lo, hi) in self.bands.items():
            mask = (freqs >= lo) & (freqs < hi) & ~claimed
            claimed |= mask
            out[stem] = np.fft.irfft(spectrum * mask, n=n)
        out["residuals"] = np.fft.irfft(spectrum * ~claimed, n=n)
        return out


@dataclass(frozen=True)
class DetBandEncoder:
    """Log-band energy profile pushed through a fixed random projection.

    The projection matrix is derived from the encoder identity alone, so
    equal waveforms encode to bitwise-equal unit-norm float32 vectors in
    every process. Inputs shorter than the native window are repeated;
    longer inputs are truncated (both recorded in the job sidecar). Pure
    silence has no spectral shape and maps to a fixed direction.
    """

    encoder_id: str
    dim: int
    rate: int = 48000
    window_seconds: float = 5.0
    n_bands: int = 96

    version = "1"
    deterministic = True

    @property
    def window(self) -> int:
        return int(round(self.window_seconds * self.rate))

    def _projection(self) -> np.ndarray:
        key = f"{self.encoder_id}:{self.version}:{self.dim}:{self.n_bands}"
        seed = zlib.crc32(key.encode("utf-8"))
        rng = np.random.default_rng(seed)
        return rng.standard_normal((self.dim, self.n_bands))

    def _band_energies(self, samples: np.ndarray) -> np.ndarray:
        spectrum = np.abs(np.fft.rfft(samples))
        freqs = np.fft.rfftfreq(samples.shape[0], d=1.0 / self.rate)
        edges = np.geomspace(20.0, self.rate / 2.0, self.n_bands + 1)
        energies = np.zeros(self.n_bands)
        for i in range(self.n_bands):
            mask = (freqs >= edges[i]) & (freqs < edges[i + 1])
            energies[i] = float(np.sum(spectrum[mask] ** 2))
        return energies

    def encode(self, samples: np.ndarray, rate: int) -> np.ndarray:
        if rate != self.rate:
            raise JobError(
                f"encoder {self.encoder_id} expects {self.rate} hz input, "
                f"got {rate}",
                stage="encode",
            )
        window = self.window
        if samples.shape[0] < window:
            reps = -(-window // samples.shape[0])
            samples = np.tile(samples, reps)[:window]
        elif samples.shape[0] > window:
            samples = samples[:window]
        profile = np.log1p(self._band_energies(samples))
        centered = profile - profile.mean()
        scale = float(np.linalg.norm(centered))
        projection = self._projection()
        if scale == 0.0:
            raw = projection @ np.ones(self.n_bands)
        else:
            raw = projection @ (centered / scale)
        vector = (raw / np.linalg.norm(raw)).astype(np.float32)
        return vector


ENCODERS = {
    "det-band-v1": DetBandEncoder(encoder_id="det-band-v1", dim=512),
    "det-band-mini-v1": DetBandEncoder(
        encoder_id="det-band-mini-v1", dim=64, window_seconds=1.0
    ),
}


def get_encoder(encoder_id: str) -> DetBandEncoder:
    try:
        return ENCODERS[encoder_id]
    except KeyError:
        known = ", ".join(sorted(ENCODERS))
        raise JobError(
            f"unknown encoder {encoder_id!r}, expected one of: {known}",
            stage="config",
        ) from None


# ground-truth stem files are grouped into fixed categories before
# encoding; anything unrecognized counts as residual content
_GROUND_TRUTH_ALIASES = {
    "bass": "bass",
    "drums": "drums",
    "percussion": "drums",
    "guitar": "guitar",
    "guitars": "guitar",
    "piano": "piano",
    "keys": "piano",
    "keyboard": "piano",
    "organ": "piano",
}
GROUND_TRUTH_CATEGORIES = ("bass", "drums", "guitar", "piano", "residuals")


def ground_truth_category(stem_name: str) -> str:
    return _GROUND_TRUTH_ALIASES.get(stem_name.lower(), "residuals")
