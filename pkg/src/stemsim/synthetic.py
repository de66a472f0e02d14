"""Synthetic stem embeddings and vote data with a known ground truth.

Real listening-test data and encoder outputs are external assets; this
module supplies desk-scale ground truth instead. Stem vectors are drawn
uniformly on the unit sphere, a clean label is the sign of the true
weighted feature score, optional label noise flips it, and votes are a
panel majority consistent with the final label at an agreement level
sampled from [0.6, 1.0].

Generation is deterministic and partitioned by triplet index: triplet i
draws from ``np.random.default_rng([seed, i])``, so any subset can be
regenerated independently and parallel generation cannot reorder
randomness.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DegenerateVector,
    InvalidInput,
    MissingStem,
)
from .similarity import features_from_maps, predict_weighted
from .stems import SIX_STEM, StemConfig, StemKind, parse_stem
from .store import (
    SOURCE_MSS,
    SOURCES,
    EmbeddingRecord,
    EmbeddingStore,
    TripletRecord,
)
from .validation import as_vector, check_choice, check_positive_int

_SEED_MASK = (1 << 64) - 1
# margins this small are noise, not signal; such triplets are redrawn
MARGIN_EPS = 1e-9
_MAX_REDRAWS = 100

DEFAULT_ENCODER = "synthetic"


@dataclass(frozen=True)
class SynthConfig:
    """Parameters of one synthetic dataset.

    ``true_weights`` is the ground-truth weight vector (config channel
    order) that labels are generated from. ``label_noise`` is the
    probability a clean label is flipped; it must stay below 0.5 or the
    labels would carry no signal. ``panel_size`` is the number of
    synthetic votes per triplet. ``encoder_id`` and ``source`` stamp the
    emitted records so synthetic data flows through the same store paths
    as real data.
    """

    seed: int
    n_triplets: int
    true_weights: np.ndarray
    config: StemConfig = SIX_STEM
    dimension: int = 512
    label_noise: float = 0.0
    panel_size: int = 10
    encoder_id: str = DEFAULT_ENCODER
    source: str = SOURCE_MSS

    def __post_init__(self) -> None:
        if not isinstance(self.seed, int) or isinstance(self.seed, bool):
            raise InvalidInput(f"seed must be an integer, got {self.seed!r}")
        check_positive_int(self.n_triplets, "n_triplets")
        check_positive_int(self.dimension, "dimension")
        check_positive_int(self.panel_size, "panel_size")
        noise = float(self.label_noise)
        if not 0.0 <= noise < 0.5:
            raise InvalidInput(
                f"label_noise must be in [0, 0.5), got {self.label_noise!r}"
            )
        w = as_vector(
            self.true_weights, "true_weights", dim=self.config.n_channels
        )
        if float(np.linalg.norm(w)) == 0.0:
            raise InvalidInput("true_weights must not be all zero")
        object.__setattr__(self, "true_weights", w)
        check_choice(self.source, "source", SOURCES)


def _unit_vector(rng: np.random.Generator, dim: int) -> np.ndarray:
    """A float32 unit vector drawn uniformly on the sphere."""
    while True:
        v = rng.standard_normal(dim)
        norm = float(np.linalg.norm(v))
        if norm > 1e-12:
            return (v / norm).astype(np.float32)


def generate(cfg: SynthConfig) -> tuple[EmbeddingStore, list[TripletRecord]]:
    """Generate a store and a vote manifest with known ground truth.

    Every triplet gets three fresh segments (reference, A, B) with one
    embedding per channel. The clean label is the sign of the true
    weighted score over features computed from the stored float32
    vectors, exactly as any downstream consumer would recompute them;
    near-zero margins are redrawn. Votes encode a panel majority for the
    final (possibly flipped) label.

    Returns:
        (store, triplets); records and triplets are ordered by triplet
        index, segments x, a, b, channels in configuration order.
    """
    entropy = int(cfg.seed) & _SEED_MASK
    noise = float(cfg.label_noise)
    panel = cfg.panel_size
    min_major = panel // 2 + 1
    store = EmbeddingStore()
    triplets = []
    for i in range(cfg.n_triplets):
        rng = np.random.default_rng([entropy, i])
        for attempt in range(_MAX_REDRAWS):
            maps = {
                role: {
                    ch: _unit_vector(rng, cfg.dimension)
                    for ch in cfg.config.channels
                }
                for role in ("x", "a", "b")
            }
            feats = features_from_maps(
                maps["x"], maps["a"], maps["b"], cfg.config
            )
            margin = predict_weighted(feats, cfg.true_weights).score
            if abs(margin) >= MARGIN_EPS:
                break
        else:
            raise InvalidInput(
                f"triplet {i}: {_MAX_REDRAWS} consecutive near-tie draws; "
                "true_weights admit no usable margins"
            )
        label = 1 if margin > 0 else -1
        if rng.random() < noise:
            label = -label
        agreement = rng.uniform(0.6, 1.0)
        votes_major = int(
            np.clip(math.floor(agreement * panel + 0.5), min_major, panel)
        )
        votes_minor = panel - votes_major
        tid = f"syn-{i:06d}"
        seg_ids = {role: f"{tid}-{role}" for role in ("x", "a", "b")}
        for role in ("x", "a", "b"):
            for ch in cfg.config.channels:
                store.add(
                    EmbeddingRecord(
                        segment_id=seg_ids[role],
                        stem=ch,
                        encoder_id=cfg.encoder_id,
                        source=cfg.source,
                        vector=maps[role][ch],
                    )
                )
        triplets.append(
            TripletRecord(
                triplet_id=tid,
                configuration="XAB",
                instrument_class=StemKind.MIX.value,
                x_segment=seg_ids["x"],
                a_segment=seg_ids["a"],
                b_segment=seg_ids["b"],
                votes_a=votes_major if label > 0 else votes_minor,
                votes_b=votes_minor if label > 0 else votes_major,
            )
        )
    return store, triplets


@dataclass(frozen=True)
class Bleed:
    """Mix a fraction of the mixture direction into every stem vector.

    Models separation bleed: each stem vector v becomes
    normalize((1 - alpha) * v + alpha * v_mix). alpha = 0 is the exact
    identity; alpha = 1 collapses every stem onto the mix direction.
    """

    alpha: float

    def __post_init__(self) -> None:
        a = float(self.alpha)
        if not 0.0 <= a <= 1.0:
            raise InvalidInput(f"alpha must be in [0, 1], got {self.alpha!r}")


@dataclass(frozen=True)
class Dropout:
    """Remove every record of one stem channel."""

    stem: str

    def __post_init__(self) -> None:
        parse_stem(self.stem)


@dataclass(frozen=True)
class Gain:
    """Scale one stem's vectors by a positive factor.

    Cosine similarity is scale invariant, so downstream predictions must
    not change; the perturbation exists to exercise exactly that.
    """

    stem: str
    factor: float

    def __post_init__(self) -> None:
        parse_stem(self.stem)
        f = float(self.factor)
        if not (np.isfinite(f) and f > 0.0):
            raise InvalidInput(
                f"factor must be a finite positive number, got {self.factor!r}"
            )


Perturbation = Bleed | Dropout | Gain


def perturb_stems(store: EmbeddingStore, perturbation) -> EmbeddingStore:
    """Apply a perturbation, returning a new store (inputs are immutable).

    Raises:
        InvalidStem: unknown stem name.
        MissingStem: bleed needs a mix record the store does not have.
        InvalidInput: parameter out of range or unknown perturbation type.
    """
    mix = StemKind.MIX.value
    out = EmbeddingStore()
    if isinstance(perturbation, Bleed):
        alpha = float(perturbation.alpha)
        if alpha == 0.0:
            out.add_all(store.records())
            return out
        for rec in store.records():
            if rec.stem == mix:
                out.add(rec)
                continue
            mix_vec = store.get(rec.segment_id, mix, rec.encoder_id, rec.source)
            if mix_vec is None:
                raise MissingStem(
                    f"bleed needs a mix embedding for segment "
                    f"{rec.segment_id!r} (encoder {rec.encoder_id!r}, "
                    f"source {rec.source!r})",
                    missing=[(rec.segment_id, mix)],
                )
            blended = (1.0 - alpha) * rec.vector.astype(np.float64) + (
                alpha * mix_vec.astype(np.float64)
            )
            norm = float(np.linalg.norm(blended))
            if norm < 1e-12:
                raise DegenerateVector(
                    f"bleed collapsed {rec.segment_id}/{rec.stem} to zero"
                )
            out.add(
                EmbeddingRecord(
                    segment_id=rec.segment_id,
                    stem=rec.stem,
                    encoder_id=rec.encoder_id,
                    source=rec.source,
                    vector=(blended / norm).astype(np.float32),
                )
            )
        return out
    if isinstance(perturbation, Dropout):
        for rec in store.records():
            if rec.stem != perturbation.stem:
                out.add(rec)
        return out
    if isinstance(perturbation, Gain):
        factor = np.float32(perturbation.factor)
        for rec in store.records():
            if rec.stem == perturbation.stem:
                out.add(
                    EmbeddingRecord(
                        segment_id=rec.segment_id,
                        stem=rec.stem,
                        encoder_id=rec.encoder_id,
                        source=rec.source,
                        vector=rec.vector * factor,
                    )
                )
            else:
                out.add(rec)
        return out
    raise InvalidInput(
        f"unknown perturbation {type(perturbation).__name__!r}"
    )


def random_true_weights(
    seed: int, config: StemConfig, low: float = 0.1, high: float = 1.5
) -> np.ndarray:
    """A seeded positive ground-truth weight vector, handy for demos."""
    entropy = int(seed) & _SEED_MASK
    # stream index far above any triplet index, so it never collides
    rng = np.random.default_rng([entropy, 1 << 32])
    return rng.uniform(low, high, config.n_channels)
