"""Cosine similarity primitives and triplet prediction.

All arithmetic runs in float64 regardless of how embeddings are stored;
differences between near-equal cosines are the signal here and float32
would lose them. Weighted scores accumulate channel terms in configuration
order, which keeps results reproducible and lets a one-hot mix weight
vector reproduce plain mixture cosine exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .errors import ConfigMismatch, DegenerateVector, InvalidStem
from .stems import StemConfig
from .validation import as_vector

# below this L2 norm a vector's direction is considered undefined
NORM_EPS = 1e-12

CHOICE_A = "A"
CHOICE_B = "B"
CHOICE_TIE = "tie"


def cosine(u, v) -> float:
    """Cosine similarity of two vectors, clamped to [-1, 1].

    Args:
        u: first vector, any array-like of numbers.
        v: second vector, must share u's length.

    Returns:
        float in [-1, 1].

    Raises:
        DimensionMismatch: lengths differ.
        DegenerateVector: either norm is below 1e-12.
        InvalidVector: NaN or infinite components.
    """
    uu = as_vector(u, "u")
    vv = as_vector(v, "v", dim=uu.shape[0])
    nu = float(np.linalg.norm(uu))
    nv = float(np.linalg.norm(vv))
    if nu < NORM_EPS or nv < NORM_EPS:
        raise DegenerateVector(
            f"cosine undefined for near-zero vector (norms {nu:.3e}, {nv:.3e})"
        )
    value = float(np.dot(uu, vv)) / (nu * nv)
    # rounding can push |value| marginally past 1
    if value > 1.0:
        return 1.0
    if value < -1.0:
        return -1.0
    return value


@dataclass(frozen=True)
class Prediction:
    """Outcome of one triplet comparison.

    ``choice`` is "A", "B", or "tie". A tie occurs exactly when the score
    is zero; any nonzero score, however small, picks a side.
    """

    choice: str
    score: float


def _choice_from_score(score: float) -> str:
    if score > 0.0:
        return CHOICE_A
    if score < 0.0:
        return CHOICE_B
    return CHOICE_TIE


def predict_standard(x, a, b) -> Prediction:
    """Mixture-level baseline: pick the candidate closer to the reference.

    The score is cosine(x, a) - cosine(x, b), so positive favors A.
    """
    score = cosine(x, a) - cosine(x, b)
    return Prediction(choice=_choice_from_score(score), score=score)


def features_from_maps(
    x: Mapping[str, object],
    a: Mapping[str, object],
    b: Mapping[str, object],
    config: StemConfig,
) -> np.ndarray:
    """Per-channel cosine difference features from three channel maps.

    For each channel k in configuration order the feature is
    cosine(x_k, a_k) - cosine(x_k, b_k), so every component lies in [-2, 2]
    and positive components favor candidate A.

    Raises:
        ConfigMismatch: a configured channel is absent from x, a, or b.
        DimensionMismatch: vectors disagree on embedding dimension.
        DegenerateVector: a channel vector has near-zero norm; the error
            names the (role, channel) pair.
    """
    roles = (("x", x), ("a", a), ("b", b))
    missing = [
        (role, ch)
        for role, mapping in roles
        for ch in config.channels
        if ch not in mapping
    ]
    if missing:
        listed = ", ".join(f"{role}/{ch}" for role, ch in missing)
        raise ConfigMismatch(f"missing channel embeddings: {listed}")

    dim: int | None = None
    values = np.empty(config.n_channels, dtype=np.float64)
    for i, ch in enumerate(config.channels):
        vecs = {}
        for role, mapping in roles:
            vec = as_vector(mapping[ch], f"{role}[{ch}]", dim=dim)
            dim = vec.shape[0]
            if float(np.linalg.norm(vec)) < NORM_EPS:
                raise DegenerateVector(
                    f"{role}/{ch} has near-zero norm; cosine is undefined"
                )
            vecs[role] = vec
        values[i] = cosine(vecs["x"], vecs["a"]) - cosine(vecs["x"], vecs["b"])
    return values


def triplet_features(bundle, config: StemConfig) -> np.ndarray:
    """Per-channel cosine difference features for one resolved triplet.

    ``bundle`` carries the three channel maps as attributes ``x``, ``a``,
    and ``b`` (see the embedding store's bundle type). Channel order and
    error behavior follow :func:`features_from_maps`.
    """
    return features_from_maps(bundle.x, bundle.a, bundle.b, config)


def predict_weighted(features, weights) -> Prediction:
    """Weighted triplet prediction.

    The score accumulates ``weights[k] * features[k]`` left to right in
    double precision. Positive favors A, negative favors B, and an exact
    zero is a tie: identical candidates produce zero features and are
    judged neutral no matter what the weights are.

    Raises:
        ConfigMismatch: feature and weight lengths differ.
        InvalidVector: NaN or infinite components in either argument.
    """
    f = as_vector(features, "features")
    w = as_vector(weights, "weights")
    if w.shape[0] != f.shape[0]:
        raise ConfigMismatch(
            f"features have {f.shape[0]} channels but weights have "
            f"{w.shape[0]}; the stem configurations differ"
        )
    score = 0.0
    for k in range(f.shape[0]):
        score += float(w[k]) * float(f[k])
    return Prediction(choice=_choice_from_score(score), score=score)


def weights_from_mapping(weights: Mapping[str, float], config: StemConfig) -> np.ndarray:
    """Order a stem-keyed weight mapping into a config-aligned vector.

    Raises:
        InvalidStem: a key is not a channel of ``config``.
        ConfigMismatch: a configured channel has no weight.
    """
    unknown = [k for k in weights if k not in config.channels]
    if unknown:
        raise InvalidStem(
            f"weights name stems outside config {config.name!r}: "
            + ", ".join(sorted(unknown))
        )
    absent = [ch for ch in config.channels if ch not in weights]
    if absent:
        raise ConfigMismatch(
            f"weights missing channels of config {config.name!r}: "
            + ", ".join(absent)
        )
    return as_vector([float(weights[ch]) for ch in config.channels], "weights")
