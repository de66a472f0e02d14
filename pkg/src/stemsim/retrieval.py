"""Query-by-example retrieval with per-stem weights.

The index is a deliberate brute-force scan: every candidate is scored as
the weighted sum of per-channel cosines against the reference, channels
accumulated in configuration order in double precision. At the library
sizes in scope this is cheap, exactly reproducible, and trivially
verifiable against an independent oracle, which is the point.

Scores: score(c) = sum_k w_k * cos(ref_k, c_k) over active channels;
channels excluded by the filter contribute exactly 0.0. Results are
sorted by descending score, ties broken by ascending segment_id, so
pagination is stable.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    DegenerateQuery,
    DimensionMismatch,
    EmptyDataset,
    InvalidEntry,
    InvalidInput,
    InvalidStem,
    UnknownSegment,
)
from .presets import WeightPreset, builtin_presets, load_preset_dir
from .similarity import NORM_EPS, weights_from_mapping
from .stems import StemConfig
from .store import EmbeddingStore
from .validation import as_vector, check_positive_int


@dataclass(frozen=True)
class LibraryEntry:
    """One searchable segment: its per-channel embeddings plus display text."""

    segment_id: str
    embeddings: Mapping[str, np.ndarray] = field(repr=False)
    display: dict[str, str] = field(default_factory=dict)


@dataclass(frozen=True)
class QuerySpec:
    """What to search for.

    ``reference`` is a segment_id present in the index or an inline
    mapping of channel name to embedding vector (all configured channels
    required). ``weights`` maps channel names to weights, or is a vector
    in configuration channel order. ``channel_filter`` restricts scoring
    to a subset of channels; None means all.
    """

    reference: str | Mapping[str, object]
    weights: Mapping[str, float] | Sequence[float] | np.ndarray
    top_k: int = 10
    channel_filter: frozenset[str] | None = None


@dataclass(frozen=True)
class QueryResult:
    """One ranked hit: total score plus the per-channel contributions.

    ``breakdown`` holds w_k * cos_k per channel in configuration order;
    its values sum exactly to ``score`` (inactive channels are 0.0).
    """

    segment_id: str
    score: float
    breakdown: dict[str, float]
    display: dict[str, str] = field(default_factory=dict)


def _clamp(value: float) -> float:
    if value > 1.0:
        return 1.0
    if value < -1.0:
        return -1.0
    return value


class SearchIndex:
    """Immutable scan index: per-channel matrices with precomputed norms."""

    def __init__(
        self,
        config: StemConfig,
        dimension: int,
        segment_ids: tuple[str, ...],
        matrices: dict[str, np.ndarray],
        norms: dict[str, np.ndarray],
        entries: tuple[LibraryEntry, ...],
    ):
        self.config = config
        self.dimension = dimension
        self.segment_ids = segment_ids
        self._matrices = matrices
        self._norms = norms
        self.entries = entries
        self._position = {sid: i for i, sid in enumerate(segment_ids)}

    def __len__(self) -> int:
        return len(self.segment_ids)

    def position(self, segment_id: str) -> int:
        try:
            return self._position[segment_id]
        except KeyError:
            raise UnknownSegment(
                f"segment {segment_id!r} is not in the library"
            ) from None

    def norm(self, segment_id: str, channel: str) -> float:
        """Precomputed L2 norm of one entry channel."""
        pos = self.position(segment_id)
        if channel not in self._norms:
            raise InvalidStem(
                f"channel {channel!r} is not part of config {self.config.name!r}"
            )
        return float(self._norms[channel][pos])

    def channel_vector(self, position: int, channel: str) -> np.ndarray:
        return self._matrices[channel][position]

    def channel_norm(self, position: int, channel: str) -> float:
        return float(self._norms[channel][position])


def build_index(entries: Iterable[LibraryEntry], config: StemConfig) -> SearchIndex:
    """Validate entries and build the immutable scan index.

    Entries are ordered by segment_id inside the index regardless of
    input order.

    Raises:
        EmptyDataset: no entries.
        InvalidEntry: missing channels, dimension disagreement, repeated
            segment ids, non-finite values, or a zero-norm channel; the
            message names the offending segment.
    """
    items = sorted(entries, key=lambda e: e.segment_id)
    if not items:
        raise EmptyDataset("an index needs at least one entry")
    seen: set[str] = set()
    dimension: int | None = None
    per_channel: dict[str, list[np.ndarray]] = {ch: [] for ch in config.channels}
    for entry in items:
        if entry.segment_id in seen:
            raise InvalidEntry(f"duplicate segment_id {entry.segment_id!r}")
        seen.add(entry.segment_id)
        missing = [ch for ch in config.channels if ch not in entry.embeddings]
        if missing:
            raise InvalidEntry(
                f"entry {entry.segment_id!r} is missing channels: "
                + ", ".join(missing)
            )
        for ch in config.channels:
            try:
                vec = as_vector(
                    entry.embeddings[ch], f"{entry.segment_id}/{ch}", dim=dimension
                )
            except InvalidInput as exc:
                raise InvalidEntry(f"entry {entry.segment_id!r}: {exc}") from None
            dimension = vec.shape[0]
            if float(np.linalg.norm(vec)) < NORM_EPS:
                raise InvalidEntry(
                    f"entry {entry.segment_id!r} channel {ch!r} has "
                    "near-zero norm"
                )
            per_channel[ch].append(vec)

    matrices = {
        ch: np.ascontiguousarray(np.stack(vecs)) for ch, vecs in per_channel.items()
    }
    # per-row norm calls keep these bitwise identical to single-vector norms
    norms = {
        ch: np.array(
            [float(np.linalg.norm(mat[i])) for i in range(mat.shape[0])],
            dtype=np.float64,
        )
        for ch, mat in matrices.items()
    }
    return SearchIndex(
        config=config,
        dimension=int(dimension),
        segment_ids=tuple(e.segment_id for e in items),
        matrices=matrices,
        norms=norms,
        entries=tuple(items),
    )


def _normalize_weights(index: SearchIndex, weights) -> np.ndarray:
    if isinstance(weights, Mapping):
        return weights_from_mapping(weights, index.config)
    vec = as_vector(weights, "weights")
    if vec.shape[0] != index.config.n_channels:
        raise DimensionMismatch(
            f"weights have {vec.shape[0]} entries, config "
            f"{index.config.name!r} has {index.config.n_channels} channels"
        )
    return vec


def _active_channels(
    index: SearchIndex, channel_filter: Iterable[str] | None
) -> set[str]:
    if channel_filter is None:
        return set(index.config.channels)
    requested = set(channel_filter)
    unknown = requested - set(index.config.channels)
    if unknown:
        raise InvalidStem(
            "channel_filter names stems outside config "
            f"{index.config.name!r}: " + ", ".join(sorted(unknown))
        )
    return requested


def _reference_channels(
    index: SearchIndex, reference, active: set[str]
) -> dict[str, tuple[np.ndarray, float]]:
    """Resolve the reference to (vector, norm) per active channel."""
    if isinstance(reference, str):
        pos = index.position(reference)
        return {
            ch: (index.channel_vector(pos, ch), index.channel_norm(pos, ch))
            for ch in index.config.channels
            if ch in active
        }
    if not isinstance(reference, Mapping):
        raise InvalidInput(
            "reference must be a segment_id or a channel-to-vector mapping"
        )
    missing = [ch for ch in index.config.channels if ch not in reference]
    if missing:
        raise DegenerateQuery(
            "inline reference is missing channels: " + ", ".join(missing)
        )
    resolved = {}
    for ch in index.config.channels:
        if ch not in active:
            continue
        vec = as_vector(reference[ch], f"reference[{ch}]", dim=index.dimension)
        norm = float(np.linalg.norm(vec))
        if norm < NORM_EPS:
            raise DegenerateQuery(
                f"reference channel {ch!r} has near-zero norm"
            )
        resolved[ch] = (vec, norm)
    return resolved


def query(index: SearchIndex, spec: QuerySpec) -> list[QueryResult]:
    """Score every entry and return the top_k.

    The reference itself is included when it is part of the library;
    callers that do not want it can drop the first hit.

    Raises:
        UnknownSegment: reference id absent from the index.
        DegenerateQuery: no active channel carries a nonzero weight, or a
            needed reference channel is degenerate or missing.
        InvalidStem: channel_filter names an unknown stem.
        InvalidInput: malformed weights or top_k.
    """
    check_positive_int(spec.top_k, "top_k")
    w = _normalize_weights(index, spec.weights)
    active = _active_channels(index, spec.channel_filter)
    channel_weights = {
        ch: float(w[i]) for i, ch in enumerate(index.config.channels)
    }
    if not any(channel_weights[ch] != 0.0 for ch in active):
        raise DegenerateQuery(
            "query needs at least one nonzero weight among active channels"
        )
    ref = _reference_channels(index, spec.reference, active)

    results = []
    for pos, segment_id in enumerate(index.segment_ids):
        score = 0.0
        breakdown: dict[str, float] = {}
        for ch in index.config.channels:
            if ch in active:
                rvec, rnorm = ref[ch]
                dot = float(np.dot(rvec, index.channel_vector(pos, ch)))
                cos = _clamp(dot / (rnorm * index.channel_norm(pos, ch)))
                contribution = channel_weights[ch] * cos
            else:
                contribution = 0.0
            breakdown[ch] = contribution
            score += contribution
        results.append(
            QueryResult(
                segment_id=segment_id,
                score=score,
                breakdown=breakdown,
                display=dict(index.entries[pos].display),
            )
        )
    results.sort(key=lambda r: (-r.score, r.segment_id))
    return results[: spec.top_k]


def weight_presets(
    index: SearchIndex, preset_dir: str | None = None
) -> list[WeightPreset]:
    """Built-in presets plus any preset files matching the index config."""
    presets = builtin_presets(index.config)
    if preset_dir is not None:
        presets.extend(load_preset_dir(preset_dir, index.config))
    return presets


def library_from_store(
    store: EmbeddingStore,
    config: StemConfig,
    encoder_id: str,
    source: str,
) -> list[LibraryEntry]:
    """Collect every segment with a complete channel set into entries.

    Segments missing any configured channel are skipped; retrieval needs
    complete bundles. Entries come back sorted by segment_id.
    """
    entries = []
    for segment_id in store.segments():
        embeddings = {}
        complete = True
        for ch in config.channels:
            vec = store.get(segment_id, ch, encoder_id, source)
            if vec is None:
                complete = False
                break
            embeddings[ch] = vec
        if complete:
            entries.append(
                LibraryEntry(segment_id=segment_id, embeddings=embeddings)
            )
    return entries
