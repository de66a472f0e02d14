"""Embedding packs, triplet manifests, and the in-memory store.

Pack files are a small binary container for per-stem embeddings:

    magic "STEMPAK1" | version u16 | dimension u32 | count u64 |
    metadata_size u64 | metadata (UTF-8, one tab-separated line per record:
    segment_id, stem, encoder_id, source) | payload (count x dimension
    float32, record order matching metadata) | crc32 u32 over the payload

All integers are little endian. Vectors are stored and kept as float32, so
a write/read cycle is bitwise lossless. The checksum covers the payload,
which is where silent corruption would otherwise go unnoticed.

Triplet manifests are UTF-8 TSV with eight columns: triplet_id,
configuration (XAB or XYC), instrument_class, reference segment,
candidate A segment, candidate B segment, votes for A, votes for B.
Blank lines and lines starting with '#' are ignored.
"""

from __future__ import annotations

import os
import struct
import zlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import (
    CorruptPack,
    DimensionMismatch,
    DuplicateRecord,
    InvalidInput,
    InvalidTriplet,
    InvalidVector,
    MissingStem,
    ParseError,
    UnsupportedFormat,
)
from .stems import StemConfig, parse_stem
from .validation import check_choice

PACK_MAGIC = b"STEMPAK1"
PACK_VERSION = 1

SOURCE_MSS = "mss"
SOURCE_GROUND_TRUTH = "ground_truth"
SOURCE_MIX_NATIVE = "mix_native"
SOURCES = (SOURCE_MSS, SOURCE_GROUND_TRUTH, SOURCE_MIX_NATIVE)

CONFIGURATION_XAB = "XAB"
CONFIGURATION_XYC = "XYC"
CONFIGURATIONS = (CONFIGURATION_XAB, CONFIGURATION_XYC)

_HEADER = struct.Struct("<8sHIQQ")
_CRC = struct.Struct("<I")


def _check_field(value: str, name: str) -> str:
    if not isinstance(value, str) or not value:
        raise InvalidInput(f"{name} must be a non-empty string, got {value!r}")
    if "\t" in value or "\n" in value or "\r" in value:
        raise InvalidInput(f"{name} must not contain tabs or newlines: {value!r}")
    return value


@dataclass(frozen=True)
class EmbeddingRecord:
    """One embedding: a segment's stem under a given encoder and source.

    ``segment_id`` identifies an audio excerpt (track id plus time span).
    ``source`` records where the stems came from: a separation model
    ("mss"), ground-truth stem tracks ("ground_truth"), or an embedding of
    the untouched mixture ("mix_native"). The vector is kept as float32
    exactly as stored on disk; ``norm`` caches its L2 norm in double
    precision.
    """

    segment_id: str
    stem: str
    encoder_id: str
    source: str
    vector: np.ndarray
    norm: float = field(init=False)

    def __post_init__(self) -> None:
        _check_field(self.segment_id, "segment_id")
        _check_field(self.encoder_id, "encoder_id")
        parse_stem(_check_field(self.stem, "stem"))
        check_choice(_check_field(self.source, "source"), "source", SOURCES)
        vec = np.asarray(self.vector, dtype=np.float32)
        if vec.ndim != 1 or vec.size == 0:
            raise InvalidInput(
                f"vector for {self.segment_id}/{self.stem} must be a "
                f"non-empty 1-D array, got shape {vec.shape}"
            )
        if not np.all(np.isfinite(vec)):
            raise InvalidVector(
                f"vector for {self.segment_id}/{self.stem} has NaN or inf"
            )
        vec = np.ascontiguousarray(vec)
        vec.setflags(write=False)
        object.__setattr__(self, "vector", vec)
        object.__setattr__(
            self, "norm", float(np.linalg.norm(vec.astype(np.float64)))
        )

    @property
    def key(self) -> tuple[str, str, str, str]:
        return (self.segment_id, self.stem, self.encoder_id, self.source)


@dataclass(frozen=True)
class PackSummary:
    """What a pack write produced: record count, dimension, checksum."""

    count: int
    dimension: int
    checksum: int


class EmbeddingStore:
    """Indexed lookup of embeddings by (segment, stem, encoder, source).

    Records from the same encoder must share one dimension; different
    encoders may differ. Insertion order is preserved so a store can be
    written back to a pack reproducibly. Stores are mutable while being
    filled and are treated as immutable once handed to readers.
    """

    def __init__(self) -> None:
        self._records: dict[tuple[str, str, str, str], EmbeddingRecord] = {}
        self._encoder_dims: dict[str, int] = {}

    def __len__(self) -> int:
        return len(self._records)

    def __iter__(self) -> Iterator[EmbeddingRecord]:
        return iter(self._records.values())

    def add(self, record: EmbeddingRecord) -> None:
        """Insert one record.

        Raises:
            DuplicateRecord: the key is already present.
            DimensionMismatch: dimension differs from earlier records of
                the same encoder.
        """
        dim = int(record.vector.shape[0])
        known = self._encoder_dims.get(record.encoder_id)
        if known is not None and known != dim:
            raise DimensionMismatch(
                f"encoder {record.encoder_id!r} has dimension {known}, "
                f"record {record.segment_id}/{record.stem} has {dim}"
            )
        if record.key in self._records:
            raise DuplicateRecord("duplicate record " + "/".join(record.key))
        self._records[record.key] = record
        self._encoder_dims.setdefault(record.encoder_id, dim)

    def add_all(self, records: Iterable[EmbeddingRecord]) -> int:
        n = 0
        for rec in records:
            self.add(rec)
            n += 1
        return n

    def merge(self, other: "EmbeddingStore") -> int:
        return self.add_all(other)

    def records(self) -> tuple[EmbeddingRecord, ...]:
        """All records in insertion order."""
        return tuple(self._records.values())

    def get(
        self, segment_id: str, stem: str, encoder_id: str, source: str
    ) -> np.ndarray | None:
        rec = self._records.get((segment_id, stem, encoder_id, source))
        return None if rec is None else rec.vector

    def get_record(
        self, segment_id: str, stem: str, encoder_id: str, source: str
    ) -> EmbeddingRecord | None:
        return self._records.get((segment_id, stem, encoder_id, source))

    def require(
        self, segment_id: str, stem: str, encoder_id: str, source: str
    ) -> np.ndarray:
        vec = self.get(segment_id, stem, encoder_id, source)
        if vec is None:
            raise MissingStem(
                f"no embedding for segment {segment_id!r} stem {stem!r} "
                f"(encoder {encoder_id!r}, source {source!r})",
                missing=[(segment_id, stem)],
            )
        return vec

    def segments(self) -> list[str]:
        """Sorted unique segment ids."""
        return sorted({key[0] for key in self._records})

    def stems_for(
        self, segment_id: str, encoder_id: str, source: str
    ) -> list[str]:
        return sorted(
            key[1]
            for key in self._records
            if key[0] == segment_id and key[2] == encoder_id and key[3] == source
        )

    def encoder_dimension(self, encoder_id: str) -> int | None:
        return self._encoder_dims.get(encoder_id)

    def encoders(self) -> list[str]:
        """Sorted encoder ids present in the store."""
        return sorted(self._encoder_dims)


def write_pack(
    path: str | Path,
    records: Sequence[EmbeddingRecord] | EmbeddingStore,
    dimension: int | None = None,
) -> PackSummary:
    """Write records to a pack file atomically.

    Args:
        path: destination file.
        records: records (or a whole store) sharing one dimension.
        dimension: expected dimension; required when ``records`` is empty,
            otherwise checked against the records if given.

    Returns:
        PackSummary with the count, dimension, and payload checksum.

    Raises:
        DimensionMismatch: records disagree on dimension.
        DuplicateRecord: two records share a key.
        InvalidInput: empty record list without an explicit dimension.
    """
    if isinstance(records, EmbeddingStore):
        records = records.records()
    records = list(records)
    if dimension is not None:
        dim = int(dimension)
        if dim <= 0:
            raise InvalidInput(f"dimension must be positive, got {dimension}")
    elif records:
        dim = int(records[0].vector.shape[0])
    else:
        raise InvalidInput("an empty pack needs an explicit dimension")

    seen: set[tuple[str, str, str, str]] = set()
    meta_lines = []
    for rec in records:
        if rec.vector.shape[0] != dim:
            raise DimensionMismatch(
                f"record {rec.segment_id}/{rec.stem} has dimension "
                f"{rec.vector.shape[0]}, pack dimension is {dim}"
            )
        if rec.key in seen:
            raise DuplicateRecord(
                "duplicate record " + "/".join(rec.key)
            )
        seen.add(rec.key)
        meta_lines.append(
            f"{rec.segment_id}\t{rec.stem}\t{rec.encoder_id}\t{rec.source}\n"
        )

    metadata = "".join(meta_lines).encode("utf-8")
    if records:
        payload = np.ascontiguousarray(
            np.stack([rec.vector for rec in records]).astype("<f4", copy=False)
        ).tobytes()
    else:
        payload = b""
    checksum = zlib.crc32(payload) & 0xFFFFFFFF
    header = _HEADER.pack(
        PACK_MAGIC, PACK_VERSION, dim, len(records), len(metadata)
    )

    out = Path(path)
    tmp = out.with_name(out.name + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(header)
        fh.write(metadata)
        fh.write(payload)
        fh.write(_CRC.pack(checksum))
    os.replace(tmp, out)
    return PackSummary(count=len(records), dimension=dim, checksum=checksum)


def read_pack(path: str | Path) -> EmbeddingStore:
    """Read and verify a pack file into an indexed store.

    Raises:
        UnsupportedFormat: wrong magic or version.
        CorruptPack: truncation, trailing bytes, malformed metadata, or a
            checksum mismatch.
        DuplicateRecord: two records share a key.
    """
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise CorruptPack(f"{path}: file shorter than the fixed header")
    magic, version, dim, count, meta_size = _HEADER.unpack_from(data, 0)
    if magic != PACK_MAGIC:
        raise UnsupportedFormat(f"{path}: not a pack file (bad magic)")
    if version != PACK_VERSION:
        raise UnsupportedFormat(
            f"{path}: pack version {version} is not supported"
        )
    payload_size = count * dim * 4
    expected = _HEADER.size + meta_size + payload_size + _CRC.size
    if len(data) != expected:
        raise CorruptPack(
            f"{path}: size {len(data)} does not match header "
            f"(expected {expected})"
        )

    meta_start = _HEADER.size
    payload_start = meta_start + meta_size
    try:
        metadata = data[meta_start:payload_start].decode("utf-8")
    except UnicodeDecodeError as exc:
        raise CorruptPack(f"{path}: metadata is not valid UTF-8: {exc}") from None
    lines = metadata.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if len(lines) != count:
        raise CorruptPack(
            f"{path}: header count {count} but {len(lines)} metadata lines"
        )

    payload = data[payload_start : payload_start + payload_size]
    (crc_stored,) = _CRC.unpack_from(data, payload_start + payload_size)
    if zlib.crc32(payload) & 0xFFFFFFFF != crc_stored:
        raise CorruptPack(f"{path}: payload checksum mismatch")

    vectors = (
        np.frombuffer(payload, dtype="<f4").reshape(count, dim) if count else None
    )
    store = EmbeddingStore()
    for i, line in enumerate(lines):
        parts = line.split("\t")
        if len(parts) != 4:
            raise CorruptPack(
                f"{path}: metadata line {i + 1} has {len(parts)} fields, "
                "expected 4"
            )
        try:
            store.add(
                EmbeddingRecord(
                    segment_id=parts[0],
                    stem=parts[1],
                    encoder_id=parts[2],
                    source=parts[3],
                    vector=vectors[i],
                )
            )
        except InvalidInput as exc:
            raise CorruptPack(f"{path}: metadata line {i + 1}: {exc}") from None
    return store


def load_packs(paths: Iterable[str | Path]) -> EmbeddingStore:
    """Read several packs into one store, rejecting cross-pack duplicates."""
    combined = EmbeddingStore()
    for path in paths:
        combined.merge(read_pack(path))
    return combined


@dataclass(frozen=True)
class TripletRecord:
    """One listening-test comparison with its vote tally.

    A panel heard reference X and candidates A and B, then voted for the
    candidate more similar to X. ``configuration`` is the sampling scheme:
    "XAB" uses three different tracks, "XYC" takes the reference and one
    candidate from the same track. ``instrument_class`` names the stem the
    panel was asked to focus on; overall-similarity items use "mix".
    """

    triplet_id: str
    configuration: str
    instrument_class: str
    x_segment: str
    a_segment: str
    b_segment: str
    votes_a: int
    votes_b: int

    def __post_init__(self) -> None:
        _check_field(self.triplet_id, "triplet_id")
        if self.configuration not in CONFIGURATIONS:
            raise InvalidTriplet(
                f"triplet {self.triplet_id!r}: configuration must be XAB or "
                f"XYC, got {self.configuration!r}"
            )
        parse_stem(self.instrument_class)
        segs = (self.x_segment, self.a_segment, self.b_segment)
        for name, seg in zip(("x_segment", "a_segment", "b_segment"), segs):
            _check_field(seg, name)
        if len(set(segs)) != 3:
            raise InvalidTriplet(
                f"triplet {self.triplet_id!r}: x, a, and b segments must be "
                "pairwise distinct"
            )
        for name in ("votes_a", "votes_b"):
            val = getattr(self, name)
            if not isinstance(val, int) or isinstance(val, bool) or val < 0:
                raise InvalidTriplet(
                    f"triplet {self.triplet_id!r}: {name} must be a "
                    f"non-negative integer, got {val!r}"
                )
        if self.votes_a + self.votes_b < 1:
            raise InvalidTriplet(f"triplet {self.triplet_id!r}: no votes recorded")

    @property
    def total_votes(self) -> int:
        return self.votes_a + self.votes_b


_MANIFEST_COLUMNS = 8


def load_triplets(path: str | Path) -> list[TripletRecord]:
    """Parse a triplet manifest.

    The whole file is scanned before raising, so one pass reports every
    problem with its 1-based line number. Structurally unparseable lines
    raise ParseError; lines that parse but violate a record invariant
    raise InvalidTriplet.

    Raises:
        ParseError: malformed lines (wrong column count, non-integer
            votes) or duplicate triplet ids.
        InvalidTriplet: all lines parse but at least one violates a
            record invariant.
    """
    text = Path(path).read_text(encoding="utf-8")
    triplets: list[TripletRecord] = []
    seen_ids: dict[str, int] = {}
    malformed: list[tuple[int, str]] = []
    invalid: list[tuple[int, str]] = []
    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = raw.split("\t")
        if len(parts) != _MANIFEST_COLUMNS:
            malformed.append(
                (lineno, f"expected {_MANIFEST_COLUMNS} columns, got {len(parts)}")
            )
            continue
        try:
            votes_a = int(parts[6])
            votes_b = int(parts[7])
        except ValueError:
            malformed.append((lineno, "vote counts must be integers"))
            continue
        try:
            rec = TripletRecord(
                triplet_id=parts[0],
                configuration=parts[1],
                instrument_class=parts[2],
                x_segment=parts[3],
                a_segment=parts[4],
                b_segment=parts[5],
                votes_a=votes_a,
                votes_b=votes_b,
            )
        except (InvalidInput, InvalidTriplet) as exc:
            invalid.append((lineno, str(exc)))
            continue
        if rec.triplet_id in seen_ids:
            malformed.append(
                (
                    lineno,
                    f"duplicate triplet_id {rec.triplet_id!r} "
                    f"(first seen on line {seen_ids[rec.triplet_id]})",
                )
            )
            continue
        seen_ids[rec.triplet_id] = lineno
        triplets.append(rec)
    if malformed:
        detail = "; ".join(f"line {n}: {msg}" for n, msg in malformed + invalid)
        raise ParseError(
            f"{path}: {len(malformed) + len(invalid)} bad manifest line(s): {detail}",
            line_numbers=[n for n, _ in malformed + invalid],
        )
    if invalid:
        detail = "; ".join(f"line {n}: {msg}" for n, msg in invalid)
        raise InvalidTriplet(
            f"{path}: {len(invalid)} invalid triplet(s): {detail}"
        )
    return triplets


def write_triplets(path: str | Path, triplets: Sequence[TripletRecord]) -> None:
    """Write a triplet manifest (atomic, UTF-8, LF endings)."""
    lines = [
        "# triplet_id\tconfiguration\tinstrument_class\tx\ta\tb\tvotes_a\tvotes_b"
    ]
    for t in triplets:
        lines.append(
            "\t".join(
                (
                    t.triplet_id,
                    t.configuration,
                    t.instrument_class,
                    t.x_segment,
                    t.a_segment,
                    t.b_segment,
                    str(t.votes_a),
                    str(t.votes_b),
                )
            )
        )
    out = Path(path)
    tmp = out.with_name(out.name + ".tmp")
    tmp.write_text("\n".join(lines) + "\n", encoding="utf-8")
    os.replace(tmp, out)


@dataclass(frozen=True)
class StemBundle:
    """Per-channel embeddings for one triplet's three segments.

    ``x``, ``a``, and ``b`` map channel name to the stored float32 vector
    for the reference and the two candidates respectively.
    """

    triplet_id: str
    config: StemConfig
    x: dict[str, np.ndarray] = field(repr=False)
    a: dict[str, np.ndarray] = field(repr=False)
    b: dict[str, np.ndarray] = field(repr=False)


def resolve_stems(
    store: EmbeddingStore,
    triplet: TripletRecord,
    config: StemConfig,
    encoder_id: str,
    source: str,
) -> StemBundle:
    """Gather every channel embedding a triplet needs: 3 roles x K channels.

    The bundle is complete or the call fails; there is no partial result.

    Raises:
        MissingStem: any (segment, stem) embedding is absent; the error
            lists all of them.
    """
    bundles: list[dict[str, np.ndarray]] = []
    missing: list[tuple[str, str]] = []
    for seg in (triplet.x_segment, triplet.a_segment, triplet.b_segment):
        current: dict[str, np.ndarray] = {}
        for ch in config.channels:
            vec = store.get(seg, ch, encoder_id, source)
            if vec is None:
                missing.append((seg, ch))
            else:
                current[ch] = vec
        bundles.append(current)
    if missing:
        listed = ", ".join(f"{seg}/{ch}" for seg, ch in missing)
        raise MissingStem(
            f"triplet {triplet.triplet_id!r} is missing embeddings: {listed}",
            missing=missing,
        )
    return StemBundle(
        triplet_id=triplet.triplet_id,
        config=config,
        x=bundles[0],
        a=bundles[1],
        b=bundles[2],
    )
