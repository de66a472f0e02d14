"""Embedding pack emission and verification-time reading.

The pack container is the contract between this adapter and its
consumers, so its layout is implemented here from the documented format:

    magic "STEMPAK1" | version u16 LE | dimension u32 LE | count u64 LE |
    metadata length u64 LE | metadata (UTF-8, one line per record:
    segment_id \t stem \t encoder_id \t source) | payload (count x
    dimension float32 LE, row i matching metadata line i) | CRC-32 of the
    payload, u32 LE.

Writes are atomic (temp file + rename) so crashes never leave a
half-written pack behind.
"""

from __future__ import annotations

import os
import struct
import zlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import JobError

PACK_MAGIC = b"STEMPAK1"
PACK_VERSION = 1
_HEADER = struct.Struct("<8sHIQQ")
_CRC = struct.Struct("<I")

_FIELD_BANS = ("\t", "\n", "\r")


@dataclass(frozen=True)
class PackRecord:
    """One row of a pack: key fields plus the float32 vector."""

    segment_id: str
    stem: str
    encoder_id: str
    source: str
    vector: np.ndarray

    def key(self) -> tuple[str, str, str, str]:
        return (self.segment_id, self.stem, self.encoder_id, self.source)


def _check_fields(record: PackRecord) -> None:
    for name, value in (
        ("segment_id", record.segment_id),
        ("stem", record.stem),
        ("encoder_id", record.encoder_id),
        ("source", record.source),
    ):
        if not value or any(ban in value for ban in _FIELD_BANS):
            raise JobError(
                f"record field {name}={value!r} is empty or contains "
                "tabs/newlines",
                stage="write",
            )


def write_pack(path: str | Path, records: list[PackRecord]) -> None:
    """Serialize records in the given order, atomically.

    Raises:
        JobError: empty record list, inconsistent dimensions, duplicate
            keys, or malformed key fields.
    """
    if not records:
        raise JobError("refusing to write an empty pack", stage="write")
    dim = int(np.asarray(records[0].vector).shape[0])
    seen = set()
    meta_lines = []
    rows = []
    for record in records:
        _check_fields(record)
        vector = np.asarray(record.vector, dtype=np.float32)
        if vector.ndim != 1 or vector.shape[0] != dim:
            raise JobError(
                f"record {record.segment_id}/{record.stem} has shape "
                f"{vector.shape}, expected ({dim},)",
                stage="write",
            )
        if record.key() in seen:
            raise JobError(
                f"duplicate record key {record.key()}", stage="write"
            )
        seen.add(record.key())
        meta_lines.append(
            f"{record.segment_id}\t{record.stem}\t{record.encoder_id}\t"
            f"{record.source}\n"
        )
        rows.append(vector)
    metadata = "".join(meta_lines).encode("utf-8")
    payload = np.ascontiguousarray(np.stack(rows)).astype("<f4").tobytes()
    blob = (
        _HEADER.pack(PACK_MAGIC, PACK_VERSION, dim, len(records), len(metadata))
        + metadata
        + payload
        + _CRC.pack(zlib.crc32(payload) & 0xFFFFFFFF)
    )
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(blob)
    os.replace(tmp, path)


def read_pack(path: str | Path) -> list[PackRecord]:
    """Parse a pack back into records, verifying structure and checksum.

    Used by verification only; consumers of packs have their own readers.

    Raises:
        JobError: structural damage, checksum mismatch, or an unsupported
            version (stage "verify").
    """

    def bad(detail: str) -> JobError:
        return JobError(f"{path}: {detail}", stage="verify")

    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise bad("shorter than the fixed header")
    magic, version, dim, count, meta_size = _HEADER.unpack_from(data, 0)
    if magic != PACK_MAGIC:
        raise bad("bad magic")
    if version != PACK_VERSION:
        raise bad(f"unsupported pack version {version}")
    payload_size = count * dim * 4
    if len(data) != _HEADER.size + meta_size + payload_size + _CRC.size:
        raise bad("size does not match header")
    meta_end = _HEADER.size + meta_size
    payload = data[meta_end : meta_end + payload_size]
    (crc,) = _CRC.unpack_from(data, meta_end + payload_size)
    if crc != zlib.crc32(payload) & 0xFFFFFFFF:
        raise bad("payload checksum mismatch")
    lines = data[_HEADER.size : meta_end].decode("utf-8").split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if len(lines) != count:
        raise bad(f"metadata holds {len(lines)} lines for {count} records")
    vectors = np.frombuffer(payload, dtype="<f4").reshape(count, dim)
    records = []
    for i, line in enumerate(lines):
        parts = line.split("\t")
        if len(parts) != 4:
            raise bad(f"metadata line {i + 1} has {len(parts)} fields")
        records.append(
            PackRecord(
                segment_id=parts[0],
                stem=parts[1],
                encoder_id=parts[2],
                source=parts[3],
                vector=vectors[i].copy(),
            )
        )
    return records
