"""Extraction jobs: audio in, embedding pack plus sidecar out.

The adapter is a pure producer. It decodes audio, optionally separates
stems, encodes every waveform, and emits pack files for downstream
similarity tooling; it never computes similarity or fits weights itself.
Every job writes a sidecar document recording the backends, their
versions, the resampling and padding behavior used, and the exact sample
span of every segment, which is what makes packs verifiable later.
"""

from __future__ import annotations

import dataclasses
import json
from pathlib import Path

import numpy as np

from .audio import Clip, load_wav, resample_linear, segment_clip
from .backends import (
    FOUR_STEM_BANDS,
    GROUND_TRUTH_CATEGORIES,
    SIX_STEM_BANDS,
    BandSplitSeparator,
    get_encoder,
    ground_truth_category,
)
from .errors import JobError, SkippedInput, VerificationFailure
from .packfile import PackRecord, read_pack, write_pack

TOOL_NAME = "stemextract"
TOOL_VERSION = "0.1.0"

# mode name -> (separator bands or None, record source label)
MODES = {
    "mss_4": (FOUR_STEM_BANDS, "mss"),
    "mss_6": (SIX_STEM_BANDS, "mss"),
    "ground_truth": (None, "ground_truth"),
    "none": (None, "mix_native"),
}


@dataclasses.dataclass(frozen=True)
class ExtractionJob:
    """One run of the adapter: inputs, mode, encoder, output pack."""

    inputs: tuple[str, ...]
    mode: str
    encoder_id: str
    out: str
    segment_seconds: float = 5.0
    sidecar: str | None = None

    def __post_init__(self) -> None:
        if not self.inputs:
            raise JobError("no inputs given", stage="config")
        if self.mode not in MODES:
            known = ", ".join(sorted(MODES))
            raise JobError(
                f"unknown mode {self.mode!r}, expected one of: {known}",
                stage="config",
            )
        if self.segment_seconds <= 0:
            raise JobError(
                f"segment length must be positive, got {self.segment_seconds}",
                stage="config",
            )

    @property
    def sidecar_path(self) -> Path:
        if self.sidecar:
            return Path(self.sidecar)
        out = Path(self.out)
        return out.with_name(out.name + ".sidecar.json")


@dataclasses.dataclass
class ExtractReport:
    pack: str
    sidecar: str
    record_count: int
    segment_count: int
    skipped: list[tuple[str, str]]


@dataclasses.dataclass
class VerifyReport:
    checked: int
    comparison: str
    segment_ids: list[str]


def _track_id(path: Path) -> str:
    return path.stem


def _decode_ground_truth(root: Path, rate: int) -> tuple[dict, dict]:
    """Load a directory of per-stem WAVs grouped into fixed categories.

    Returns (category -> mono waveform at the encoder rate, category ->
    contributing file names). Files in one category are summed, all
    waveforms are zero-padded to the longest, and every category is
    always present: a track with no piano file has a silent piano stem,
    so record cardinality stays uniform across inputs.
    """
    stem_files = sorted(root.glob("*.wav"))
    if not stem_files:
        raise SkippedInput(f"{root}: no .wav stem files inside")
    decoded = []
    file_map: dict[str, list[str]] = {}
    for path in stem_files:
        clip = resample_linear(load_wav(path), rate)
        category = ground_truth_category(path.stem)
        decoded.append((category, clip.samples))
        file_map.setdefault(category, []).append(path.name)
    length = max(samples.shape[0] for _, samples in decoded)
    by_category = {
        category: np.zeros(length) for category in GROUND_TRUTH_CATEGORIES
    }
    for category, samples in decoded:
        padded = np.zeros(length)
        padded[: samples.shape[0]] = samples
        by_category[category] = by_category[category] + padded
    return by_category, file_map


def _segment_records(job, encoder, source, track, window_waveforms, span):
    """Encode one segment's mix and stem waveforms into pack records."""
    start_ms = int(round(span[0] * 1000 / encoder.rate))
    end_ms = int(round(span[1] * 1000 / encoder.rate))
    segment_id = f"{track}:{start_ms:07d}-{end_ms:07d}"
    records = []
    for stem, waveform in window_waveforms.items():
        records.append(
            PackRecord(
                segment_id=segment_id,
                stem=stem,
                encoder_id=job.encoder_id,
                source=source,
                vector=encoder.encode(waveform, encoder.rate),
            )
        )
    return segment_id, records


def _extract_one(job, encoder, separator, source, path: Path):
    """All records and segment spans for one input. May raise SkippedInput."""
    track = _track_id(path)
    if job.mode == "ground_truth":
        if not path.is_dir():
            raise SkippedInput(
                f"{path}: ground_truth mode expects a directory of stem WAVs"
            )
        by_category, file_map = _decode_ground_truth(path, encoder.rate)
        mix = np.sum(list(by_category.values()), axis=0)
        clip = Clip(samples=mix, rate=encoder.rate)
        input_info = {"stem_files": file_map}
    else:
        clip = resample_linear(load_wav(path), encoder.rate)
        input_info = {}

    records = []
    spans = []
    for segment in segment_clip(clip, job.segment_seconds):
        window = {"mix": segment.samples}
        if separator is not None:
            window.update(separator.separate(segment.samples, encoder.rate))
        elif job.mode == "ground_truth":
            for category, samples in by_category.items():
                window[category] = samples[segment.start : segment.end]
        segment_id, segment_records = _segment_records(
            job, encoder, source, track, window, (segment.start, segment.end)
        )
        records.extend(segment_records)
        spans.append(
            {
                "segment_id": segment_id,
                "track": track,
                "start_sample": segment.start,
                "end_sample": segment.end,
                "rate": encoder.rate,
            }
        )
    return track, records, spans, input_info


def extract(job: ExtractionJob) -> ExtractReport:
    """Run a job end to end and write the pack and its sidecar.

    Undecodable inputs are skipped and reported; any other failure aborts
    the job.

    Raises:
        JobError: configuration problems, duplicate track ids, backend
            failures, or nothing left to write.
    """
    bands, source = MODES[job.mode]
    encoder = get_encoder(job.encoder_id)
    separator = BandSplitSeparator(bands) if bands is not None else None

    all_records: list[PackRecord] = []
    all_spans: list[dict] = []
    inputs_info: list[dict] = []
    skipped: list[tuple[str, str]] = []
    seen_tracks: set[str] = set()
    for raw in job.inputs:
        path = Path(raw)
        track = _track_id(path)
        if track in seen_tracks:
            raise JobError(
                f"duplicate track id {track!r} from {path}; inputs need "
                "distinct base names",
                stage="collect",
            )
        try:
            track, records, spans, input_info = _extract_one(
                job, encoder, separator, source, path
            )
        except SkippedInput as exc:
            skipped.append((str(path), str(exc)))
            continue
        seen_tracks.add(track)
        all_records.extend(records)
        all_spans.extend(spans)
        inputs_info.append(
            {
                "path": str(path),
                "track": track,
                "n_segments": len(spans),
                **input_info,
            }
        )
    if not all_records:
        raise JobError(
            "no records extracted: every input was skipped", stage="collect"
        )
    write_pack(job.out, all_records)
    sidecar = {
        "tool": TOOL_NAME,
        "tool_version": TOOL_VERSION,
        "job": {
            "mode": job.mode,
            "source": source,
            "segment_seconds": job.segment_seconds,
            "resample": "linear",
            "short_segment_handling": "repeat-pad",
            "long_segment_handling": "truncate",
            "encoder": {
                "id": job.encoder_id,
                "version": encoder.version,
                "dimension": encoder.dim,
                "sample_rate": encoder.rate,
                "window_seconds": encoder.window_seconds,
                "deterministic": encoder.deterministic,
            },
            "separator": None
            if separator is None
            else {
                "name": separator.name,
                "version": separator.version,
                "deterministic": separator.deterministic,
                "stems": list(separator.stems),
            },
        },
        "inputs": inputs_info,
        "skipped": [{"path": p, "reason": r} for p, r in skipped],
        "segments": all_spans,
        "record_count": len(all_records),
    }
    job.sidecar_path.parent.mkdir(parents=True, exist_ok=True)
    job.sidecar_path.write_text(
        json.dumps(sidecar, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return ExtractReport(
        pack=str(job.out),
        sidecar=str(job.sidecar_path),
        record_count=len(all_records),
        segment_count=len(all_spans),
        skipped=skipped,
    )


def verify_pack(
    pack: str | Path,
    sample: int,
    sidecar: str | Path | None = None,
    seed: int = 0,
) -> VerifyReport:
    """Re-extract randomly chosen segments and compare against the pack.

    The shipped backends are bit-deterministic, so comparison is bitwise.
    A pack produced by a different encoder version cannot be verified and
    fails outright.

    Raises:
        VerificationFailure: version drift or any vector mismatch.
        JobError: unreadable pack or sidecar (stage "verify").
    """
    pack = Path(pack)
    sidecar_path = (
        Path(sidecar)
        if sidecar
        else pack.with_name(pack.name + ".sidecar.json")
    )
    if not sidecar_path.is_file():
        raise JobError(f"sidecar {sidecar_path} not found", stage="verify")
    meta = json.loads(sidecar_path.read_text(encoding="utf-8"))
    job_meta = meta["job"]
    encoder = get_encoder(job_meta["encoder"]["id"])
    stamped = job_meta["encoder"]["version"]
    if stamped != encoder.version:
        raise VerificationFailure(
            f"pack was produced by encoder version {stamped}, current "
            f"backend is version {encoder.version}; regenerate the pack"
        )
    if sample < 0:
        raise JobError(f"sample must be >= 0, got {sample}", stage="verify")

    records = read_pack(pack)
    by_segment: dict[str, dict[str, np.ndarray]] = {}
    for record in records:
        by_segment.setdefault(record.segment_id, {})[record.stem] = record.vector
    segment_ids = sorted(by_segment)
    count = min(sample, len(segment_ids))
    chosen = sorted(
        np.random.default_rng(seed).choice(
            segment_ids, size=count, replace=False
        ).tolist()
    )
    if not chosen:
        return VerifyReport(checked=0, comparison="bitwise", segment_ids=[])

    spans = {s["segment_id"]: s for s in meta["segments"]}
    inputs = {i["track"]: i for i in meta["inputs"]}
    job = ExtractionJob(
        inputs=tuple(i["path"] for i in meta["inputs"]),
        mode=job_meta["mode"],
        encoder_id=job_meta["encoder"]["id"],
        out=str(pack),
        segment_seconds=job_meta["segment_seconds"],
    )
    bands, source = MODES[job.mode]
    separator = BandSplitSeparator(bands) if bands is not None else None

    mismatches = []
    for segment_id in chosen:
        span = spans[segment_id]
        source_path = Path(inputs[span["track"]]["path"])
        if job.mode == "ground_truth":
            by_category, _ = _decode_ground_truth(source_path, encoder.rate)
            mix = np.sum(list(by_category.values()), axis=0)
            samples = mix
        else:
            samples = resample_linear(load_wav(source_path), encoder.rate).samples
        window = samples[span["start_sample"] : span["end_sample"]]
        waveforms = {"mix": window}
        if separator is not None:
            waveforms.update(separator.separate(window, encoder.rate))
        elif job.mode == "ground_truth":
            for category, track_samples in by_category.items():
                waveforms[category] = track_samples[
                    span["start_sample"] : span["end_sample"]
                ]
        stored = by_segment[segment_id]
        for stem, stored_vector in stored.items():
            fresh = encoder.encode(waveforms[stem], encoder.rate)
            if fresh.tobytes() != stored_vector.tobytes():
                mismatches.append(f"{segment_id}/{stem}")
    if mismatches:
        raise VerificationFailure(
            "re-encoded vectors differ from the pack: "
            + ", ".join(mismatches)
        )
    return VerifyReport(
        checked=len(chosen), comparison="bitwise", segment_ids=list(chosen)
    )
