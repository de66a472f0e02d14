"""stemextract: turn audio into embedding packs for similarity tooling.

The adapter decodes WAV inputs, optionally splits them into stems,
encodes every waveform with a registered embedding backend, and writes
the results as embedding pack files plus a sidecar document describing
exactly how they were produced. It is a pure producer: consumers read
the packs; nothing here ranks, scores, or fits anything.
"""

from .audio import Clip, Segment, load_wav, resample_linear, segment_clip
from .backends import (
    ENCODERS,
    BandSplitSeparator,
    DetBandEncoder,
    get_encoder,
    ground_truth_category,
)
from .errors import ExtractError, JobError, SkippedInput, VerificationFailure
from .job import (
    MODES,
    ExtractionJob,
    ExtractReport,
    VerifyReport,
    extract,
    verify_pack,
)
from .packfile import PackRecord, read_pack, write_pack

__version__ = "0.1.0"

__all__ = [
    "BandSplitSeparator",
    "Clip",
    "DetBandEncoder",
    "ENCODERS",
    "ExtractError",
    "ExtractReport",
    "ExtractionJob",
    "JobError",
    "MODES",
    "PackRecord",
    "Segment",
    "SkippedInput",
    "VerificationFailure",
    "VerifyReport",
    "extract",
    "get_encoder",
    "ground_truth_category",
    "load_wav",
    "read_pack",
    "resample_linear",
    "segment_clip",
    "verify_pack",
    "write_pack",
]
