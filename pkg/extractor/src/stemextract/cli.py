"""Command line entry point for the extraction adapter."""

from __future__ import annotations

import argparse
import sys

from .backends import ENCODERS
from .errors import ExtractError
from .job import MODES, ExtractionJob, extract, verify_pack


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="extract",
        description=(
            "Decode audio, separate stems, and encode embedding packs "
            "for downstream similarity tooling."
        ),
    )
    parser.add_argument(
        "--in",
        dest="inputs",
        nargs="+",
        required=True,
        metavar="PATH",
        help=(
            "input WAV files (or, in ground_truth mode, directories of "
            "per-stem WAVs); base names must be distinct"
        ),
    )
    parser.add_argument(
        "--mode",
        required=True,
        choices=sorted(MODES),
        help="separation mode; 'none' encodes the mix only",
    )
    parser.add_argument(
        "--encoder",
        required=True,
        choices=sorted(ENCODERS),
        help="embedding backend to run",
    )
    parser.add_argument(
        "--segment-seconds",
        type=float,
        default=5.0,
        help="segment window length in seconds (default: 5)",
    )
    parser.add_argument(
        "--out", required=True, metavar="PACK", help="output pack path"
    )
    parser.add_argument(
        "--sidecar",
        default=None,
        metavar="JSON",
        help="sidecar path (default: <out>.sidecar.json)",
    )
    parser.add_argument(
        "--verify-sample",
        type=int,
        default=0,
        metavar="N",
        help=(
            "after writing, re-extract N randomly chosen segments and "
            "require bitwise-identical vectors (default: 0, skip)"
        ),
    )
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        job = ExtractionJob(
            inputs=tuple(args.inputs),
            mode=args.mode,
            encoder_id=args.encoder,
            segment_seconds=args.segment_seconds,
            out=args.out,
            sidecar=args.sidecar,
        )
        report = extract(job)
        for path, reason in report.skipped:
            print(f"skipped: {path}: {reason}", file=sys.stderr)
        print(
            f"ok: wrote {report.record_count} records "
            f"({report.segment_count} segments) to {report.pack}"
        )
        print(f"ok: sidecar at {report.sidecar}")
        if args.verify_sample:
            check = verify_pack(report.pack, args.verify_sample)
            print(
                f"ok: verified {check.checked} segments ({check.comparison})"
            )
    except ExtractError as exc:
        print(f"error: {exc.code}: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
