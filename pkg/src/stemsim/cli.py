"""Command-line surface for the full pipeline.

Subcommands: ingest (validate data files), synth (generate synthetic
data), fit (cross-validated weight fitting), eval-standard (mixture
baseline table), query (one-shot retrieval), serve (HTTP service).

Flags can also come from a config file of "key = value" lines passed via
--config-file; explicit flags always win. Relative data paths resolve
against --data-dir, which defaults to the STEMSIM_DATA_DIR environment
variable, then the working directory. The tool exits 0 on success, 2 on
usage errors, and 1 on data errors with a one-line machine-parsable
message of the form "error: <ErrorName>: <detail>".
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from . import evaluation, presets, retrieval, synthetic
from .errors import EmptyDataset, InvalidInput, ParseError, StemSimError
from .regression import FitConfig
from .stems import StemConfig, config_names, get_stem_config
from .store import (
    EmbeddingStore,
    load_packs,
    load_triplets,
    read_pack,
    write_pack,
    write_triplets,
)

DATA_DIR_ENV = "STEMSIM_DATA_DIR"
DEFAULT_PORT = 8765

# config-file keys and how to parse their values; dests mirror the flags
_FILE_KEY_TYPES = {
    "packs": "paths",
    "triplets": "paths",
    "config": str,
    "encoder": str,
    "source": str,
    "cutoff": float,
    "method": str,
    "lambda": float,
    "seed": int,
    "iterations": int,
    "train-fraction": float,
    "top-k": int,
    "port": int,
    "host": str,
    "out": str,
    "out-dir": str,
    "reference": str,
    "preset": str,
    "presets-dir": str,
    "weights": str,
    "n-triplets": int,
    "dimension": int,
    "label-noise": float,
    "panel-size": int,
    "true-weights": str,
}


def _dest_for(key: str) -> str:
    dest = key.replace("-", "_")
    return "lambda_" if dest == "lambda" else dest


def load_config_file(path: str | Path) -> dict:
    """Parse a key=value config file into argparse defaults.

    Raises:
        ParseError: unknown keys, malformed lines, or bad values.
    """
    text = Path(path).read_text(encoding="utf-8")
    values: dict[str, object] = {}
    problems: list[tuple[int, str]] = []
    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            problems.append((lineno, f"expected 'key = value', got {line!r}"))
            continue
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in _FILE_KEY_TYPES:
            problems.append((lineno, f"unknown key {key!r}"))
            continue
        kind = _FILE_KEY_TYPES[key]
        try:
            if kind == "paths":
                parsed: object = [p.strip() for p in value.split(",") if p.strip()]
            else:
                parsed = kind(value)
        except ValueError:
            problems.append((lineno, f"bad value for {key!r}: {value!r}"))
            continue
        values[_dest_for(key)] = parsed
    if problems:
        detail = "; ".join(f"line {n}: {msg}" for n, msg in problems)
        raise ParseError(
            f"{path}: bad config file: {detail}",
            line_numbers=[n for n, _ in problems],
        )
    return values


def _resolve(path: str, data_dir: str) -> Path:
    p = Path(path)
    return p if p.is_absolute() else Path(data_dir) / p


def _resolve_all(paths, data_dir: str) -> list[Path]:
    return [_resolve(p, data_dir) for p in paths]


def _load_store(args) -> EmbeddingStore:
    if not args.packs:
        raise InvalidInput("at least one --packs file is required")
    return load_packs(_resolve_all(args.packs, args.data_dir))


def _load_manifests(args) -> list:
    if not args.triplets:
        raise InvalidInput("at least one --triplets manifest is required")
    triplets = []
    for path in _resolve_all(args.triplets, args.data_dir):
        triplets.extend(load_triplets(path))
    return triplets


def _pick_encoder(store: EmbeddingStore, encoder: str | None) -> str:
    if encoder:
        return encoder
    known = store.encoders()
    if len(known) == 1:
        return known[0]
    raise InvalidInput(
        "--encoder is required when the store holds "
        f"{len(known)} encoders ({', '.join(known) or 'none'})"
    )


def _stem_config(args) -> StemConfig:
    return get_stem_config(args.config)


def _write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def cmd_ingest(args) -> int:
    total = EmbeddingStore()
    for path in _resolve_all(args.packs or [], args.data_dir):
        pack_store = read_pack(path)
        records = pack_store.records()
        dim = records[0].vector.shape[0] if records else 0
        print(f"pack {path}: records={len(records)} dimension={dim}")
        total.merge(pack_store)
    for path in _resolve_all(args.triplets or [], args.data_dir):
        triplets = load_triplets(path)
        by_conf: dict[str, int] = {}
        for t in triplets:
            by_conf[t.configuration] = by_conf.get(t.configuration, 0) + 1
        detail = " ".join(f"{k}={v}" for k, v in sorted(by_conf.items()))
        print(f"manifest {path}: triplets={len(triplets)} {detail}".rstrip())
    if not args.packs and not args.triplets:
        raise InvalidInput("nothing to ingest: pass --packs and/or --triplets")
    print(f"ok: {len(total)} records loaded")
    return 0


def cmd_synth(args) -> int:
    config = _stem_config(args)
    if args.true_weights:
        preset = presets.load_preset(_resolve(args.true_weights, args.data_dir))
        if preset.config.name != config.name:
            raise InvalidInput(
                f"true-weights preset is for config {preset.config.name!r}, "
                f"requested {config.name!r}"
            )
        true_w = preset.vector()
    else:
        true_w = synthetic.random_true_weights(args.seed, config)
    cfg = synthetic.SynthConfig(
        seed=args.seed,
        n_triplets=args.n_triplets,
        true_weights=true_w,
        config=config,
        dimension=args.dimension,
        label_noise=args.label_noise,
        panel_size=args.panel_size,
        encoder_id=args.encoder,
        source=args.source,
    )
    store, triplets = synthetic.generate(cfg)
    out_dir = Path(_resolve(args.out_dir, args.data_dir))
    out_dir.mkdir(parents=True, exist_ok=True)
    pack_path = out_dir / "embeddings.pack"
    manifest_path = out_dir / "triplets.tsv"
    weights_path = out_dir / ("true-weights" + presets.PRESET_SUFFIX)
    summary = write_pack(pack_path, store)
    write_triplets(manifest_path, triplets)
    presets.save_preset(
        weights_path,
        presets.preset_from_weights(
            "true-weights",
            config,
            true_w,
            encoder_id=args.encoder,
            source=args.source,
            method="manual",
        ),
    )
    print(f"pack {pack_path}: records={summary.count} dimension={summary.dimension}")
    print(f"manifest {manifest_path}: triplets={len(triplets)}")
    print(f"preset {weights_path}: ground-truth weights")
    return 0


def cmd_fit(args) -> int:
    store = _load_store(args)
    triplets = _load_manifests(args)
    config = _stem_config(args)
    encoder = _pick_encoder(store, args.encoder)
    aggregated = evaluation.aggregate(triplets, args.cutoff)
    if not aggregated:
        raise EmptyDataset(
            f"no triplets survive aggregation at cutoff {args.cutoff}"
        )
    rows = evaluation.design_rows(aggregated, store, config, encoder, args.source)
    report = evaluation.cross_validate(
        rows,
        FitConfig(method=args.method, alpha=args.lambda_),
        evaluation.EvalConfig(
            cutoff=args.cutoff,
            iterations=args.iterations,
            train_fraction=args.train_fraction,
            seed=args.seed,
        ),
        channels=config.channels,
        provenance={
            "encoder": encoder,
            "source": args.source,
            "config": config.name,
            "triplets": ",".join(str(p) for p in (args.triplets or [])),
        },
    )
    out_dir = Path(_resolve(args.out_dir, args.data_dir))
    _write_text(out_dir / "fit-report.json", report.to_json())
    _write_text(out_dir / "fit-report.csv", report.to_csv())
    fitted = presets.preset_from_weights(
        "fitted",
        config,
        np.array(report.weights_mean),
        encoder_id=encoder,
        source=args.source,
        method=report.method,
        alpha=report.alpha,
    )
    presets.save_preset(out_dir / ("fitted" + presets.PRESET_SUFFIX), fitted)
    std = report.accuracy_std
    print(
        f"fit: accuracy_mean={report.accuracy_mean!r} "
        f"accuracy_std={std!r} n_triplets={report.n_triplets} "
        f"failed_splits={len(report.failed_splits)}"
    )
    print(f"reports written to {out_dir}")
    return 0


def cmd_eval_standard(args) -> int:
    store = _load_store(args)
    triplets = _load_manifests(args)
    encoder = _pick_encoder(store, args.encoder)
    cells = evaluation.evaluate_standard(
        triplets, store, encoder, args.source, cutoff=args.cutoff
    )
    csv_text = evaluation.cells_to_csv(cells)
    if args.out:
        _write_text(Path(_resolve(args.out, args.data_dir)), csv_text)
        print(f"table written to {_resolve(args.out, args.data_dir)}")
    else:
        sys.stdout.write(csv_text)
    return 0


def _parse_inline_weights(text: str, config: StemConfig) -> dict[str, float]:
    weights: dict[str, float] = {}
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "=" not in part:
            raise InvalidInput(
                f"--weights expects 'stem=value,...', got {part!r}"
            )
        stem, _, value = part.partition("=")
        try:
            weights[stem.strip()] = float(value)
        except ValueError:
            raise InvalidInput(
                f"--weights value for {stem.strip()!r} is not a number: {value!r}"
            ) from None
    if not weights:
        raise InvalidInput("--weights is empty")
    return weights


def cmd_query(args) -> int:
    store = _load_store(args)
    config = _stem_config(args)
    encoder = _pick_encoder(store, args.encoder)
    entries = retrieval.library_from_store(store, config, encoder, args.source)
    index = retrieval.build_index(entries, config)
    if args.weights:
        mapping = _parse_inline_weights(args.weights, config)
        full = {ch: 0.0 for ch in config.channels}
        unknown = set(mapping) - set(config.channels)
        if unknown:
            raise InvalidInput(
                "--weights names stems outside config "
                f"{config.name!r}: " + ", ".join(sorted(unknown))
            )
        full.update(mapping)
        weights = full
        weight_label = "inline"
    else:
        preset_dir = (
            str(_resolve(args.presets_dir, args.data_dir))
            if args.presets_dir
            else None
        )
        preset = presets.resolve_preset(args.preset, config, preset_dir)
        weights = preset.weights
        weight_label = preset.name
    results = retrieval.query(
        index,
        retrieval.QuerySpec(
            reference=args.reference, weights=weights, top_k=args.top_k
        ),
    )
    header = ["# rank", "segment_id", "score"] + list(config.channels)
    print("\t".join(header))
    for rank, res in enumerate(results, start=1):
        cells = [str(rank), res.segment_id, repr(res.score)]
        cells += [repr(res.breakdown[ch]) for ch in config.channels]
        print("\t".join(cells))
    print(
        f"# weights={weight_label} encoder={encoder} source={args.source} "
        f"config={config.name} library={len(index)}"
    )
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .server import build_state, create_app

    store = _load_store(args)
    config = _stem_config(args)
    encoder = _pick_encoder(store, args.encoder)
    datasets = {}
    for path in _resolve_all(args.triplets or [], args.data_dir):
        datasets[Path(path).stem] = load_triplets(path)
    preset_dir = (
        str(_resolve(args.presets_dir, args.data_dir)) if args.presets_dir else None
    )
    state = build_state(
        store=store,
        config=config,
        encoder_id=encoder,
        source=args.source,
        datasets=datasets,
        preset_dir=preset_dir,
    )
    app = create_app(state)
    print(
        f"serving config={config.name} encoder={encoder} source={args.source} "
        f"library={len(state.index)} datasets={len(datasets)} "
        f"on http://{args.host}:{args.port}"
    )
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--data-dir",
        default=os.environ.get(DATA_DIR_ENV, "."),
        help="root for relative data paths (default: $STEMSIM_DATA_DIR or .)",
    )
    parser.add_argument(
        "--config-file",
        default=None,
        help="key=value file supplying defaults; explicit flags win",
    )


def _add_store_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--packs", nargs="+", default=None, help="embedding pack files")
    parser.add_argument("--encoder", default=None, help="encoder id to read")
    parser.add_argument(
        "--source",
        choices=("mss", "ground_truth"),
        default="mss",
        help="stem provenance to read (default: mss)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stemsim",
        description="Instrument-aware perceptual music similarity toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_ingest = sub.add_parser("ingest", help="validate packs and manifests")
    _add_common(p_ingest)
    _add_store_flags(p_ingest)
    p_ingest.add_argument("--triplets", nargs="+", default=None)
    p_ingest.set_defaults(func=cmd_ingest)

    p_synth = sub.add_parser("synth", help="generate synthetic data")
    _add_common(p_synth)
    p_synth.add_argument("--out-dir", default="synth")
    p_synth.add_argument("--config", choices=config_names(), default="six_stem")
    p_synth.add_argument("--n-triplets", type=int, default=500)
    p_synth.add_argument("--dimension", type=int, default=512)
    p_synth.add_argument("--seed", type=int, default=0)
    p_synth.add_argument("--label-noise", type=float, default=0.0)
    p_synth.add_argument("--panel-size", type=int, default=10)
    p_synth.add_argument("--encoder", default="synthetic")
    p_synth.add_argument(
        "--source", choices=("mss", "ground_truth"), default="mss"
    )
    p_synth.add_argument(
        "--true-weights",
        default=None,
        help="preset file with ground-truth weights (default: seeded random)",
    )
    p_synth.set_defaults(func=cmd_synth)

    p_fit = sub.add_parser("fit", help="cross-validated weight fitting")
    _add_common(p_fit)
    _add_store_flags(p_fit)
    p_fit.add_argument("--triplets", nargs="+", default=None)
    p_fit.add_argument("--config", choices=config_names(), default="six_stem")
    p_fit.add_argument("--cutoff", type=float, default=0.5)
    p_fit.add_argument("--method", choices=("ols", "ridge"), default="ols")
    p_fit.add_argument("--lambda", dest="lambda_", type=float, default=1.0)
    p_fit.add_argument("--seed", type=int, default=0)
    p_fit.add_argument("--iterations", type=int, default=100)
    p_fit.add_argument("--train-fraction", type=float, default=0.7)
    p_fit.add_argument("--out-dir", default="reports")
    p_fit.set_defaults(func=cmd_fit)

    p_eval = sub.add_parser(
        "eval-standard", help="mixture-cosine baseline table"
    )
    _add_common(p_eval)
    _add_store_flags(p_eval)
    p_eval.add_argument("--triplets", nargs="+", default=None)
    p_eval.add_argument("--cutoff", type=float, default=0.5)
    p_eval.add_argument("--out", default=None, help="CSV path (default: stdout)")
    p_eval.set_defaults(func=cmd_eval_standard)

    p_query = sub.add_parser("query", help="one-shot retrieval")
    _add_common(p_query)
    _add_store_flags(p_query)
    p_query.add_argument("--config", choices=config_names(), default="six_stem")
    p_query.add_argument("--reference", required=True, help="reference segment id")
    p_query.add_argument(
        "--preset", default="mix-only", help="preset name or file path"
    )
    p_query.add_argument("--presets-dir", default=None)
    p_query.add_argument(
        "--weights", default=None, help="inline weights 'stem=value,...'"
    )
    p_query.add_argument("--top-k", type=int, default=10)
    p_query.set_defaults(func=cmd_query)

    p_serve = sub.add_parser("serve", help="start the HTTP service")
    _add_common(p_serve)
    _add_store_flags(p_serve)
    p_serve.add_argument("--triplets", nargs="+", default=None)
    p_serve.add_argument("--config", choices=config_names(), default="six_stem")
    p_serve.add_argument("--presets-dir", default=None)
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=DEFAULT_PORT)
    p_serve.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()

    # two-phase parse so config-file values become defaults and flags win;
    # abbreviation must stay off here or --config would prefix-match
    # --config-file, the only option this thin parser knows about
    pre = argparse.ArgumentParser(add_help=False, allow_abbrev=False)
    pre.add_argument("--config-file", default=None)
    known, _ = pre.parse_known_args(argv)
    try:
        if known.config_file:
            defaults = load_config_file(known.config_file)
            for action in parser._subparsers._group_actions[0].choices.values():
                usable = {
                    k: v
                    for k, v in defaults.items()
                    if any(a.dest == k for a in action._actions)
                }
                action.set_defaults(**usable)
        args = parser.parse_args(argv)
        return args.func(args)
    except StemSimError as exc:
        print(f"error: {exc.code}: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
