"""The evaluation protocol: vote aggregation, agreement scoring, and
stratified shuffle-split cross-validation.

Determinism rules, applied everywhere:

- Triplets are canonically sorted by triplet_id before any seeded
  operation, so results do not depend on file order.
- Each split draws from ``np.random.default_rng([seed, split_index])``;
  randomness never depends on execution order, which makes parallel runs
  bit-identical to serial ones.
- Rounding of train sizes is half-up (floor(x + 0.5)), with a
  largest-remainder correction so per-class counts sum to the global
  train size exactly.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    EmptyDataset,
    InvalidInput,
    MissingStem,
    SingularSystem,
    StratificationError,
)
from .regression import DesignMatrix, FitConfig, FitResult, build_design, fit
from .similarity import (
    CHOICE_A,
    CHOICE_B,
    CHOICE_TIE,
    predict_standard,
    predict_weighted,
    triplet_features,
)
from .stems import STEM_ORDER, StemConfig, StemKind
from .store import EmbeddingStore, TripletRecord, resolve_stems
from .validation import check_fraction, check_positive_int

TIE_HALF_CREDIT = "half_credit"
TIE_COUNT_WRONG = "count_wrong"
TIE_EXCLUDE = "exclude"
TIE_POLICIES = (TIE_HALF_CREDIT, TIE_COUNT_WRONG, TIE_EXCLUDE)

_SEED_MASK = (1 << 64) - 1


def _seed_entropy(seed: int) -> int:
    """Map a signed 64-bit seed onto the non-negative entropy numpy wants."""
    return int(seed) & _SEED_MASK


def round_half_up(x: float) -> int:
    """Round to the nearest integer, halves away from zero for x >= 0."""
    return int(math.floor(x + 0.5))


@dataclass(frozen=True)
class AggregatedTriplet:
    """A triplet after majority vote: its winner and inter-subject agreement.

    ``majority`` is "A" or "B"; exact vote ties never aggregate.
    ``agreement`` is the majority share, always in (0.5, 1.0].
    """

    triplet: TripletRecord
    majority: str
    agreement: float


@dataclass(frozen=True)
class EvalConfig:
    """Protocol parameters.

    Defaults reproduce the reference protocol: 100 iterations of
    stratified 70/30 shuffle splits. ``cutoff`` is the minimum
    inter-subject agreement for a triplet to count; 0.5 retains every
    non-tied triplet. ``tie_policy`` says how an exact prediction tie
    scores: half_credit adds 0.5, count_wrong adds 0, exclude drops the
    row from both numerator and denominator.
    """

    cutoff: float = 0.5
    iterations: int = 100
    train_fraction: float = 0.7
    seed: int = 0
    tie_policy: str = TIE_HALF_CREDIT

    def __post_init__(self) -> None:
        if not 0.5 <= float(self.cutoff) <= 1.0:
            raise InvalidInput(
                f"cutoff must be in [0.5, 1.0], got {self.cutoff!r}"
            )
        check_positive_int(self.iterations, "iterations")
        check_fraction(self.train_fraction, "train_fraction")
        if not isinstance(self.seed, int) or isinstance(self.seed, bool):
            raise InvalidInput(f"seed must be an integer, got {self.seed!r}")
        if self.tie_policy not in TIE_POLICIES:
            raise InvalidInput(
                f"tie_policy must be one of {TIE_POLICIES}, got {self.tie_policy!r}"
            )


def aggregate(
    triplets: Iterable[TripletRecord], cutoff: float = 0.5
) -> list[AggregatedTriplet]:
    """Majority-vote aggregation with an inclusive agreement cutoff.

    Exact vote ties are dropped; triplets whose majority share is at
    least ``cutoff`` are retained with their majority label. Input order
    is preserved. An empty result is legal.
    """
    if not 0.5 <= float(cutoff) <= 1.0:
        raise InvalidInput(f"cutoff must be in [0.5, 1.0], got {cutoff!r}")
    out = []
    for t in triplets:
        if t.votes_a == t.votes_b:
            continue
        majority = CHOICE_A if t.votes_a > t.votes_b else CHOICE_B
        agreement = max(t.votes_a, t.votes_b) / t.total_votes
        if agreement >= cutoff:
            out.append(
                AggregatedTriplet(triplet=t, majority=majority, agreement=agreement)
            )
    return out


def _choice_of(prediction) -> str:
    choice = getattr(prediction, "choice", prediction)
    if choice not in (CHOICE_A, CHOICE_B, CHOICE_TIE):
        raise InvalidInput(f"prediction choice must be A, B, or tie: {choice!r}")
    return choice


def agreement_score(
    predictions: Sequence, truths: Sequence[str], tie_policy: str = TIE_HALF_CREDIT
) -> float:
    """Fraction of predictions matching the human majority.

    Args:
        predictions: Prediction objects or bare choice strings.
        truths: majority labels, "A" or "B".
        tie_policy: how prediction ties count (see EvalConfig).

    Raises:
        EmptyDataset: no rows, or every row excluded as a tie.
        InvalidInput: length mismatch or malformed labels.
    """
    if tie_policy not in TIE_POLICIES:
        raise InvalidInput(
            f"tie_policy must be one of {TIE_POLICIES}, got {tie_policy!r}"
        )
    preds = [_choice_of(p) for p in predictions]
    if len(preds) != len(truths):
        raise InvalidInput(
            f"{len(preds)} predictions but {len(truths)} truths"
        )
    if not preds:
        raise EmptyDataset("agreement_score needs at least one row")
    credit = 0.0
    counted = 0
    for pred, truth in zip(preds, truths):
        if truth not in (CHOICE_A, CHOICE_B):
            raise InvalidInput(f"truth labels must be A or B, got {truth!r}")
        if pred == CHOICE_TIE:
            if tie_policy == TIE_HALF_CREDIT:
                credit += 0.5
                counted += 1
            elif tie_policy == TIE_COUNT_WRONG:
                counted += 1
            # exclude: skip entirely
        else:
            credit += 1.0 if pred == truth else 0.0
            counted += 1
    if counted == 0:
        raise EmptyDataset(
            "every prediction was a tie and tie_policy=exclude dropped them all"
        )
    return credit / counted


def _train_counts(
    class_sizes: dict[str, int], train_fraction: float
) -> dict[str, int]:
    """Per-class train counts: half-up rounding, largest-remainder correction.

    Every class keeps at least one member on each side of the split. The
    correction walks classes by how far rounding moved them (ties broken
    by class label) until the per-class counts sum to the global train
    size round_half_up(train_fraction * N).
    """
    total = sum(class_sizes.values())
    target = round_half_up(train_fraction * total)
    counts: dict[str, int] = {}
    remainders: dict[str, float] = {}
    for label in sorted(class_sizes):
        exact = train_fraction * class_sizes[label]
        base = round_half_up(exact)
        base = min(max(base, 1), class_sizes[label] - 1)
        counts[label] = base
        remainders[label] = exact - base
    delta = target - sum(counts.values())
    # positive delta: grow classes whose count was rounded down the most;
    # negative: shrink those rounded up the most
    while delta != 0:
        if delta > 0:
            order = sorted(remainders, key=lambda c: (-remainders[c], c))
            moved = False
            for label in order:
                if counts[label] < class_sizes[label] - 1:
                    counts[label] += 1
                    remainders[label] -= 1.0
                    delta -= 1
                    moved = True
                    break
        else:
            order = sorted(remainders, key=lambda c: (remainders[c], c))
            moved = False
            for label in order:
                if counts[label] > 1:
                    counts[label] -= 1
                    remainders[label] += 1.0
                    delta += 1
                    moved = True
                    break
        if not moved:
            raise StratificationError(
                "cannot satisfy per-class train counts: classes too small "
                f"for train_fraction {train_fraction}"
            )
    return counts


def stratified_splits(
    labels: Sequence[str], cfg: EvalConfig
) -> list[tuple[np.ndarray, np.ndarray]]:
    """Deterministic stratified shuffle splits over class labels.

    Returns ``cfg.iterations`` (train_indices, test_indices) pairs. Each
    split is a partition of range(len(labels)); per-class train counts are
    identical across splits; indices are sorted ascending.

    Raises:
        StratificationError: any class has fewer than 2 members.
    """
    labels = list(labels)
    if not labels:
        raise EmptyDataset("stratified_splits needs at least one label")
    by_class: dict[str, list[int]] = {}
    for i, lab in enumerate(labels):
        by_class.setdefault(str(lab), []).append(i)
    small = {lab: len(idx) for lab, idx in by_class.items() if len(idx) < 2}
    if small:
        listed = ", ".join(f"{lab!r} ({n})" for lab, n in sorted(small.items()))
        raise StratificationError(
            f"every class needs at least 2 members, got: {listed}"
        )
    sizes = {lab: len(idx) for lab, idx in by_class.items()}
    counts = _train_counts(sizes, cfg.train_fraction)
    class_order = sorted(by_class)
    entropy = _seed_entropy(cfg.seed)

    splits = []
    for j in range(cfg.iterations):
        rng = np.random.default_rng([entropy, j])
        train_parts = []
        test_parts = []
        for lab in class_order:
            idx = np.array(by_class[lab], dtype=np.int64)
            perm = rng.permutation(idx)
            t = counts[lab]
            train_parts.append(perm[:t])
            test_parts.append(perm[t:])
        train = np.sort(np.concatenate(train_parts))
        test = np.sort(np.concatenate(test_parts))
        splits.append((train, test))
    return splits


@dataclass(frozen=True)
class CellScore:
    """Agreement of the mixture-cosine baseline on one evaluation cell."""

    instrument_class: str
    configuration: str
    n_triplets: int
    agreement: float


def evaluate_standard(
    triplets: Iterable[TripletRecord],
    store: EmbeddingStore,
    encoder_id: str,
    source: str,
    cutoff: float = 0.5,
    tie_policy: str = TIE_HALF_CREDIT,
) -> list[CellScore]:
    """Score the plain mixture-cosine model per (instrument_class, configuration).

    The baseline always compares full-mix embeddings, whatever stem the
    panel was asked to focus on; the cell structure only groups the
    report. No training and no splits are involved. Cells are ordered by
    canonical stem order, then configuration name.

    Raises:
        MissingStem: a mix embedding is absent; the message names the
            triplet.
        EmptyDataset: nothing survives aggregation.
    """
    aggregated = aggregate(triplets, cutoff)
    if not aggregated:
        raise EmptyDataset(
            f"no triplets survive aggregation at cutoff {cutoff}"
        )
    mix = StemKind.MIX.value
    cells: dict[tuple[str, str], list[tuple[str, str]]] = {}
    for agg in aggregated:
        t = agg.triplet
        try:
            x = store.require(t.x_segment, mix, encoder_id, source)
            a = store.require(t.a_segment, mix, encoder_id, source)
            b = store.require(t.b_segment, mix, encoder_id, source)
        except MissingStem as exc:
            raise MissingStem(
                f"triplet {t.triplet_id!r}: {exc}", missing=exc.missing
            ) from None
        pred = predict_standard(x, a, b)
        key = (t.instrument_class, t.configuration)
        cells.setdefault(key, []).append((pred.choice, agg.majority))
    ordered = sorted(cells, key=lambda k: (STEM_ORDER[k[0]], k[1]))
    return [
        CellScore(
            instrument_class=cls,
            configuration=conf,
            n_triplets=len(cells[(cls, conf)]),
            agreement=agreement_score(
                [p for p, _ in cells[(cls, conf)]],
                [m for _, m in cells[(cls, conf)]],
                tie_policy,
            ),
        )
        for cls, conf in ordered
    ]


def cells_to_csv(cells: Sequence[CellScore]) -> str:
    """Render cell scores as a small CSV table."""
    lines = ["instrument_class,configuration,n_triplets,agreement"]
    for c in cells:
        lines.append(
            f"{c.instrument_class},{c.configuration},{c.n_triplets},{repr(c.agreement)}"
        )
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class DesignRow:
    """One cross-validation row: a triplet's id, features, and label.

    The id exists so rows can be canonically ordered before seeded
    splitting; the label is +1 when the majority chose A, -1 for B.
    """

    triplet_id: str
    features: np.ndarray
    label: int


def design_rows(
    aggregated: Iterable[AggregatedTriplet],
    store: EmbeddingStore,
    config: StemConfig,
    encoder_id: str,
    source: str,
) -> list[DesignRow]:
    """Turn aggregated triplets into fit-ready feature/label rows."""
    rows = []
    for agg in aggregated:
        bundle = resolve_stems(store, agg.triplet, config, encoder_id, source)
        feats = triplet_features(bundle, config)
        label = 1 if agg.majority == CHOICE_A else -1
        rows.append(
            DesignRow(
                triplet_id=agg.triplet.triplet_id, features=feats, label=label
            )
        )
    return rows


@dataclass(frozen=True)
class FitReport:
    """Everything one cross-validated fit produced.

    ``accuracy_std`` is the sample (n-1) standard deviation and is NaN
    when fewer than two splits succeeded. ``failed_splits`` lists split
    indices that raised SingularSystem; they are excluded from all
    aggregates. ``provenance`` carries caller context (encoder, source,
    config, dataset) so the report alone can reproduce the run.
    """

    channels: tuple[str, ...]
    weights_mean: tuple[float, ...]
    weights_per_split: tuple[tuple[float, ...], ...]
    accuracy_per_split: tuple[float, ...]
    accuracy_mean: float
    accuracy_std: float
    n_triplets: int
    method: str
    alpha: float
    iterations: int
    train_fraction: float
    seed: int
    cutoff: float
    tie_policy: str
    failed_splits: tuple[int, ...] = ()
    provenance: dict[str, str] = field(default_factory=dict)

    def to_dict(self) -> dict:
        std = self.accuracy_std
        return {
            "channels": list(self.channels),
            "weights_mean": list(self.weights_mean),
            "weights_per_split": [list(w) for w in self.weights_per_split],
            "accuracy_per_split": list(self.accuracy_per_split),
            "accuracy_mean": self.accuracy_mean,
            "accuracy_std": None if math.isnan(std) else std,
            "n_triplets": self.n_triplets,
            "failed_splits": list(self.failed_splits),
            "protocol": {
                "method": self.method,
                "lambda": self.alpha,
                "iterations": self.iterations,
                "train_fraction": self.train_fraction,
                "seed": self.seed,
                "cutoff": self.cutoff,
                "tie_policy": self.tie_policy,
            },
            "provenance": dict(self.provenance),
        }

    def to_json(self) -> str:
        """Canonical JSON: sorted keys, fixed separators, trailing newline.

        Identical reports serialize to identical bytes.
        """
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    def to_csv(self) -> str:
        """Per-split accuracies and weights as CSV."""
        header = ["split", "accuracy"] + list(self.channels)
        lines = [",".join(header)]
        split_ids = [
            i for i in range(self.iterations) if i not in set(self.failed_splits)
        ]
        for row_idx, split_idx in enumerate(split_ids):
            cells = [str(split_idx), repr(self.accuracy_per_split[row_idx])]
            cells += [repr(w) for w in self.weights_per_split[row_idx]]
            lines.append(",".join(cells))
        return "\n".join(lines) + "\n"


def _split_job(
    F: np.ndarray,
    y: np.ndarray,
    train: np.ndarray,
    test: np.ndarray,
    truths: Sequence[str],
    fit_cfg: FitConfig,
    tie_policy: str,
):
    """Fit one split and score it on its held-out rows. Pure."""
    design = DesignMatrix(F=F[train], y=y[train])
    try:
        result = fit(design, fit_cfg)
    except SingularSystem:
        return None
    choices = [
        predict_weighted(F[i], result.weights).choice for i in test
    ]
    acc = agreement_score(choices, [truths[i] for i in test], tie_policy)
    return acc, result.weights


def cross_validate(
    rows: Sequence[DesignRow],
    fit_cfg: FitConfig,
    eval_cfg: EvalConfig,
    channels: Sequence[str] | None = None,
    provenance: dict[str, str] | None = None,
    n_jobs: int = 1,
) -> FitReport:
    """Stratified shuffle-split cross-validation of the weighted model.

    Rows are sorted by triplet_id first, so the report depends only on
    the data and the seed, never on input order. Each split fits on its
    train rows and scores held-out agreement; splits that raise
    SingularSystem are recorded and excluded from aggregates.

    Args:
        rows: design rows with unique triplet ids.
        fit_cfg: solver choice and penalty.
        eval_cfg: protocol parameters (iterations, fraction, seed, ties).
        channels: names for the feature columns, for reports. Defaults to
            w0..w{K-1}.
        provenance: extra context stamped into the report.
        n_jobs: >1 evaluates splits in a thread pool; results are
            bit-identical to serial execution.

    Raises:
        EmptyDataset: no rows.
        InvalidInput: duplicate triplet ids.
        StratificationError: a label class has fewer than 2 rows.
        SingularSystem: every single split failed to fit.
    """
    rows = list(rows)
    if not rows:
        raise EmptyDataset("cross_validate needs at least one design row")
    ids = [r.triplet_id for r in rows]
    if len(set(ids)) != len(ids):
        dupes = sorted({i for i in ids if ids.count(i) > 1})
        raise InvalidInput(f"duplicate triplet ids: {', '.join(dupes)}")
    rows.sort(key=lambda r: r.triplet_id)

    design = build_design((r.features, float(r.label)) for r in rows)
    F, y = design.F, design.y
    truths = [CHOICE_A if r.label > 0 else CHOICE_B for r in rows]
    if channels is None:
        channels = tuple(f"w{k}" for k in range(design.n_features))
    else:
        channels = tuple(channels)
        if len(channels) != design.n_features:
            raise InvalidInput(
                f"{len(channels)} channel names for {design.n_features} features"
            )

    splits = stratified_splits(truths, eval_cfg)

    def job(pair):
        train, test = pair
        return _split_job(F, y, train, test, truths, fit_cfg, eval_cfg.tie_policy)

    if n_jobs == 1:
        outcomes = [job(pair) for pair in splits]
    else:
        workers = n_jobs if n_jobs > 0 else None
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(job, splits))

    accuracies = []
    weights = []
    failed = []
    for idx, outcome in enumerate(outcomes):
        if outcome is None:
            failed.append(idx)
        else:
            acc, w = outcome
            accuracies.append(acc)
            weights.append(w)
    if not accuracies:
        raise SingularSystem(
            f"all {len(outcomes)} splits failed to fit; the design is "
            "rank deficient"
        )

    acc_arr = np.array(accuracies, dtype=np.float64)
    weight_stack = np.stack(weights)
    accuracy_mean = float(np.mean(acc_arr))
    accuracy_std = (
        float(np.std(acc_arr, ddof=1)) if acc_arr.size >= 2 else float("nan")
    )
    weights_mean = np.mean(weight_stack, axis=0)

    return FitReport(
        channels=channels,
        weights_mean=tuple(float(v) for v in weights_mean),
        weights_per_split=tuple(
            tuple(float(v) for v in w) for w in weight_stack
        ),
        accuracy_per_split=tuple(float(a) for a in acc_arr),
        accuracy_mean=accuracy_mean,
        accuracy_std=accuracy_std,
        n_triplets=len(rows),
        method=fit_cfg.method,
        alpha=fit_cfg.effective_alpha,
        iterations=eval_cfg.iterations,
        train_fraction=eval_cfg.train_fraction,
        seed=eval_cfg.seed,
        cutoff=eval_cfg.cutoff,
        tie_policy=eval_cfg.tie_policy,
        failed_splits=tuple(failed),
        provenance=dict(provenance or {}),
    )
