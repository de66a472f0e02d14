"""Instrument-aware perceptual music similarity.

The package models how close two pieces of music feel by comparing them
stem by stem: embeddings of separated instrument channels are compared by
cosine similarity, a zero-intercept linear model weighs the channels to
match human ABX preference votes, and the same weighted score drives
query-by-example retrieval with adjustable per-stem sliders.
"""

from .errors import (
    ConfigMismatch,
    CorruptPack,
    DegenerateQuery,
    DegenerateVector,
    DimensionMismatch,
    DuplicateRecord,
    EmptyDataset,
    InvalidEntry,
    InvalidInput,
    InvalidStem,
    InvalidTriplet,
    InvalidVector,
    MissingStem,
    ParseError,
    PresetParseError,
    SingularSystem,
    StemSimError,
    StratificationError,
    UnknownDataset,
    UnknownSegment,
    UnsupportedFormat,
)
from .evaluation import (
    AggregatedTriplet,
    CellScore,
    DesignRow,
    EvalConfig,
    FitReport,
    aggregate,
    agreement_score,
    cells_to_csv,
    cross_validate,
    design_rows,
    evaluate_standard,
    stratified_splits,
)
from .presets import (
    WeightPreset,
    builtin_presets,
    load_preset,
    load_preset_dir,
    preset_from_weights,
    resolve_preset,
    save_preset,
)
from .regression import (
    DesignMatrix,
    FitConfig,
    FitResult,
    StemWeightRegressor,
    build_design,
    condition_report,
    fit,
    fit_weights,
)
from .retrieval import (
    LibraryEntry,
    QueryResult,
    QuerySpec,
    SearchIndex,
    build_index,
    library_from_store,
    query,
    weight_presets,
)
from .similarity import (
    Prediction,
    cosine,
    features_from_maps,
    predict_standard,
    predict_weighted,
    triplet_features,
    weights_from_mapping,
)
from .stems import (
    FOUR_STEM,
    SIX_STEM,
    StemConfig,
    StemKind,
    config_names,
    get_stem_config,
    parse_stem,
)
from .store import (
    EmbeddingRecord,
    EmbeddingStore,
    PackSummary,
    StemBundle,
    TripletRecord,
    load_packs,
    load_triplets,
    read_pack,
    resolve_stems,
    write_pack,
    write_triplets,
)
from .synthetic import (
    Bleed,
    Dropout,
    Gain,
    SynthConfig,
    generate,
    perturb_stems,
    random_true_weights,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
