"""Shared builders and fixtures for the test suite.

Most tests construct their own tiny inputs inline; what lives here is the
handful of datasets that several modules exercise from different angles,
most importantly the four-triplet mix geometry whose agreement is known
by hand and a small synthetic dataset reused by the CLI and HTTP tests.
"""

from __future__ import annotations

import numpy as np
import pytest

from stemsim.stems import SIX_STEM
from stemsim.store import EmbeddingRecord, EmbeddingStore, TripletRecord
from stemsim.synthetic import SynthConfig, generate, random_true_weights

ENCODER = "enc-test"


def record(segment: str, stem: str, vector, encoder=ENCODER, source="mix_native"):
    return EmbeddingRecord(
        segment_id=segment,
        stem=stem,
        encoder_id=encoder,
        source=source,
        vector=np.asarray(vector, dtype=np.float32),
    )


def mix_geometry():
    """Four mix-only triplets with hand-checked cosine outcomes.

    Cosines against each reference (2-D vectors, so exact by hand):

        t1: cos(x,a)=1      cos(x,b)=0      -> predicts A, panel says A
        t2: cos(x,a)=0      cos(x,b)=1      -> predicts B, panel says B
        t3: cos(x,a)=0      cos(x,b)=0.707  -> predicts B, panel says A
        t4: cos(x,a)=0.9986 cos(x,b)=-0.707 -> predicts A, panel says A

    Three of four model choices match the majority, so the single
    (mix, XAB) cell scores 0.75.
    """
    vectors = {
        "t1-x": [1.0, 0.0], "t1-a": [1.0, 0.0], "t1-b": [0.0, 1.0],
        "t2-x": [1.0, 0.0], "t2-a": [0.0, 1.0], "t2-b": [2.0, 0.0],
        "t3-x": [1.0, 0.0], "t3-a": [0.0, 1.0], "t3-b": [1.0, 1.0],
        "t4-x": [1.0, 1.0], "t4-a": [1.0, 0.9], "t4-b": [-1.0, 0.0],
    }
    store = EmbeddingStore()
    for seg, vec in vectors.items():
        store.add(record(seg, "mix", vec))
    triplets = [
        TripletRecord("t1", "XAB", "mix", "t1-x", "t1-a", "t1-b", 9, 1),
        TripletRecord("t2", "XAB", "mix", "t2-x", "t2-a", "t2-b", 1, 9),
        TripletRecord("t3", "XAB", "mix", "t3-x", "t3-a", "t3-b", 8, 2),
        TripletRecord("t4", "XAB", "mix", "t4-x", "t4-a", "t4-b", 7, 3),
    ]
    return store, triplets


@pytest.fixture
def mix_fixture():
    return mix_geometry()


@pytest.fixture(scope="session")
def small_synth():
    """80 noiseless six-stem triplets, shared where generation cost matters."""
    config = SIX_STEM
    weights = random_true_weights(11, config)
    cfg = SynthConfig(
        seed=11, n_triplets=80, true_weights=weights, config=config, dimension=48
    )
    store, triplets = generate(cfg)
    return store, triplets, weights, cfg


@pytest.fixture(scope="session")
def synth_dataset_dir(tmp_path_factory, small_synth):
    """The small synthetic dataset written out in pack/manifest form."""
    from stemsim.store import write_pack, write_triplets

    store, triplets, weights, cfg = small_synth
    root = tmp_path_factory.mktemp("synth-data")
    write_pack(root / "embeddings.pack", store)
    write_triplets(root / "triplets.tsv", triplets)
    return root
