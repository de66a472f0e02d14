"""Embedding pack format, the in-memory store, and triplet manifests."""

import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stemsim.errors import (
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
from stemsim.stems import SIX_STEM
from stemsim.store import (
    EmbeddingRecord,
    EmbeddingStore,
    TripletRecord,
    load_triplets,
    read_pack,
    resolve_stems,
    write_pack,
    write_triplets,
)

from conftest import record


def random_records(rng, count, dim, encoder="enc", source="mss"):
    stems = SIX_STEM.channels
    out = []
    for i in range(count):
        out.append(
            EmbeddingRecord(
                segment_id=f"seg-{i:05d}",
                stem=stems[i % len(stems)],
                encoder_id=encoder,
                source=source,
                vector=rng.standard_normal(dim).astype(np.float32),
            )
        )
    return out


class TestEmbeddingRecord:
    def test_vector_stored_as_float32(self):
        rec = record("s", "mix", [0.1, 0.2, 0.3])
        assert rec.vector.dtype == np.float32
        assert not rec.vector.flags.writeable

    def test_norm_cached(self):
        rec = record("s", "mix", [3.0, 4.0])
        assert rec.norm == 5.0

    def test_rejects_non_finite(self):
        with pytest.raises(InvalidVector):
            record("s", "mix", [1.0, np.nan])

    def test_rejects_unknown_source(self):
        with pytest.raises(InvalidInput):
            record("s", "mix", [1.0], source="bootleg")

    def test_rejects_tab_in_id(self):
        with pytest.raises(InvalidInput):
            record("a\tb", "mix", [1.0])


class TestEmbeddingStore:
    def test_add_get_roundtrip(self):
        store = EmbeddingStore()
        rec = record("s1", "drums", [1.0, 2.0])
        store.add(rec)
        got = store.get("s1", "drums", rec.encoder_id, rec.source)
        np.testing.assert_array_equal(got, rec.vector)
        assert store.get("s1", "bass", rec.encoder_id, rec.source) is None

    def test_duplicate_key_rejected(self):
        store = EmbeddingStore()
        store.add(record("s1", "drums", [1.0]))
        with pytest.raises(DuplicateRecord):
            store.add(record("s1", "drums", [2.0]))

    def test_dimension_consistency_per_encoder(self):
        store = EmbeddingStore()
        store.add(record("s1", "drums", [1.0, 2.0]))
        with pytest.raises(DimensionMismatch):
            store.add(record("s2", "drums", [1.0, 2.0, 3.0]))

    def test_different_encoders_may_differ_in_dimension(self):
        store = EmbeddingStore()
        store.add(record("s1", "drums", [1.0, 2.0], encoder="enc-a"))
        store.add(record("s1", "drums", [1.0, 2.0, 3.0], encoder="enc-b"))
        assert store.encoder_dimension("enc-a") == 2
        assert store.encoder_dimension("enc-b") == 3
        assert store.encoders() == ["enc-a", "enc-b"]

    def test_require_raises_missing(self):
        store = EmbeddingStore()
        with pytest.raises(MissingStem):
            store.require("s1", "drums", "enc", "mss")


class TestPackRoundTrip:
    def test_small_roundtrip_bitwise(self, tmp_path):
        rng = np.random.default_rng(0)
        records = random_records(rng, 25, 16)
        path = tmp_path / "small.pack"
        summary = write_pack(path, records)
        assert summary.count == 25
        assert summary.dimension == 16
        loaded = read_pack(path)
        assert len(loaded) == 25
        for rec in records:
            got = loaded.get_record(
                rec.segment_id, rec.stem, rec.encoder_id, rec.source
            )
            assert got.vector.tobytes() == rec.vector.tobytes()
            assert got.source == rec.source

    @given(
        count=st.integers(min_value=1, max_value=40),
        seed=st.integers(0, 2**32 - 1),
    )
    @settings(max_examples=25, deadline=None)
    def test_roundtrip_property(self, count, seed, tmp_path_factory):
        rng = np.random.default_rng(seed)
        records = random_records(rng, count, 8)
        path = tmp_path_factory.mktemp("packs") / "p.pack"
        write_pack(path, records)
        loaded = read_pack(path)
        assert len(loaded) == count
        for rec in records:
            got = loaded.get(rec.segment_id, rec.stem, rec.encoder_id, rec.source)
            assert got.tobytes() == rec.vector.tobytes()

    def test_store_input_equivalent_to_records(self, tmp_path):
        rng = np.random.default_rng(1)
        records = random_records(rng, 10, 4)
        store = EmbeddingStore()
        store.add_all(records)
        p1, p2 = tmp_path / "a.pack", tmp_path / "b.pack"
        write_pack(p1, records)
        write_pack(p2, store)
        assert p1.read_bytes() == p2.read_bytes()

    def test_duplicate_records_rejected(self, tmp_path):
        rec = record("s", "mix", [1.0, 2.0])
        with pytest.raises(DuplicateRecord):
            write_pack(tmp_path / "d.pack", [rec, rec])

    def test_mixed_dimension_rejected(self, tmp_path):
        recs = [record("s1", "mix", [1.0]), record("s2", "mix", [1.0, 2.0])]
        with pytest.raises(DimensionMismatch):
            write_pack(tmp_path / "d.pack", recs)


class TestPackCorruption:
    def _write_one(self, tmp_path, count=12, dim=8):
        rng = np.random.default_rng(3)
        path = tmp_path / "c.pack"
        write_pack(path, random_records(rng, count, dim))
        return path

    def test_bad_magic(self, tmp_path):
        path = self._write_one(tmp_path)
        raw = bytearray(path.read_bytes())
        raw[0] ^= 0xFF
        path.write_bytes(raw)
        with pytest.raises(UnsupportedFormat):
            read_pack(path)

    def test_unknown_version(self, tmp_path):
        path = self._write_one(tmp_path)
        raw = bytearray(path.read_bytes())
        struct.pack_into("<H", raw, 8, 999)
        path.write_bytes(raw)
        with pytest.raises(UnsupportedFormat):
            read_pack(path)

    def test_flipped_payload_byte(self, tmp_path):
        path = self._write_one(tmp_path)
        raw = bytearray(path.read_bytes())
        # payload sits between the metadata block and the trailing CRC
        raw[len(raw) - 5] ^= 0x01
        path.write_bytes(raw)
        with pytest.raises(CorruptPack):
            read_pack(path)

    def test_truncated_file(self, tmp_path):
        path = self._write_one(tmp_path)
        raw = path.read_bytes()
        path.write_bytes(raw[: len(raw) // 2])
        with pytest.raises(CorruptPack):
            read_pack(path)

    def test_truncated_header(self, tmp_path):
        path = self._write_one(tmp_path)
        path.write_bytes(path.read_bytes()[:10])
        with pytest.raises(CorruptPack):
            read_pack(path)

    def test_metadata_line_with_missing_field(self, tmp_path):
        path = self._write_one(tmp_path, count=1, dim=2)
        raw = bytearray(path.read_bytes())
        # overwrite a metadata tab with a space, collapsing two fields
        tab = raw.index(b"\t", 26)
        raw[tab] = ord(" ")
        path.write_bytes(raw)
        with pytest.raises(CorruptPack):
            read_pack(path)


class TestTripletRecord:
    def test_valid_record(self):
        t = TripletRecord("t1", "XAB", "drums", "x", "a", "b", 7, 3)
        assert t.total_votes == 10

    def test_configuration_vocabulary(self):
        with pytest.raises(InvalidTriplet):
            TripletRecord("t1", "ABX", "drums", "x", "a", "b", 7, 3)

    def test_segments_must_differ(self):
        with pytest.raises(InvalidTriplet):
            TripletRecord("t1", "XAB", "drums", "x", "x", "b", 7, 3)

    def test_votes_non_negative_total_positive(self):
        with pytest.raises(InvalidTriplet):
            TripletRecord("t1", "XAB", "drums", "x", "a", "b", -1, 3)
        with pytest.raises(InvalidTriplet):
            TripletRecord("t1", "XAB", "drums", "x", "a", "b", 0, 0)

    def test_bool_votes_rejected(self):
        with pytest.raises(InvalidTriplet):
            TripletRecord("t1", "XAB", "drums", "x", "a", "b", True, 3)

    def test_instrument_class_vocabulary(self):
        with pytest.raises(Exception):
            TripletRecord("t1", "XAB", "sousaphone", "x", "a", "b", 7, 3)


class TestManifestIO:
    def test_roundtrip(self, tmp_path):
        triplets = [
            TripletRecord("t1", "XAB", "drums", "x1", "a1", "b1", 7, 3),
            TripletRecord("t2", "XYC", "mix", "x2", "a2", "b2", 2, 8),
        ]
        path = tmp_path / "m.tsv"
        write_triplets(path, triplets)
        loaded = load_triplets(path)
        assert loaded == triplets

    def test_comments_and_blanks_ignored(self, tmp_path):
        path = tmp_path / "m.tsv"
        path.write_text(
            "# comment\n"
            "\n"
            "t1\tXAB\tdrums\tx\ta\tb\t7\t3\n",
            encoding="utf-8",
        )
        assert len(load_triplets(path)) == 1

    def test_malformed_lines_collected(self, tmp_path):
        path = tmp_path / "m.tsv"
        path.write_text(
            "t1\tXAB\tdrums\tx\ta\tb\t7\t3\n"
            "only\tthree\tfields\n"
            "t2\tXAB\tdrums\tx\ta\tb\tseven\t3\n",
            encoding="utf-8",
        )
        with pytest.raises(ParseError) as exc:
            load_triplets(path)
        assert exc.value.line_numbers == [2, 3]

    def test_parse_error_beats_invalid_triplet(self, tmp_path):
        path = tmp_path / "m.tsv"
        path.write_text(
            "t1\tXAB\tdrums\tx\tx\tb\t7\t3\n"
            "garbage line\n",
            encoding="utf-8",
        )
        with pytest.raises(ParseError):
            load_triplets(path)

    def test_invariant_violations_reported(self, tmp_path):
        path = tmp_path / "m.tsv"
        path.write_text("t1\tXAB\tdrums\tx\tx\tb\t7\t3\n", encoding="utf-8")
        with pytest.raises(InvalidTriplet) as exc:
            load_triplets(path)
        assert "line 1" in str(exc.value)

    def test_duplicate_ids_rejected(self, tmp_path):
        path = tmp_path / "m.tsv"
        path.write_text(
            "t1\tXAB\tdrums\tx1\ta1\tb1\t7\t3\n"
            "t1\tXAB\tdrums\tx2\ta2\tb2\t7\t3\n",
            encoding="utf-8",
        )
        with pytest.raises(ParseError) as exc:
            load_triplets(path)
        assert exc.value.line_numbers == [2]


class TestResolveStems:
    def test_complete_bundle(self, small_synth):
        store, triplets, weights, cfg = small_synth
        bundle = resolve_stems(
            store, triplets[0], cfg.config, cfg.encoder_id, cfg.source
        )
        assert set(bundle.x) == set(cfg.config.channels)
        assert set(bundle.a) == set(cfg.config.channels)
        assert set(bundle.b) == set(cfg.config.channels)

    def test_all_missing_pairs_listed(self, mix_fixture):
        store, triplets = mix_fixture
        with pytest.raises(MissingStem) as exc:
            resolve_stems(store, triplets[0], SIX_STEM, "enc-test", "mix_native")
        # mix exists for every role, the other 6 channels do not
        assert len(exc.value.missing) == 18
