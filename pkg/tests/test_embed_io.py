import json

import numpy as np
import pytest

from alpool import EmbeddingMatrix, SyntheticSpec, generate_synthetic
from alpool.core import rng_fork
from alpool.embed_io import (
    read_embeddings,
    read_labels,
    write_embeddings,
    write_labels,
)
from alpool.errors import (
    BadMagicError,
    DuplicateIdError,
    NonFiniteValueError,
    TruncatedPayloadError,
    UnknownSplitError,
    VersionMismatchError,
)
from oracles import BINOM_10K_5PCT_999_HI, BINOM_10K_5PCT_999_LO


class TestEmbeddingFile:
    def test_round_trip_bit_identical(self, tmp_path):
        x = EmbeddingMatrix(rng_fork(1, "io").standard_normal((7, 5)).astype(np.float32))
        path = tmp_path / "m.aleb"
        write_embeddings(path, x)
        back = read_embeddings(path)
        assert back.data.tobytes() == x.data.tobytes()

    def test_header_is_13_bytes(self, tmp_path):
        x = EmbeddingMatrix(np.ones((2, 3), dtype=np.float32))
        path = tmp_path / "m.aleb"
        write_embeddings(path, x)
        raw = path.read_bytes()
        assert len(raw) == 13 + 2 * 3 * 4
        assert raw[:4] == b"ALEB" and raw[4] == 1

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "m.aleb"
        x = EmbeddingMatrix(np.ones((1, 1), dtype=np.float32))
        write_embeddings(path, x)
        raw = bytearray(path.read_bytes())
        raw[:4] = b"XXXX"
        path.write_bytes(bytes(raw))
        with pytest.raises(BadMagicError):
            read_embeddings(path)

    def test_version_mismatch(self, tmp_path):
        path = tmp_path / "m.aleb"
        write_embeddings(path, EmbeddingMatrix(np.ones((1, 1), dtype=np.float32)))
        raw = bytearray(path.read_bytes())
        raw[4] = 9
        path.write_bytes(bytes(raw))
        with pytest.raises(VersionMismatchError):
            read_embeddings(path)

    def test_truncation_names_byte_counts(self, tmp_path):
        path = tmp_path / "m.aleb"
        write_embeddings(path, EmbeddingMatrix(np.ones((2, 2), dtype=np.float32)))
        raw = path.read_bytes()
        path.write_bytes(raw[:-4])  # one float short
        with pytest.raises(TruncatedPayloadError) as exc:
            read_embeddings(path)
        assert str(len(raw)) in str(exc.value) and str(len(raw) - 4) in str(exc.value)

    def test_non_finite_payload(self, tmp_path):
        path = tmp_path / "m.aleb"
        write_embeddings(path, EmbeddingMatrix(np.ones((1, 2), dtype=np.float32)))
        raw = bytearray(path.read_bytes())
        raw[13:17] = np.array([np.inf], dtype="<f4").tobytes()
        path.write_bytes(bytes(raw))
        with pytest.raises(NonFiniteValueError):
            read_embeddings(path)


class TestLabelsFile:
    def test_parse_basic(self, tmp_path):
        path = tmp_path / "l.jsonl"
        path.write_text('{"id":0,"labels":["Notices"],"split":"train"}\n')
        recs = read_labels(path)
        assert recs[0].id == 0
        assert recs[0].categories == frozenset({"Notices"})
        assert recs[0].split == "train"

    def test_duplicate_id(self, tmp_path):
        path = tmp_path / "l.jsonl"
        lines = [
            '{"id":5,"labels":[],"split":"train"}',
            '{"id":5,"labels":[],"split":"train"}',
        ]
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(DuplicateIdError):
            read_labels(path)

    def test_unknown_split_lists_allowed(self, tmp_path):
        path = tmp_path / "l.jsonl"
        path.write_text('{"id":0,"labels":[],"split":"validation"}\n')
        with pytest.raises(UnknownSplitError) as exc:
            read_labels(path)
        for allowed in ("train", "dev", "test"):
            assert allowed in str(exc.value)

    def test_round_trip(self, tmp_path):
        spec = SyntheticSpec(2, 40, 4, (0.5, 0.5), 3.0, 0.4, seed=8)
        dataset, _ = generate_synthetic(spec)
        path = tmp_path / "l.jsonl"
        write_labels(path, dataset.records)
        back = read_labels(path)
        assert tuple(back) == dataset.records


class TestSyntheticGenerator:
    def test_zero_noise_collapses_to_centers(self):
        spec = SyntheticSpec(2, 50, 8, (0.5, 0.5), 4.0, 1e-12, seed=3)
        dataset, centers = generate_synthetic(spec)
        unit_centers = centers / np.linalg.norm(centers, axis=1, keepdims=True)
        for rec in dataset.records:
            cls = int(next(iter(rec.categories)).split("_")[1])
            np.testing.assert_allclose(
                dataset.embeddings.data[rec.id], unit_centers[cls], atol=1e-5
            )

    def test_minority_count_within_exact_binomial_interval(self):
        spec = SyntheticSpec(2, 10_000, 8, (0.95, 0.05), 4.0, 0.5, seed=9)
        dataset, _ = generate_synthetic(spec)
        minority = sum(1 for r in dataset.records if "class_1" in r.categories)
        assert BINOM_10K_5PCT_999_LO <= minority <= BINOM_10K_5PCT_999_HI

    def test_deterministic_bytes(self, tmp_path):
        spec = SyntheticSpec(3, 200, 6, (0.2, 0.3, 0.5), 3.0, 0.6, seed=5)
        paths = []
        for name in ("a", "b"):
            dataset, _ = generate_synthetic(spec)
            e = tmp_path / f"{name}.aleb"
            l = tmp_path / f"{name}.jsonl"
            write_embeddings(e, dataset.embeddings)
            write_labels(l, dataset.records)
            paths.append((e.read_bytes(), l.read_bytes()))
        assert paths[0] == paths[1]

    def test_split_fractions(self):
        spec = SyntheticSpec(2, 1000, 4, (0.5, 0.5), 3.0, 0.5, seed=2)
        dataset, _ = generate_synthetic(spec)
        assert len(dataset.split_ids("train")) == 700
        assert len(dataset.split_ids("dev")) == 100
        assert len(dataset.split_ids("test")) == 200

    def test_prevalences_must_sum_to_one(self):
        with pytest.raises(ValueError):
            SyntheticSpec(2, 10, 4, (0.6, 0.5), 3.0, 0.5, seed=1)

    def test_centers_respect_separation(self):
        spec = SyntheticSpec(4, 20, 8, (0.25, 0.25, 0.25, 0.25), 5.0, 0.1, seed=7)
        _, centers = generate_synthetic(spec)
        for i in range(4):
            for j in range(i + 1, 4):
                assert np.linalg.norm(centers[i] - centers[j]) >= 5.0
