"""Export a labeled text corpus into the engine's .aleb/.jsonl input formats.

The corpus is newline-delimited JSON with fields text, labels, split (id is
optional: row order defines ids 0..n-1). Teacher and student matrices are
written row-aligned with the labels file, and a manifest records everything
needed to reproduce the export byte-for-byte with deterministic encoders.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .encoders import load_encoder

ALEB_HEADER = struct.Struct("<4sBII")
SPLITS = ("train", "dev", "test")


class CorpusError(ValueError):
    pass


@dataclass(frozen=True)
class CorpusRecord:
    id: int
    text: str
    labels: tuple[str, ...]
    split: str


def read_corpus(path) -> list[CorpusRecord]:
    records: list[CorpusRecord] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
            for field in ("text", "labels", "split"):
                if field not in obj:
                    raise CorpusError(f"{path}:{lineno}: missing field {field!r}")
            if obj["split"] not in SPLITS:
                raise CorpusError(
                    f"{path}:{lineno}: unknown split {obj['split']!r}; allowed: {', '.join(SPLITS)}"
                )
            records.append(
                CorpusRecord(
                    id=int(obj.get("id", len(records))),
                    text=str(obj["text"]),
                    labels=tuple(sorted(obj["labels"])),
                    split=obj["split"],
                )
            )
    if not records:
        raise CorpusError(f"{path}: corpus is empty")
    if [r.id for r in records] != list(range(len(records))):
        raise CorpusError(f"{path}: ids must be dense 0..n-1 in order (or omitted)")
    return records


def write_aleb(path, matrix: np.ndarray) -> None:
    matrix = np.ascontiguousarray(matrix, dtype="<f4")
    if not np.isfinite(matrix).all():
        raise CorpusError("refusing to write non-finite embeddings")
    with open(path, "wb") as fh:
        fh.write(ALEB_HEADER.pack(b"ALEB", 1, matrix.shape[0], matrix.shape[1]))
        fh.write(matrix.tobytes())


def write_labels(path, records) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for rec in records:
            obj = {
                "id": rec.id,
                "labels": list(rec.labels),
                "split": rec.split,
                "text": rec.text,
            }
            fh.write(json.dumps(obj, sort_keys=True, ensure_ascii=False))
            fh.write("\n")


def content_hash(corpus_path, teacher_id, student_id, max_seq_len, dims) -> str:
    digest = hashlib.sha256()
    digest.update(Path(corpus_path).read_bytes())
    digest.update(
        json.dumps(
            {
                "teacher": teacher_id,
                "student": student_id,
                "max_seq_len": max_seq_len,
                "dims": dims,
            },
            sort_keys=True,
        ).encode("utf-8")
    )
    return digest.hexdigest()


def export(
    corpus_path,
    teacher_id: str,
    student_id: str,
    out_dir,
    max_seq_len: int = 256,
    teacher_dim: int | None = None,
    student_dim: int | None = None,
) -> dict:
    """Encode the corpus with both encoders and write the four artifacts.

    Returns the manifest dict (also written to manifest.json).
    """
    records = read_corpus(corpus_path)
    texts = [r.text for r in records]

    teacher = load_encoder(teacher_id, dim=teacher_dim)
    student = load_encoder(student_id, dim=student_dim)
    teacher_matrix = teacher.encode(texts, max_seq_len)
    student_matrix = student.encode(texts, max_seq_len)

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "teacher": out / "teacher.aleb",
        "student": out / "student.aleb",
        "labels": out / "labels.jsonl",
        "manifest": out / "manifest.json",
    }
    write_aleb(paths["teacher"], teacher_matrix)
    write_aleb(paths["student"], student_matrix)
    write_labels(paths["labels"], records)

    manifest = {
        "teacher_model": teacher.name,
        "student_model": student.name,
        "pooling": {"teacher": teacher.pooling, "student": student.pooling},
        "max_seq_len": max_seq_len,
        "corpus": str(corpus_path),
        "outputs": {
            "teacher": paths["teacher"].name,
            "student": paths["student"].name,
            "labels": paths["labels"].name,
        },
        "rows": len(records),
        "dims": {"teacher": int(teacher_matrix.shape[1]), "student": int(student_matrix.shape[1])},
        "content_hash": content_hash(
            corpus_path,
            teacher.name,
            student.name,
            max_seq_len,
            {"teacher": int(teacher_matrix.shape[1]), "student": int(student_matrix.shape[1])},
        ),
    }
    with open(paths["manifest"], "w", encoding="utf-8", newline="\n") as fh:
        json.dump(manifest, fh, sort_keys=True, indent=2)
        fh.write("\n")
    return manifest
