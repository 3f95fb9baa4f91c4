"""Command-line entry: corpus in, engine-ready embedding files out."""

from __future__ import annotations

import argparse
import sys

from .encoders import EncoderLoadError
from .export import CorpusError, export


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="embed-export",
        description="Export a labeled corpus to .aleb embeddings + .jsonl labels.",
    )
    parser.add_argument("--corpus", required=True, help="newline-delimited JSON corpus")
    parser.add_argument("--teacher", default="hash-ngram-tf", help="teacher encoder id")
    parser.add_argument("--student", default="hash-token-mean", help="student encoder id")
    parser.add_argument("--teacher-dim", type=int, help="dim for built-in teacher encoders")
    parser.add_argument("--student-dim", type=int, help="dim for built-in student encoders")
    parser.add_argument("--max-seq-len", type=int, default=256)
    parser.add_argument("--out", required=True, help="output directory")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        manifest = export(
            args.corpus,
            teacher_id=args.teacher,
            student_id=args.student,
            out_dir=args.out,
            max_seq_len=args.max_seq_len,
            teacher_dim=args.teacher_dim,
            student_dim=args.student_dim,
        )
    except EncoderLoadError as exc:
        print(f"embed-export: error: encoder: {exc}", file=sys.stderr)
        return 3
    except (CorpusError, OSError) as exc:
        print(f"embed-export: error: data: {exc}", file=sys.stderr)
        return 3
    print(
        f"exported {manifest['rows']} rows: teacher {manifest['dims']['teacher']}d, "
        f"student {manifest['dims']['student']}d -> {args.out}"
    )
    print(f"content hash: {manifest['content_hash']}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
