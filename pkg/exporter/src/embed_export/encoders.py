"""Sentence encoders for the exporter.

Two deterministic built-ins cover offline use:

  hash-ngram-tf     teacher-style: character n-gram feature hashing with term
                    frequencies, L2-normalized, so lexically overlapping
                    sentences land close in cosine space.
  hash-token-mean   student-style: a fixed random vector per token (derived
                    from a hash of the token), mean-pooled over the sequence.

Any other identifier is treated as a sentence-transformers model id and
loaded on demand; a missing package or unreachable model raises
EncoderLoadError.
"""

from __future__ import annotations

import hashlib
import re

import numpy as np

_TOKEN_RE = re.compile(r"[a-z0-9]+")


class EncoderLoadError(RuntimeError):
    pass


def _tokens(text: str, max_seq_len: int) -> list[str]:
    return _TOKEN_RE.findall(text.lower())[:max_seq_len]


def _stable_bucket(data: str, buckets: int) -> int:
    digest = hashlib.blake2b(data.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little") % buckets


class CharNgramTfEncoder:
    """Hashed char-n-gram bag with TF weights; rows are unit-normalized."""

    name = "hash-ngram-tf"
    pooling = "ngram-tf"

    def __init__(self, dim: int = 256, ngram_range=(3, 5)):
        self.dim = dim
        self.ngram_range = ngram_range

    def encode(self, texts, max_seq_len: int) -> np.ndarray:
        out = np.zeros((len(texts), self.dim), dtype=np.float64)
        for row, text in enumerate(texts):
            padded = " " + " ".join(_tokens(text, max_seq_len)) + " "
            for n in range(self.ngram_range[0], self.ngram_range[1] + 1):
                for i in range(max(0, len(padded) - n + 1)):
                    out[row, _stable_bucket(padded[i : i + n], self.dim)] += 1.0
            norm = np.linalg.norm(out[row])
            if norm > 0:
                out[row] /= norm
            else:
                out[row, 0] = 1.0  # empty text still needs a finite unit row
        return out.astype(np.float32)


class TokenHashMeanEncoder:
    """Mean pooling over per-token pseudo-embeddings derived from token hashes."""

    name = "hash-token-mean"
    pooling = "mean"

    def __init__(self, dim: int = 128):
        self.dim = dim
        self._cache: dict[str, np.ndarray] = {}

    def _token_vector(self, token: str) -> np.ndarray:
        vec = self._cache.get(token)
        if vec is None:
            digest = hashlib.sha256(token.encode("utf-8")).digest()
            words = [int.from_bytes(digest[i : i + 4], "little") for i in range(0, 32, 4)]
            rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(words)))
            vec = rng.standard_normal(self.dim)
            self._cache[token] = vec
        return vec

    def encode(self, texts, max_seq_len: int) -> np.ndarray:
        out = np.zeros((len(texts), self.dim), dtype=np.float64)
        for row, text in enumerate(texts):
            tokens = _tokens(text, max_seq_len)
            if tokens:
                out[row] = np.mean([self._token_vector(t) for t in tokens], axis=0)
        return out.astype(np.float32)


class SentenceTransformerEncoder:
    """Thin wrapper around a sentence-transformers model."""

    pooling = "model-default"

    def __init__(self, model_id: str):
        try:
            from sentence_transformers import SentenceTransformer
        except ImportError as exc:
            raise EncoderLoadError(
                f"model {model_id!r} needs the sentence-transformers package"
            ) from exc
        try:
            self._model = SentenceTransformer(model_id)
        except Exception as exc:
            raise EncoderLoadError(f"could not load encoder {model_id!r}: {exc}") from exc
        self.name = model_id
        self.dim = int(self._model.get_sentence_embedding_dimension())

    def encode(self, texts, max_seq_len: int) -> np.ndarray:
        self._model.max_seq_length = max_seq_len
        return np.asarray(
            self._model.encode(list(texts), convert_to_numpy=True, show_progress_bar=False),
            dtype=np.float32,
        )


def load_encoder(model_id: str, dim: int | None = None):
    if model_id == CharNgramTfEncoder.name:
        return CharNgramTfEncoder(dim=dim or 256)
    if model_id == TokenHashMeanEncoder.name:
        return TokenHashMeanEncoder(dim=dim or 128)
    return SentenceTransformerEncoder(model_id)
