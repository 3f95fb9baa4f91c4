"""Corpus-to-embeddings exporter for the active-learning engine."""

from .encoders import (
    CharNgramTfEncoder,
    EncoderLoadError,
    TokenHashMeanEncoder,
    load_encoder,
)
from .export import CorpusError, CorpusRecord, export, read_corpus

__version__ = "0.1.0"
