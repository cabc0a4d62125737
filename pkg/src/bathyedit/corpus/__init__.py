"""Sounding data model, interchange file format, and synthetic generator."""

from .generate import (
    FEATURE_NAMES,
    PROXY_FEATURES,
    generate_corpus,
    track_features,
    zero_proxy_features,
)
from .io import CorpusFormatError, load_corpus, save_corpus
from .types import (
    BAD,
    Cruise,
    CorpusError,
    GOOD,
    GenSpec,
    Region,
    Sounding,
    feature_count,
    region_stats,
    validate_corpus,
)

__all__ = [
    "BAD",
    "GOOD",
    "Sounding",
    "Cruise",
    "Region",
    "GenSpec",
    "CorpusError",
    "CorpusFormatError",
    "FEATURE_NAMES",
    "PROXY_FEATURES",
    "feature_count",
    "region_stats",
    "validate_corpus",
    "load_corpus",
    "save_corpus",
    "generate_corpus",
    "track_features",
    "zero_proxy_features",
]
