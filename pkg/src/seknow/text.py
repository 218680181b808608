"""Shared text plumbing: normalization, tokenization and the stopword list.

The stopword list is part of the package's external interface: it ships as a
plain-text data file, one word per line, and its SHA-256 digest is recorded in
index sidecar files so that two indexes are only comparable when they were
built with the same list. The ``SEKNOW_STOPWORDS`` environment variable may
point to an alternative file.
"""

from __future__ import annotations

import hashlib
import os
import re
from functools import lru_cache
from importlib import resources

STOPWORDS_ENV_VAR = "SEKNOW_STOPWORDS"

_TOKEN_RE = re.compile(r"[a-z0-9]+")
_MIN_TOKEN_LEN = 2


def normalize(text: str) -> str:
    """Lowercase, trim, and collapse internal whitespace runs to one space."""
    return " ".join(text.lower().split())


def stopwords_file() -> str | None:
    """Path of the stopword file named by the environment, if any."""
    path = os.environ.get(STOPWORDS_ENV_VAR)
    return path if path else None


def _packaged_stopwords_bytes() -> bytes:
    return resources.files("seknow.data").joinpath("stopwords.txt").read_bytes()


def _stopwords_bytes(path: str | None = None) -> bytes:
    if path is None:
        path = stopwords_file()
    if path is None:
        return _packaged_stopwords_bytes()
    with open(path, "rb") as fh:
        return fh.read()


def load_stopwords(path: str | None = None) -> frozenset[str]:
    """Load the stopword set from ``path``, the environment, or the package."""
    words = _stopwords_bytes(path).decode("utf-8").split()
    return frozenset(normalize(w) for w in words if w.strip())


def stopwords_digest(path: str | None = None) -> str:
    """SHA-256 hex digest of the stopword file in effect."""
    return hashlib.sha256(_stopwords_bytes(path)).hexdigest()


@lru_cache(maxsize=1)
def default_stopwords() -> frozenset[str]:
    return frozenset(_packaged_stopwords_bytes().decode("utf-8").split())


def tokenize(text: str, stopwords: frozenset[str] | None = None) -> list[str]:
    """Split ``text`` into lowercase alphanumeric tokens.

    Punctuation is dropped, stopwords and tokens shorter than two characters
    are removed, and duplicates are kept (the result is a token stream, not a
    vocabulary).
    """
    if stopwords is None:
        stopwords = default_stopwords()
    tokens = _TOKEN_RE.findall(text.lower())
    return [t for t in tokens if len(t) >= _MIN_TOKEN_LEN and t not in stopwords]


def sha256_file(path: str) -> str:
    """SHA-256 hex digest of a file's raw bytes."""
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()
