"""Text embeddings and similarity weights.

Profile and desire texts are embedded via a pluggable provider; clamped
cosine similarity between the vectors supplies the similar_to and want_to
edge weights. Two providers ship with the package:

  * HashEmbedder — deterministic offline token-hash bag of words; the
    default and the mock used throughout the tests.
  * RemoteEmbedder — HTTP provider posting {"model", "prompt"} and reading
    a top-level "embedding" array from the JSON response.

Both are wrapped in an in-process cache keyed by (provider id, text) so
repeated retrievals are deterministic and cheap.
"""

from __future__ import annotations

import re
import threading
import zlib
from typing import Mapping, Protocol, Union

import numpy as np
import requests

from .errors import DimensionMismatch, EmptyText, ProviderError, ZeroVector
from .schema import INPUT_CATEGORIES, AgentProfile

_TOKEN_RE = re.compile(r"[0-9a-z]+")
DEFAULT_HASH_DIMENSION = 256


class EmbeddingProvider(Protocol):
    provider_id: str

    def embed(self, text: str) -> np.ndarray: ...


def profile_to_text(profile: Union[AgentProfile, Mapping[str, str]]) -> str:
    """Canonical order-stable "key: value; ..." rendering of a profile.

    Accepts either an AgentProfile or any mapping whose keys are schema
    input columns; keys are always rendered in schema order so equal
    profiles produce byte-equal texts.
    """
    if isinstance(profile, AgentProfile):
        mapping = profile.as_dict()
    else:
        mapping = dict(profile)
    parts = [f"{key}: {mapping[key]}" for key in INPUT_CATEGORIES if key in mapping]
    return "; ".join(parts)


def cosine_similarity(a: np.ndarray, b: np.ndarray) -> float:
    """Plain cosine in [-1, 1]; rejects mismatched dimensions and zero vectors."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise DimensionMismatch(f"dimensions {a.shape} vs {b.shape}")
    norm_a = float(np.linalg.norm(a))
    norm_b = float(np.linalg.norm(b))
    if norm_a == 0.0 or norm_b == 0.0:
        raise ZeroVector("cosine similarity undefined for the zero vector")
    return float(np.dot(a, b) / (norm_a * norm_b))


def similarity_weight(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine clamped to [0, 1] so it can serve as an edge weight."""
    return max(0.0, cosine_similarity(a, b))


def hash_embed(text: str, dimension: int = DEFAULT_HASH_DIMENSION) -> np.ndarray:
    """Deterministic token-hash bag-of-words vector, L2-normalized.

    Tokens are lowercased runs of [0-9a-z]; each token increments the
    bucket crc32(token) % dimension. crc32 is stable across processes and
    platforms, unlike the builtin hash().
    """
    if dimension < 8:
        raise ValueError("hash_embed dimension must be >= 8")
    tokens = _TOKEN_RE.findall(text.lower())
    if not tokens:
        raise EmptyText("cannot embed text with no alphanumeric tokens")
    vec = np.zeros(dimension, dtype=float)
    for token in tokens:
        vec[zlib.crc32(token.encode("utf-8")) % dimension] += 1.0
    return vec / np.linalg.norm(vec)


class HashEmbedder:
    """Offline provider around hash_embed, with a result cache."""

    def __init__(self, dimension: int = DEFAULT_HASH_DIMENSION):
        self.dimension = dimension
        self.provider_id = f"hash-{dimension}"
        self._cache: dict[str, np.ndarray] = {}
        self._lock = threading.Lock()

    def embed(self, text: str) -> np.ndarray:
        with self._lock:
            cached = self._cache.get(text)
        if cached is not None:
            return cached
        vec = hash_embed(text, self.dimension)
        with self._lock:
            self._cache[text] = vec
        return vec


class RemoteEmbedder:
    """HTTP embedding provider.

    POSTs {"model": ..., "prompt": text} to ``url`` and expects a JSON
    response with a top-level numeric array field "embedding". Failures
    raise ProviderError unless ``fallback_to_hash`` is set, in which case
    the hash provider answers instead.
    """

    def __init__(
        self,
        url: str,
        model: str,
        timeout: float = 30.0,
        fallback_to_hash: bool = False,
        hash_dimension: int = DEFAULT_HASH_DIMENSION,
        session=None,
    ):
        self.url = url
        self.model = model
        self.timeout = timeout
        self.provider_id = f"remote-embed:{model}"
        self._fallback = HashEmbedder(hash_dimension) if fallback_to_hash else None
        self._session = session or requests.Session()
        self._cache: dict[str, np.ndarray] = {}
        self._lock = threading.Lock()

    def embed(self, text: str) -> np.ndarray:
        if not text.strip():
            raise EmptyText("cannot embed empty text")
        with self._lock:
            cached = self._cache.get(text)
        if cached is not None:
            return cached
        try:
            vec = self._fetch(text)
        except ProviderError:
            if self._fallback is None:
                raise
            vec = self._fallback.embed(text)
        with self._lock:
            self._cache[text] = vec
        return vec

    def _fetch(self, text: str) -> np.ndarray:
        try:
            response = self._session.post(
                self.url,
                json={"model": self.model, "prompt": text},
                timeout=self.timeout,
            )
            response.raise_for_status()
            payload = response.json()
        except requests.RequestException as exc:
            raise ProviderError(f"embedding request failed: {exc}") from exc
        except ValueError as exc:
            raise ProviderError(f"embedding response is not JSON: {exc}") from exc
        values = payload.get("embedding")
        if not isinstance(values, list) or not values:
            raise ProviderError("embedding response lacks a non-empty 'embedding' array")
        try:
            return np.asarray(values, dtype=float)
        except (TypeError, ValueError) as exc:
            raise ProviderError(f"embedding array is not numeric: {exc}") from exc
