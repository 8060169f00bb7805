import zlib

import numpy as np
import pytest

from preference_chain.embedding import (
    HashEmbedder,
    RemoteEmbedder,
    cosine_similarity,
    hash_embed,
    profile_to_text,
    similarity_weight,
)
from preference_chain.errors import (
    DimensionMismatch,
    EmptyText,
    ProviderError,
    ZeroVector,
)

from tests.conftest import make_profile


def test_cosine_hand_oracle():
    # dot = 32, |a| = sqrt(14), |b| = sqrt(77); 32/sqrt(1078) = 0.974631846...
    value = cosine_similarity(np.array([1.0, 2.0, 3.0]), np.array([4.0, 5.0, 6.0]))
    assert value == pytest.approx(0.9746318461970762, abs=1e-12)


def test_cosine_errors():
    with pytest.raises(DimensionMismatch):
        cosine_similarity(np.ones(3), np.ones(4))
    with pytest.raises(ZeroVector):
        cosine_similarity(np.zeros(3), np.ones(3))


def test_cosine_properties_random():
    rng = np.random.default_rng(5)
    for _ in range(50):
        a = rng.normal(size=16)
        b = rng.normal(size=16)
        c = cosine_similarity(a, b)
        assert -1.0 - 1e-12 <= c <= 1.0 + 1e-12
        assert c == pytest.approx(cosine_similarity(b, a))
        # invariant under positive rescaling
        assert c == pytest.approx(cosine_similarity(3.7 * a, 0.2 * b))
    assert cosine_similarity(a, a) == pytest.approx(1.0)
    assert cosine_similarity(a, -a) == pytest.approx(-1.0)


def test_similarity_weight_clamps_negative():
    assert similarity_weight(np.array([1.0, 0.0]), np.array([-1.0, 0.0])) == 0.0
    assert similarity_weight(np.array([1.0, 0.0]), np.array([1.0, 0.0])) == 1.0


def test_hash_embed_bucket_oracle():
    # expected vector built directly from the documented bucket rule
    dim = 32
    text = "walk Walk bike"
    expected = np.zeros(dim)
    expected[zlib.crc32(b"walk") % dim] += 2.0
    expected[zlib.crc32(b"bike") % dim] += 1.0
    expected /= np.linalg.norm(expected)
    np.testing.assert_allclose(hash_embed(text, dim), expected, atol=1e-15)


def test_hash_embed_unit_norm_and_determinism():
    texts = [
        "age_group: 25-34; income_level: $50k-$100k",
        "purpose: work; start_time: 8",
        "one two three four five six",
    ]
    for text in texts:
        v1 = hash_embed(text)
        v2 = hash_embed(text)
        assert v1.shape == (256,)
        assert np.linalg.norm(v1) == pytest.approx(1.0)
        np.testing.assert_array_equal(v1, v2)


def test_hash_embed_case_and_punctuation_insensitive():
    np.testing.assert_array_equal(
        hash_embed("Work, at 8!"), hash_embed("work at 8")
    )


def test_hash_embed_rejects_bad_input():
    with pytest.raises(EmptyText):
        hash_embed("!!! ---")
    with pytest.raises(ValueError):
        hash_embed("walk", dimension=4)


def test_hash_embedder_caches_and_reuses():
    provider = HashEmbedder(dimension=64)
    v1 = provider.embed("shared text")
    v2 = provider.embed("shared text")
    assert v1 is v2
    assert provider.provider_id == "hash-64"


def test_profile_to_text_schema_order():
    profile = make_profile()
    text = profile_to_text(profile)
    assert text.startswith("age_group: 25-34; ")
    assert "income_group: $50k-$100k" in text
    assert text.count(";") == 5
    # mapping input with shuffled key order renders identically
    items = list(profile.as_dict().items())
    shuffled = dict(reversed(items))
    assert profile_to_text(shuffled) == text


def test_profile_to_text_distinct_profiles_distinct_texts():
    a = profile_to_text(make_profile())
    b = profile_to_text(make_profile(age_group="65+"))
    assert a != b


class _FakeResponse:
    def __init__(self, payload):
        self._payload = payload

    def raise_for_status(self):
        return None

    def json(self):
        return self._payload


class _FakeSession:
    def __init__(self, payload):
        self.payload = payload
        self.calls = 0

    def post(self, url, json=None, timeout=None):
        self.calls += 1
        return _FakeResponse(self.payload)


class _FailingSession:
    def post(self, url, json=None, timeout=None):
        import requests

        raise requests.ConnectionError("refused")


def test_remote_embedder_parses_and_caches():
    session = _FakeSession({"embedding": [1.0, 2.0, 2.0]})
    provider = RemoteEmbedder("http://x/embed", "m", session=session)
    v1 = provider.embed("hello")
    v2 = provider.embed("hello")
    np.testing.assert_array_equal(v1, np.array([1.0, 2.0, 2.0]))
    assert session.calls == 1  # second call served from cache
    assert v1 is v2


def test_remote_embedder_bad_payload_raises():
    provider = RemoteEmbedder(
        "http://x/embed", "m", session=_FakeSession({"nope": True})
    )
    with pytest.raises(ProviderError):
        provider.embed("hello")


def test_remote_embedder_falls_back_to_hash():
    provider = RemoteEmbedder(
        "http://x/embed",
        "m",
        session=_FailingSession(),
        fallback_to_hash=True,
        hash_dimension=64,
    )
    vec = provider.embed("hello world")
    np.testing.assert_allclose(vec, hash_embed("hello world", 64))


def test_remote_embedder_no_fallback_raises():
    provider = RemoteEmbedder("http://x/embed", "m", session=_FailingSession())
    with pytest.raises(ProviderError):
        provider.embed("hello")
