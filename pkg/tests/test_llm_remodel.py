import json
import math

import pytest

from preference_chain.errors import ParseFailure, ProviderError
from preference_chain.llm_remodel import (
    PRIOR_JSON_MARKER,
    CalibrationSource,
    GenerationParams,
    IdentityMockLlm,
    RemoteLlm,
    ScriptedMockLlm,
    build_prompt,
    calibrate,
    parse_response,
)
from preference_chain.preference import PreferenceDistribution, uniform_distribution
from preference_chain.retrieval import QueryAgent
from preference_chain.schema import ChoiceCategorySet

from tests.conftest import make_profile

_MODES = ChoiceCategorySet("mode", ("walk", "bike", "drive"))


def _agent():
    return QueryAgent(make_profile(), "work", 8)


def _prior(walk=0.2, bike=0.3, drive=0.5):
    return PreferenceDistribution(_MODES, {"walk": walk, "bike": bike, "drive": drive})


# ----------------------------------------------------------------------
# prompt construction
# ----------------------------------------------------------------------


def test_prompt_is_deterministic_and_complete():
    prior = _prior()
    p1 = build_prompt(_agent(), prior, "light rain")
    p2 = build_prompt(_agent(), prior, "light rain")
    assert p1 == p2
    assert "age_group: 25-34" in p1
    assert "purpose: work; start_time: 8" in p1
    assert "Conditions: light rain" in p1
    for option in _MODES:
        assert f"- {option}: " in p1
    assert PRIOR_JSON_MARKER in p1


def test_prompt_embeds_full_precision_prior():
    prior = _prior(1 / 3, 1 / 3, 1 / 3)
    prompt = build_prompt(_agent(), prior, "")
    marker_line = next(
        line for line in prompt.splitlines() if line.startswith(PRIOR_JSON_MARKER)
    )
    embedded = json.loads(marker_line[len(PRIOR_JSON_MARKER):])
    assert embedded == prior.probabilities  # bit-exact floats survive the JSON trip


def test_prompt_empty_context_renders_none():
    prompt = build_prompt(_agent(), _prior(), "   ")
    assert "Conditions: none" in prompt


# ----------------------------------------------------------------------
# response parsing
# ----------------------------------------------------------------------


def test_parse_plain_object():
    got = parse_response('{"walk": 0.5, "bike": 0.25, "drive": 0.25}', _MODES)
    assert got == {"walk": 0.5, "bike": 0.25, "drive": 0.25}


def test_parse_prose_wrapped_object():
    raw = 'Sure! Considering the rain:\n{"walk": 0.1, "bike": 0.1, "drive": 0.8}\nDone.'
    got = parse_response(raw, _MODES)
    assert got["drive"] == pytest.approx(0.8)


def test_parse_renormalizes_unnormalized_values():
    got = parse_response('{"walk": 2, "bike": 1, "drive": 1}', _MODES)
    assert got == pytest.approx({"walk": 0.5, "bike": 0.25, "drive": 0.25})


def test_parse_fills_missing_options_with_zero():
    got = parse_response('{"walk": 0.5, "drive": 0.5}', _MODES)
    assert got["bike"] == 0.0
    assert math.fsum(got.values()) == pytest.approx(1.0)


def test_parse_clamps_negatives():
    got = parse_response('{"walk": -0.5, "bike": 1.0, "drive": 1.0}', _MODES)
    assert got == pytest.approx({"walk": 0.0, "bike": 0.5, "drive": 0.5})


def test_parse_keeps_exactly_normalized_sum_untouched():
    # thirds do not re-round when the sum is already 1 within tolerance
    third = 1 / 3
    raw = json.dumps({"walk": third, "bike": third, "drive": 1 - 2 * third})
    got = parse_response(raw, _MODES)
    assert got["walk"] == third


def test_parse_skips_unparseable_then_succeeds():
    raw = '{"walk": broken} and then {"walk": 1.0, "bike": 0, "drive": 0}'
    got = parse_response(raw, _MODES)
    assert got["walk"] == 1.0


def test_parse_failures():
    with pytest.raises(ParseFailure):
        parse_response("no json here", _MODES)
    with pytest.raises(ParseFailure):
        parse_response('{"running": 1.0}', _MODES)  # unknown key
    with pytest.raises(ParseFailure):
        parse_response('{"walk": 0, "bike": 0, "drive": 0}', _MODES)
    with pytest.raises(ParseFailure):
        parse_response('{"walk": "high", "bike": 0, "drive": 0}', _MODES)
    with pytest.raises(ParseFailure):
        parse_response('{"walk": true, "bike": 0, "drive": 0}', _MODES)


def test_parse_handles_braces_inside_strings():
    raw = '{"walk": 0.5, "bike": 0.5, "drive": 0.0}'
    got = parse_response('prefix "{not json}" ' + raw, _MODES)
    assert got["walk"] == 0.5


# ----------------------------------------------------------------------
# calibrate
# ----------------------------------------------------------------------


def test_identity_mock_is_exact_noop():
    prior = _prior(0.123456789012345, 0.2, 0.676543210987655)
    result = calibrate(_agent(), prior, "sunny", IdentityMockLlm())
    assert result.source == CalibrationSource.LLM_ACCEPTED
    assert result.posterior.probabilities == prior.probabilities


def test_scripted_mock_overrides_prior():
    provider = ScriptedMockLlm(['{"walk": 0.8, "bike": 0.1, "drive": 0.1}'])
    result = calibrate(_agent(), _prior(), "", provider)
    assert result.source == CalibrationSource.LLM_ACCEPTED
    assert result.posterior.probabilities["walk"] == pytest.approx(0.8)
    assert len(provider.calls) == 1
    assert PRIOR_JSON_MARKER in provider.calls[0]


def test_garbage_response_falls_back_to_prior():
    prior = _prior()
    result = calibrate(_agent(), prior, "", ScriptedMockLlm(["word salad"]))
    assert result.source == CalibrationSource.FALLBACK_PRIOR
    assert result.posterior is prior
    assert result.raw_response == "word salad"


def test_provider_error_falls_back_to_prior():
    class Exploding:
        provider_id = "boom"

        def complete(self, prompt, params):
            raise ProviderError("down")

    prior = _prior()
    result = calibrate(_agent(), prior, "", Exploding())
    assert result.source == CalibrationSource.FALLBACK_PRIOR
    assert result.posterior is prior


def test_degenerate_prior_failure_reports_uniform_source():
    prior = uniform_distribution(_MODES, degenerate=True)
    result = calibrate(_agent(), prior, "", ScriptedMockLlm(["nope"]))
    assert result.source == CalibrationSource.DEGENERATE_UNIFORM
    assert result.posterior is prior


def test_blend_mixes_prior_and_response():
    prior = _prior(0.2, 0.3, 0.5)
    provider = ScriptedMockLlm(['{"walk": 1.0, "bike": 0.0, "drive": 0.0}'])
    result = calibrate(_agent(), prior, "", provider, blend=0.5)
    assert result.posterior.probabilities["walk"] == pytest.approx(0.6)
    assert result.posterior.probabilities["bike"] == pytest.approx(0.15)
    assert result.posterior.probabilities["drive"] == pytest.approx(0.25)


def test_scripted_mock_repeats_last_response():
    provider = ScriptedMockLlm(["a", "b"])
    params = GenerationParams()
    assert provider.complete("x", params) == "a"
    assert provider.complete("x", params) == "b"
    assert provider.complete("x", params) == "b"


# ----------------------------------------------------------------------
# RemoteLlm
# ----------------------------------------------------------------------


class _FakeResponse:
    def __init__(self, payload):
        self._payload = payload

    def raise_for_status(self):
        return None

    def json(self):
        return self._payload


class _FlakySession:
    """Fails ``failures`` times, then answers."""

    def __init__(self, failures, payload):
        self.failures = failures
        self.payload = payload
        self.posts = []

    def post(self, url, json=None, timeout=None):
        import requests

        self.posts.append(json)
        if len(self.posts) <= self.failures:
            raise requests.ConnectionError("refused")
        return _FakeResponse(self.payload)


def test_remote_llm_payload_carries_generation_params():
    session = _FlakySession(0, {"response": "ok"})
    llm = RemoteLlm("http://x/generate", model="m", session=session, retry_wait=0)
    text = llm.complete("hello", GenerationParams(temperature=0.6, top_p=0.95, top_k=20))
    assert text == "ok"
    payload = session.posts[0]
    assert payload["model"] == "m"
    assert payload["stream"] is False
    assert payload["options"] == {
        "temperature": 0.6,
        "top_p": 0.95,
        "top_k": 20,
        "repeat_penalty": 1.0,
    }


def test_remote_llm_retries_then_succeeds():
    session = _FlakySession(2, {"response": "ok"})
    llm = RemoteLlm("http://x", session=session, max_retries=2, retry_wait=0)
    assert llm.complete("p", GenerationParams()) == "ok"
    assert len(session.posts) == 3


def test_remote_llm_exhausts_retries():
    session = _FlakySession(10, {"response": "ok"})
    llm = RemoteLlm("http://x", session=session, max_retries=2, retry_wait=0)
    with pytest.raises(ProviderError):
        llm.complete("p", GenerationParams())
    assert len(session.posts) == 3


def test_remote_llm_rejects_missing_text_field():
    session = _FlakySession(0, {"bad": 1})
    llm = RemoteLlm("http://x", session=session, max_retries=0, retry_wait=0)
    with pytest.raises(ProviderError):
        llm.complete("p", GenerationParams())


def test_remote_llm_model_falls_back_to_params():
    session = _FlakySession(0, {"response": "ok"})
    llm = RemoteLlm("http://x", session=session, retry_wait=0)
    llm.complete("p", GenerationParams(model="param-model"))
    assert session.posts[0]["model"] == "param-model"
