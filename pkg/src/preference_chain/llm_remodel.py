"""Language-model calibration of the path-scoring prior.

The prior distribution is rendered into a prompt together with the agent's
profile, desire and any natural-language conditions (weather, city, ...);
the provider's reply is parsed back into a distribution that replaces the
prior. Every failure path (network, malformed output, unknown options)
falls back to the prior, so calibration never raises.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Protocol

import requests

from .embedding import profile_to_text
from .errors import ParseFailure, ProviderError
from .preference import PreferenceDistribution
from .retrieval import QueryAgent
from .schema import ChoiceCategorySet

PRIOR_JSON_MARKER = "Prior probabilities (JSON): "


@dataclass(frozen=True)
class GenerationParams:
    temperature: float = 0.6
    top_p: float = 0.95
    top_k: int = 20
    repeat_penalty: float = 1.0
    model: str = "qwen3:8b"


class LlmProvider(Protocol):
    provider_id: str

    def complete(self, prompt: str, params: GenerationParams) -> str: ...


class CalibrationSource(Enum):
    LLM_ACCEPTED = "llm_accepted"
    FALLBACK_PRIOR = "fallback_prior"
    DEGENERATE_UNIFORM = "degenerate_uniform"


@dataclass
class CalibrationResult:
    posterior: PreferenceDistribution
    source: CalibrationSource
    raw_response: str


def build_prompt(agent: QueryAgent, prior: PreferenceDistribution, context: str = "") -> str:
    """Deterministic calibration prompt.

    Contains the canonical profile text, the desire, every option with its
    prior rendered to 3 decimals, the context, and a machine-readable
    full-precision copy of the prior (so an echoing mock is an exact
    no-op). The reply must be a single JSON object over the option keys.
    """
    options = prior.choice_set.options
    lines = [
        "You are simulating the travel choices of one person.",
        f"Profile: {profile_to_text(agent.profile)}",
        f"Desire: {agent.desire_text()}",
        f"Conditions: {context.strip() or 'none'}",
        f"Based on similar people, the prior probabilities for {prior.choice_set.name} are:",
    ]
    for option in options:
        lines.append(f"  - {option}: {prior.probabilities[option]:.3f}")
    lines.append(PRIOR_JSON_MARKER + json.dumps(prior.probabilities, sort_keys=False))
    lines.append(
        "Adjust these probabilities for the person and conditions above. "
        "Reply with a single JSON object mapping every option key to its probability."
    )
    return "\n".join(lines)


def _candidate_json_objects(text: str):
    """Yield substrings of ``text`` that look like balanced JSON objects."""
    depth = 0
    start = None
    in_string = False
    escaped = False
    for i, ch in enumerate(text):
        if in_string:
            if escaped:
                escaped = False
            elif ch == "\\":
                escaped = True
            elif ch == '"':
                in_string = False
            continue
        if ch == '"':
            in_string = True
        elif ch == "{":
            if depth == 0:
                start = i
            depth += 1
        elif ch == "}":
            if depth > 0:
                depth -= 1
                if depth == 0 and start is not None:
                    yield text[start : i + 1]
                    start = None


def parse_response(raw: str, choice_set: ChoiceCategorySet) -> dict[str, float]:
    """Extract the first JSON object and normalize it into a distribution.

    Keys must be a subset of the choice set; missing options are filled
    with 0 and negative values clamped to 0. The result is renormalized
    unless it already sums to 1 within tolerance (keeping an echoed prior
    bit-exact). Raises ParseFailure when nothing usable is found.
    """
    for candidate in _candidate_json_objects(raw):
        try:
            obj = json.loads(candidate)
        except json.JSONDecodeError:
            continue
        if not isinstance(obj, dict):
            continue
        unknown = [k for k in obj if k not in choice_set]
        if unknown:
            raise ParseFailure(f"unknown option keys {unknown}")
        values = {}
        for option in choice_set.options:
            v = obj.get(option, 0.0)
            if not isinstance(v, (int, float)) or isinstance(v, bool):
                raise ParseFailure(f"non-numeric probability for {option!r}: {v!r}")
            values[option] = max(0.0, float(v))
        total = sum(values.values())
        if total <= 0.0:
            raise ParseFailure("all probabilities zero after clamping")
        if abs(total - 1.0) > 1e-9:
            values = {o: v / total for o, v in values.items()}
        return values
    raise ParseFailure("no JSON object found in response")


def calibrate(
    agent: QueryAgent,
    prior: PreferenceDistribution,
    context: str,
    provider: LlmProvider,
    params: Optional[GenerationParams] = None,
    blend: float = 1.0,
) -> CalibrationResult:
    """Run one calibration round; absorbs every failure into the prior.

    ``blend`` mixes posterior = blend * llm + (1 - blend) * prior; the
    default 1.0 replaces the prior wholesale. A degenerate prior is still
    sent to the provider (rendered uniform by construction).
    """
    params = params or GenerationParams()
    prompt = build_prompt(agent, prior, context)
    raw = ""
    try:
        raw = provider.complete(prompt, params)
        parsed = parse_response(raw, prior.choice_set)
    except (ProviderError, ParseFailure):
        source = (
            CalibrationSource.DEGENERATE_UNIFORM
            if prior.degenerate
            else CalibrationSource.FALLBACK_PRIOR
        )
        return CalibrationResult(prior, source, raw)

    if blend == 1.0:
        probabilities = parsed
    else:
        mixed = {
            o: blend * parsed[o] + (1.0 - blend) * prior.probabilities[o]
            for o in prior.choice_set.options
        }
        total = sum(mixed.values())
        probabilities = {o: v / total for o, v in mixed.items()}
    posterior = PreferenceDistribution(prior.choice_set, probabilities)
    return CalibrationResult(posterior, CalibrationSource.LLM_ACCEPTED, raw)


# ----------------------------------------------------------------------
# Providers
# ----------------------------------------------------------------------


class IdentityMockLlm:
    """Echoes back the full-precision prior embedded in the prompt.

    On prompts without the prior marker (POI selection, schedules) it
    returns an empty string so callers exercise their fallback paths.
    Deterministic by construction.
    """

    provider_id = "mock-identity"

    def complete(self, prompt: str, params: GenerationParams) -> str:
        for line in prompt.splitlines():
            if line.startswith(PRIOR_JSON_MARKER):
                return line[len(PRIOR_JSON_MARKER):]
        return ""


class ScriptedMockLlm:
    """Returns canned responses in order, repeating the last one."""

    def __init__(self, responses: list[str], provider_id: str = "mock-scripted"):
        if not responses:
            raise ValueError("need at least one response")
        self.responses = responses
        self.provider_id = provider_id
        self.calls: list[str] = []

    def complete(self, prompt: str, params: GenerationParams) -> str:
        self.calls.append(prompt)
        idx = min(len(self.calls) - 1, len(self.responses) - 1)
        return self.responses[idx]


class RemoteLlm:
    """HTTP completion provider with bounded retries.

    POSTs {"model", "prompt", "options": {...}, "stream": false} and reads
    a top-level text field "response". Raises ProviderError after
    ``max_retries`` additional attempts fail.
    """

    def __init__(
        self,
        url: str,
        model: Optional[str] = None,
        timeout: float = 120.0,
        max_retries: int = 2,
        retry_wait: float = 0.5,
        session=None,
    ):
        self.url = url
        self.model = model
        self.timeout = timeout
        self.max_retries = max_retries
        self.retry_wait = retry_wait
        self.provider_id = f"remote-llm:{model or 'config-model'}"
        self._session = session or requests.Session()

    def complete(self, prompt: str, params: GenerationParams) -> str:
        payload = {
            "model": self.model or params.model,
            "prompt": prompt,
            "options": {
                "temperature": params.temperature,
                "top_p": params.top_p,
                "top_k": params.top_k,
                "repeat_penalty": params.repeat_penalty,
            },
            "stream": False,
        }
        last_error: Optional[Exception] = None
        for attempt in range(self.max_retries + 1):
            try:
                response = self._session.post(self.url, json=payload, timeout=self.timeout)
                response.raise_for_status()
                body = response.json()
                text = body.get("response")
                if not isinstance(text, str):
                    raise ProviderError("completion response lacks a text field 'response'")
                return text
            except ProviderError as exc:
                last_error = exc
            except requests.RequestException as exc:
                last_error = exc
            except ValueError as exc:
                last_error = exc
            if attempt < self.max_retries and self.retry_wait > 0:
                time.sleep(self.retry_wait)
        raise ProviderError(f"completion failed after {self.max_retries + 1} attempts: {last_error}")
