"""Run configuration: sectioned JSON file with defaults, strict key checking.

A config file holds four optional sections (paths, providers, pipeline,
generation); unknown sections or keys are rejected so typos fail loudly.
Mock providers are the default — remote ones need explicit URLs, which the
environment variables PC_LLM_URL / PC_EMBED_URL can inject (setting one
also turns the corresponding mock flag off). The canonical-JSON sha256 of
a config is recorded in every output manifest.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import os
from dataclasses import dataclass, field
from typing import IO, Mapping, Optional

from .embedding import EmbeddingProvider, HashEmbedder, RemoteEmbedder
from .errors import ConfigError
from .llm_remodel import GenerationParams, IdentityMockLlm, LlmProvider, RemoteLlm
from .pipeline import PipelineConfig

ENV_LLM_URL = "PC_LLM_URL"
ENV_EMBED_URL = "PC_EMBED_URL"


@dataclass(frozen=True)
class PathsConfig:
    reference_csv: Optional[str] = None
    validation_csv: Optional[str] = None
    city_file: Optional[str] = None
    graph_file: Optional[str] = None
    out_dir: Optional[str] = None


@dataclass(frozen=True)
class ProvidersConfig:
    mock_llm: bool = True
    mock_embed: bool = True
    llm_url: Optional[str] = None
    llm_model: str = "qwen3:8b"
    embed_url: Optional[str] = None
    embed_model: str = "nomic-embed-text"


@dataclass(frozen=True)
class PipelineSection:
    k: int = 5
    max_path_edges: int = 4
    depth: int = 3
    epsilon: float = 0.0
    tau: float = 4.0
    blend: float = 1.0
    seed: int = 0


def _section(cls, obj, name: str):
    if obj is None:
        return cls()
    if not isinstance(obj, Mapping):
        raise ConfigError(f"section {name!r} must be an object")
    allowed = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(obj) - allowed)
    if unknown:
        raise ConfigError(f"unknown keys in section {name!r}: {unknown}")
    try:
        return cls(**obj)
    except TypeError as exc:
        raise ConfigError(f"section {name!r}: {exc}") from exc


@dataclass(frozen=True)
class RunConfig:
    paths: PathsConfig = field(default_factory=PathsConfig)
    providers: ProvidersConfig = field(default_factory=ProvidersConfig)
    pipeline: PipelineSection = field(default_factory=PipelineSection)
    generation: GenerationParams = field(default_factory=GenerationParams)

    @classmethod
    def from_dict(cls, obj: Mapping) -> "RunConfig":
        if not isinstance(obj, Mapping):
            raise ConfigError("config root must be a JSON object")
        known = ("paths", "providers", "pipeline", "generation")
        unknown = sorted(set(obj) - set(known))
        if unknown:
            raise ConfigError(f"unknown config sections: {unknown}")
        config = cls(
            paths=_section(PathsConfig, obj.get("paths"), "paths"),
            providers=_section(ProvidersConfig, obj.get("providers"), "providers"),
            pipeline=_section(PipelineSection, obj.get("pipeline"), "pipeline"),
            generation=_section(GenerationParams, obj.get("generation"), "generation"),
        )
        return config.validate()

    def validate(self) -> "RunConfig":
        p = self.pipeline
        try:
            checks = [
                (p.k >= 1, "pipeline.k must be >= 1"),
                (p.max_path_edges >= 1, "pipeline.max_path_edges must be >= 1"),
                (p.depth >= 1, "pipeline.depth must be >= 1"),
                (p.epsilon >= 0, "pipeline.epsilon must be >= 0"),
                (p.tau > 0, "pipeline.tau must be > 0"),
                (0.0 <= p.blend <= 1.0, "pipeline.blend must be in [0, 1]"),
                (p.seed >= 0, "pipeline.seed must be >= 0"),
                (self.generation.temperature >= 0, "generation.temperature must be >= 0"),
            ]
        except TypeError as exc:  # non-numeric JSON value in a numeric knob
            raise ConfigError(f"config value has the wrong type: {exc}") from exc
        for ok, message in checks:
            if not ok:
                raise ConfigError(message)
        if not self.providers.mock_llm and not self.providers.llm_url:
            raise ConfigError("providers.llm_url required when mock_llm is false")
        if not self.providers.mock_embed and not self.providers.embed_url:
            raise ConfigError("providers.embed_url required when mock_embed is false")
        return self

    def to_dict(self) -> dict:
        return {
            "paths": dataclasses.asdict(self.paths),
            "providers": dataclasses.asdict(self.providers),
            "pipeline": dataclasses.asdict(self.pipeline),
            "generation": dataclasses.asdict(self.generation),
        }

    def config_hash(self) -> str:
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

    def pipeline_config(self) -> PipelineConfig:
        return PipelineConfig(
            k=self.pipeline.k,
            max_path_edges=self.pipeline.max_path_edges,
            depth=self.pipeline.depth,
            epsilon=self.pipeline.epsilon,
            tau=self.pipeline.tau,
            blend=self.pipeline.blend,
            generation=self.generation,
        )

    def with_overrides(
        self,
        seed: Optional[int] = None,
        mock_llm: Optional[bool] = None,
        mock_embed: Optional[bool] = None,
        out_dir: Optional[str] = None,
    ) -> "RunConfig":
        pipeline = self.pipeline
        if seed is not None:
            pipeline = dataclasses.replace(pipeline, seed=seed)
        providers = self.providers
        if mock_llm is not None:
            providers = dataclasses.replace(providers, mock_llm=mock_llm)
        if mock_embed is not None:
            providers = dataclasses.replace(providers, mock_embed=mock_embed)
        paths = self.paths
        if out_dir is not None:
            paths = dataclasses.replace(paths, out_dir=out_dir)
        return dataclasses.replace(
            self, paths=paths, providers=providers, pipeline=pipeline
        ).validate()


def apply_env_overrides(config: RunConfig, environ: Mapping[str, str] = os.environ) -> RunConfig:
    """PC_LLM_URL / PC_EMBED_URL switch the matching provider to remote."""
    providers = config.providers
    llm_url = environ.get(ENV_LLM_URL)
    if llm_url:
        providers = dataclasses.replace(providers, llm_url=llm_url, mock_llm=False)
    embed_url = environ.get(ENV_EMBED_URL)
    if embed_url:
        providers = dataclasses.replace(providers, embed_url=embed_url, mock_embed=False)
    if providers is config.providers:
        return config
    return dataclasses.replace(config, providers=providers).validate()


def load_config(path) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as fp:
            obj = json.load(fp)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return RunConfig.from_dict(obj)


def build_embed_provider(config: RunConfig) -> EmbeddingProvider:
    if config.providers.mock_embed:
        return HashEmbedder()
    return RemoteEmbedder(config.providers.embed_url, config.providers.embed_model)


def build_llm_provider(config: RunConfig) -> LlmProvider:
    if config.providers.mock_llm:
        return IdentityMockLlm()
    return RemoteLlm(config.providers.llm_url, config.providers.llm_model)


def run_manifest(config: RunConfig, command: str, extra: Optional[dict] = None) -> dict:
    from . import __version__

    manifest = {
        "command": command,
        "seed": config.pipeline.seed,
        "config_hash": config.config_hash(),
        "providers": {
            "embed": build_embed_provider(config).provider_id,
            "llm": build_llm_provider(config).provider_id,
        },
        "version": __version__,
    }
    if extra:
        manifest.update(extra)
    return manifest


def write_manifest(fp: IO[str], manifest: dict) -> None:
    json.dump(manifest, fp, indent=2, sort_keys=True)
    fp.write("\n")
