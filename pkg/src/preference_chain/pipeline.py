"""End-to-end query pipeline: retrieve, score, calibrate.

One PreferenceChain instance owns an immutable behavior graph, the two
providers, and the numeric knobs. Queries are pure reads and may run
concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .behavior_graph import BehaviorGraph
from .embedding import EmbeddingProvider, HashEmbedder
from .errors import EmptyGraph
from .llm_remodel import (
    CalibrationResult,
    CalibrationSource,
    GenerationParams,
    IdentityMockLlm,
    LlmProvider,
    calibrate,
)
from .preference import (
    DEFAULT_MAX_PATH_EDGES,
    PreferenceDistribution,
    prior_distribution,
    uniform_distribution,
)
from .retrieval import BehavioralSubgraph, QueryAgent, extract_subgraph, top_k_similar
from .schema import ChoiceCategorySet


@dataclass
class PipelineConfig:
    k: int = 5                      # similar persons retrieved
    max_path_edges: int = DEFAULT_MAX_PATH_EDGES
    depth: int = 3                  # forward search depth from person nodes
    epsilon: float = 0.0            # additive smoothing on raw scores
    tau: float = 4.0                # temporal-proximity decay (hours)
    blend: float = 1.0              # posterior = blend*llm + (1-blend)*prior
    generation: GenerationParams = field(default_factory=GenerationParams)


class PreferenceChain:
    def __init__(
        self,
        graph: BehaviorGraph,
        embed_provider: Optional[EmbeddingProvider] = None,
        llm_provider: Optional[LlmProvider] = None,
        config: Optional[PipelineConfig] = None,
    ):
        self.graph = graph
        self.embed_provider = embed_provider or HashEmbedder()
        self.llm_provider = llm_provider or IdentityMockLlm()
        self.config = config or PipelineConfig()

    def subgraph(self, agent: QueryAgent) -> Optional[BehavioralSubgraph]:
        """Retrieval + extraction; None when the graph has no persons."""
        try:
            persons = top_k_similar(self.graph, agent, self.config.k, self.embed_provider)
        except EmptyGraph:
            return None
        return extract_subgraph(
            self.graph,
            agent,
            persons,
            depth=self.config.depth,
            provider=self.embed_provider,
            tau=self.config.tau,
        )

    def prior(
        self,
        agent: QueryAgent,
        choice_set: ChoiceCategorySet,
        subgraph: Optional[BehavioralSubgraph] = None,
    ) -> PreferenceDistribution:
        if subgraph is None:
            subgraph = self.subgraph(agent)
        if subgraph is None:
            return uniform_distribution(choice_set, degenerate=True)
        return prior_distribution(
            subgraph, choice_set, self.config.max_path_edges, self.config.epsilon
        )

    def predict(
        self,
        agent: QueryAgent,
        choice_set: ChoiceCategorySet,
        context: Optional[str] = None,
        subgraph: Optional[BehavioralSubgraph] = None,
    ) -> CalibrationResult:
        """Prior followed by LLM calibration; never raises."""
        prior = self.prior(agent, choice_set, subgraph)
        return calibrate(
            agent,
            prior,
            agent.context if context is None else context,
            self.llm_provider,
            self.config.generation,
            self.config.blend,
        )

    def predict_all(
        self, agent: QueryAgent, context: Optional[str] = None
    ) -> dict[str, CalibrationResult]:
        """One calibrated distribution per registered choice set.

        The subgraph is extracted once and shared across choice sets.
        """
        subgraph = self.subgraph(agent)
        return {
            name: self.predict(agent, choice_set, context, subgraph)
            for name, choice_set in sorted(self.graph.choice_sets.items())
        }


__all__ = [
    "PipelineConfig",
    "PreferenceChain",
    "CalibrationResult",
    "CalibrationSource",
]
