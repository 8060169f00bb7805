"""Agent-based daily mobility simulation on a synthetic city.

Each agent gets a day plan (template- or LLM-generated), and every entry
runs the same loop: choose mode and duration via the calibrated choice
pipeline, search POIs reachable in the implied travel-time budget, let the
LLM pick one (nearest on fallback), route along the shortest path, and
tally edge traversals and POI visits. Agents are simulated independently
and their tallies merged associatively, so serial and parallel runs agree.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from typing import IO, Optional, Protocol, Sequence

from .city import (
    CityModel,
    edge_id,
    nearest_poi,
    search_pois,
    shortest_path,
)
from .errors import ParseFailure, ProviderError
from .ingest import SyntheticSpec, _draw_column
from .llm_remodel import GenerationParams, LlmProvider
from .metrics import JointDistribution, kld
from .pipeline import PreferenceChain
from .retrieval import QueryAgent
from .rng import substream
from .schema import (
    PROFILE_FIELDS,
    TRIP_PURPOSES,
    AgentProfile,
    ChoiceCategorySet,
)
from .errors import EmptySamples

# Purposes whose first chosen POI is remembered and reused all day.
IMPORTANT_PURPOSES = ("work", "school")


@dataclass(frozen=True)
class MemoryEvent:
    minute: int
    activity: str
    node: int
    mode: Optional[str] = None


@dataclass
class AgentState:
    id: int
    profile: AgentProfile
    home: int
    node: int
    minute: int = 0
    important: dict[str, str] = field(default_factory=dict)  # purpose -> POI id
    memory: list[MemoryEvent] = field(default_factory=list)

    def remember(self, minute: int, activity: str, node: int, mode: Optional[str] = None) -> None:
        if self.memory and minute < self.memory[-1].minute:
            raise ValueError("memory timestamps must be nondecreasing")
        self.memory.append(MemoryEvent(minute, activity, node, mode))


@dataclass(frozen=True)
class DayPlan:
    """Ordered (start hour, trip purpose) itinerary for one day."""

    entries: tuple[tuple[int, str], ...]

    def validate(self) -> "DayPlan":
        last = -1
        for hour, purpose in self.entries:
            if not (isinstance(hour, int) and 0 <= hour <= 23):
                raise ValueError(f"plan hour {hour!r} outside 0..23")
            if hour <= last:
                raise ValueError("plan hours must be strictly increasing")
            if purpose not in TRIP_PURPOSES:
                raise ValueError(f"unknown plan purpose {purpose!r}")
            last = hour
        return self


# ----------------------------------------------------------------------
# Schedules
# ----------------------------------------------------------------------


class ScheduleProvider(Protocol):
    provider_id: str

    def plan(self, profile: AgentProfile, rng) -> DayPlan: ...


class TemplateScheduleProvider:
    """Deterministic-in-rng skeleton plans keyed on employment status."""

    provider_id = "template-schedule"

    def plan(self, profile: AgentProfile, rng) -> DayPlan:
        status = profile.employment_status
        if status == "employed":
            work = 7 + int(rng.integers(0, 3))
            eat = 11 + int(rng.integers(0, 3))
            home = 16 + int(rng.integers(0, 4))
            entries = ((work, "work"), (eat, "eat"), (eat + 1, "work"), (home, "home"))
        elif status == "under_16":
            school = 7 + int(rng.integers(0, 2))
            home = 14 + int(rng.integers(0, 3))
            entries = ((school, "school"), (home, "home"))
        else:
            purposes = ("shop", "social", "maintenance", "recreation")
            purpose = purposes[int(rng.integers(0, len(purposes)))]
            out = 9 + int(rng.integers(0, 5))
            home = out + 2 + int(rng.integers(0, 4))
            entries = ((out, purpose), (home, "home"))
        return DayPlan(entries).validate()


def schedule_prompt(profile: AgentProfile) -> str:
    from .embedding import profile_to_text

    return "\n".join(
        [
            "Plan one day of trips for a person.",
            f"Profile: {profile_to_text(profile)}",
            f"Allowed purposes: {', '.join(TRIP_PURPOSES)}",
            'Reply with a JSON array of {"hour": 0-23, "purpose": ...} entries '
            "with strictly increasing hours.",
        ]
    )


def _candidate_json_arrays(text: str):
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
        elif ch == "[":
            if depth == 0:
                start = i
            depth += 1
        elif ch == "]":
            if depth > 0:
                depth -= 1
                if depth == 0 and start is not None:
                    yield text[start : i + 1]
                    start = None


def parse_schedule(raw: str) -> DayPlan:
    """First JSON array of {"hour", "purpose"} entries, validated as a plan."""
    for candidate in _candidate_json_arrays(raw):
        try:
            obj = json.loads(candidate)
        except json.JSONDecodeError:
            continue
        if not isinstance(obj, list) or not obj:
            continue
        entries = []
        try:
            for item in obj:
                hour = item["hour"]
                if isinstance(hour, float) and hour.is_integer():
                    hour = int(hour)
                entries.append((hour, item["purpose"]))
            return DayPlan(tuple(entries)).validate()
        except (TypeError, KeyError, ValueError) as exc:
            raise ParseFailure(f"schedule entries invalid: {exc}") from exc
    raise ParseFailure("no JSON array found in schedule response")


class LlmScheduleProvider:
    """Asks the LLM for a plan; any failure falls back to the template."""

    def __init__(
        self,
        llm: LlmProvider,
        params: Optional[GenerationParams] = None,
        fallback: Optional[TemplateScheduleProvider] = None,
    ):
        self.llm = llm
        self.params = params or GenerationParams()
        self.fallback = fallback or TemplateScheduleProvider()
        self.provider_id = f"llm-schedule:{llm.provider_id}"

    def plan(self, profile: AgentProfile, rng) -> DayPlan:
        try:
            raw = self.llm.complete(schedule_prompt(profile), self.params)
            return parse_schedule(raw)
        except (ProviderError, ParseFailure):
            return self.fallback.plan(profile, rng)


def generate_schedule(profile: AgentProfile, provider: ScheduleProvider, seed: int) -> DayPlan:
    return provider.plan(profile, substream(seed, "schedule"))


# ----------------------------------------------------------------------
# Population
# ----------------------------------------------------------------------


def generate_profiles(n: int, spec: SyntheticSpec, seed: int) -> list[AgentProfile]:
    """Profile-only sampling from the spec's marginals."""
    spec.validate()
    rng = substream(seed, "profiles")
    if n == 0:
        return []
    from .schema import INPUT_CATEGORIES

    columns = {
        name: _draw_column(rng, spec.marginals[name], n, INPUT_CATEGORIES[name])
        for name in PROFILE_FIELDS
    }
    return [
        AgentProfile(**{name: columns[name][i] for name in PROFILE_FIELDS})
        for i in range(n)
    ]


def make_agents(profiles: Sequence[AgentProfile], city: CityModel, seed: int) -> list[AgentState]:
    """Agents with seeded random home nodes, ids 0..n-1."""
    nodes = sorted(city.positions)
    rng = substream(seed, "homes")
    agents = []
    for i, profile in enumerate(profiles):
        home = nodes[int(rng.integers(0, len(nodes)))]
        agents.append(AgentState(id=i, profile=profile, home=home, node=home))
    return agents


# ----------------------------------------------------------------------
# Choice + POI selection
# ----------------------------------------------------------------------


def choose_mode_and_duration(
    agent: AgentState,
    purpose: str,
    hour: int,
    chain: PreferenceChain,
    rng,
    context: str = "",
) -> tuple[str, str]:
    """Sample mode then duration from the calibrated posteriors."""
    query = QueryAgent(agent.profile, purpose, hour, context)
    results = chain.predict_all(query, context)
    mode = results["primary_mode"].posterior.sample(rng)
    duration = results["duration_minutes"].posterior.sample(rng)
    return mode, duration


def poi_prompt(candidates: Sequence[str], agent: AgentState) -> str:
    visited = ", ".join(
        f"{e.activity}@{e.node}" for e in agent.memory[-5:]
    ) or "nothing yet"
    return "\n".join(
        [
            "Pick the destination this person would choose.",
            f"Recently visited: {visited}",
            f"Candidates (nearest first): {', '.join(candidates)}",
            "Reply with exactly one candidate id.",
        ]
    )


def select_poi(
    candidates: Sequence[str],
    agent: AgentState,
    provider: LlmProvider,
    params: Optional[GenerationParams] = None,
) -> str:
    """Provider choice constrained to the candidates; nearest on fallback."""
    if not candidates:
        raise ValueError("candidates must be non-empty")
    params = params or GenerationParams()
    try:
        raw = provider.complete(poi_prompt(candidates, agent), params)
    except ProviderError:
        return candidates[0]
    named = [(raw.index(c), c) for c in candidates if c in raw]
    return min(named)[1] if named else candidates[0]


# ----------------------------------------------------------------------
# Tallies
# ----------------------------------------------------------------------


@dataclass
class TrafficTally:
    """Per-hour traversal counts by street edge and visit counts by POI."""

    edge_counts: dict[tuple[str, int], int] = field(default_factory=dict)
    poi_counts: dict[tuple[str, int], int] = field(default_factory=dict)

    @staticmethod
    def _check_hour(hour: int) -> None:
        if not (0 <= hour <= 23):
            raise ValueError(f"hour {hour} outside 0..23")

    def record_edge(self, edge: str, hour: int, count: int = 1) -> None:
        self._check_hour(hour)
        self.edge_counts[(edge, hour)] = self.edge_counts.get((edge, hour), 0) + count

    def record_visit(self, poi: str, hour: int, count: int = 1) -> None:
        self._check_hour(hour)
        self.poi_counts[(poi, hour)] = self.poi_counts.get((poi, hour), 0) + count

    def merge(self, other: "TrafficTally") -> "TrafficTally":
        """Commutative element-wise sum, returned as a new tally."""
        merged = TrafficTally(dict(self.edge_counts), dict(self.poi_counts))
        for (edge, hour), count in other.edge_counts.items():
            merged.record_edge(edge, hour, count)
        for (poi, hour), count in other.poi_counts.items():
            merged.record_visit(poi, hour, count)
        return merged

    def total_edge_traversals(self) -> int:
        return sum(self.edge_counts.values())

    def total_visits(self) -> int:
        return sum(self.poi_counts.values())

    def write_edge_csv(self, fp: IO[str]) -> None:
        writer = csv.writer(fp, lineterminator="\n")
        writer.writerow(["edge", "hour", "count"])
        for (edge, hour) in sorted(self.edge_counts):
            writer.writerow([edge, hour, self.edge_counts[(edge, hour)]])

    def write_poi_csv(self, fp: IO[str]) -> None:
        writer = csv.writer(fp, lineterminator="\n")
        writer.writerow(["poi", "hour", "count"])
        for (poi, hour) in sorted(self.poi_counts):
            writer.writerow([poi, hour, self.poi_counts[(poi, hour)]])

    @classmethod
    def from_csv(cls, edge_fp: Optional[IO[str]] = None, poi_fp: Optional[IO[str]] = None) -> "TrafficTally":
        tally = cls()
        if edge_fp is not None:
            for row in csv.DictReader(edge_fp):
                tally.record_edge(row["edge"], int(row["hour"]), int(row["count"]))
        if poi_fp is not None:
            for row in csv.DictReader(poi_fp):
                tally.record_visit(row["poi"], int(row["hour"]), int(row["count"]))
        return tally


def _hour_summed(counts: dict[tuple[str, int], int]) -> dict[str, int]:
    totals: dict[str, int] = {}
    for (key, _hour), count in counts.items():
        totals[key] = totals.get(key, 0) + count
    return totals


def _tally_kld(
    true_counts: dict[str, int], sim_counts: dict[str, int], axis_name: str, epsilon: float
) -> float:
    keys = tuple(sorted(set(true_counts) | set(sim_counts)))
    if not keys:
        raise EmptySamples("both tallies are empty")
    choices = ChoiceCategorySet(axis_name, keys)
    def joint(counts):
        total = sum(counts.values())
        if total == 0:
            raise EmptySamples(f"{axis_name} tally has zero total")
        cells = [[counts.get(k, 0) / total for k in keys]]
        return JointDistribution(("all",), choices, cells)
    return kld(joint(true_counts), joint(sim_counts), epsilon)


def flow_kld(sim: TrafficTally, reference: TrafficTally, epsilon: float = 1e-9) -> float:
    """KLD of the hour-summed edge-flow distribution, reference as truth."""
    return _tally_kld(
        _hour_summed(reference.edge_counts), _hour_summed(sim.edge_counts), "edge", epsilon
    )


def poi_kld(sim: TrafficTally, reference: TrafficTally, epsilon: float = 1e-9) -> float:
    """KLD of the hour-summed POI-visit distribution, reference as truth."""
    return _tally_kld(
        _hour_summed(reference.poi_counts), _hour_summed(sim.poi_counts), "poi", epsilon
    )


# ----------------------------------------------------------------------
# Day loop
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class TripLog:
    agent_id: int
    hour: int  # tally bucket = hour the trip actually starts
    start_minute: int
    purpose: str
    mode: str
    duration_bin: str
    origin: int
    destination: int
    edge_count: int
    poi_id: Optional[str]


def _resolve_destination(
    city: CityModel,
    agent: AgentState,
    purpose: str,
    mode: str,
    duration_bin: str,
    provider: LlmProvider,
    params: GenerationParams,
) -> tuple[int, Optional[str]]:
    if purpose == "home":
        return agent.home, None
    remembered = agent.important.get(purpose)
    if remembered is not None:
        return city.pois[remembered].node, remembered
    candidates = search_pois(city, agent.node, purpose, mode, duration_bin)
    if not candidates:
        candidates = [nearest_poi(city, agent.node, purpose)]
    poi_id = select_poi(candidates, agent, provider, params)
    if purpose in IMPORTANT_PURPOSES:
        agent.important[purpose] = poi_id
    return city.pois[poi_id].node, poi_id


def simulate_agent(
    agent: AgentState,
    plan: DayPlan,
    city: CityModel,
    chain: PreferenceChain,
    seed: int,
    context: str = "",
) -> tuple[TrafficTally, list[TripLog]]:
    """One agent's whole day; owns the agent's substream."""
    rng = substream(seed, "agent", agent.id)
    tally = TrafficTally()
    trips = []
    for hour, purpose in plan.entries:
        mode, duration = choose_mode_and_duration(agent, purpose, hour, chain, rng, context)
        destination, poi_id = _resolve_destination(
            city, agent, purpose, mode, duration, chain.llm_provider, chain.config.generation
        )
        start = max(hour * 60, agent.minute)
        bucket = min(23, start // 60)
        distance, path = shortest_path(city, agent.node, destination)
        for u, v in zip(path, path[1:]):
            tally.record_edge(edge_id(u, v), bucket)
        arrival = start + int(round(distance / city.speed(mode)))
        agent.node = destination
        agent.minute = arrival
        agent.remember(arrival, purpose, destination, mode)
        if poi_id is not None:
            tally.record_visit(poi_id, min(23, arrival // 60))
        trips.append(
            TripLog(
                agent.id, bucket, start, purpose, mode, duration,
                path[0], destination, len(path) - 1, poi_id,
            )
        )
    return tally, trips


def run_day(
    agents: Sequence[AgentState],
    plans: Sequence[DayPlan],
    city: CityModel,
    chain: PreferenceChain,
    seed: int,
    context: str = "",
) -> tuple[TrafficTally, list[TripLog]]:
    """Simulate every agent and merge the tallies.

    Agents are independent; the merge is associative and commutative, so
    any partition of the agent list yields the same total tally.
    """
    if len(agents) != len(plans):
        raise ValueError("agents and plans must align")
    total = TrafficTally()
    all_trips: list[TripLog] = []
    for agent, plan in zip(agents, plans):
        tally, trips = simulate_agent(agent, plan, city, chain, seed, context)
        total = total.merge(tally)
        all_trips.extend(trips)
    return total, all_trips
