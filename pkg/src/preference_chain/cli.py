"""Command-line entry point wiring the library into reproducible workflows.

Subcommands: gen-synth, build-graph, predict, evaluate, sweep, simulate.
Every command runs fully offline with the default mock providers and is
reproducible from (config, seed); output directories always receive a
manifest recording the seed, config hash, and provider ids.

Exit codes: 0 ok, 2 config error, 3 data error, 4 provider error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional

from .behavior_graph import BehaviorGraph, GraphBuildConfig, build_from_records
from .city import CityModel, grid_city
from .config import (
    RunConfig,
    apply_env_overrides,
    build_embed_provider,
    build_llm_provider,
    load_config,
    run_manifest,
    write_manifest,
)
from .errors import (
    ConfigError,
    DataError,
    EmptyReference,
    GraphError,
    ProviderError,
    SchemaViolation,
)
from .evaluate import (
    chain_predictions,
    evaluate_predictions,
    marginal_predictions,
    sweep_reference_sizes,
    uniform_predictions,
    write_combined_csv,
    write_sweep_csv,
)
from .ingest import (
    SyntheticSpec,
    default_synthetic_spec,
    generate_synthetic,
    read_csv,
    write_csv,
)
from .mobility_sim import (
    LlmScheduleProvider,
    flow_kld,
    generate_profiles,
    generate_schedule,
    make_agents,
    run_day,
    TrafficTally,
)
from .pipeline import PreferenceChain
from .retrieval import QueryAgent
from .schema import BUNDLED_CHOICE_SETS, PROFILE_FIELDS, AgentProfile

_INTENTION_FIELDS = ("primary_mode", "duration_minutes")


def _require_path(value: Optional[str], flag: str) -> Path:
    """A path that must be configured and must exist (ConfigError otherwise)."""
    if not value:
        raise ConfigError(f"{flag} is required (flag or config paths section)")
    path = Path(value)
    if not path.exists():
        raise ConfigError(f"{flag}: no such file {path}")
    return path


def _out_dir(args, config: RunConfig) -> Path:
    value = getattr(args, "out", None) or config.paths.out_dir
    if not value:
        raise ConfigError("--out directory is required")
    path = Path(value)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _load_reference(args, config: RunConfig):
    path = _require_path(
        getattr(args, "reference", None) or config.paths.reference_csv, "--reference"
    )
    records = read_csv(path)
    if not records:
        raise EmptyReference(f"{path} contains no records")
    return records


def _build_chain(records, config: RunConfig) -> PreferenceChain:
    graph = build_from_records(
        records, GraphBuildConfig(intention_fields=_INTENTION_FIELDS)
    )
    return PreferenceChain(
        graph,
        embed_provider=build_embed_provider(config),
        llm_provider=build_llm_provider(config),
        config=config.pipeline_config(),
    )


def _parse_int_list(text: str, flag: str) -> list[int]:
    try:
        values = [int(part) for part in text.split(",") if part.strip()]
    except ValueError as exc:
        raise ConfigError(f"{flag} expects comma-separated integers: {exc}") from exc
    if not values:
        raise ConfigError(f"{flag} expects at least one integer")
    return values


# ----------------------------------------------------------------------
# commands
# ----------------------------------------------------------------------


def cmd_gen_synth(args, config: RunConfig) -> int:
    if args.spec:
        with open(_require_path(args.spec, "--spec"), "r", encoding="utf-8") as fp:
            spec = SyntheticSpec.from_json(fp)
    else:
        spec = default_synthetic_spec()
    size = args.size if args.size is not None else spec.population
    records = generate_synthetic(spec, size=size, seed=config.pipeline.seed)
    if not args.out:
        raise ConfigError("--out file is required")
    write_csv(records, args.out)
    print(f"wrote {len(records)} records to {args.out}")
    return 0


def cmd_build_graph(args, config: RunConfig) -> int:
    records = _load_reference(args, config)
    graph = build_from_records(
        records, GraphBuildConfig(intention_fields=_INTENTION_FIELDS)
    )
    if not args.out:
        raise ConfigError("--out file is required")
    graph.save(args.out)
    print(
        f"graph: {graph.node_count()} nodes, {graph.edge_count()} edges, "
        f"{len(records)} records -> {args.out}"
    )
    return 0


def _agent_from_json(path: Path) -> QueryAgent:
    with open(path, "r", encoding="utf-8") as fp:
        obj = json.load(fp)
    profile_obj = obj.get("profile")
    if not isinstance(profile_obj, dict):
        raise SchemaViolation(-1, "profile", profile_obj, "missing profile object")
    for name in PROFILE_FIELDS:
        if name not in profile_obj:
            raise SchemaViolation(-1, name, None, "missing profile field")
    profile = AgentProfile(**{name: profile_obj[name] for name in PROFILE_FIELDS})
    profile.validate()
    for name in ("trip_purpose", "start_time"):
        if name not in obj:
            raise SchemaViolation(-1, name, None, "missing field")
    agent = QueryAgent(
        profile=profile,
        trip_purpose=obj["trip_purpose"],
        start_time=obj["start_time"],
        context=obj.get("context", ""),
    )
    if not (isinstance(agent.start_time, int) and 0 <= agent.start_time <= 23):
        raise SchemaViolation(-1, "start_time", agent.start_time)
    return agent


def cmd_predict(args, config: RunConfig) -> int:
    agent = _agent_from_json(_require_path(args.agent, "--agent"))
    if args.graph or config.paths.graph_file:
        path = _require_path(args.graph or config.paths.graph_file, "--graph")
        graph = BehaviorGraph.load(path)
        chain = PreferenceChain(
            graph,
            embed_provider=build_embed_provider(config),
            llm_provider=build_llm_provider(config),
            config=config.pipeline_config(),
        )
    else:
        chain = _build_chain(_load_reference(args, config), config)

    subgraph = chain.subgraph(agent)
    output = {}
    for name in sorted(chain.graph.choice_sets):
        choice_set = chain.graph.choice_sets[name]
        prior = chain.prior(agent, choice_set, subgraph)
        result = chain.predict(agent, choice_set, subgraph=subgraph)
        output[name] = {
            "prior": prior.probabilities,
            "posterior": result.posterior.probabilities,
            "degenerate_prior": prior.degenerate,
            "source": result.source.value,
        }
    text = json.dumps(output, indent=2, sort_keys=True)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    print(text)
    return 0


def cmd_evaluate(args, config: RunConfig) -> int:
    reference = _load_reference(args, config)
    validation_path = _require_path(
        args.validation or config.paths.validation_csv, "--validation"
    )
    validation = read_csv(validation_path)
    if not validation:
        raise EmptyReference(f"{validation_path} contains no records")
    out = _out_dir(args, config)
    seed = config.pipeline.seed

    chain = _build_chain(reference, config)
    reports = {
        "chain": evaluate_predictions(
            validation, chain_predictions(chain, validation), seed
        )
    }
    if args.baselines:
        choice_sets = [BUNDLED_CHOICE_SETS[name] for name in _INTENTION_FIELDS]
        reports["uniform"] = evaluate_predictions(
            validation, uniform_predictions(choice_sets, len(validation)), seed
        )
        reports["marginal"] = evaluate_predictions(
            validation,
            marginal_predictions(reference, choice_sets, len(validation)),
            seed,
        )

    with open(out / "report.csv", "w", encoding="utf-8") as fp:
        write_combined_csv(fp, reports)
    with open(out / "report.json", "w", encoding="utf-8") as fp:
        json.dump(
            {name: report.summary() for name, report in sorted(reports.items())},
            fp,
            indent=2,
            sort_keys=True,
        )
        fp.write("\n")
    with open(out / "manifest.json", "w", encoding="utf-8") as fp:
        write_manifest(
            fp,
            run_manifest(
                config,
                "evaluate",
                {"n_reference": len(reference), "n_validation": len(validation)},
            ),
        )
    chain_report = reports["chain"]
    print(
        f"evaluate: mean kld {chain_report.mean_kld:.4f}, "
        f"mean mae {chain_report.mean_mae:.6f} -> {out}"
    )
    return 0


def cmd_sweep(args, config: RunConfig) -> int:
    records = _load_reference(args, config)
    sizes = _parse_int_list(args.sizes, "--sizes")
    seeds = list(range(args.seeds)) if args.seeds else [config.pipeline.seed]
    out = _out_dir(args, config)
    rows = sweep_reference_sizes(
        records,
        sizes=sizes,
        seeds=seeds,
        n_validation=args.n_validation,
        config=config.pipeline_config(),
        embed_provider=build_embed_provider(config),
        llm_provider=build_llm_provider(config),
    )
    with open(out / "sweep.csv", "w", encoding="utf-8") as fp:
        write_sweep_csv(fp, rows)
    with open(out / "manifest.json", "w", encoding="utf-8") as fp:
        write_manifest(
            fp, run_manifest(config, "sweep", {"sizes": sizes, "seeds": seeds})
        )
    print(f"sweep: {len(rows)} rows -> {out / 'sweep.csv'}")
    return 0


def cmd_simulate(args, config: RunConfig) -> int:
    city_path = args.city or config.paths.city_file
    if city_path:
        city = CityModel.load(_require_path(city_path, "--city"))
    else:
        city = grid_city(seed=config.pipeline.seed)
    reference = _load_reference(args, config)
    chain = _build_chain(reference, config)
    out = _out_dir(args, config)
    seed = config.pipeline.seed

    if args.agents < 1:
        raise ConfigError("--agents must be >= 1")
    spec = default_synthetic_spec()
    profiles = generate_profiles(args.agents, spec, seed)
    agents = make_agents(profiles, city, seed)
    scheduler = LlmScheduleProvider(chain.llm_provider, config.generation)
    plans = [
        generate_schedule(agent.profile, scheduler, seed + agent.id)
        for agent in agents
    ]
    tally, trips = run_day(agents, plans, city, chain, seed, context=args.context)

    with open(out / "edge_tally.csv", "w", encoding="utf-8") as fp:
        tally.write_edge_csv(fp)
    with open(out / "poi_tally.csv", "w", encoding="utf-8") as fp:
        tally.write_poi_csv(fp)
    summary = {
        "agents": len(agents),
        "trips": len(trips),
        "edge_traversals": tally.total_edge_traversals(),
        "poi_visits": tally.total_visits(),
    }
    if args.reference_tally:
        with open(_require_path(args.reference_tally, "--reference-tally"), "r", encoding="utf-8") as fp:
            reference_tally = TrafficTally.from_csv(edge_fp=fp)
        summary["flow_kld"] = flow_kld(tally, reference_tally)
    with open(out / "summary.json", "w", encoding="utf-8") as fp:
        json.dump(summary, fp, indent=2, sort_keys=True)
        fp.write("\n")
    with open(out / "manifest.json", "w", encoding="utf-8") as fp:
        write_manifest(fp, run_manifest(config, "simulate", {"agents": len(agents)}))
    print(
        f"simulate: {len(agents)} agents, {len(trips)} trips, "
        f"{tally.total_edge_traversals()} traversals -> {out}"
    )
    return 0


# ----------------------------------------------------------------------
# parser / dispatch
# ----------------------------------------------------------------------


def _add_common_flags(parser: argparse.ArgumentParser, suppress: bool) -> None:
    # The same flags are accepted before and after the subcommand; the
    # after-subcommand copies use SUPPRESS so they never clobber values
    # parsed at the root level.
    default = argparse.SUPPRESS if suppress else None
    flag_default = argparse.SUPPRESS if suppress else False
    parser.add_argument("--config", default=default, help="JSON run configuration file")
    parser.add_argument("--seed", type=int, default=default, help="root random seed override")
    parser.add_argument(
        "--mock-llm", action="store_true", default=flag_default,
        help="force the offline mock LLM",
    )
    parser.add_argument(
        "--mock-embed", action="store_true", default=flag_default,
        help="force the offline hash embedder",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="prefchain",
        description="Graph-retrieval behavioral choice modeling toolkit",
    )
    _add_common_flags(parser, suppress=False)
    common = argparse.ArgumentParser(add_help=False)
    _add_common_flags(common, suppress=True)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-synth", help="generate a synthetic trip CSV", parents=[common])
    p.add_argument("--spec", help="synthetic spec JSON (default: bundled spec)")
    p.add_argument("--size", type=int, help="number of records (default: spec population)")
    p.add_argument("--out", help="output CSV path")
    p.set_defaults(func=cmd_gen_synth)

    p = sub.add_parser("build-graph", help="build and snapshot the behavior graph", parents=[common])
    p.add_argument("--reference", help="reference trip CSV")
    p.add_argument("--out", help="output snapshot path (.jsonl)")
    p.set_defaults(func=cmd_build_graph)

    p = sub.add_parser("predict", help="prior + calibrated posterior for one agent", parents=[common])
    p.add_argument("--agent", required=True, help="agent JSON (profile, purpose, hour)")
    p.add_argument("--graph", help="graph snapshot (else built from --reference)")
    p.add_argument("--reference", help="reference trip CSV")
    p.add_argument("--out", help="also write the JSON result here")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("evaluate", help="score predictions against held-out records", parents=[common])
    p.add_argument("--reference", help="reference trip CSV")
    p.add_argument("--validation", help="validation trip CSV")
    p.add_argument(
        "--baselines",
        action="store_true",
        help="include uniform and marginal baseline rows",
    )
    p.add_argument("--out", help="output directory")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("sweep", help="evaluate across reference sample sizes", parents=[common])
    p.add_argument("--reference", help="record pool CSV")
    p.add_argument("--sizes", default="10,20,50,100,200", help="comma-separated sizes")
    p.add_argument("--seeds", type=int, default=3, help="number of seeds (0..n-1)")
    p.add_argument("--n-validation", type=int, default=500)
    p.add_argument("--out", help="output directory")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("simulate", help="run the daily mobility simulation", parents=[common])
    p.add_argument("--city", help="city JSON (default: built-in grid city)")
    p.add_argument("--reference", help="reference trip CSV for the choice graph")
    p.add_argument("--agents", type=int, default=10)
    p.add_argument("--context", default="", help="conditions text passed to calibration")
    p.add_argument("--reference-tally", help="edge tally CSV to compare against")
    p.add_argument("--out", help="output directory")
    p.set_defaults(func=cmd_simulate)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = load_config(args.config) if args.config else RunConfig()
        config = apply_env_overrides(config)
        config = config.with_overrides(
            seed=args.seed,
            mock_llm=True if args.mock_llm else None,
            mock_embed=True if args.mock_embed else None,
        )
        return args.func(args, config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (DataError, GraphError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except ProviderError as exc:
        print(f"provider error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    raise SystemExit(main())
