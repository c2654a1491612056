"""Command-line subcommands.

Each subcommand parses its flags, wires file adapters into a use case and
writes its outputs. Handlers return the process exit code.
"""

import argparse
from pathlib import Path

from src.application.interfaces.solver_port import PlanSolverPort
from src.application.use_cases import (
    GenerateTraceUseCase,
    GenerateWorkloadUseCase,
    OptimizeWorkloadUseCase,
    OracleJoinUseCase,
    RunBenchmarkUseCase,
    SimulateWorkloadUseCase,
)
from src.domain.entities.bench import BenchConfig, WorkloadConfig
from src.domain.entities.catalog import Catalog
from src.domain.entities.ilp import IlpModel, OptimizationMode
from src.domain.entities.planning import PlannerOptions
from src.domain.entities.runtime import SimulationMode, SimulationOptions
from src.domain.services.candidates import generate_candidates
from src.domain.services.cost_model import CostContext
from src.domain.services.ilp_builder import build_ilp
from src.domain.services.topology_compiler import compile_topology
from src.infrastructure.io.bench_csv import write_bench_report
from src.infrastructure.io.json_files import (
    JsonlResultSink,
    JsonlTraceRepository,
    JsonPlanRepository,
    JsonWorkloadRepository,
)
from src.infrastructure.io.lp_writer import LpFlavor, write_lp
from src.infrastructure.solvers.plan_solvers import BruteForcePlanSolver, ExactPlanSolver
from src.shared.config import settings
from src.shared.logging import get_logger

logger = get_logger(__name__)

PROG = "probeplan"
DEFAULT_SWEEP = tuple(range(10, 101, 10))


def _planner_options(args: argparse.Namespace) -> PlannerOptions:
    return PlannerOptions(materialize=not args.no_materialize, partitioning=not args.no_partitioning)


def _solver(args: argparse.Namespace) -> PlanSolverPort:
    if getattr(args, "solver", "exact") == "brute-force":
        return BruteForcePlanSolver()
    return ExactPlanSolver(args.time_limit)


def _add_planner_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--time-limit", type=int, default=None, metavar="MS", help="solver time limit per model")
    parser.add_argument("--no-materialize", action="store_true", help="probe base relations only")
    parser.add_argument("--no-partitioning", action="store_true", help="keep every store unpartitioned")


def run_optimize(args: argparse.Namespace) -> int:
    catalog, _ = JsonWorkloadRepository(args.workload).load()
    options = _planner_options(args)
    mode = OptimizationMode(args.mode)
    outcome = OptimizeWorkloadUseCase(_solver(args)).execute(catalog, mode, options, args.time_limit)
    topology = compile_topology(outcome.plan, catalog)
    JsonPlanRepository(args.out).save(outcome, catalog, topology, mode)

    if args.export_lp is not None:
        model = outcome.model if outcome.model is not None else _shared_model(catalog, options)
        write_lp(model, args.export_lp, LpFlavor(args.lp_flavor))
    return 0


def _shared_model(catalog: Catalog, options: PlannerOptions) -> IlpModel:
    """The single model over all queries, for export when the plan came from several models."""
    return build_ilp(catalog.queries, generate_candidates(catalog, options), CostContext.from_catalog(catalog))


def run_simulate(args: argparse.Namespace) -> int:
    catalog, changes = JsonWorkloadRepository(args.workload).load()
    trace = JsonlTraceRepository(args.trace).load()
    mode = SimulationMode(args.mode)
    if changes and mode is not SimulationMode.ADAPTIVE:
        logger.warning("query_changes_ignored", mode=mode.value, changes=len(changes))
        changes = ()

    plan = JsonPlanRepository(args.plan).load(catalog) if args.plan is not None else None
    options = SimulationOptions(
        mode=mode,
        epoch_length=args.epoch_len,
        seed=args.seed,
        plan=plan,
        query_changes=tuple(changes),
        planner=_planner_options(args),
        time_limit_ms=args.time_limit,
        horizon=args.horizon,
    )
    report = SimulateWorkloadUseCase(ExactPlanSolver(args.time_limit)).execute(catalog, trace, options)
    sink = JsonlResultSink(args.out, args.metrics)
    sink.write_results(report.results)
    sink.write_metrics(report.metrics)
    return 0


def run_oracle(args: argparse.Namespace) -> int:
    catalog, changes = JsonWorkloadRepository(args.workload).load()
    trace = JsonlTraceRepository(args.trace).load()
    options = SimulationOptions(mode=SimulationMode.ADAPTIVE, query_changes=tuple(changes)) if changes else None
    results = OracleJoinUseCase().execute(catalog, trace, options)
    JsonlResultSink(args.out).write_results(results)
    return 0


def run_gen_workload(args: argparse.Namespace) -> int:
    config = WorkloadConfig(
        n_relations=args.relations,
        attrs_per_relation=args.attrs,
        n_queries=args.queries,
        query_size=args.query_size,
        seed=args.seed,
        rate=args.rate,
        window=args.window,
        parallelism=args.parallelism,
    )
    GenerateWorkloadUseCase(JsonWorkloadRepository(args.out)).execute(config)
    return 0


def run_gen_trace(args: argparse.Namespace) -> int:
    catalog, _ = JsonWorkloadRepository(args.workload).load()
    GenerateTraceUseCase(JsonlTraceRepository(args.out)).execute(catalog, args.duration, args.seed)
    return 0


def run_bench(args: argparse.Namespace) -> int:
    config = BenchConfig(
        n_relations=args.relations,
        n_queries=tuple(args.queries),
        attrs_per_relation=args.attrs,
        query_size=args.query_size,
        seed=args.seed,
        repetitions=args.repetitions,
        rate=args.rate,
        window=args.window,
        time_limit_ms=args.time_limit,
        materialize=args.materialize,
        partitioning=args.partitioning,
    )
    report = RunBenchmarkUseCase(ExactPlanSolver(args.time_limit)).execute(config)
    write_bench_report(report, args.out, args.json)
    return 0


def build_parser() -> argparse.ArgumentParser:
    """Parser with one subparser per command; the chosen handler is stored as ``handler``."""
    parser = argparse.ArgumentParser(prog=PROG, description="Multi-query probe-order optimizer and simulator")
    parser.add_argument("--log-level", default=None, help="overrides LOG_LEVEL")
    commands = parser.add_subparsers(dest="command", required=True)

    optimize = commands.add_parser("optimize", help="select probe orders and write the plan")
    optimize.add_argument("--workload", type=Path, required=True)
    optimize.add_argument("--out", type=Path, required=True, help="plan JSON")
    optimize.add_argument("--export-lp", type=Path, default=None, help="also write the model in LP format")
    optimize.add_argument("--lp-flavor", choices=[flavor.value for flavor in LpFlavor], default="binding")
    optimize.add_argument("--mode", choices=[mode.value for mode in OptimizationMode], default="shared")
    optimize.add_argument("--solver", choices=["exact", "brute-force"], default="exact")
    _add_planner_flags(optimize)
    optimize.set_defaults(handler=run_optimize)

    simulate = commands.add_parser("simulate", help="run a workload over a trace")
    simulate.add_argument("--workload", type=Path, required=True)
    simulate.add_argument("--trace", type=Path, required=True)
    source = simulate.add_mutually_exclusive_group()
    source.add_argument("--plan", type=Path, default=None, help="fixed initial plan JSON")
    source.add_argument("--optimize", action="store_true", help="plan from the workload (default)")
    simulate.add_argument("--mode", choices=[mode.value for mode in SimulationMode], default="static")
    simulate.add_argument("--epoch-len", type=int, default=settings.epoch_length, metavar="N")
    simulate.add_argument("--seed", type=int, default=0)
    simulate.add_argument("--horizon", type=int, default=None, help="advance epochs up to this tick")
    simulate.add_argument("--out", type=Path, required=True, help="results JSONL")
    simulate.add_argument("--metrics", type=Path, default=None, help="metrics JSONL")
    _add_planner_flags(simulate)
    simulate.set_defaults(handler=run_simulate)

    oracle = commands.add_parser("oracle", help="reference results by nested loops")
    oracle.add_argument("--workload", type=Path, required=True)
    oracle.add_argument("--trace", type=Path, required=True)
    oracle.add_argument("--out", type=Path, required=True, help="results JSONL")
    oracle.set_defaults(handler=run_oracle)

    gen_workload = commands.add_parser("gen-workload", help="generate a random workload")
    gen_workload.add_argument("--relations", type=int, required=True)
    gen_workload.add_argument("--attrs", type=int, default=3)
    gen_workload.add_argument("--queries", type=int, default=10)
    gen_workload.add_argument("--query-size", type=int, default=3)
    gen_workload.add_argument("--seed", type=int, required=True)
    gen_workload.add_argument("--rate", type=float, default=100.0)
    gen_workload.add_argument("--window", type=int, default=None)
    gen_workload.add_argument("--parallelism", type=int, default=1)
    gen_workload.add_argument("--out", type=Path, required=True)
    gen_workload.set_defaults(handler=run_gen_workload)

    gen_trace = commands.add_parser("gen-trace", help="generate arrivals for a workload")
    gen_trace.add_argument("--workload", type=Path, required=True)
    gen_trace.add_argument("--duration", type=int, required=True)
    gen_trace.add_argument("--seed", type=int, required=True)
    gen_trace.add_argument("--out", type=Path, required=True)
    gen_trace.set_defaults(handler=run_gen_trace)

    bench = commands.add_parser("bench", help="compare individual and shared optima over a sweep")
    bench.add_argument("--relations", type=int, default=10)
    bench.add_argument("--queries", type=int, nargs="+", default=list(DEFAULT_SWEEP))
    bench.add_argument("--attrs", type=int, default=3)
    bench.add_argument("--query-size", type=int, default=3)
    bench.add_argument("--seed", type=int, required=True)
    bench.add_argument("--repetitions", type=int, default=settings.bench_repetitions)
    bench.add_argument("--rate", type=float, default=100.0)
    bench.add_argument("--window", type=int, default=None)
    bench.add_argument("--time-limit", type=int, default=None, metavar="MS")
    bench.add_argument("--materialize", action="store_true", help="allow MIR hops")
    bench.add_argument("--partitioning", action="store_true", help="decorate hops with partitionings")
    bench.add_argument("--out", type=Path, required=True, help="CSV report")
    bench.add_argument("--json", type=Path, default=None, help="JSON report")
    bench.set_defaults(handler=run_bench)

    return parser
