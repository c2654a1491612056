"""One optimization round: candidates, model, exact solve, plan."""

import time

from src.domain.entities.catalog import Catalog
from src.domain.entities.ilp import IlpModel, ModelSize, OptimizationOutcome
from src.domain.entities.planning import PlannerOptions
from src.domain.services.candidates import generate_candidates
from src.domain.services.cost_model import CostContext
from src.domain.services.ilp_builder import build_ilp
from src.domain.services.ilp_solver import solve
from src.domain.services.plan_extraction import extract_plan


def model_size(model: IlpModel) -> ModelSize:
    return ModelSize(
        variables=len(model.variables),
        probe_orders=len(model.order_variables),
        constraints=len(model.binding_constraints),
    )


def optimize_catalog(
    catalog: Catalog,
    options: PlannerOptions | None = None,
    time_limit_ms: int | None = None,
) -> OptimizationOutcome:
    """Select the cheapest shared plan for all queries of ``catalog``.

    Raises:
        InconsistentSolutionError: If the model has no feasible solution.
    """
    started = time.perf_counter()
    candidates = generate_candidates(catalog, options)
    model = build_ilp(catalog.queries, candidates, CostContext.from_catalog(catalog))
    solution = solve(model, time_limit_ms)
    plan = extract_plan(model, solution)
    elapsed = (time.perf_counter() - started) * 1000
    return OptimizationOutcome(plan, solution.status, model_size(model), elapsed, model)
