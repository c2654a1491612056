"""Exact branch-and-bound solver for probe-order selection models.

The solver searches the model's structure rather than its rows: every
``(query, start)`` group picks exactly one order, every ``(mir, input)``
group picks one order as soon as some selected order probes the MIR, and
step variables follow from the selected orders. Independent components
(groups sharing no step and no subquery group) are solved separately.

The incumbent of each component is built query by query, each query solved
exactly with the steps already paid for by earlier queries being free, and
then improved by re-solving one query at a time. The final depth-first
search proves optimality or stops at the time limit with the incumbent.
"""

import math
import time
from collections import defaultdict
from dataclasses import dataclass, field

from src.domain.entities.ilp import IlpModel, IlpSolution, SolveStatus
from src.domain.entities.planning import Mir
from src.domain.exceptions import InfeasibleModelError
from src.shared.config import settings
from src.shared.logging import get_logger

logger = get_logger(__name__)

RELATIVE_TOLERANCE = 1e-9
CLOCK_CHECK_INTERVAL = 1024


def _improves(value: float, best: float) -> bool:
    if math.isinf(best):
        return True
    return value < best - RELATIVE_TOLERANCE * max(1.0, abs(best))


@dataclass
class _Candidate:
    variable: str
    steps: tuple[int, ...]
    requires: tuple[int, ...]


@dataclass
class _Group:
    label: str
    query: str | None
    candidates: list[_Candidate] = field(default_factory=list)


class _Problem:
    """Index-based view of an ``IlpModel``."""

    def __init__(self, model: IlpModel):
        self.step_names = list(model.goal)
        self.step_costs = [model.goal[name] for name in self.step_names]
        step_index = {name: index for index, name in enumerate(self.step_names)}

        self.groups: list[_Group] = []
        for (query_id, start), names in model.groups.items():
            self.groups.append(_Group(f"q={query_id},start={start}", query_id))
        self.query_group_count = len(self.groups)
        sub_index: dict[tuple[Mir, str], int] = {}
        for key in model.subquery_groups:
            sub_index[key] = len(self.groups)
            self.groups.append(_Group(f"mir={key[0].name},input={key[1]}", None))

        members = [*model.groups.values(), *model.subquery_groups.values()]
        for group, names in zip(self.groups, members):
            for name in names:
                requires = []
                for key in model.requirements.get(name, ()):
                    if key not in sub_index:
                        # Requirement with no candidates at all: mark infeasible.
                        requires.append(-1)
                    else:
                        requires.append(sub_index[key])
                steps = tuple(step_index[step] for step in model.order_steps.get(name, ()))
                group.candidates.append(_Candidate(name, steps, tuple(requires)))

        self._prune_infeasible()

        holders: list[set[int]] = [set() for _ in self.step_names]
        for index, group in enumerate(self.groups):
            for candidate in group.candidates:
                for step in candidate.steps:
                    holders[step].add(index)
        self.step_share = [cost / max(1, len(holders[i])) for i, cost in enumerate(self.step_costs)]

    def _prune_infeasible(self) -> None:
        changed = True
        while changed:
            changed = False
            empty = {index for index, group in enumerate(self.groups) if not group.candidates} | {-1}
            for index, group in enumerate(self.groups):
                kept = [c for c in group.candidates if not empty.intersection(c.requires)]
                if len(kept) != len(group.candidates):
                    group.candidates = kept
                    changed = True
        for group in self.groups[: self.query_group_count]:
            if not group.candidates:
                raise InfeasibleModelError(group.label)

    def components(self) -> list[list[int]]:
        """Query groups of each independent component, in model order."""
        parent = list(range(len(self.groups)))

        def find(node: int) -> int:
            while parent[node] != node:
                parent[node] = parent[parent[node]]
                node = parent[node]
            return node

        def union(a: int, b: int) -> None:
            root_a, root_b = find(a), find(b)
            if root_a != root_b:
                parent[max(root_a, root_b)] = min(root_a, root_b)

        owner: dict[int, int] = {}
        for index, group in enumerate(self.groups):
            for candidate in group.candidates:
                for step in candidate.steps:
                    union(index, owner.setdefault(step, index))
                for required in candidate.requires:
                    union(index, required)

        components: dict[int, list[int]] = defaultdict(list)
        for index in range(self.query_group_count):
            components[find(index)].append(index)
        return [components[root] for root in sorted(components)]

    def full_cost(self, candidate: _Candidate) -> float:
        return math.fsum(self.step_costs[step] for step in candidate.steps)


class _State:
    """Decisions, active steps with reference counts and required subquery groups."""

    def __init__(self, problem: _Problem):
        self.problem = problem
        self.active = [0] * len(problem.step_names)
        self.required = [0] * len(problem.groups)
        self.choice: dict[int, int] = {}
        self.open_required: set[int] = set()
        self.cost = 0.0

    def incremental(self, candidate: _Candidate) -> float:
        return math.fsum(self.problem.step_costs[s] for s in candidate.steps if not self.active[s])

    def apply(self, group: int, position: int) -> None:
        candidate = self.problem.groups[group].candidates[position]
        for step in candidate.steps:
            if not self.active[step]:
                self.cost += self.problem.step_costs[step]
            self.active[step] += 1
        for required in candidate.requires:
            self.required[required] += 1
            if required not in self.choice:
                self.open_required.add(required)
        self.choice[group] = position
        self.open_required.discard(group)

    def undo(self, group: int, position: int, cost_before: float) -> None:
        candidate = self.problem.groups[group].candidates[position]
        del self.choice[group]
        if self.required[group] > 0:
            self.open_required.add(group)
        for required in candidate.requires:
            self.required[required] -= 1
            if self.required[required] == 0:
                self.open_required.discard(required)
        for step in candidate.steps:
            self.active[step] -= 1
        self.cost = cost_before


@dataclass
class _Frame:
    group: int
    order: list[int]
    next_query: int
    position: int = 0
    applied: int | None = None
    cost_before: float = 0.0


class _BranchAndBound:
    def __init__(self, problem: _Problem, deadline: float):
        self.problem = problem
        self.deadline = deadline
        self.nodes = 0
        self.timed_out = False

    def _expired(self) -> bool:
        return time.perf_counter() > self.deadline

    def _next_group(self, state: _State, pending: list[int], start: int) -> tuple[int | None, int]:
        if state.open_required:
            return min(state.open_required), start
        while start < len(pending) and pending[start] in state.choice:
            start += 1
        if start < len(pending):
            return pending[start], start + 1
        return None, start

    def _lower_bound(self, state: _State, pending: list[int], start: int) -> float:
        problem = self.problem
        remaining = [g for g in pending[start:] if g not in state.choice]
        remaining.extend(g for g in state.open_required if g not in state.choice)
        bound = 0.0
        for group in remaining:
            best = math.inf
            for candidate in problem.groups[group].candidates:
                value = sum(problem.step_share[s] for s in candidate.steps if not state.active[s])
                if value < best:
                    best = value
                    if best == 0.0:
                        break
            bound += best
        return bound

    def _frame(self, state: _State, group: int, next_query: int) -> _Frame:
        candidates = self.problem.groups[group].candidates
        order = sorted(
            range(len(candidates)),
            key=lambda position: (state.incremental(candidates[position]), candidates[position].variable),
        )
        return _Frame(group, order, next_query)

    def search(self, state: _State, pending: list[int], upper: float = math.inf) -> tuple[float, dict[int, int]] | None:
        """Best completion of ``state`` deciding ``pending`` (and the subquery groups they require).

        Only completions strictly better than ``upper`` are returned. The
        state is restored before returning.
        """
        best_cost, best_choice = upper, None
        group, next_query = self._next_group(state, pending, 0)
        if group is None:
            return (state.cost, {}) if _improves(state.cost, upper) else None

        frames = [self._frame(state, group, next_query)]
        stopped = False
        while frames:
            frame = frames[-1]
            if frame.applied is not None:
                state.undo(frame.group, frame.applied, frame.cost_before)
                frame.applied = None

            descended = False
            while frame.position < len(frame.order):
                position = frame.order[frame.position]
                frame.position += 1
                self.nodes += 1
                has_incumbent = best_choice is not None or not math.isinf(upper)
                if self.nodes % CLOCK_CHECK_INTERVAL == 0 and has_incumbent and self._expired():
                    self.timed_out = stopped = True
                    break

                frame.cost_before = state.cost
                state.apply(frame.group, position)
                frame.applied = position
                if not _improves(state.cost + self._lower_bound(state, pending, frame.next_query), best_cost):
                    state.undo(frame.group, position, frame.cost_before)
                    frame.applied = None
                    continue

                child, child_next = self._next_group(state, pending, frame.next_query)
                if child is None:
                    best_cost = state.cost
                    best_choice = {f.group: f.applied for f in frames if f.applied is not None}
                    state.undo(frame.group, position, frame.cost_before)
                    frame.applied = None
                    continue

                frames.append(self._frame(state, child, child_next))
                descended = True
                break

            if stopped:
                break
            if not descended:
                frames.pop()

        for frame in reversed(frames):
            if frame.applied is not None:
                state.undo(frame.group, frame.applied, frame.cost_before)
                frame.applied = None

        if best_choice is None:
            return None
        return best_cost, best_choice

    def _commit(self, state: _State, decisions: dict[int, int]) -> None:
        for group in sorted(decisions):
            state.apply(group, decisions[group])

    def _sequential(self, query_groups: list[int]) -> _State:
        state = _State(self.problem)
        by_query: dict[str, list[int]] = defaultdict(list)
        for group in query_groups:
            by_query[self.problem.groups[group].query or ""].append(group)
        for groups in by_query.values():
            found = self.search(state, groups)
            if found is None:
                raise InfeasibleModelError(self.problem.groups[groups[0]].label)
            self._commit(state, found[1])
        return state

    def _rebuild(self, choice: dict[int, int], excluded: set[int]) -> _State:
        state = _State(self.problem)
        for group in sorted(choice):
            if group < self.problem.query_group_count and group not in excluded:
                state.apply(group, choice[group])
        while state.open_required:
            group = min(state.open_required)
            state.apply(group, choice[group])
        return state

    def _improve(self, query_groups: list[int], incumbent: _State) -> tuple[float, dict[int, int]]:
        cost, choice = incumbent.cost, dict(incumbent.choice)
        by_query: dict[str, list[int]] = defaultdict(list)
        for group in query_groups:
            by_query[self.problem.groups[group].query or ""].append(group)
        if len(by_query) < 2:
            return cost, choice
        for groups in by_query.values():
            if self._expired():
                break
            state = self._rebuild(choice, set(groups))
            found = self.search(state, groups, upper=cost)
            if found is not None:
                self._commit(state, found[1])
                cost, choice = state.cost, dict(state.choice)
        return cost, choice

    def solve_component(self, query_groups: list[int]) -> dict[int, int]:
        incumbent = self._sequential(query_groups)
        queries = {self.problem.groups[group].query for group in query_groups}
        if len(queries) == 1 and not self.timed_out:
            # A single query was already solved exactly.
            return dict(incumbent.choice)

        cost, choice = self._improve(query_groups, incumbent)
        if self._expired():
            self.timed_out = True
            return choice

        problem = self.problem
        weight = {
            group: min(problem.full_cost(candidate) for candidate in problem.groups[group].candidates)
            for group in query_groups
        }
        ordered = sorted(query_groups, key=lambda group: (-weight[group], group))
        found = self.search(_State(problem), ordered, upper=cost)
        if found is not None:
            choice = found[1]
        return choice


def solve(model: IlpModel, time_limit_ms: int | None = None) -> IlpSolution:
    """Solve a probe-order selection model exactly.

    Args:
        model: Model produced by ``build_ilp``.
        time_limit_ms: Wall-clock limit; defaults to ``settings.solver_time_limit_ms``.

    Returns:
        The optimal solution, the best incumbent with status timeout, or an
        all-zero assignment with status infeasible.
    """
    started = time.perf_counter()
    limit = settings.solver_time_limit_ms if time_limit_ms is None else time_limit_ms
    zero = {name: 0 for name in model.variables}

    try:
        problem = _Problem(model)
    except InfeasibleModelError as error:
        elapsed = (time.perf_counter() - started) * 1000
        logger.warning("ilp_infeasible", group=error.group)
        return IlpSolution(zero, math.inf, SolveStatus.INFEASIBLE, 0, elapsed)

    engine = _BranchAndBound(problem, started + limit / 1000)
    choice: dict[int, int] = {}
    for component in problem.components():
        choice.update(engine.solve_component(component))

    assignment = dict(zero)
    for group, position in choice.items():
        candidate = problem.groups[group].candidates[position]
        assignment[candidate.variable] = 1
        for step in candidate.steps:
            assignment[problem.step_names[step]] = 1

    status = SolveStatus.TIMEOUT if engine.timed_out else SolveStatus.OPTIMAL
    objective = model.evaluate(assignment)
    elapsed = (time.perf_counter() - started) * 1000
    if status is SolveStatus.TIMEOUT:
        logger.warning("solver_timeout", objective=objective, nodes=engine.nodes, elapsed_ms=round(elapsed, 3))
    logger.info(
        "ilp_solved",
        status=status.value,
        objective=objective,
        nodes=engine.nodes,
        elapsed_ms=round(elapsed, 3),
    )
    return IlpSolution(assignment, objective, status, engine.nodes, elapsed)
