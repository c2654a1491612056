"""Topology entities: probe trees, stores, edges and rulesets."""

from collections.abc import Mapping
from dataclasses import dataclass, field
from enum import Enum

from src.domain.entities.catalog import AttributeRef, JoinPredicate
from src.domain.entities.planning import Mir, Partition, ProbeStep, SelectedPlan, format_partition
from src.domain.exceptions import UnroutableEdgeError

OUTPUT_PREFIX = "output:"


def output_edge(query_id: str) -> str:
    return f"{OUTPUT_PREFIX}{query_id}"


@dataclass(frozen=True)
class StoreKey:
    """A store: one MIR under one partitioning."""

    mir: Mir
    partition: Partition

    @property
    def label(self) -> str:
        """Unique per key; composite MIRs name the partition relation too, as ``ST.1a2b3c[T.c]``."""
        if self.mir.is_base or self.partition is None:
            return f"{self.mir.label}[{format_partition(self.partition)}]"
        return f"{self.mir.label}[{self.partition}]"

    def __str__(self) -> str:
        return self.label


@dataclass(frozen=True)
class IndexLookup:
    """Probe access: the incoming tuple's attribute matched against a stored attribute."""

    incoming: AttributeRef
    stored: AttributeRef


class RuleKind(str, Enum):
    STORE = "store"
    PROBE = "probe"


class EdgeKind(str, Enum):
    INPUT = "input"
    PROBE = "probe"
    MATERIALIZE = "materialize"


@dataclass(frozen=True)
class Rule:
    """What a store does with a tuple arriving on ``in_edge``.

    Attributes:
        kind: Store or probe.
        in_edge: Edge label the rule is keyed by.
        store: The store executing the rule.
        predicates: Predicates checked between the incoming and the stored tuple.
        lookups: Index accesses derived from ``predicates``.
        out_edges: Edges receiving each probe result, ``output:<query>`` included.
        step: The probe step this rule executes, None for store rules.
    """

    kind: RuleKind
    in_edge: str
    store: StoreKey
    predicates: tuple[JoinPredicate, ...] = ()
    lookups: tuple[IndexLookup, ...] = ()
    out_edges: tuple[str, ...] = ()
    step: ProbeStep | None = None


@dataclass(frozen=True)
class Edge:
    label: str
    kind: EdgeKind
    source: str
    target: str


@dataclass
class ProbeTreeNode:
    """A probe step in a merged tree.

    Attributes:
        step: The prefix reaching this node.
        edge_label: Label of the edge from the parent into this node.
        children: Child nodes keyed by their step.
        outputs: Queries whose order ends here.
        materializes: MIRs whose subquery order ends here.
    """

    step: ProbeStep
    edge_label: str
    children: dict[ProbeStep, "ProbeTreeNode"] = field(default_factory=dict)
    outputs: list[str] = field(default_factory=list)
    materializes: list[Mir] = field(default_factory=list)

    @property
    def store(self) -> StoreKey:
        return StoreKey(self.step.target, self.step.target_partition)


@dataclass
class ProbeTree:
    """All orders of a plan starting at one input relation, merged on common prefixes."""

    root: str
    children: dict[ProbeStep, ProbeTreeNode] = field(default_factory=dict)

    def nodes(self) -> list[ProbeTreeNode]:
        """Nodes in depth-first order, children in step order."""
        result: list[ProbeTreeNode] = []
        stack = sorted(self.children.values(), key=lambda node: node.step.sort_key, reverse=True)
        while stack:
            node = stack.pop()
            result.append(node)
            stack.extend(sorted(node.children.values(), key=lambda child: child.step.sort_key, reverse=True))
        return result

    def edges(self) -> list[tuple[str, str, str]]:
        """``(parent label, child label, edge label)`` triples; the root's label is the relation."""
        result = []
        parents = {id(node): self.root for node in self.children.values()}
        for node in self.nodes():
            result.append((parents[id(node)], node.step.node_label, node.edge_label))
            for child in node.children.values():
                parents[id(child)] = node.step.node_label
        return result


@dataclass(frozen=True)
class StoreSpec:
    """A store with its workers, ruleset and local indices.

    Attributes:
        key: MIR and partitioning of the store.
        parallelism: Number of workers.
        rules: Rules keyed by incoming edge label.
        indices: Stored attributes probe rules look up.
    """

    key: StoreKey
    parallelism: int
    rules: Mapping[str, Rule] = field(default_factory=dict)
    indices: frozenset[AttributeRef] = frozenset()

    @property
    def label(self) -> str:
        return self.key.label


@dataclass(frozen=True)
class Topology:
    """A compiled plan.

    Attributes:
        stores: Stores by label; equal labels across trees are one store.
        sources: Edge labels fed by each input relation's arrivals.
        edges: All edges by label.
        trees: Probe trees by start relation.
        plan: The compiled plan.
    """

    stores: Mapping[str, StoreSpec]
    sources: Mapping[str, tuple[str, ...]]
    edges: Mapping[str, Edge]
    trees: Mapping[str, ProbeTree]
    plan: SelectedPlan
    _routes: dict[str, tuple[StoreSpec, Rule]] = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self) -> None:
        for spec in self.stores.values():
            for edge, rule in spec.rules.items():
                self._routes[edge] = (spec, rule)

    def route(self, edge: str) -> tuple[StoreSpec, Rule]:
        """Store and rule handling tuples on ``edge``.

        Raises:
            UnroutableEdgeError: If no store registers a rule for the edge.
        """
        route = self._routes.get(edge)
        if route is None:
            raise UnroutableEdgeError(edge)
        return route

    def base_stores(self, relation: str) -> list[StoreSpec]:
        return [spec for spec in self.stores.values() if spec.key.mir.is_base and relation in spec.key.mir.relations]
