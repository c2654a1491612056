"""Compiling a selected plan into probe trees, stores and rulesets.

Orders starting at the same relation are merged into one probe tree on
equal steps. Every tree edge gets its own label; every distinct
``(MIR, partitioning)`` node label becomes one store whose ruleset is keyed
by incoming edge label.
"""

import hashlib

from src.domain.entities.catalog import Catalog
from src.domain.entities.planning import ProbeStep, SelectedPlan
from src.domain.entities.topology import (
    OUTPUT_PREFIX,
    Edge,
    EdgeKind,
    IndexLookup,
    ProbeTree,
    ProbeTreeNode,
    Rule,
    RuleKind,
    StoreKey,
    StoreSpec,
    Topology,
    output_edge,
)
from src.domain.services.cost_model import CostContext
from src.shared.logging import get_logger

logger = get_logger(__name__)


def probe_edge_label(root: str, step: ProbeStep) -> str:
    path = ">".join(StoreKey(hop, part).label for hop, part in zip(step.hops, step.partitionings))
    digest = hashlib.blake2b(repr(step.sort_key).encode("utf-8"), digest_size=3).hexdigest()
    return f"{root}>{path}#{digest}"


def input_edge_label(relation: str, store: StoreKey) -> str:
    return f"input:{relation}>{store.label}"


def materialize_edge_label(edge: str, store: StoreKey) -> str:
    return f"{edge}=>{store.label}"


def merge_probe_trees(plan: SelectedPlan) -> dict[str, ProbeTree]:
    """One tree per start relation; orders sharing a step share the node."""
    trees: dict[str, ProbeTree] = {}
    for order in plan.all_orders():
        tree = trees.setdefault(order.start_relation, ProbeTree(order.start_relation))
        children = tree.children
        node: ProbeTreeNode | None = None
        for step in order.steps():
            node = children.get(step)
            if node is None:
                node = ProbeTreeNode(step, probe_edge_label(tree.root, step))
                children[step] = node
            children = node.children
        if node is None:
            continue
        if order.produces is not None:
            if order.produces not in node.materializes:
                node.materializes.append(order.produces)
        elif order.query not in node.outputs:
            node.outputs.append(order.query)
    return dict(sorted(trees.items()))


def _lookups(step: ProbeStep) -> tuple[IndexLookup, ...]:
    head = step.head_relations
    lookups = []
    for predicate in step.linking_predicates:
        incoming, stored = (
            (predicate.left, predicate.right) if predicate.left.relation in head else (predicate.right, predicate.left)
        )
        lookups.append(IndexLookup(incoming, stored))
    return tuple(lookups)


class _StoreBuilder:
    def __init__(self, key: StoreKey, parallelism: int):
        self.key = key
        self.parallelism = parallelism
        self.rules: dict[str, Rule] = {}
        self.indices: set = set()

    def add(self, rule: Rule) -> None:
        self.rules[rule.in_edge] = rule
        self.indices.update(lookup.stored for lookup in rule.lookups)

    def build(self) -> StoreSpec:
        return StoreSpec(self.key, self.parallelism, dict(sorted(self.rules.items())), frozenset(self.indices))


def build_rulesets(forest: dict[str, ProbeTree], plan: SelectedPlan, catalog: Catalog) -> Topology:
    """Register store and probe rules at every store of the forest.

    Raises:
        UnroutableEdgeError: If a rule forwards to an edge no store handles.
    """
    ctx = CostContext.from_catalog(catalog)
    stores: dict[str, _StoreBuilder] = {}
    edges: dict[str, Edge] = {}
    sources: dict[str, list[str]] = {}

    def store(key: StoreKey) -> _StoreBuilder:
        builder = stores.get(key.label)
        if builder is None:
            builder = stores[key.label] = _StoreBuilder(key, ctx.store_parallelism(key.mir, key.partition))
        return builder

    for root, tree in forest.items():
        parents: dict[int, str] = {id(node): root for node in tree.children.values()}
        for node in tree.nodes():
            key = node.store
            target = store(key)
            children = sorted(node.children.values(), key=lambda child: child.step.sort_key)
            for child in children:
                parents[id(child)] = key.label
            out_edges = [child.edge_label for child in children]
            out_edges.extend(output_edge(query) for query in sorted(node.outputs))
            for mir in sorted(node.materializes, key=lambda m: m.sort_key):
                for partition in plan.materialized[mir].partitions:
                    mir_key = StoreKey(mir, partition)
                    label = materialize_edge_label(node.edge_label, mir_key)
                    edges[label] = Edge(label, EdgeKind.MATERIALIZE, key.label, mir_key.label)
                    store(mir_key).add(Rule(RuleKind.STORE, label, mir_key))
                    out_edges.append(label)
            edges[node.edge_label] = Edge(node.edge_label, EdgeKind.PROBE, parents[id(node)], key.label)
            target.add(
                Rule(
                    RuleKind.PROBE,
                    node.edge_label,
                    key,
                    predicates=node.step.linking_predicates,
                    lookups=_lookups(node.step),
                    out_edges=tuple(out_edges),
                    step=node.step,
                )
            )
        sources.setdefault(root, []).extend(
            node.edge_label for node in sorted(tree.children.values(), key=lambda node: node.step.sort_key)
        )

    for label in sorted(stores):
        builder = stores[label]
        if not builder.key.mir.is_base:
            continue
        relation = builder.key.mir.sorted_relations[0]
        edge = input_edge_label(relation, builder.key)
        edges[edge] = Edge(edge, EdgeKind.INPUT, relation, label)
        builder.add(Rule(RuleKind.STORE, edge, builder.key))
        sources.setdefault(relation, []).insert(0, edge)

    specs = {label: builder.build() for label, builder in sorted(stores.items())}
    topology = Topology(
        stores=specs,
        sources={relation: tuple(sorted(labels, key=_source_order)) for relation, labels in sorted(sources.items())},
        edges=dict(sorted(edges.items())),
        trees=forest,
        plan=plan,
    )
    for spec in specs.values():
        for rule in spec.rules.values():
            for edge in rule.out_edges:
                if not edge.startswith(OUTPUT_PREFIX):
                    topology.route(edge)
    return topology


def _source_order(edge: str) -> tuple[bool, str]:
    return (not edge.startswith("input:"), edge)


def compile_topology(plan: SelectedPlan, catalog: Catalog) -> Topology:
    """Merge the plan's orders into probe trees and build the rulesets."""
    topology = build_rulesets(merge_probe_trees(plan), plan, catalog)
    logger.debug(
        "topology_compiled",
        stores=len(topology.stores),
        edges=len(topology.edges),
        trees=len(topology.trees),
    )
    return topology

