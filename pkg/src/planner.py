"""
Planner Module - Seed selection and shape traversal ordering

DSA Concepts:
- Graph Traversal: BFS (queue) and DFS (explicit stack) ignoring edge direction
- Degree Distribution: in/out degree per node for seed heuristics
- Linear Time: each node expanded once, each edge touched at most twice
"""

import logging
import random
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterator, List, Optional, Tuple

from .errors import NoTargetedShapeError, UnknownShapeError
from .schema import DependencyGraph, ShapeSchema, build_dependency_graph, stratify

logger = logging.getLogger(__name__)


class Strategy(Enum):
    BFS = 'bfs'
    DFS = 'dfs'
    RANDOM = 'random'


class Connectivity(Enum):
    HIGH_IN_DEGREE = 'in'
    HIGH_OUT_DEGREE = 'out'


class ConstraintTiebreak(Enum):
    MANY = 'many'
    FEW = 'few'


@dataclass(frozen=True)
class PlannerConfig:
    """Traversal strategy plus the two seed heuristics."""

    strategy: Strategy = Strategy.DFS
    connectivity: Connectivity = Connectivity.HIGH_IN_DEGREE
    constraint_tiebreak: ConstraintTiebreak = ConstraintTiebreak.MANY
    rng_seed: int = 0

    @property
    def label(self) -> str:
        if self.strategy is Strategy.RANDOM:
            return f"random(seed={self.rng_seed})"
        return f"{self.strategy.value}/{self.connectivity.value}/{self.constraint_tiebreak.value}"

    def to_dict(self) -> dict:
        return {
            'strategy': self.strategy.value,
            'seed_degree': self.connectivity.value,
            'seed_constraints': self.constraint_tiebreak.value,
            'rng_seed': self.rng_seed,
        }

    @staticmethod
    def from_dict(data: dict) -> 'PlannerConfig':
        return PlannerConfig(
            strategy=Strategy(data.get('strategy', Strategy.DFS.value)),
            connectivity=Connectivity(data.get('seed_degree', Connectivity.HIGH_IN_DEGREE.value)),
            constraint_tiebreak=ConstraintTiebreak(
                data.get('seed_constraints', ConstraintTiebreak.MANY.value)
            ),
            rng_seed=int(data.get('rng_seed', 0)),
        )


def _named(strategy, connectivity, tiebreak) -> PlannerConfig:
    return PlannerConfig(strategy, connectivity, tiebreak)


# Nine named configurations: BFS before DFS, in- before out-degree, many before few.
TRAVERSAL_CONFIGURATIONS: Dict[str, PlannerConfig] = {
    '1': _named(Strategy.BFS, Connectivity.HIGH_IN_DEGREE, ConstraintTiebreak.MANY),
    '2': _named(Strategy.BFS, Connectivity.HIGH_IN_DEGREE, ConstraintTiebreak.FEW),
    '3': _named(Strategy.BFS, Connectivity.HIGH_OUT_DEGREE, ConstraintTiebreak.MANY),
    '4': _named(Strategy.BFS, Connectivity.HIGH_OUT_DEGREE, ConstraintTiebreak.FEW),
    '5': _named(Strategy.DFS, Connectivity.HIGH_IN_DEGREE, ConstraintTiebreak.MANY),
    '6': _named(Strategy.DFS, Connectivity.HIGH_IN_DEGREE, ConstraintTiebreak.FEW),
    '7': _named(Strategy.DFS, Connectivity.HIGH_OUT_DEGREE, ConstraintTiebreak.MANY),
    '8': _named(Strategy.DFS, Connectivity.HIGH_OUT_DEGREE, ConstraintTiebreak.FEW),
    '9': PlannerConfig(strategy=Strategy.RANDOM),
}


@dataclass(frozen=True)
class TraversalPlan:
    """
    Enumeration of every shape in evaluation order.

    nodes_expanded and edges_touched are instrumentation for the traversal
    cost; they stay zero for RANDOM and declaration-order plans.
    """

    order: Tuple[str, ...]
    seed: Optional[str]
    config: PlannerConfig
    nodes_expanded: int = 0
    edges_touched: int = 0

    def to_dict(self) -> dict:
        return {
            'order': list(self.order),
            'seed': self.seed,
            'config': self.config.to_dict(),
        }


def degree_stats(graph: DependencyGraph) -> Dict[str, Tuple[int, int]]:
    """
    In- and out-degree of every shape over sign-collapsed edges.

    Time Complexity: O(|V| + |E|)

    Returns:
        Dictionary of shape name -> (in_degree, out_degree)
    """
    return {
        name: (len(graph.predecessors(name)), len(graph.successors(name)))
        for name in graph.nodes
    }


@dataclass
class SeedChoice:
    seed: str
    candidates: List[str]
    reason: str
    tied: List[str] = field(default_factory=list)


def _choose_seed(schema: ShapeSchema, graph: DependencyGraph,
                 config: PlannerConfig) -> SeedChoice:
    candidates = [s.name for s in schema if s.target is not None]
    if not candidates:
        raise NoTargetedShapeError()
    if len(candidates) == 1:
        return SeedChoice(candidates[0], candidates, "only shape with a target")

    degrees = degree_stats(graph)
    column = 0 if config.connectivity is Connectivity.HIGH_IN_DEGREE else 1
    degree_name = 'in-degree' if column == 0 else 'out-degree'
    best_degree = max(degrees[name][column] for name in candidates)
    tied = [name for name in candidates if degrees[name][column] == best_degree]
    if len(tied) == 1:
        return SeedChoice(tied[0], candidates, f"highest {degree_name} ({best_degree})")

    counts = {name: len(schema[name].constraints) for name in tied}
    if config.constraint_tiebreak is ConstraintTiebreak.MANY:
        target_count = max(counts.values())
        word = 'most'
    else:
        target_count = min(counts.values())
        word = 'fewest'
    remaining = sorted(name for name in tied if counts[name] == target_count)
    if len(remaining) == 1:
        return SeedChoice(
            remaining[0], candidates,
            f"{degree_name} tie ({best_degree}) broken by {word} constraints ({target_count})",
            tied,
        )
    return SeedChoice(
        remaining[0], candidates,
        f"{degree_name} and constraint-count tie broken by name",
        remaining,
    )


def select_seed(schema: ShapeSchema, graph: DependencyGraph, config: PlannerConfig) -> str:
    """
    Pick the seed shape of the traversal.

    Only targeted shapes qualify. Among them the highest configured degree
    wins, then the most (or fewest) constraints, then the smallest name.

    Raises:
        NoTargetedShapeError: No shape has a target definition
    """
    return _choose_seed(schema, graph, config).seed


def _starts(graph: DependencyGraph, seed: str) -> Iterator[str]:
    # seed first, then the not-yet-visited list in declaration order
    yield seed
    yield from graph.nodes


def _dfs_order(graph: DependencyGraph, seed: str) -> Tuple[List[str], int, int]:
    order: List[str] = []
    visited = set()
    expanded = touched = 0

    for start in _starts(graph, seed):
        if start in visited:
            continue
        visited.add(start)
        order.append(start)
        expanded += 1
        stack = [(start, iter(graph.neighbors(start)))]
        while stack:
            node, neighbors = stack[-1]
            advanced = False
            for neighbor in neighbors:
                touched += 1
                if neighbor not in visited:
                    visited.add(neighbor)
                    order.append(neighbor)
                    expanded += 1
                    stack.append((neighbor, iter(graph.neighbors(neighbor))))
                    advanced = True
                    break
            if not advanced:
                # continue from the nearest visited node with an unvisited neighbor
                stack.pop()
    return order, expanded, touched


def _bfs_order(graph: DependencyGraph, seed: str) -> Tuple[List[str], int, int]:
    order: List[str] = []
    visited = set()
    expanded = touched = 0

    for start in _starts(graph, seed):
        if start in visited:
            continue
        visited.add(start)
        order.append(start)
        queue = deque([start])
        while queue:
            node = queue.popleft()
            expanded += 1
            for neighbor in graph.neighbors(node):
                touched += 1
                if neighbor not in visited:
                    visited.add(neighbor)
                    order.append(neighbor)
                    queue.append(neighbor)
    return order, expanded, touched


def traversal_order(graph: DependencyGraph, seed: str, config: PlannerConfig) -> TraversalPlan:
    """
    Enumerate all shapes by traversing the dependency graph from the seed.

    Edge direction is ignored and neighbors are visited in declaration
    order. When a component is exhausted, the traversal restarts from the
    first not-yet-visited shape in declaration order. RANDOM shuffles the
    whole node list with the configured rng_seed.

    Time Complexity: O(|V| + |E|) for BFS/DFS

    Args:
        graph: Dependency graph
        seed: Starting shape name
        config: Planner configuration

    Returns:
        TraversalPlan

    Raises:
        UnknownShapeError: Seed is not a node of the graph
    """
    if seed not in graph:
        raise UnknownShapeError(seed)

    if config.strategy is Strategy.RANDOM:
        order = list(graph.nodes)
        random.Random(config.rng_seed).shuffle(order)
        return TraversalPlan(tuple(order), order[0], config)

    walk = _dfs_order if config.strategy is Strategy.DFS else _bfs_order
    order, expanded, touched = walk(graph, seed)
    logger.debug("Traversal %s from %s: %s", config.label, seed, order)
    return TraversalPlan(tuple(order), seed, config, expanded, touched)


def declaration_order_plan(schema: ShapeSchema, config: PlannerConfig) -> TraversalPlan:
    """Plan used with rewriting off: shapes in declaration order."""
    names = tuple(schema.names)
    return TraversalPlan(names, names[0] if names else None, config)


def plan_traversal(schema: ShapeSchema, config: PlannerConfig,
                   graph: Optional[DependencyGraph] = None) -> TraversalPlan:
    """
    Build the traversal plan for a schema.

    An empty schema yields an empty plan.
    """
    if len(schema) == 0:
        return TraversalPlan((), None, config)
    graph = graph or build_dependency_graph(schema)
    if config.strategy is Strategy.RANDOM:
        return traversal_order(graph, graph.nodes[0], config)
    seed = select_seed(schema, graph, config)
    return traversal_order(graph, seed, config)


def explain_plan(schema: ShapeSchema, config: PlannerConfig) -> str:
    """
    Human-readable plan dump: degree table, seed rationale, strata and order.

    No data is accessed. Schema and planner errors propagate.
    """
    graph = build_dependency_graph(schema)
    degrees = degree_stats(graph)
    strata = stratify(graph)

    lines = [f"Configuration: {config.label}", "", "Shapes:"]
    width = max([len(n) for n in graph.nodes] + [5])
    lines.append(f"  {'shape'.ljust(width)}  in  out  constraints  target")
    for shape in schema:
        in_d, out_d = degrees[shape.name]
        target = 'yes' if shape.target is not None else 'no'
        lines.append(
            f"  {shape.name.ljust(width)}  {in_d:>2}  {out_d:>3}  {len(shape.constraints):>11}  {target}"
        )

    lines.append("")
    if config.strategy is Strategy.RANDOM:
        plan = traversal_order(graph, graph.nodes[0], config)
        lines.append(f"Seed: {plan.seed} (random shuffle, rng_seed={config.rng_seed})")
    else:
        choice = _choose_seed(schema, graph, config)
        plan = traversal_order(graph, choice.seed, config)
        lines.append(f"Seed: {choice.seed} ({choice.reason})")
        if choice.tied:
            lines.append(f"  tied: {', '.join(choice.tied)}")

    lines.append("")
    lines.append("Strata:")
    for i, stratum in enumerate(strata):
        members = sorted(stratum, key=graph.position)
        lines.append(f"  {i}: {', '.join(members)}")

    lines.append("")
    lines.append("Order: " + ", ".join(plan.order))
    return "\n".join(lines) + "\n"
