"""
Oracle Module - Naive reference evaluation of a shape schema

Counts neighbors directly in the graph and computes the least model one
stratum at a time. Only atoms reachable from the targets through shape
references are evaluated. Slow and simple; used to check the engine and to
label generated testbeds.

DSA Concepts:
- Breadth-First Search: demand closure over shape references
- Fixed-Point Iteration: monotone growth of the valid sets within a stratum
"""

import logging
from collections import deque
from typing import Dict, Iterable, Set, Tuple

from rdflib.term import Identifier

from .assignment import Verdict
from .query import ENTITY, gen_target_query, literal_datatype
from .schema import Constraint, ConstraintKind, ShapeSchema, build_dependency_graph, stratify
from .store import Graph

logger = logging.getLogger(__name__)

Atom = Tuple[Identifier, str]


def target_entities(schema: ShapeSchema, graph: Graph) -> Dict[str, Set[Identifier]]:
    """Targets of every targeted shape, by evaluating its target query."""
    targets = {}
    for shape in schema:
        if shape.target is None:
            continue
        query = gen_target_query(shape)
        targets[shape.name] = {row[ENTITY] for row in graph.evaluate(query)}
    return targets


def _passes(value: Identifier, constraint: Constraint) -> bool:
    if constraint.value is not None and value != constraint.value:
        return False
    if constraint.datatype is not None and literal_datatype(value) != constraint.datatype:
        return False
    return True


def _neighbors(graph: Graph, entity: Identifier, constraint: Constraint) -> Iterable[Identifier]:
    return [o for o in graph.objects(entity, constraint.path) if _passes(o, constraint)]


def demanded_atoms(schema: ShapeSchema, graph: Graph,
                   targets: Dict[str, Set[Identifier]]) -> Dict[str, Set[Identifier]]:
    """
    Every (entity, shape) pair whose verdict a target depends on.

    Time Complexity: O(A * C * d) where A is the number of demanded atoms,
    C the constraints per shape and d the out-degree per predicate
    """
    demanded: Dict[str, Set[Identifier]] = {name: set() for name in schema.names}
    queue = deque()
    for name, entities in targets.items():
        for entity in entities:
            demanded[name].add(entity)
            queue.append((entity, name))
    while queue:
        entity, name = queue.popleft()
        for constraint in schema[name].constraints:
            if constraint.shape_ref is None:
                continue
            for neighbor in _neighbors(graph, entity, constraint):
                if neighbor not in demanded[constraint.shape_ref]:
                    demanded[constraint.shape_ref].add(neighbor)
                    queue.append((neighbor, constraint.shape_ref))
    return demanded


def _satisfies(graph: Graph, entity: Identifier, shape, valid: Dict[str, Set[Identifier]]) -> bool:
    for constraint in shape.constraints:
        neighbors = _neighbors(graph, entity, constraint)
        if constraint.shape_ref is not None:
            count = sum(1 for o in neighbors if o in valid[constraint.shape_ref])
        else:
            count = len(neighbors)
        if constraint.kind is ConstraintKind.MIN and count < constraint.count:
            return False
        if constraint.kind is ConstraintKind.MAX and count > constraint.count:
            return False
    return True


def least_model(schema: ShapeSchema, graph: Graph) -> Dict[Atom, Verdict]:
    """
    Verdict of every demanded atom under the stratified least model.

    Raises:
        NegativeCycleError: Schema not stratifiable
    """
    strata = stratify(build_dependency_graph(schema))
    targets = target_entities(schema, graph)
    demanded = demanded_atoms(schema, graph, targets)
    valid: Dict[str, Set[Identifier]] = {name: set() for name in schema.names}

    for stratum in strata:
        members = [name for name in schema.names if name in stratum]
        changed = True
        while changed:
            changed = False
            for name in members:
                shape = schema[name]
                for entity in demanded[name] - valid[name]:
                    if _satisfies(graph, entity, shape, valid):
                        valid[name].add(entity)
                        changed = True

    model = {}
    for name, entities in demanded.items():
        for entity in entities:
            model[(entity, name)] = Verdict.TRUE if entity in valid[name] else Verdict.FALSE
    return model


def oracle_verdicts(schema: ShapeSchema, graph: Graph) -> Dict[Atom, Verdict]:
    """Verdicts of the targeted pairs only, the set a validation run reports."""
    model = least_model(schema, graph)
    targets = target_entities(schema, graph)
    verdicts = {
        (entity, name): model[(entity, name)]
        for name, entities in targets.items()
        for entity in entities
    }
    invalid = sum(1 for v in verdicts.values() if v is Verdict.FALSE)
    logger.debug("Oracle: %d targeted atoms, %d invalid", len(verdicts), invalid)
    return verdicts
