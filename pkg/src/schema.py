"""
Schema Module - Shape schema model, dependency graph and stratification

DSA Concepts:
- Hash Table: shape name -> Shape lookup
- Directed Graph: shape dependency graph with signed edges
- Strongly Connected Components: stratification of recursive shapes
"""

import json
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, FrozenSet, Iterator, List, NamedTuple, Optional, Tuple

import networkx as nx
from rdflib import URIRef
from rdflib.term import Identifier
from rdflib.util import from_n3

from .errors import (
    DanglingReferenceError,
    DuplicateShapeError,
    InvalidConstraintError,
    NegativeCycleError,
    SchemaError,
    SchemaSyntaxError,
)

logger = logging.getLogger(__name__)


class ConstraintKind(Enum):
    MIN = 'min'
    MAX = 'max'


class Sign(Enum):
    POSITIVE = '+'
    NEGATIVE = '-'


def parse_term(text: str) -> Identifier:
    """
    Read an IRI or literal written in N-Triples syntax.

    A bare string without angle brackets or quotes is taken as an IRI.

    Args:
        text: Term text, e.g. '<http://ex.org/a>', '"Alice"@en', 'http://ex.org/a'

    Returns:
        rdflib term
    """
    text = text.strip()
    if text.startswith(('<', '"', '_:')):
        try:
            term = from_n3(text)
        except Exception as exc:
            raise InvalidConstraintError(f"Cannot read term {text!r}: {exc}") from exc
        if term is None:
            raise InvalidConstraintError(f"Cannot read term {text!r}")
        return term
    if not text:
        raise InvalidConstraintError("Empty IRI")
    return URIRef(text)


def _iri(text: str) -> URIRef:
    term = parse_term(text)
    if not isinstance(term, URIRef):
        raise InvalidConstraintError(f"Expected an IRI, got {text!r}")
    return term


@dataclass(frozen=True)
class TargetDefinition:
    """
    Target of a shape: either a class or an explicit one-variable select query.
    """

    target_class: Optional[URIRef] = None
    target_query: Optional[str] = None

    def __post_init__(self):
        if (self.target_class is None) == (self.target_query is None):
            raise SchemaError(
                "A target needs exactly one of target_class or target_query"
            )

    def to_dict(self) -> dict:
        if self.target_class is not None:
            return {'targetClass': str(self.target_class)}
        return {'targetQuery': self.target_query}


@dataclass(frozen=True)
class Constraint:
    """
    Cardinality constraint over a single predicate.

    A constraint counts the objects reached through `path` that pass the
    optional value filter (a constant or a datatype) or, for inter-shape
    constraints, that validate the referenced shape.
    """

    kind: ConstraintKind
    count: int
    path: URIRef
    value: Optional[Identifier] = None
    datatype: Optional[URIRef] = None
    shape_ref: Optional[str] = None

    def __post_init__(self):
        if self.count < 0:
            raise InvalidConstraintError(f"Negative count {self.count} on {self.path}")
        if self.kind is ConstraintKind.MIN and self.count < 1:
            raise InvalidConstraintError(f"MIN constraint on {self.path} needs count >= 1")
        filters = [x for x in (self.value, self.datatype, self.shape_ref) if x is not None]
        if len(filters) > 1:
            raise InvalidConstraintError(
                f"Constraint on {self.path} mixes value, datatype and shape filters"
            )

    @property
    def is_inter(self) -> bool:
        """True if the constraint depends on another shape's verdicts."""
        return self.shape_ref is not None

    @property
    def sign(self) -> Optional[Sign]:
        """
        Polarity of the dependency on the referenced shape.

        MIN over a shape is monotone (positive); MAX over a shape is
        anti-monotone (negative). None for intra-shape constraints.
        """
        if self.shape_ref is None:
            return None
        return Sign.POSITIVE if self.kind is ConstraintKind.MIN else Sign.NEGATIVE

    def to_dict(self) -> dict:
        data = {
            'kind': self.kind.value,
            'count': self.count,
            'path': str(self.path),
        }
        if self.shape_ref is not None:
            data['shape'] = self.shape_ref
        if self.value is not None:
            data['value'] = self.value.n3()
        if self.datatype is not None:
            data['datatype'] = str(self.datatype)
        return data

    @staticmethod
    def from_dict(data: dict) -> 'Constraint':
        """
        Build a constraint from its document form, normalizing negation.

        A negated constraint is stored as its complement:
        not(min n) becomes max n-1 and not(max n) becomes min n+1.

        Args:
            data: Constraint object from the schema document

        Returns:
            Normalized Constraint
        """
        if not isinstance(data, dict):
            raise InvalidConstraintError(f"Constraint must be an object, got {data!r}")
        try:
            kind = ConstraintKind(data['kind'])
            count = data['count']
            path = _iri(data['path'])
        except KeyError as exc:
            raise InvalidConstraintError(f"Constraint missing field {exc}") from exc
        except ValueError as exc:
            raise InvalidConstraintError(f"Unknown constraint kind {data.get('kind')!r}") from exc
        if not isinstance(count, int) or isinstance(count, bool):
            raise InvalidConstraintError(f"Count must be an integer, got {count!r}")
        if kind is ConstraintKind.MIN and count < 1:
            raise InvalidConstraintError(f"MIN constraint on {path} needs count >= 1")

        if data.get('negated', False):
            if kind is ConstraintKind.MIN:
                kind, count = ConstraintKind.MAX, count - 1
            else:
                kind, count = ConstraintKind.MIN, count + 1

        value = parse_term(data['value']) if data.get('value') is not None else None
        datatype = _iri(data['datatype']) if data.get('datatype') is not None else None
        shape_ref = data.get('shape')
        if shape_ref is not None and (not isinstance(shape_ref, str) or not shape_ref):
            raise InvalidConstraintError(f"Shape reference must be a name, got {shape_ref!r}")
        return Constraint(kind, count, path, value, datatype, shape_ref)


@dataclass(frozen=True)
class Shape:
    """
    Named conjunction of constraints with an optional target.
    """

    name: str
    target: Optional[TargetDefinition]
    constraints: Tuple[Constraint, ...]

    @property
    def min_constraints(self) -> List[Tuple[int, Constraint]]:
        return [(i, c) for i, c in enumerate(self.constraints) if c.kind is ConstraintKind.MIN]

    @property
    def max_constraints(self) -> List[Tuple[int, Constraint]]:
        return [(i, c) for i, c in enumerate(self.constraints) if c.kind is ConstraintKind.MAX]

    @property
    def has_min(self) -> bool:
        """Shapes with a MIN constraint reject every entity outside their candidates."""
        return any(c.kind is ConstraintKind.MIN for c in self.constraints)

    @property
    def references(self) -> List[str]:
        """Referenced shape names in constraint order, without repeats."""
        seen = []
        for c in self.constraints:
            if c.shape_ref is not None and c.shape_ref not in seen:
                seen.append(c.shape_ref)
        return seen

    def to_dict(self) -> dict:
        data = {'name': self.name}
        if self.target is not None:
            data.update(self.target.to_dict())
        data['constraints'] = [c.to_dict() for c in self.constraints]
        return data


@dataclass(frozen=True)
class ShapeSchema:
    """
    Ordered collection of shapes with O(1) lookup by name.
    """

    shapes: Tuple[Shape, ...] = ()
    by_name: Dict[str, Shape] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        by_name: Dict[str, Shape] = {}
        for shape in self.shapes:
            if not shape.name:
                raise SchemaError("Shape names must be non-empty")
            if shape.name in by_name:
                raise DuplicateShapeError(shape.name)
            by_name[shape.name] = shape
        for shape in self.shapes:
            for ref in shape.references:
                if ref not in by_name:
                    raise DanglingReferenceError(shape.name, ref)
        object.__setattr__(self, 'by_name', by_name)

    def __len__(self) -> int:
        return len(self.shapes)

    def __iter__(self) -> Iterator[Shape]:
        return iter(self.shapes)

    def __getitem__(self, name: str) -> Shape:
        return self.by_name[name]

    @property
    def names(self) -> List[str]:
        return [s.name for s in self.shapes]

    def constraint_count(self) -> int:
        return sum(len(s.constraints) for s in self.shapes)

    def to_dict(self) -> dict:
        return {'shapes': [s.to_dict() for s in self.shapes]}


def _shape_from_dict(data: dict) -> Shape:
    if not isinstance(data, dict):
        raise SchemaError(f"Shape must be an object, got {data!r}")
    name = data.get('name')
    if not isinstance(name, str) or not name:
        raise SchemaError(f"Shape needs a non-empty name, got {name!r}")

    if 'targetClass' in data and 'targetQuery' in data:
        raise SchemaError(f"Shape {name!r} has more than one target definition")
    target = None
    if data.get('targetClass') is not None:
        target = TargetDefinition(target_class=_iri(data['targetClass']))
    elif data.get('targetQuery') is not None:
        target = TargetDefinition(target_query=data['targetQuery'])

    raw_constraints = data.get('constraints')
    if not isinstance(raw_constraints, list) or not raw_constraints:
        raise SchemaError(f"Shape {name!r} needs a non-empty constraint list")
    constraints = tuple(Constraint.from_dict(c) for c in raw_constraints)
    return Shape(name, target, constraints)


def parse_schema(document: str) -> ShapeSchema:
    """
    Parse a schema document into a ShapeSchema.

    Time Complexity: O(n) in document size plus O(c) reference checks

    Args:
        document: JSON text of the form {"shapes": [...]}

    Returns:
        ShapeSchema preserving declaration order

    Raises:
        SchemaSyntaxError: Document is not well-formed JSON
        SchemaError: Duplicate names, dangling references, bad constraints
    """
    try:
        data = json.loads(document)
    except json.JSONDecodeError as exc:
        raise SchemaSyntaxError(exc.msg, exc.lineno, exc.colno) from exc

    if not isinstance(data, dict):
        raise SchemaSyntaxError("Schema document must be an object", 1, 1)
    shapes = data.get('shapes', [])
    if not isinstance(shapes, list):
        raise SchemaError("'shapes' must be a list")

    schema = ShapeSchema(tuple(_shape_from_dict(s) for s in shapes))
    logger.debug("Parsed schema with %d shapes, %d constraints",
                 len(schema), schema.constraint_count())
    return schema


def serialize_schema(schema: ShapeSchema) -> str:
    """Write a schema back to its (normalized) document form."""
    return json.dumps(schema.to_dict(), indent=2, ensure_ascii=False) + '\n'


def load_schema(path: str) -> ShapeSchema:
    with open(path, 'r', encoding='utf-8') as f:
        return parse_schema(f.read())


class Edge(NamedTuple):
    source: str
    target: str
    sign: Sign


class DependencyGraph:
    """
    Signed directed graph over shape names.

    An edge (s_i, s_j) means a constraint of s_i references s_j. Nodes keep
    declaration order, which fixes neighbor order for traversals.
    """

    def __init__(self, nodes: List[str], edges: FrozenSet[Edge]):
        self.nodes: Tuple[str, ...] = tuple(nodes)
        self.edges: FrozenSet[Edge] = frozenset(edges)
        self._position = {name: i for i, name in enumerate(self.nodes)}
        self._succ: Dict[str, List[str]] = {n: [] for n in self.nodes}
        self._pred: Dict[str, List[str]] = {n: [] for n in self.nodes}
        for source, target in sorted({(e.source, e.target) for e in self.edges},
                                     key=lambda p: (self._position[p[0]], self._position[p[1]])):
            self._succ[source].append(target)
            self._pred[target].append(source)

    def __contains__(self, name: str) -> bool:
        return name in self._position

    def position(self, name: str) -> int:
        return self._position[name]

    def successors(self, name: str) -> List[str]:
        return list(self._succ[name])

    def predecessors(self, name: str) -> List[str]:
        return list(self._pred[name])

    def neighbors(self, name: str) -> List[str]:
        """
        Neighbors ignoring edge direction, in declaration order.

        Time Complexity: O(d log d) where d is the node degree
        """
        found = set(self._succ[name]) | set(self._pred[name])
        found.discard(name)
        return sorted(found, key=self._position.__getitem__)

    def unsigned_edges(self) -> List[Tuple[str, str]]:
        """Edges with signs collapsed, in declaration order."""
        return [(s, t) for s in self.nodes for t in self._succ[s]]

    def to_networkx(self) -> nx.DiGraph:
        g = nx.DiGraph()
        g.add_nodes_from(self.nodes)
        for edge in self.edges:
            if g.has_edge(edge.source, edge.target):
                g[edge.source][edge.target]['signs'].add(edge.sign)
            else:
                g.add_edge(edge.source, edge.target, signs={edge.sign})
        return g

    def to_dict(self) -> dict:
        return {
            'nodes': list(self.nodes),
            'edges': sorted(
                [[e.source, e.target, e.sign.value] for e in self.edges],
                key=lambda e: (self._position[e[0]], self._position[e[1]], e[2])
            ),
        }


def build_dependency_graph(schema: ShapeSchema) -> DependencyGraph:
    """
    Build the dependency graph of a schema.

    Several constraints between the same pair with the same sign collapse
    to one edge.

    Time Complexity: O(|S| + C) where C is the number of constraints
    """
    edges = set()
    for shape in schema:
        for constraint in shape.constraints:
            if constraint.shape_ref is not None:
                edges.add(Edge(shape.name, constraint.shape_ref, constraint.sign))
    return DependencyGraph(schema.names, frozenset(edges))


def stratify(graph: DependencyGraph) -> List[FrozenSet[str]]:
    """
    Layer shapes so that referenced shapes come first.

    Each stratum is a strongly connected component of the dependency graph;
    strata are listed dependency-first, ties broken by declaration order.
    A negative edge inside a component means negation through recursion.

    Time Complexity: O(|V| + |E|) for the components, plus a sort of the condensation

    Args:
        graph: Dependency graph

    Returns:
        List of strata, each a frozenset of shape names

    Raises:
        NegativeCycleError: A negative edge lies on a cycle
    """
    g = graph.to_networkx()
    components = [frozenset(c) for c in nx.strongly_connected_components(g)]
    component_of = {name: i for i, comp in enumerate(components) for name in comp}

    for edge in sorted(graph.edges, key=lambda e: (graph.position(e.source), graph.position(e.target))):
        if edge.sign is not Sign.NEGATIVE:
            continue
        if component_of[edge.source] != component_of[edge.target]:
            continue
        if edge.source == edge.target:
            raise NegativeCycleError([edge.source])
        back = nx.shortest_path(g, edge.target, edge.source)
        raise NegativeCycleError([edge.source] + back[:-1])

    condensed = nx.condensation(g, scc=components)
    first_position = {
        node: min(graph.position(m) for m in condensed.nodes[node]['members'])
        for node in condensed.nodes
    }
    order = nx.lexicographical_topological_sort(
        condensed.reverse(copy=True), key=first_position.__getitem__
    )
    return [frozenset(condensed.nodes[node]['members']) for node in order]
