"""
Query Module - Abstract star-shaped select queries and their rewriting

DSA Concepts:
- Immutable Records: queries are frozen and rewritten by copy
- Greedy Bin Packing: instance filters split into length-bounded chunks
- Stable Sorting: plans ordered by a structural selectivity rank
"""

import logging
from dataclasses import dataclass, replace
from enum import Enum
from itertools import combinations
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

from rdflib import BNode, Literal, URIRef
from rdflib.namespace import RDF, XSD
from rdflib.plugins.sparql import prepareQuery
from rdflib.term import Identifier, Variable

from .errors import QueryError, UnsupportedQueryError
from .schema import Constraint, ConstraintKind, Shape

logger = logging.getLogger(__name__)

ENTITY = Variable('x')

# Room left for " LIMIT n OFFSET m" when measuring a query against max_query_len.
PAGING_RESERVE = len(' LIMIT  OFFSET ') + 40


class QueryRole(Enum):
    TARGET = 'target'
    MIN = 'min'
    MAX = 'max'


class FilterMode(Enum):
    INCLUDE = 'include'
    EXCLUDE = 'exclude'


def term_sort_key(term: Identifier) -> Tuple[int, str]:
    """Total order used by ORDER BY: blank nodes, then IRIs, then literals, each by lexical form."""
    if isinstance(term, BNode):
        rank = 0
    elif isinstance(term, URIRef):
        rank = 1
    else:
        rank = 2
    return rank, str(term)


def _render(term: Union[Variable, Identifier]) -> str:
    return term.n3()


@dataclass(frozen=True)
class TriplePattern:
    subject: Variable
    predicate: URIRef
    object: Union[Variable, Identifier]

    def render(self) -> str:
        return f"{_render(self.subject)} {_render(self.predicate)} {_render(self.object)} ."


@dataclass(frozen=True)
class ValueRestriction:
    """Constant or datatype restriction on one object variable."""

    variable: Variable
    value: Optional[Identifier] = None
    datatype: Optional[URIRef] = None

    def render(self) -> str:
        if self.value is not None:
            return f"FILTER(sameTerm({_render(self.variable)}, {_render(self.value)}))"
        return f"FILTER(datatype({_render(self.variable)}) = {_render(self.datatype)})"


@dataclass(frozen=True)
class InstanceFilter:
    """
    Membership filter on one variable.

    A guarded INCLUDE filter also admits values that do not match `guard`,
    the target patterns of the source shape written over ENTITY. Values that
    are not targets of the source were never decided by it and must pass.
    """

    variable: Variable
    mode: FilterMode
    entities: Tuple[Identifier, ...]
    source_shape: str = ''
    guard: Tuple[TriplePattern, ...] = ()

    def __post_init__(self):
        if not self.entities:
            raise QueryError("An instance filter needs at least one entity")
        if self.guard and self.mode is not FilterMode.INCLUDE:
            raise QueryError("Only include filters carry a target guard")

    @property
    def separator(self) -> str:
        return ' ' if self.mode is FilterMode.INCLUDE and not self.guard else ', '

    def render(self) -> str:
        var = _render(self.variable)
        listed = self.separator.join(_render(e) for e in self.entities)
        if self.mode is FilterMode.EXCLUDE:
            return f"FILTER({var} NOT IN ({listed}))"
        if not self.guard:
            return f"VALUES {var} {{ {listed} }}"
        body = ' '.join(p.render() for p in self.guard_patterns())
        return f"FILTER({var} IN ({listed}) || NOT EXISTS {{ {body} }})"

    def guard_patterns(self) -> Tuple[TriplePattern, ...]:
        """The guard rewritten onto the filtered variable, with its own object variables."""
        def rename(term):
            if term == ENTITY:
                return self.variable
            if isinstance(term, Variable):
                return Variable(f"{self.variable}_{term}")
            return term
        return tuple(TriplePattern(self.variable, p.predicate, rename(p.object)) for p in self.guard)

    def with_entities(self, entities: Sequence[Identifier]) -> 'InstanceFilter':
        return replace(self, entities=tuple(entities))


@dataclass(frozen=True)
class ConstraintGroup:
    """Object variables generated for one constraint of the shape."""

    index: int
    kind: ConstraintKind
    variables: Tuple[Variable, ...]
    shape_ref: Optional[str] = None

    @property
    def head(self) -> Variable:
        """The projected representative of a shape-qualified group."""
        return self.variables[0]


@dataclass(frozen=True)
class SelectQuery:
    """
    Star-shaped select query over one entity variable.

    Every pattern has the entity variable as subject. `groups` records which
    object variables belong to which constraint of the shape so answer rows
    can be mapped back to constraint states.
    """

    shape: str
    role: QueryRole
    patterns: Tuple[TriplePattern, ...]
    projected: Tuple[Variable, ...] = (ENTITY,)
    inequality_filters: Tuple[Tuple[Variable, Variable], ...] = ()
    value_restrictions: Tuple[ValueRestriction, ...] = ()
    instance_filters: Tuple[InstanceFilter, ...] = ()
    groups: Tuple[ConstraintGroup, ...] = ()
    limit: Optional[int] = None
    offset: Optional[int] = None

    @property
    def entity(self) -> Variable:
        return self.projected[0]

    @property
    def is_filtered(self) -> bool:
        return bool(self.instance_filters)

    def filter_on(self, variable: Variable) -> Optional[InstanceFilter]:
        for f in self.instance_filters:
            if f.variable == variable:
                return f
        return None

    def with_filters(self, filters: Iterable[InstanceFilter]) -> 'SelectQuery':
        ordered = sorted(filters, key=lambda f: str(f.variable))
        return replace(self, instance_filters=tuple(ordered))

    def paged(self, limit: Optional[int], offset: Optional[int]) -> 'SelectQuery':
        return replace(self, limit=limit, offset=offset)

    def serialize(self) -> str:
        return serialize(self)


def _fresh(counter: List[int], prefix: str = 'p') -> Variable:
    var = Variable(f"{prefix}{counter[0]}")
    counter[0] += 1
    return var


def _constraint_group(index: int, constraint: Constraint, width: int,
                      counter: List[int]):
    variables = tuple(_fresh(counter) for _ in range(width))
    patterns = [TriplePattern(ENTITY, constraint.path, v) for v in variables]
    inequalities = list(combinations(variables, 2))
    restrictions = []
    if constraint.value is not None or constraint.datatype is not None:
        restrictions = [ValueRestriction(v, constraint.value, constraint.datatype) for v in variables]
    group = ConstraintGroup(index, constraint.kind, variables, constraint.shape_ref)
    return group, patterns, inequalities, restrictions


def _target_class_query(shape: Shape) -> SelectQuery:
    pattern = TriplePattern(ENTITY, RDF.type, shape.target.target_class)
    return SelectQuery(shape.name, QueryRole.TARGET, (pattern,))


def _target_query_from_text(shape: Shape) -> SelectQuery:
    # accepted: SELECT [DISTINCT] ?v WHERE { ?v p o . ... } with IRI predicates
    text = shape.target.target_query
    try:
        parsed = prepareQuery(text)
    except Exception as exc:
        raise UnsupportedQueryError(f"Target query of {shape.name!r} does not parse: {exc}") from exc

    algebra = parsed.algebra
    if algebra.name != 'SelectQuery':
        raise UnsupportedQueryError(f"Target query of {shape.name!r} is not a SELECT query")
    projected = list(algebra.get('PV') or [])
    if len(projected) != 1:
        raise UnsupportedQueryError(
            f"Target query of {shape.name!r} projects {len(projected)} variables, expected 1"
        )
    subject_var = projected[0]

    node = algebra['p']
    while node.name in ('Project', 'Distinct', 'Reduced', 'OrderBy', 'ToMultiSet'):
        node = node['p']
    if node.name != 'BGP':
        raise UnsupportedQueryError(
            f"Target query of {shape.name!r} must be a single basic graph pattern, found {node.name}"
        )

    renamed: Dict[Variable, Variable] = {subject_var: ENTITY}
    counter = [0]
    patterns = []
    for s, p, o in node['triples']:
        if s != subject_var or not isinstance(p, URIRef):
            raise UnsupportedQueryError(
                f"Target query of {shape.name!r} is not star-shaped on {subject_var.n3()}"
            )
        if isinstance(o, Variable):
            if o not in renamed:
                renamed[o] = _fresh(counter, 't')
            o = renamed[o]
        elif isinstance(o, BNode):
            raise UnsupportedQueryError(f"Blank node in target query of {shape.name!r}")
        patterns.append(TriplePattern(ENTITY, p, o))
    if not patterns:
        raise UnsupportedQueryError(f"Target query of {shape.name!r} has no triple patterns")
    return SelectQuery(shape.name, QueryRole.TARGET, tuple(patterns))


def gen_target_query(shape: Shape) -> SelectQuery:
    """
    Build the query selecting the targets of a shape.

    Raises:
        QueryError: Shape has no target
        UnsupportedQueryError: Explicit target query outside the star fragment
    """
    if shape.target is None:
        raise QueryError(f"Shape {shape.name!r} has no target")
    if shape.target.target_class is not None:
        return _target_class_query(shape)
    return _target_query_from_text(shape)


def gen_min_query(shape: Shape) -> SelectQuery:
    """
    Build one query joining every MIN constraint of the shape.

    A MIN n constraint contributes n pairwise-distinct object variables over
    its path. The first variable of each shape-qualified group is projected
    next to the entity so neighbor bindings can be grounded.

    Time Complexity: O(sum n_i^2) inequality filters

    Raises:
        QueryError: Shape has no MIN constraint
    """
    mins = shape.min_constraints
    if not mins:
        raise QueryError(f"Shape {shape.name!r} has no MIN constraint")

    counter = [0]
    patterns, inequalities, restrictions, groups = [], [], [], []
    for index, constraint in mins:
        group, pats, ineqs, restr = _constraint_group(index, constraint, constraint.count, counter)
        groups.append(group)
        patterns.extend(pats)
        inequalities.extend(ineqs)
        restrictions.extend(restr)

    projected = (ENTITY,) + tuple(g.head for g in groups if g.shape_ref is not None)
    return SelectQuery(
        shape.name, QueryRole.MIN, tuple(patterns), projected,
        tuple(inequalities), tuple(restrictions), (), tuple(groups),
    )


def gen_max_queries(shape: Shape) -> List[SelectQuery]:
    """
    Build one violator query per MAX constraint.

    MAX n uses n+1 pairwise-distinct object variables, so its answers are the
    entities with more than n matching values. For a shape-qualified MAX the
    neighbor is co-projected and the threshold is checked on valid neighbors
    during saturation.
    """
    queries = []
    for index, constraint in shape.max_constraints:
        counter = [0]
        group, pats, ineqs, restr = _constraint_group(index, constraint, constraint.count + 1, counter)
        projected = (ENTITY, group.head) if group.shape_ref is not None else (ENTITY,)
        queries.append(SelectQuery(
            shape.name, QueryRole.MAX, tuple(pats), projected,
            tuple(ineqs), tuple(restr), (), (group,),
        ))
    return queries


def scope_to_targets(query: SelectQuery, target_query: SelectQuery) -> SelectQuery:
    """
    Join a shape's target patterns into one of its constraint queries.

    The answers are then limited to the shape's targets; projection and
    constraint groups are unchanged.

    Raises:
        QueryError: Either query has the wrong role, or they belong to different shapes
    """
    if target_query.role is not QueryRole.TARGET or query.role is QueryRole.TARGET:
        raise QueryError("scope_to_targets joins a target query into a constraint query")
    if query.shape != target_query.shape:
        raise QueryError(f"Target query of {target_query.shape!r} cannot scope {query.shape!r}")
    return replace(query, patterns=target_query.patterns + query.patterns)


def push_instance_filter(query: SelectQuery, valid: Sequence[Identifier],
                         invalid: Sequence[Identifier], var: Variable,
                         source_shape: str = '',
                         guard: Sequence[TriplePattern] = ()) -> SelectQuery:
    """
    Attach the smaller of the valid/invalid lists as a filter on `var`.

    |valid| <= |invalid| gives INCLUDE(valid), otherwise EXCLUDE(invalid).
    An empty chosen list falls back to the other list in its own mode; two
    empty lists leave the query unchanged.

    Args:
        query: Query to rewrite
        valid: Entities whose verdict for the neighbor shape is TRUE
        invalid: Entities whose verdict for the neighbor shape is FALSE
        var: Variable bound to the neighbor
        source_shape: Name of the neighbor shape, kept for logging
        guard: Target patterns of the neighbor shape; an INCLUDE filter
            then lets non-targets through

    Returns:
        Rewritten query (the input is never modified)
    """
    if not valid and not invalid:
        return query
    if query.filter_on(var) is not None:
        raise QueryError(f"Variable {var.n3()} already carries an instance filter")

    if valid and (len(valid) <= len(invalid) or not invalid):
        mode, entities, guard = FilterMode.INCLUDE, valid, tuple(guard)
    else:
        mode, entities, guard = FilterMode.EXCLUDE, invalid, ()

    new_filter = InstanceFilter(var, mode, tuple(sorted(set(entities), key=term_sort_key)),
                                source_shape, guard)
    return query.with_filters(query.instance_filters + (new_filter,))


def serialize(query: SelectQuery) -> str:
    """
    Render a query as single-line SPARQL text.

    Identical queries produce byte-identical text.
    """
    head = ' '.join(v.n3() for v in query.projected)
    body = [p.render() for p in query.patterns]
    body.extend(f.render() for f in query.instance_filters if f.mode is FilterMode.INCLUDE)
    body.extend(f"FILTER({a.n3()} != {b.n3()})" for a, b in query.inequality_filters)
    body.extend(r.render() for r in query.value_restrictions)
    body.extend(f.render() for f in query.instance_filters if f.mode is FilterMode.EXCLUDE)

    text = f"SELECT DISTINCT {head} WHERE {{ {' '.join(body)} }} ORDER BY {head}"
    if query.limit is not None:
        text += f" LIMIT {query.limit}"
    if query.offset is not None:
        text += f" OFFSET {query.offset}"
    return text


@dataclass(frozen=True)
class QueryPlan:
    """
    One logical query split into filter chunks, each exhausted by paging.

    The answer set of the plan is the union of its parts' answers.
    """

    parts: Tuple[SelectQuery, ...]
    page_size: int
    dropped_filters: Tuple[InstanceFilter, ...] = ()

    @property
    def query(self) -> SelectQuery:
        return self.parts[0]

    @property
    def estimated_selectivity(self) -> Tuple[int, int]:
        """Smaller sorts first: filtered plans, then plans with more patterns."""
        first = self.parts[0]
        return (0 if first.is_filtered else 1, -len(first.patterns))


def _length(query: SelectQuery) -> int:
    return len(serialize(query)) + PAGING_RESERVE


def _chunk_filter(base: SelectQuery, chunked: InstanceFilter,
                  max_query_len: int) -> Optional[List[SelectQuery]]:
    # None when even a single entity does not fit
    others = base.instance_filters
    single = base.with_filters(others + (chunked.with_entities(chunked.entities[:1]),))
    overhead = _length(single) - len(_render(chunked.entities[0]))
    if overhead + len(_render(chunked.entities[0])) > max_query_len:
        return None

    chunks: List[List[Identifier]] = [[]]
    used = overhead
    for entity in chunked.entities:
        size = len(_render(entity)) + (len(chunked.separator) if chunks[-1] else 0)
        if chunks[-1] and used + size > max_query_len:
            chunks.append([])
            used = overhead
            size = len(_render(entity))
        if used + size > max_query_len:
            return None
        chunks[-1].append(entity)
        used += size

    return [base.with_filters(others + (chunked.with_entities(c),)) for c in chunks]


def partition_plan(query: SelectQuery, max_query_len: int, max_parts: int,
                   page_size: int) -> QueryPlan:
    """
    Split an over-long filtered query into at most max_parts parts.

    Only INCLUDE filters can be chunked (the union of the chunked queries
    equals the original). When the query is too long, the largest INCLUDE
    filter is chunked; other filters are dropped longest-first if the rest of
    the query does not leave room. A filter needing more than max_parts parts
    is dropped, leaving a less selective but still sound query.

    Args:
        query: Query to partition
        max_query_len: Maximum serialized length in characters
        max_parts: Maximum number of part queries
        page_size: Page size each part is exhausted with

    Returns:
        QueryPlan
    """
    if page_size < 1 or max_parts < 1:
        raise QueryError("page_size and max_parts must be >= 1")

    if _length(query) <= max_query_len:
        return QueryPlan((query,), page_size)

    includes = [f for f in query.instance_filters if f.mode is FilterMode.INCLUDE]
    chunked = max(includes, key=lambda f: len(f.entities)) if includes else None
    others = [f for f in query.instance_filters if f is not chunked]
    dropped: List[InstanceFilter] = []

    while True:
        base = query.with_filters(others)
        if chunked is None:
            if _length(base) <= max_query_len or not others:
                break
            victim = max(others, key=lambda f: len(f.render()))
            others.remove(victim)
            dropped.append(victim)
            continue

        parts = _chunk_filter(base, chunked, max_query_len)
        if parts is None and others:
            victim = max(others, key=lambda f: len(f.render()))
            others.remove(victim)
            dropped.append(victim)
            continue
        if parts is not None and len(parts) <= max_parts:
            logger.debug("Split filter on %s of %s into %d parts",
                         chunked.variable.n3(), query.shape, len(parts))
            return QueryPlan(tuple(parts), page_size, tuple(dropped))
        dropped.append(chunked)
        chunked = None

    for f in dropped:
        logger.info("Dropped %s filter on %s for shape %s (%d entities)",
                    f.mode.value, f.variable.n3(), query.shape, len(f.entities))
    return QueryPlan((query.with_filters(others),), page_size, tuple(dropped))


def order_query_plans(plans: Sequence[QueryPlan]) -> List[QueryPlan]:
    """Stable sort by selectivity rank; equal ranks keep input order."""
    return sorted(plans, key=lambda p: p.estimated_selectivity)


def literal_datatype(term: Identifier) -> Optional[URIRef]:
    """Datatype used by datatype filters: xsd:string or rdf:langString for plain literals."""
    if not isinstance(term, Literal):
        return None
    if term.datatype is not None:
        return term.datatype
    if term.language:
        return RDF.langString
    return XSD.string
