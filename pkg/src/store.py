"""
Store Module - In-memory triple store with N-Triples ingestion

DSA Concepts:
- Hash Table Indexes: (predicate, subject) -> objects and (predicate, object) -> subjects
- Set Semantics: duplicate triples collapse on insert
- Backtracking Search: star-pattern evaluation with early projection cut-off
"""

import logging
from typing import Dict, Iterable, Iterator, List, Optional, Set, TextIO, Tuple

from rdflib import Graph as RDFGraph
from rdflib.exceptions import ParserError
from rdflib.plugins.parsers.ntriples import W3CNTriplesParser
from rdflib.term import Identifier, URIRef, Variable

from .errors import NTriplesError
from .query import (
    FilterMode,
    InstanceFilter,
    QueryRole,
    SelectQuery,
    TriplePattern,
    literal_datatype,
    term_sort_key,
)

logger = logging.getLogger(__name__)

Triple = Tuple[Identifier, URIRef, Identifier]
BindingRow = Dict[Variable, Identifier]


class Graph:
    """
    Set of RDF triples indexed by predicate+subject and predicate+object.

    The node and edge counts are maintained on insert, so both are O(1).
    """

    def __init__(self, triples: Iterable[Triple] = ()):
        self._triples: Set[Triple] = set()
        self._ps: Dict[Tuple[URIRef, Identifier], Set[Identifier]] = {}
        self._po: Dict[Tuple[URIRef, Identifier], Set[Identifier]] = {}
        self._subjects_by_predicate: Dict[URIRef, Set[Identifier]] = {}
        self._nodes: Set[Identifier] = set()
        for s, p, o in triples:
            self.add(s, p, o)

    def add(self, s: Identifier, p: URIRef, o: Identifier) -> bool:
        """
        Insert one triple.

        Time Complexity: O(1) average

        Returns:
            True if the triple was new
        """
        triple = (s, p, o)
        if triple in self._triples:
            return False
        self._triples.add(triple)
        self._ps.setdefault((p, s), set()).add(o)
        self._po.setdefault((p, o), set()).add(s)
        self._subjects_by_predicate.setdefault(p, set()).add(s)
        self._nodes.add(s)
        self._nodes.add(o)
        return True

    def __len__(self) -> int:
        return len(self._triples)

    def __contains__(self, triple: Triple) -> bool:
        return triple in self._triples

    def __iter__(self) -> Iterator[Triple]:
        return iter(self._triples)

    @property
    def edge_count(self) -> int:
        return len(self._triples)

    @property
    def node_count(self) -> int:
        return len(self._nodes)

    def objects(self, s: Identifier, p: URIRef) -> Set[Identifier]:
        return self._ps.get((p, s), set())

    def subjects(self, p: URIRef, o: Optional[Identifier] = None) -> Set[Identifier]:
        if o is None:
            return self._subjects_by_predicate.get(p, set())
        return self._po.get((p, o), set())

    def sorted_triples(self) -> List[Triple]:
        return sorted(self._triples, key=lambda t: tuple(term_sort_key(x) for x in t))

    def to_ntriples(self) -> str:
        """Canonical N-Triples text: one triple per line, sorted."""
        return ''.join(f"{s.n3()} {p.n3()} {o.n3()} .\n" for s, p, o in self.sorted_triples())

    def to_rdflib(self) -> RDFGraph:
        g = RDFGraph()
        for triple in self._triples:
            g.add(triple)
        return g

    def evaluate(self, query: SelectQuery) -> List[BindingRow]:
        """
        Evaluate a star-shaped query, ignoring its LIMIT/OFFSET.

        Answers are distinct over the projected variables and sorted by them.

        Time Complexity: O(c * b) where c is the number of candidate subjects
        and b the bindings explored per subject before projection cut-off
        """
        checks = {f.variable: FilterCheck(self, f) for f in query.instance_filters}
        solutions: Set[Tuple[Identifier, ...]] = set()
        for entity in self._candidates(query, checks.get(query.entity)):
            solutions.update(_StarMatcher(self, query, entity, checks).projections())
        rows = sorted(solutions, key=lambda values: tuple(term_sort_key(v) for v in values))
        return [dict(zip(query.projected, values)) for values in rows]

    def _candidates(self, query: SelectQuery,
                    admits: Optional['FilterCheck'] = None) -> Set[Identifier]:
        best: Optional[Set[Identifier]] = None
        for pattern in query.patterns:
            if isinstance(pattern.object, Variable):
                subjects = self.subjects(pattern.predicate)
            else:
                subjects = self.subjects(pattern.predicate, pattern.object)
            if best is None or len(subjects) < len(best):
                best = subjects
        if best is None:
            return set()
        if admits is None:
            return set(best)
        return {s for s in best if admits(s)}


class FilterCheck:
    """
    Membership test of one instance filter against a graph.

    A value outside a guarded INCLUDE list passes when it does not match the
    guard patterns; guard matches are memoized per value.
    """

    def __init__(self, graph: Graph, instance_filter: InstanceFilter):
        self.graph = graph
        self.include = instance_filter.mode is FilterMode.INCLUDE
        self.entities = set(instance_filter.entities)
        self.guard = None
        if instance_filter.guard:
            self.guard = SelectQuery(instance_filter.source_shape, QueryRole.TARGET,
                                     instance_filter.guard)
        self._matches: Dict[Identifier, bool] = {}

    def _is_guarded(self, value: Identifier) -> bool:
        if value not in self._matches:
            self._matches[value] = bool(_StarMatcher(self.graph, self.guard, value).projections())
        return self._matches[value]

    def __call__(self, value: Identifier) -> bool:
        if value in self.entities:
            return self.include
        if not self.include:
            return True
        return self.guard is not None and not self._is_guarded(value)


class _StarMatcher:
    """
    Backtracking matcher for one subject of a star query.

    Patterns binding projected variables go first; once every projected
    variable is bound, one completion is enough to emit the projection.
    """

    def __init__(self, graph: Graph, query: SelectQuery, entity: Identifier,
                 checks: Optional[Dict[Variable, FilterCheck]] = None):
        self.graph = graph
        self.query = query
        self.entity = entity
        projected = set(query.projected)
        self.patterns: List[TriplePattern] = sorted(
            query.patterns,
            key=lambda p: 0 if isinstance(p.object, Variable) and p.object in projected else 1
        )
        self.restrictions: Dict[Variable, list] = {}
        for r in query.value_restrictions:
            self.restrictions.setdefault(r.variable, []).append(r)
        self.distinct_from: Dict[Variable, List[Variable]] = {}
        for a, b in query.inequality_filters:
            self.distinct_from.setdefault(a, []).append(b)
            self.distinct_from.setdefault(b, []).append(a)
        self.filters = checks or {}

    def _admissible(self, var: Variable, value: Identifier, binding: BindingRow) -> bool:
        for r in self.restrictions.get(var, ()):
            if r.value is not None and value != r.value:
                return False
            if r.datatype is not None and literal_datatype(value) != r.datatype:
                return False
        admits = self.filters.get(var)
        if admits is not None and not admits(value):
            return False
        for other in self.distinct_from.get(var, ()):
            if other in binding and binding[other] == value:
                return False
        return True

    def _search(self, i: int, end: int, binding: BindingRow) -> Iterator[BindingRow]:
        if i == end:
            yield binding
            return
        pattern = self.patterns[i]
        objects = self.graph.objects(self.entity, pattern.predicate)
        var = pattern.object
        if not isinstance(var, Variable) or var in binding:
            if binding.get(var, var) in objects:
                yield from self._search(i + 1, end, binding)
            return
        for value in sorted(objects, key=term_sort_key):
            if self._admissible(var, value, binding):
                binding[var] = value
                yield from self._search(i + 1, end, binding)
                del binding[var]

    def projections(self) -> Set[Tuple[Identifier, ...]]:
        found: Set[Tuple[Identifier, ...]] = set()
        projected = self.query.projected
        # patterns binding projected variables come first; `cut` is the end of that prefix
        cut = 0
        for i, p in enumerate(self.patterns):
            if isinstance(p.object, Variable) and p.object in projected:
                cut = i + 1

        total = len(self.patterns)
        for partial in self._search(0, cut, {self.query.entity: self.entity}):
            key = tuple(partial[v] for v in projected)
            if key in found:
                continue
            if next(self._search(cut, total, dict(partial)), None) is not None:
                found.add(key)
        return found


class _TripleSink:
    def __init__(self, graph: Graph):
        self.graph = graph
        self.count = 0

    def triple(self, s, p, o):
        self.graph.add(s, p, o)
        self.count += 1


def load_ntriples(stream: TextIO, graph: Optional[Graph] = None) -> Graph:
    """
    Load N-Triples text into a Graph, one line at a time.

    Blank lines and comment lines are skipped; duplicate triples collapse.

    Args:
        stream: Text stream (file object or io.StringIO)
        graph: Graph to extend (a new one by default)

    Returns:
        Graph

    Raises:
        NTriplesError: Malformed line, with its 1-based line number
    """
    graph = graph if graph is not None else Graph()
    sink = _TripleSink(graph)
    parser = W3CNTriplesParser(sink=sink)
    for line_number, line in enumerate(stream, start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith('#'):
            continue
        before = sink.count
        try:
            parser.parsestring(stripped)
        except ParserError as exc:
            raise NTriplesError(line_number, str(exc)) from exc
        if sink.count == before:
            raise NTriplesError(line_number, f"No triple found in {stripped!r}")
    logger.debug("Loaded %d triples over %d nodes", graph.edge_count, graph.node_count)
    return graph


def load_ntriples_file(path: str) -> Graph:
    with open(path, 'r', encoding='utf-8') as f:
        return load_ntriples(f)
