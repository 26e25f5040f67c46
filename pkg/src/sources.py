"""
Sources Module - Graph sources with a bounded-answer contract, and paged retrieval

DSA Concepts:
- Strategy Pattern: embedded and remote sources behind one interface
- Cursor Paging: LIMIT/OFFSET slices until a short page
- Producer/Consumer: optional prefetch of the next page on a worker thread
"""

import logging
import threading
from abc import ABC, abstractmethod
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, Iterator, List, Optional, Tuple

from rdflib.term import Identifier, Variable

from .endpoint import SparqlClient
from .errors import TransportError
from .query import QueryPlan, SelectQuery, serialize
from .store import Graph

logger = logging.getLogger(__name__)

BindingRow = Dict[Variable, Identifier]

DEFAULT_MAX_ANSWERS = 10000


class GraphSource(ABC):
    """
    Something that evaluates SelectQuery objects.

    A single evaluation never returns more than max_answers rows.
    """

    def __init__(self, max_answers: int = DEFAULT_MAX_ANSWERS):
        if max_answers < 1:
            raise ValueError("max_answers must be >= 1")
        self.max_answers = max_answers

    @abstractmethod
    def execute(self, query: SelectQuery) -> List[BindingRow]:
        """Evaluate one query, honoring its LIMIT/OFFSET and the answer cap."""

    def close(self):
        pass

    @property
    def description(self) -> str:
        return type(self).__name__


class EmbeddedSource(GraphSource):
    """
    In-memory Graph; the answer cap mimics an endpoint's truncation.

    The full answer of the query being paged is kept until a different query
    arrives, so walking its pages evaluates it once.
    """

    def __init__(self, graph: Graph, max_answers: int = DEFAULT_MAX_ANSWERS):
        super().__init__(max_answers)
        self.graph = graph
        self._cached: Optional[Tuple[str, List[BindingRow]]] = None
        self._lock = threading.Lock()

    def _answers(self, query: SelectQuery) -> List[BindingRow]:
        key = serialize(query.paged(None, None))
        with self._lock:
            if self._cached is not None and self._cached[0] == key:
                return self._cached[1]
        rows = self.graph.evaluate(query)
        with self._lock:
            self._cached = (key, rows)
        return rows

    def execute(self, query: SelectQuery) -> List[BindingRow]:
        rows = self._answers(query)
        start = query.offset or 0
        rows = rows[start:]
        if query.limit is not None:
            rows = rows[:query.limit]
        return rows[:self.max_answers]

    @property
    def description(self) -> str:
        return f"embedded({self.graph.edge_count} triples)"


class RemoteSource(GraphSource):
    """SPARQL endpoint reached over the SPARQL Protocol."""

    def __init__(self, endpoint: str, max_answers: int = DEFAULT_MAX_ANSWERS,
                 timeout: float = 60.0, max_in_flight: int = 4):
        super().__init__(max_answers)
        self.endpoint = endpoint
        self.client = SparqlClient(endpoint, timeout=timeout, max_in_flight=max_in_flight)

    def execute(self, query: SelectQuery) -> List[BindingRow]:
        rows = self.client.select(serialize(query))
        return rows[:self.max_answers]

    def close(self):
        self.client.close()

    @property
    def description(self) -> str:
        return f"remote({self.endpoint})"


def evaluate(source: GraphSource, query: SelectQuery) -> List[BindingRow]:
    """
    Evaluate one query against a source.

    Rows come back sorted by the projected variables, offset applied, then
    truncated at min(limit, max_answers).
    """
    return source.execute(query)


@dataclass(frozen=True)
class Page:
    part: int
    offset: int
    rows: List[BindingRow]
    last: bool


def effective_page_size(plan: QueryPlan, source: GraphSource) -> int:
    """A page never exceeds the answer cap, so a full page is never mistaken for a short one."""
    return min(plan.page_size, source.max_answers)


def _fetch(source: GraphSource, plan: QueryPlan, part: int, offset: int,
           limit: Optional[int]) -> List[BindingRow]:
    query = plan.parts[part]
    if limit is not None:
        query = query.paged(limit, offset)
    try:
        return source.execute(query)
    except TransportError as exc:
        exc.cursor = {'part': part, 'offset': offset}
        raise


def _next_cursor(plan: QueryPlan, part: int, offset: int, rows: List[BindingRow],
                 limit: Optional[int]) -> Optional[Tuple[int, int]]:
    if limit is not None and len(rows) == limit:
        return part, offset + limit
    if part + 1 < len(plan.parts):
        return part + 1, 0
    return None


def evaluate_all_pages(source: GraphSource, plan: QueryPlan, paged: bool = True,
                       prefetch: bool = False,
                       start: Optional[dict] = None) -> Iterator[Page]:
    """
    Exhaust every part of a plan, page by page.

    Each part is read with OFFSET advancing by the effective page size until
    a short page. With prefetch, the next page is requested on a worker
    thread while the caller consumes the current one; pages are still
    yielded in order. With paged=False every part is issued once without
    LIMIT/OFFSET, so the source's answer cap shows through.

    Args:
        source: Graph source
        plan: Query plan
        paged: Use LIMIT/OFFSET paging
        prefetch: Fetch the next page concurrently
        start: Cursor {'part': i, 'offset': n} to resume from

    Yields:
        Page objects; the last one has last=True

    Raises:
        TransportError: With .cursor set to the page that failed
    """
    limit = effective_page_size(plan, source) if paged else None
    cursor: Optional[Tuple[int, int]] = (0, 0)
    if start is not None:
        cursor = (start['part'], start['offset'])

    if not prefetch:
        while cursor is not None:
            part, offset = cursor
            rows = _fetch(source, plan, part, offset, limit)
            cursor = _next_cursor(plan, part, offset, rows, limit)
            logger.debug("Page part=%d offset=%d rows=%d", part, offset, len(rows))
            yield Page(part, offset, rows, cursor is None)
        return

    with ThreadPoolExecutor(max_workers=1, thread_name_prefix='prefetch') as pool:
        part, offset = cursor
        future = pool.submit(_fetch, source, plan, part, offset, limit)
        while True:
            rows = future.result()
            cursor = _next_cursor(plan, part, offset, rows, limit)
            if cursor is not None:
                future = pool.submit(_fetch, source, plan, cursor[0], cursor[1], limit)
            logger.debug("Page part=%d offset=%d rows=%d (prefetch)", part, offset, len(rows))
            yield Page(part, offset, rows, cursor is None)
            if cursor is None:
                return
            part, offset = cursor


def iter_rows(source: GraphSource, plan: QueryPlan, **kwargs) -> Iterator[BindingRow]:
    """Rows of every page in order; duplicates across parts are left to the consumer."""
    for page in evaluate_all_pages(source, plan, **kwargs):
        yield from page.rows
