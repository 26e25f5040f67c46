"""
Engine Module - Interleaved retrieval, grounding and saturation

Walks a traversal plan shape by shape. With rewriting on, a shape's
constraint queries are joined with its target patterns and rewritten with
the verdicts of settled neighbor shapes; neighbors that are not targets of
the shape they are checked against are grounded on demand with queries
restricted to exactly those entities. With rewriting off every query ranges
over the whole graph in declaration order. Either way answers are grounded
into counting constraint states and saturated after every page, and strata
are closed to their least model once everything they depend on has been
grounded.

DSA Concepts:
- Worklist Propagation: verdict changes travel a reverse index of pending supports
- Demand-Driven Evaluation: only atoms a target depends on are grounded
- Stratified Fixpoint: undecided atoms of a fully grounded stratum become FALSE
"""

import logging
import time
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Deque, Dict, Iterable, List, Optional, Sequence, Set

from rdflib import BNode, Literal
from rdflib.term import Identifier, Variable

from .assignment import Assignment, ConstraintState, GroundingLedger, Verdict
from .config import RunConfig
from .errors import QueryError, TransportError
from .metrics import AnswerTrace, verdict_records
from .planner import TraversalPlan, declaration_order_plan, plan_traversal
from .query import (
    ENTITY,
    QueryPlan,
    QueryRole,
    SelectQuery,
    gen_max_queries,
    gen_min_query,
    gen_target_query,
    order_query_plans,
    partition_plan,
    push_instance_filter,
    scope_to_targets,
    term_sort_key,
)
from .schema import Shape, ShapeSchema, build_dependency_graph, stratify
from .sources import GraphSource, evaluate_all_pages

logger = logging.getLogger(__name__)

BindingRow = Dict[Variable, Identifier]


class AtomRecord:
    """Constraint states of one (entity, shape) pair."""

    __slots__ = ('entity', 'shape', 'states', 'grounded', 'closed_false')

    def __init__(self, entity: Identifier, shape: Shape):
        self.entity = entity
        self.shape = shape.name
        self.states: Dict[int, ConstraintState] = {
            i: ConstraintState(entity, shape.name, i, c.kind, c.count, c.shape_ref)
            for i, c in enumerate(shape.constraints)
        }
        # entity appeared in one of the shape's own answer rows
        self.grounded = False
        # missing from the MIN query answers
        self.closed_false = False


class Coverage:
    """Entities an exhausted query speaks for: all of them, or an explicit set."""

    __slots__ = ('everything', 'entities')

    def __init__(self):
        self.everything = False
        self.entities: Set[Identifier] = set()

    def add(self, scope: Optional[Iterable[Identifier]]):
        if scope is None:
            self.everything = True
        else:
            self.entities.update(scope)

    def __contains__(self, entity: Identifier) -> bool:
        return self.everything or entity in self.entities


@dataclass
class ShapeProgress:
    shape: Shape
    atoms: Dict[Identifier, AtomRecord] = field(default_factory=dict)
    targets: Set[Identifier] = field(default_factory=set)
    candidates: Set[Identifier] = field(default_factory=set)
    min_scope: Coverage = field(default_factory=Coverage)
    max_scope: Dict[int, Coverage] = field(default_factory=dict)
    covered: Coverage = field(default_factory=Coverage)
    # atoms whose answers have not been retrieved yet
    open: Set[Identifier] = field(default_factory=set)
    requested: Set[Identifier] = field(default_factory=set)
    retrieved: bool = False

    @property
    def default_verdict(self) -> Verdict:
        """Verdict of an entity absent from every answer of a globally covered shape."""
        return Verdict.FALSE if self.shape.has_min else Verdict.TRUE


class SupportNetwork:
    """
    Grounded constraint states plus the reverse index used by saturation.

    The reverse index maps a neighbor atom (o, t) to every ConstraintState
    holding o in its pending set. Every ingest and exhaust call takes an
    optional scope: the entities the query was restricted to, or None for a
    query over the whole graph.
    """

    def __init__(self, schema: ShapeSchema, assignment: Optional[Assignment] = None,
                 ledger: Optional[GroundingLedger] = None, skip: bool = True,
                 on_verdict: Optional[Callable[[Identifier, str, Verdict], None]] = None):
        self.schema = schema
        self.assignment = assignment if assignment is not None else Assignment()
        self.ledger = ledger if ledger is not None else GroundingLedger()
        self.skip = skip
        self.on_verdict = on_verdict
        self.progress: Dict[str, ShapeProgress] = {s.name: ShapeProgress(s) for s in schema}
        self.reverse: Dict[tuple, List[ConstraintState]] = {}
        self.worklist: Deque[tuple] = deque()
        self._emitted: Set[tuple] = set()

    # -- lookup -----------------------------------------------------------

    def verdict_of(self, entity: Identifier, shape: str) -> Verdict:
        """Current verdict of a neighbor; an unseen neighbor gets an atom and is demanded."""
        verdict = self.assignment.get(entity, shape)
        if verdict.decided:
            return verdict
        progress = self.progress[shape]
        if entity in progress.atoms:
            return Verdict.UNKNOWN
        if progress.covered.everything:
            return progress.default_verdict
        self.atom(shape, entity)
        return self.assignment.get(entity, shape)

    def states_of(self, shape: str) -> List[ConstraintState]:
        return [st for rec in self.progress[shape].atoms.values() for st in rec.states.values()]

    def settled(self, shape: str) -> bool:
        """The shape's own pass is done and every one of its targets is decided."""
        progress = self.progress[shape]
        return progress.retrieved and all(
            self.assignment.get(e, shape).decided for e in progress.targets
        )

    def take_demand(self, shape: str) -> List[Identifier]:
        """Open atoms of the shape not handed out before, in ORDER BY order."""
        progress = self.progress[shape]
        batch = sorted(progress.open - progress.requested, key=term_sort_key)
        progress.requested.update(batch)
        return batch

    def has_open(self, shape: str) -> bool:
        return bool(self.progress[shape].open)

    # -- grounding --------------------------------------------------------

    def atom(self, shape: str, entity: Identifier, grounded: bool = False) -> AtomRecord:
        """Get or create the record of (entity, shape), applying what is already known."""
        progress = self.progress[shape]
        rec = progress.atoms.get(entity)
        if rec is not None:
            rec.grounded = rec.grounded or grounded
            return rec
        rec = AtomRecord(entity, progress.shape)
        rec.grounded = grounded
        progress.atoms[entity] = rec
        if entity in progress.min_scope and entity not in progress.candidates:
            rec.closed_false = True
        for index in sorted(progress.max_scope):
            if entity in progress.max_scope[index]:
                self._complete_max(rec, index)
        if entity in progress.covered:
            self._complete_all(rec)
        else:
            progress.open.add(entity)
        self._recheck(rec)
        return rec

    def _scoped(self, shape: str, scope: Optional[Iterable[Identifier]]) -> List[AtomRecord]:
        if scope is None:
            return list(self.progress[shape].atoms.values())
        return [self.atom(shape, e) for e in sorted(scope, key=term_sort_key)]

    def _skipping(self, rec: AtomRecord) -> bool:
        if self.skip and self.assignment.get(rec.entity, rec.shape) is Verdict.FALSE:
            self.ledger.skipped_evaluations += 1
            return True
        return False

    def _support(self, rec: AtomRecord, index: int, neighbor: Identifier):
        state = rec.states[index]
        if neighbor in state.seen or self._skipping(rec):
            return
        state.seen.add(neighbor)
        self.ledger.add_rules(rec.shape)
        verdict = self.verdict_of(neighbor, state.shape_ref)
        if verdict is Verdict.TRUE:
            state.satisfied += 1
        elif verdict is Verdict.UNKNOWN:
            state.pending.add(neighbor)
            self.reverse.setdefault((neighbor, state.shape_ref), []).append(state)
        self._recheck(rec)

    def ingest(self, query: SelectQuery, row: BindingRow,
               scope: Optional[Set[Identifier]] = None):
        """
        Ground one answer row of a shape's query.

        Rows whose entity lies outside `scope` are counted and dropped.

        Raises:
            QueryError: Row lacks a variable the query projects
        """
        try:
            entity = row[query.entity]
            values = [row[v] for v in query.projected]
        except KeyError as exc:
            raise QueryError(f"Row for shape {query.shape!r} lacks variable {exc}") from exc
        progress = self.progress[query.shape]
        shape = progress.shape
        self.ledger.rows_retrieved += 1
        if scope is not None and entity not in scope:
            return
        self.ledger.entities_retrieved.update(values)

        if query.role is QueryRole.TARGET:
            progress.targets.add(entity)
            rec = self.atom(shape.name, entity, grounded=True)
            self._emit(rec)
            return

        if query.role is QueryRole.MIN:
            first_time = entity not in progress.candidates
            progress.candidates.add(entity)
            rec = self.atom(shape.name, entity, grounded=True)
            if self._skipping(rec):
                return
            if first_time:
                for index, constraint in shape.min_constraints:
                    if constraint.is_inter:
                        continue
                    state = rec.states[index]
                    state.satisfied = constraint.count
                    state.complete = True
                    self.ledger.add_rules(shape.name)
            for group in query.groups:
                if group.shape_ref is not None:
                    self._support(rec, group.index, row[group.head])
            self._recheck(rec)
            return

        group = query.groups[0]
        if (self.skip and shape.has_min and entity in progress.min_scope
                and entity not in progress.candidates):
            self.ledger.skipped_evaluations += 1
            return
        rec = self.atom(shape.name, entity, grounded=True)
        if self._skipping(rec):
            return
        state = rec.states[group.index]
        if group.shape_ref is None:
            if state.satisfied <= state.threshold:
                state.satisfied = state.threshold + 1
                self.ledger.add_rules(shape.name)
        else:
            self._support(rec, group.index, row[group.head])
        self._recheck(rec)

    def _complete_max(self, rec: AtomRecord, index: int):
        state = rec.states[index]
        if state.complete:
            return
        state.complete = True
        falsified = self.assignment.get(rec.entity, rec.shape) is Verdict.FALSE
        if (not state.is_inter and state.satisfied <= state.threshold
                and rec.grounded and not (self.skip and falsified)):
            self.ledger.add_rules(rec.shape)
        self._recheck(rec)

    def _complete_all(self, rec: AtomRecord):
        for state in rec.states.values():
            state.complete = True

    def exhaust(self, query: SelectQuery, scope: Optional[Iterable[Identifier]] = None):
        """
        All pages of a query have been ingested.

        Entities in scope that never showed up in a MIN answer are closed
        FALSE; a MAX constraint is complete for every entity in scope.
        """
        progress = self.progress[query.shape]
        if query.role is QueryRole.MIN:
            records = self._scoped(query.shape, scope)
            progress.min_scope.add(scope)
            for rec in records:
                if rec.entity in progress.candidates:
                    for index, _ in progress.shape.min_constraints:
                        rec.states[index].complete = True
                else:
                    rec.closed_false = True
                self._recheck(rec)
        elif query.role is QueryRole.MAX:
            index = query.groups[0].index
            records = self._scoped(query.shape, scope)
            progress.max_scope.setdefault(index, Coverage()).add(scope)
            for rec in records:
                self._complete_max(rec, index)

    def cover(self, shape: str, scope: Optional[Iterable[Identifier]] = None):
        """Every query of the shape has been exhausted for the entities in scope."""
        progress = self.progress[shape]
        records = self._scoped(shape, scope)
        progress.covered.add(scope)
        for rec in records:
            progress.open.discard(rec.entity)
            self._complete_all(rec)
            self._recheck(rec)
        if scope is None:
            progress.open.clear()

    def mark_retrieved(self, shape: str):
        """The shape's own pass is over; its open atoms may now be demanded."""
        self.progress[shape].retrieved = True

    # -- verdicts ---------------------------------------------------------

    def _recheck(self, rec: AtomRecord):
        if self.assignment.get(rec.entity, rec.shape).decided:
            return
        decisions = [st.decision() for st in rec.states.values()]
        if rec.closed_false or Verdict.FALSE in decisions:
            self._decide(rec, Verdict.FALSE)
        elif all(d is Verdict.TRUE for d in decisions):
            self._decide(rec, Verdict.TRUE)

    def _decide(self, rec: AtomRecord, verdict: Verdict):
        self.assignment.set(rec.entity, rec.shape, verdict)
        self.worklist.append((rec.entity, rec.shape))
        self._emit(rec)

    def _emit(self, rec: AtomRecord):
        key = (rec.entity, rec.shape)
        if key in self._emitted or rec.entity not in self.progress[rec.shape].targets:
            return
        verdict = self.assignment.get(rec.entity, rec.shape)
        if not verdict.decided:
            return
        self._emitted.add(key)
        if self.on_verdict is not None:
            self.on_verdict(rec.entity, rec.shape, verdict)

    def record_of(self, state: ConstraintState) -> AtomRecord:
        return self.progress[state.shape].atoms[state.entity]

    def close_unknown(self, shapes: Sequence[str]) -> int:
        """
        Least-model closure: undecided atoms of the given shapes become FALSE.

        Only valid once the shapes and everything they depend on outside
        their stratum are fully retrieved and saturated.
        """
        closed = 0
        for name in shapes:
            for rec in list(self.progress[name].atoms.values()):
                if not self.assignment.get(rec.entity, rec.shape).decided:
                    self._decide(rec, Verdict.FALSE)
                    closed += 1
        return closed

    def ready_to_finalize(self, shape: str) -> bool:
        progress = self.progress[shape]
        if not progress.retrieved or progress.open or self.assignment.is_finalized(shape):
            return False
        return all(self.assignment.get(e, shape).decided for e in progress.atoms)


def early_invalidate(entity: Identifier, shape: str, network: SupportNetwork) -> int:
    """
    Propagate a fresh FALSE verdict of (entity, shape) to its dependents.

    Every constraint state waiting on this atom moves it out of its pending
    set; dependents that become decided are rechecked (and queued) at once.

    Returns:
        Number of constraint states short-circuited
    """
    updated = 0
    for state in network.reverse.pop((entity, shape), []):
        if entity not in state.pending:
            continue
        state.pending.discard(entity)
        updated += 1
        network._recheck(network.record_of(state))
    return updated


def _propagate_true(entity: Identifier, shape: str, network: SupportNetwork) -> int:
    updated = 0
    for state in network.reverse.pop((entity, shape), []):
        if entity not in state.pending:
            continue
        state.pending.discard(entity)
        state.satisfied += 1
        updated += 1
        network._recheck(network.record_of(state))
    return updated


def saturate(network: SupportNetwork) -> int:
    """
    Propagate queued verdict changes until nothing changes.

    Time Complexity: O(E) where E is the number of pending support edges

    Returns:
        Number of constraint states updated
    """
    updated = 0
    while network.worklist:
        entity, shape = network.worklist.popleft()
        verdict = network.assignment.get(entity, shape)
        if verdict is Verdict.FALSE:
            skipped = early_invalidate(entity, shape, network)
            network.ledger.skipped_evaluations += skipped
            updated += skipped
        elif verdict is Verdict.TRUE:
            updated += _propagate_true(entity, shape, network)
    return updated


def ground_shape(shape: Shape, target_rows: Sequence[BindingRow], min_rows: Sequence[BindingRow],
                 max_violator_rows: Sequence[Sequence[BindingRow]],
                 network: SupportNetwork) -> List[ConstraintState]:
    """
    Ground a shape from complete answer sets of its generated queries.

    A targeted shape is grounded for its targets only; answer rows about
    other entities are ignored. max_violator_rows holds one row list per MAX
    constraint, in constraint order. The shape is marked retrieved afterwards.

    Returns:
        The shape's constraint states
    """
    max_queries = gen_max_queries(shape)
    if len(max_violator_rows) not in (0, len(max_queries)):
        raise QueryError(f"Expected {len(max_queries)} violator row lists for {shape.name!r}")
    scope = None
    if shape.target is not None:
        target_query = gen_target_query(shape)
        for row in target_rows:
            network.ingest(target_query, row)
        scope = set(network.progress[shape.name].targets)
    if shape.min_constraints:
        min_query = gen_min_query(shape)
        for row in min_rows:
            network.ingest(min_query, row, scope)
        network.exhaust(min_query, scope)
    for query, rows in zip(max_queries, max_violator_rows or [[]] * len(max_queries)):
        for row in rows:
            network.ingest(query, row, scope)
        network.exhaust(query, scope)
    network.cover(shape.name, scope)
    network.mark_retrieved(shape.name)
    return network.states_of(shape.name)


@dataclass
class ValidationResult:
    assignment: Assignment
    ledger: GroundingLedger
    trace: AnswerTrace
    plan: TraversalPlan
    strata: List[frozenset]

    def records(self):
        return verdict_records(self.trace)

    @property
    def partial(self) -> bool:
        return self.trace.partial


def build_plan(schema: ShapeSchema, config: RunConfig) -> TraversalPlan:
    """Traversal plan for a run; the baseline (rewriting off) uses declaration order."""
    if not config.rewriting:
        return declaration_order_plan(schema, config.planner)
    return plan_traversal(schema, config.planner)


def _constraint_queries(shape: Shape) -> List[SelectQuery]:
    queries = [gen_min_query(shape)] if shape.min_constraints else []
    return queries + gen_max_queries(shape)


class ValidationEngine:
    """
    Coordinator of one validation run.

    A single coordinator mutates the assignment; page retrieval may run ahead
    on a worker thread when prefetch is enabled.
    """

    def __init__(self, schema: ShapeSchema, source: GraphSource, plan: TraversalPlan,
                 config: RunConfig, clock: Callable[[], float] = time.perf_counter):
        self.schema = schema
        self.source = source
        self.plan = plan
        self.config = config
        self.clock = clock
        self.trace = AnswerTrace(metadata={
            'planner': plan.config.label,
            'rewriting': 'on' if config.rewriting else 'off',
            'dataset': config.dataset_id,
            'order': ','.join(plan.order),
        })
        self.network = SupportNetwork(schema, skip=config.rewriting, on_verdict=self._record)
        self._started = 0.0
        self._strata: List[frozenset] = []
        self._referrers: Dict[str, Set[str]] = {name: set() for name in schema.names}
        for shape in schema:
            for constraint in shape.constraints:
                if constraint.shape_ref is not None and constraint.shape_ref != shape.name:
                    self._referrers[constraint.shape_ref].add(shape.name)

    @property
    def assignment(self) -> Assignment:
        return self.network.assignment

    @property
    def ledger(self) -> GroundingLedger:
        return self.network.ledger

    def _record(self, entity: Identifier, shape: str, verdict: Verdict):
        self.trace.record(self.clock() - self._started, entity, shape, verdict)

    def run(self) -> ValidationResult:
        """
        Validate every shape in plan order.

        Raises:
            NegativeCycleError: Schema not stratifiable
            TransportError: Retrieval failed; exc.result carries the partial result
        """
        self._strata = stratify(build_dependency_graph(self.schema))
        missing = set(self.schema.names) - set(self.plan.order)
        if missing:
            raise QueryError(f"Plan does not cover shapes: {', '.join(sorted(missing))}")

        self._started = self.clock()
        result = ValidationResult(self.assignment, self.ledger, self.trace, self.plan, self._strata)
        try:
            for name in self.plan.order:
                self._validate_shape(name)
                self._settle()
        except TransportError as exc:
            self.trace.partial = True
            self.trace.duration = self.clock() - self._started
            exc.result = result
            logger.error("Run aborted during retrieval: %s", exc)
            raise
        for name in self.schema.names:
            if not self.assignment.is_finalized(name):
                self._finalize(name)
        self.trace.duration = self.clock() - self._started
        counts = self.assignment.counts()
        logger.info("Run finished in %.3fs: %d valid, %d invalid, %d rules grounded",
                    self.trace.duration, counts['true'], counts['false'],
                    self.ledger.rules_grounded)
        return result

    def _settle(self):
        self._resolve_demand()
        self._close_strata()
        self._finalize_ready()

    # -- retrieval --------------------------------------------------------

    def _retrieve(self, plan: QueryPlan, scope: Optional[Set[Identifier]] = None):
        query = plan.query
        for page in evaluate_all_pages(self.source, plan, paged=self.config.paged,
                                       prefetch=self.config.prefetch):
            self.ledger.queries_issued += 1
            for row in page.rows:
                self.network.ingest(query, row, scope)
            saturate(self.network)
            self._finalize_ready()

    def _exhaust(self, query: SelectQuery, scope: Optional[Iterable[Identifier]] = None):
        self.network.exhaust(query, scope)
        saturate(self.network)

    def _single(self, query: SelectQuery) -> QueryPlan:
        return QueryPlan((query,), self.config.page_size)

    def _validate_shape(self, name: str):
        shape = self.schema[name]
        logger.info("Validating shape %s", name)
        if self.config.rewriting:
            self._scoped_pass(shape)
        else:
            self._global_pass(shape)
        self.network.mark_retrieved(name)
        saturate(self.network)
        self._finalize_ready()

    def _global_pass(self, shape: Shape):
        queries = [gen_target_query(shape)] if shape.target is not None else []
        for query in queries + _constraint_queries(shape):
            self._retrieve(self._single(query))
            self._exhaust(query)
        self.network.cover(shape.name)

    def _scoped_pass(self, shape: Shape):
        if shape.target is None:
            logger.debug("Shape %s has no target; it is grounded on demand", shape.name)
            return
        target_query = gen_target_query(shape)
        self._retrieve(self._single(target_query))
        scope = set(self.network.progress[shape.name].targets)
        plans = [
            partition_plan(self._push_filters(scope_to_targets(q, target_query)),
                           self.config.max_query_len, self.config.max_parts, self.config.page_size)
            for q in _constraint_queries(shape)
        ]
        for plan in order_query_plans(plans):
            self._retrieve(plan, scope)
            self._exhaust(plan.query, scope)
        self.network.cover(shape.name, scope)

    def _push_filters(self, query: SelectQuery) -> SelectQuery:
        for group in query.groups:
            source = group.shape_ref
            if source is None or group.head not in query.projected:
                continue
            if source == query.shape or not self.network.settled(source):
                continue
            source_shape = self.schema[source]
            valid = self.assignment.valid_entities(source)
            invalid = [e for e in self.assignment.invalid_entities(source) if not isinstance(e, BNode)]
            guard = ()
            if source_shape.target is None or any(isinstance(e, BNode) for e in valid):
                valid = []
            else:
                guard = gen_target_query(source_shape).patterns
            rewritten = push_instance_filter(query, valid, invalid, group.head, source, guard)
            if rewritten is not query:
                pushed = rewritten.filter_on(group.head)
                logger.info("Pushed %s filter of %d %s entities into %s query of %s",
                            pushed.mode.value, len(pushed.entities), source,
                            query.role.value, query.shape)
            query = rewritten
        return query

    def _resolve_demand(self):
        while True:
            pending = [
                (name, batch) for name in self.schema.names
                if self.network.progress[name].retrieved
                for batch in [self.network.take_demand(name)] if batch
            ]
            if not pending:
                return
            for name, batch in pending:
                self._demand_pass(self.schema[name], batch)

    def _demand_pass(self, shape: Shape, batch: List[Identifier]):
        logger.debug("Grounding %d demanded entities of shape %s", len(batch), shape.name)
        named = [e for e in batch if not isinstance(e, (BNode, Literal))]
        blank = {e for e in batch if isinstance(e, BNode)}
        # literals have no outgoing edges: exhausting the queries is enough
        for query in _constraint_queries(shape):
            if named:
                restricted = push_instance_filter(query, named, [], ENTITY)
                self._retrieve(partition_plan(restricted, self.config.max_query_len, len(named),
                                              self.config.page_size), set(named))
            if blank:
                self._retrieve(self._single(query), blank)
            self._exhaust(query, batch)
        self.network.cover(shape.name, batch)
        saturate(self.network)

    # -- closure ----------------------------------------------------------

    def _finalize(self, name: str):
        self.assignment.finalize(name)
        valid = len(self.assignment.valid_entities(name))
        invalid = len(self.assignment.invalid_entities(name))
        logger.info("Finalized shape %s: %d valid, %d invalid", name, valid, invalid)

    def _finalizable(self, name: str) -> bool:
        if not self.network.ready_to_finalize(name):
            return False
        if self.network.progress[name].covered.everything:
            return True
        return all(self.assignment.is_finalized(r) for r in self._referrers[name])

    def _finalize_ready(self):
        changed = True
        while changed:
            changed = False
            for name in self.schema.names:
                if self._finalizable(name):
                    self._finalize(name)
                    changed = True

    def _close_strata(self):
        saturate(self.network)
        for k, stratum in enumerate(self._strata):
            members = [s for s in self.schema.names if s in stratum]
            if not all(self.network.progress[s].retrieved and not self.network.has_open(s)
                       for s in members):
                return
            closed = self.network.close_unknown(members)
            saturate(self.network)
            if closed:
                logger.info("Closed stratum %d (%s): %d unsupported atoms set FALSE",
                            k, ', '.join(members), closed)


def run_validation(schema: ShapeSchema, source: GraphSource, plan: Optional[TraversalPlan],
                   config: RunConfig, clock: Callable[[], float] = time.perf_counter) -> ValidationResult:
    """
    Validate a schema against a source to the least fixed point.

    Args:
        schema: Shape schema
        source: Embedded or remote graph source
        plan: Traversal plan (built from the config when None)
        config: Run configuration

    Returns:
        ValidationResult with assignment, ledger and answer trace
    """
    if plan is None:
        plan = build_plan(schema, config)
    return ValidationEngine(schema, source, plan, config, clock).run()
