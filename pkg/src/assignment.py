"""
Assignment Module - Three-valued verdict store and counting constraint states

DSA Concepts:
- Hash Table: (entity, shape) -> verdict with O(1) lookup and update
- Transition Log: append-only record of every verdict change
- Counting: threshold states replace enumerated grounded rules
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterator, List, Optional, Set, Tuple

from rdflib.term import Identifier

from .errors import AssignmentError
from .query import term_sort_key
from .schema import ConstraintKind

Atom = Tuple[Identifier, str]


class Verdict(Enum):
    TRUE = 'true'
    FALSE = 'false'
    UNKNOWN = 'unknown'

    @property
    def decided(self) -> bool:
        return self is not Verdict.UNKNOWN


@dataclass(frozen=True)
class Transition:
    entity: Identifier
    shape: str
    old: Verdict
    new: Verdict


class Assignment:
    """
    Truth store over (entity, shape) pairs.

    Verdicts only move from UNKNOWN to TRUE or FALSE, and nothing changes
    for a shape once it is finalized.
    """

    def __init__(self):
        self.verdicts: Dict[Atom, Verdict] = {}
        self.finalized_shapes: Set[str] = set()
        self.transitions: List[Transition] = []

    def get(self, entity: Identifier, shape: str) -> Verdict:
        """
        Time Complexity: O(1) hash table lookup
        """
        return self.verdicts.get((entity, shape), Verdict.UNKNOWN)

    def set(self, entity: Identifier, shape: str, verdict: Verdict) -> bool:
        """
        Record a verdict.

        Time Complexity: O(1)

        Args:
            entity: RDF node
            shape: Shape name
            verdict: New verdict

        Returns:
            True if the stored verdict changed

        Raises:
            AssignmentError: TRUE/FALSE flip, reset to UNKNOWN or change in a finalized shape
        """
        old = self.get(entity, shape)
        if old is verdict:
            return False
        if shape in self.finalized_shapes:
            raise AssignmentError(f"Shape {shape!r} is finalized; cannot set {entity} to {verdict.value}")
        if old.decided or not verdict.decided:
            raise AssignmentError(
                f"Illegal transition {old.value} -> {verdict.value} for ({entity}, {shape})"
            )
        self.verdicts[(entity, shape)] = verdict
        self.transitions.append(Transition(entity, shape, old, verdict))
        return True

    def finalize(self, shape: str):
        self.finalized_shapes.add(shape)

    def is_finalized(self, shape: str) -> bool:
        return shape in self.finalized_shapes

    def entities(self, shape: str, verdict: Verdict) -> List[Identifier]:
        """Entities with the given verdict for a shape, in ORDER BY order."""
        found = [e for (e, s), v in self.verdicts.items() if s == shape and v is verdict]
        return sorted(found, key=term_sort_key)

    def valid_entities(self, shape: str) -> List[Identifier]:
        return self.entities(shape, Verdict.TRUE)

    def invalid_entities(self, shape: str) -> List[Identifier]:
        return self.entities(shape, Verdict.FALSE)

    def items(self) -> Iterator[Tuple[Atom, Verdict]]:
        return iter(self.verdicts.items())

    def __len__(self) -> int:
        return len(self.verdicts)

    def counts(self) -> Dict[str, int]:
        result = {v.value: 0 for v in Verdict}
        for verdict in self.verdicts.values():
            result[verdict.value] += 1
        return result


class ConstraintState:
    """
    Counting state of one constraint for one entity.

    `satisfied` counts neighbors known to pass; `pending` holds neighbors whose
    verdict for the referenced shape is still UNKNOWN. `complete` is set once
    every neighbor has been retrieved.
    """

    __slots__ = ('entity', 'shape', 'index', 'kind', 'threshold', 'shape_ref',
                 'satisfied', 'pending', 'seen', 'complete')

    def __init__(self, entity: Identifier, shape: str, index: int, kind: ConstraintKind,
                 threshold: int, shape_ref: Optional[str] = None):
        self.entity = entity
        self.shape = shape
        self.index = index
        self.kind = kind
        self.threshold = threshold
        self.shape_ref = shape_ref
        self.satisfied = 0
        self.pending: Set[Identifier] = set()
        self.seen: Set[Identifier] = set()
        self.complete = False

    @property
    def is_inter(self) -> bool:
        return self.shape_ref is not None

    def decision(self) -> Verdict:
        n = self.threshold
        if self.kind is ConstraintKind.MIN:
            if self.satisfied >= n:
                return Verdict.TRUE
            if self.complete and self.satisfied + len(self.pending) < n:
                return Verdict.FALSE
            return Verdict.UNKNOWN
        if self.satisfied > n:
            return Verdict.FALSE
        if self.complete and not self.pending:
            return Verdict.TRUE
        return Verdict.UNKNOWN

    def __repr__(self) -> str:
        return (f"ConstraintState({self.entity}, {self.shape}[{self.index}] {self.kind.value} "
                f"{self.threshold}: sat={self.satisfied} pending={len(self.pending)} "
                f"complete={self.complete})")


@dataclass
class GroundingLedger:
    """
    Work counters of a run.

    rules_grounded counts one rule per registered support edge plus one per
    decided intra-shape check; entities_retrieved is every node seen in an
    answer row.
    """

    rules_grounded: int = 0
    entities_retrieved: Set[Identifier] = field(default_factory=set)
    rules_per_shape: Dict[str, int] = field(default_factory=dict)
    skipped_evaluations: int = 0
    queries_issued: int = 0
    rows_retrieved: int = 0

    def add_rules(self, shape: str, n: int = 1):
        self.rules_grounded += n
        self.rules_per_shape[shape] = self.rules_per_shape.get(shape, 0) + n

    def to_dict(self) -> dict:
        return {
            'rules_grounded': self.rules_grounded,
            'entities_retrieved': len(self.entities_retrieved),
            'rules_per_shape': dict(sorted(self.rules_per_shape.items())),
            'skipped_evaluations': self.skipped_evaluations,
            'queries_issued': self.queries_issued,
            'rows_retrieved': self.rows_retrieved,
        }
