"""
Errors Module - Exception hierarchy for schema, planning, data access and runs

Every failure raised by the package derives from ShaclTravError so the CLI
can map families of errors onto exit codes.
"""

from typing import Optional, Sequence


class ShaclTravError(Exception):
    """Base class for all package errors."""


class ConfigError(ShaclTravError):
    """Invalid run configuration or configuration file."""


class SchemaError(ShaclTravError):
    """Invalid shape schema document or schema structure."""


class SchemaSyntaxError(SchemaError):
    """Schema document is not well-formed."""

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column


class DuplicateShapeError(SchemaError):
    """Two shapes share a name."""

    def __init__(self, name: str):
        super().__init__(f"Duplicate shape name: {name!r}")
        self.name = name


class DanglingReferenceError(SchemaError):
    """A constraint references a shape that is not declared."""

    def __init__(self, shape: str, reference: str):
        super().__init__(
            f"Shape {shape!r} references undeclared shape {reference!r}"
        )
        self.shape = shape
        self.reference = reference


class InvalidConstraintError(SchemaError):
    """A constraint violates the constraint grammar."""


class NegativeCycleError(SchemaError):
    """A negative dependency lies on a cycle, so the schema is not stratifiable."""

    def __init__(self, cycle: Sequence[str]):
        self.cycle = list(cycle)
        super().__init__(
            "Negation through recursion: " + " -> ".join(self.cycle + self.cycle[:1])
        )


class PlannerError(ShaclTravError):
    """Traversal planning failed."""


class NoTargetedShapeError(PlannerError):
    """No shape has a target definition, so no seed can be chosen."""

    def __init__(self):
        super().__init__(
            "No shape has a target definition; cannot select a seed shape"
        )


class UnknownShapeError(PlannerError):
    """A shape name is not a node of the dependency graph."""

    def __init__(self, name: str):
        super().__init__(f"Unknown shape: {name!r}")
        self.name = name


class QueryError(ShaclTravError):
    """A query cannot be generated or rewritten."""


class UnsupportedQueryError(QueryError):
    """A target query falls outside the supported star-shaped fragment."""


class DataError(ShaclTravError):
    """Input data cannot be loaded."""


class NTriplesError(DataError):
    """Malformed N-Triples line."""

    def __init__(self, line_number: int, message: str):
        super().__init__(f"Line {line_number}: {message}")
        self.line_number = line_number


class TransportError(ShaclTravError):
    """Remote endpoint could not be reached or answered with an error."""

    def __init__(
        self,
        message: str,
        status: Optional[int] = None,
        cursor: Optional[dict] = None
    ):
        super().__init__(message)
        self.status = status
        # Where a paged stream stopped: {'part': i, 'offset': n}
        self.cursor = cursor


class PayloadError(TransportError):
    """Endpoint answered with a payload that is not a SPARQL JSON result."""


class AssignmentError(ShaclTravError):
    """Illegal verdict transition."""


class BenchmarkError(ShaclTravError):
    """Benchmark specification cannot be realized."""
