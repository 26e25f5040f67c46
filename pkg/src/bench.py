"""
Bench Module - University-domain testbed generator and the comparison matrix

Generates a shape schema, an N-Triples graph and a manifest whose ground
truth comes from the naive oracle. A chosen share of every class is
corrupted with one of three operators so that each verdict path gets
exercised: dropping a mandatory triple (intra MIN), duplicating a
single-valued property (intra MAX) and pointing at an invalid neighbor
(inter-shape cascade). In the four-shape university testbed a corrupted
entity that references another class always points at an invalid
neighbor, so invalidity cascades down from the universities.

DSA Concepts:
- Hash Functions: SHA-1 digests of the emitted files
- Seeded Pseudo-Randomness: identical (spec, seed) pairs give identical bytes
"""

import hashlib
import io
import json
import logging
import os
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

from rdflib import Literal, Namespace, URIRef
from rdflib.namespace import RDF

from .assignment import Verdict
from .config import SCALES, RunConfig
from .engine import run_validation
from .errors import BenchmarkError, ShaclTravError
from .metrics import aggregate_runs, summarize
from .oracle import oracle_verdicts
from .schema import (
    Constraint,
    ConstraintKind,
    Shape,
    ShapeSchema,
    TargetDefinition,
    parse_schema,
    parse_term,
    serialize_schema,
)
from .sources import EmbeddedSource
from .store import Graph, load_ntriples

logger = logging.getLogger(__name__)

UB = Namespace('http://swat.cse.lehigh.edu/onto/univ-bench.owl#')
DATA = Namespace('http://www.example.org/bench/')

SCHEMA_FILE = 'schema.json'
DATA_FILE = 'data.nt'
MANIFEST_FILE = 'manifest.json'

DROP = 'drop'
DUPLICATE = 'duplicate'
POINT_TO_INVALID = 'point-to-invalid'


@dataclass(frozen=True)
class Property:
    predicate: str
    target: Optional[str] = None
    has_min: bool = True
    has_max: bool = True


@dataclass(frozen=True)
class ClassSpec:
    name: str
    weight: int
    properties: Tuple[Property, ...]


def _attrs(*names: str) -> Tuple[Property, ...]:
    return tuple(Property(n) for n in names)


def _refs(*pairs: Tuple[str, str]) -> Tuple[Property, ...]:
    return tuple(Property(p, target) for p, target in pairs)


# References only point to earlier classes, so generated verdicts are data driven.
CATALOG: Tuple[ClassSpec, ...] = (
    ClassSpec('University', 1, _attrs('name')),
    ClassSpec('Department', 3, _attrs('name') + _refs(('subOrganizationOf', 'University'))),
    ClassSpec('FullProfessor', 6, _attrs('name', 'emailAddress', 'telephone')
              + _refs(('worksFor', 'Department'), ('doctoralDegreeFrom', 'University'))),
    ClassSpec('AssociateProfessor', 6, _attrs('name', 'emailAddress', 'telephone')
              + _refs(('worksFor', 'Department'))),
    ClassSpec('Course', 10, _attrs('name')),
    ClassSpec('GraduateStudent', 15, _attrs('name', 'emailAddress')
              + _refs(('memberOf', 'Department'), ('advisor', 'FullProfessor'))),
    ClassSpec('ResearchGroup', 4, _refs(('subOrganizationOf', 'Department'))),
    ClassSpec('AssistantProfessor', 6, _attrs('name', 'emailAddress', 'telephone', 'researchInterest',
                                              'officeNumber')
              + _refs(('worksFor', 'Department'), ('doctoralDegreeFrom', 'University'))),
    ClassSpec('Lecturer', 4, _attrs('name', 'emailAddress', 'telephone', 'researchInterest')
              + _refs(('worksFor', 'Department'), ('doctoralDegreeFrom', 'University'))),
    ClassSpec('UndergraduateStudent', 30, _attrs('name', 'emailAddress', 'telephone')
              + _refs(('memberOf', 'Department'), ('advisor', 'AssociateProfessor'),
                      ('takesCourse', 'Course'))),
    ClassSpec('GraduateCourse', 8, _attrs('name', 'courseCode') + _refs(('offeredBy', 'Department'))),
    ClassSpec('Publication', 20, _attrs('name', 'publicationDate', 'publicationVenue')
              + _refs(('publicationAuthor', 'FullProfessor'))),
    ClassSpec('TeachingAssistant', 5, _attrs('name', 'emailAddress', 'telephone')
              + _refs(('memberOf', 'Department'), ('teachingAssistantOf', 'Course'),
                      ('advisor', 'AssociateProfessor'))),
    ClassSpec('ResearchAssistant', 5, _attrs('name', 'emailAddress', 'telephone')
              + _refs(('memberOf', 'Department'), ('worksFor', 'ResearchGroup'),
                      ('advisor', 'FullProfessor'))),
)

# Shape count -> expected constraint count of the catalog prefix.
SCHEMA_TIERS = {3: 16, 7: 36, 14: 112}

# The four-shape running example. Department -> University, Professor ->
# Department and University, Course -> Professor.
UNIVERSITY_CATALOG: Tuple[ClassSpec, ...] = (
    ClassSpec('University', 1, _attrs('name')),
    ClassSpec('Department', 3, _refs(('subOrganizationOf', 'University')) + _attrs('name')),
    ClassSpec('Professor', 12, (
        Property('name'),
        Property('emailAddress', has_max=False),
        Property('doctoralDegreeFrom', 'University', has_max=False),
        Property('worksFor', 'Department', has_max=False),
        Property('telephone', has_max=False),
    )),
    ClassSpec('Course', 10, (
        Property('name', has_min=False),
        Property('taughtBy', 'Professor', has_max=False),
    )),
)
UNIVERSITY_SIZE = 4


@dataclass(frozen=True)
class BenchSpec:
    """
    One testbed: schema tier, approximate triple count, invalid share and seed.

    schema_size 4 selects the university running example instead of a tier.
    """

    schema_size: int = 3
    scale: int = SCALES['small']
    invalid_pct: float = 75.0
    rng_seed: int = 0

    def __post_init__(self):
        if self.schema_size not in SCHEMA_TIERS and self.schema_size != UNIVERSITY_SIZE:
            raise BenchmarkError(
                f"schema_size must be one of 3, 7, 14 (or 4 for the university schema), "
                f"got {self.schema_size}"
            )
        if not 0 <= self.invalid_pct <= 100:
            raise BenchmarkError(f"invalid_pct must lie in [0, 100], got {self.invalid_pct}")
        if self.scale < 1:
            raise BenchmarkError(f"scale must be positive, got {self.scale}")

    @property
    def label(self) -> str:
        return f"s{self.schema_size}-{self.scale}-{self.invalid_pct:g}-r{self.rng_seed}"

    @property
    def catalog(self) -> Tuple[ClassSpec, ...]:
        if self.schema_size == UNIVERSITY_SIZE:
            return UNIVERSITY_CATALOG
        return CATALOG[:self.schema_size]

    def to_dict(self) -> dict:
        return {
            'schema_size': self.schema_size,
            'scale': self.scale,
            'invalid_pct': self.invalid_pct,
            'rng_seed': self.rng_seed,
        }


@dataclass
class BenchArtifacts:
    schema_text: str
    data_text: str
    manifest: dict = field(default_factory=dict)

    @property
    def schema(self) -> ShapeSchema:
        return parse_schema(self.schema_text)

    def graph(self) -> Graph:
        return load_ntriples(io.StringIO(self.data_text))

    def expected_verdicts(self) -> Dict[Tuple, Verdict]:
        return {(parse_term(e), s): Verdict(v) for e, s, v in self.manifest['verdicts']}


def hash_content(content: bytes) -> str:
    """
    Generate SHA-1 hash of content.

    Time Complexity: O(n) where n is content length
    """
    sha1 = hashlib.sha1()
    sha1.update(content)
    return sha1.hexdigest()


def schema_from_catalog(catalog: Sequence[ClassSpec]) -> ShapeSchema:
    """One class-targeted shape per class: MIN 1 per mandatory property, then MAX 1 per single-valued one."""
    shapes = []
    for spec in catalog:
        mins = [
            Constraint(ConstraintKind.MIN, 1, UB[p.predicate], shape_ref=p.target)
            for p in spec.properties if p.has_min
        ]
        maxes = [Constraint(ConstraintKind.MAX, 1, UB[p.predicate]) for p in spec.properties if p.has_max]
        shapes.append(Shape(spec.name, TargetDefinition(target_class=UB[spec.name]),
                            tuple(mins + maxes)))
    return ShapeSchema(tuple(shapes))


def university_schema() -> ShapeSchema:
    """The four-shape University/Department/Professor/Course schema."""
    return schema_from_catalog(UNIVERSITY_CATALOG)


def tier_schema(schema_size: int) -> ShapeSchema:
    if schema_size == UNIVERSITY_SIZE:
        return university_schema()
    if schema_size not in SCHEMA_TIERS:
        raise BenchmarkError(f"No schema tier with {schema_size} shapes")
    return schema_from_catalog(CATALOG[:schema_size])


def _entity_counts(catalog: Sequence[ClassSpec], scale: int) -> Dict[str, int]:
    units = sum(c.weight * (1 + len(c.properties)) for c in catalog)
    return {c.name: max(1, round(scale * c.weight / units)) for c in catalog}


def _value(entity: URIRef, name: str, index: int, prop: Property, variant: int = 0) -> Literal:
    suffix = f" ({variant})" if variant else ''
    if prop.predicate == 'emailAddress':
        return Literal(f"{name.lower()}{index}{suffix}@example.org")
    return Literal(f"{prop.predicate} of {name}{index}{suffix}")


class _Generator:
    def __init__(self, spec: BenchSpec):
        self.spec = spec
        self.rng = random.Random(spec.rng_seed)
        self.graph = Graph()
        self.valid: Dict[str, List[URIRef]] = {}
        self.invalid: Dict[str, List[URIRef]] = {}
        self.corruptions = {DROP: 0, DUPLICATE: 0, POINT_TO_INVALID: 0}

    def run(self):
        catalog = self.spec.catalog
        counts = _entity_counts(catalog, self.spec.scale)
        share = self.spec.invalid_pct / 100.0
        planned = {c.name: round(share * counts[c.name]) for c in catalog}
        if self.spec.invalid_pct > 0 and not any(planned.values()):
            raise BenchmarkError(
                f"No entity can be corrupted at scale {self.spec.scale} with {self.spec.invalid_pct}% invalid"
            )
        for spec in catalog:
            self._emit_class(spec, counts[spec.name], planned[spec.name])

    def _operators(self, spec: ClassSpec) -> List[str]:
        cascade = any(p.has_min and p.target and self.invalid.get(p.target) for p in spec.properties)
        if cascade and self.spec.schema_size == UNIVERSITY_SIZE:
            # the running example breaks referencing entities through their neighbors only
            return [POINT_TO_INVALID]
        ops = []
        if any(p.has_min for p in spec.properties):
            ops.append(DROP)
        if any(p.has_max for p in spec.properties):
            ops.append(DUPLICATE)
        if cascade:
            ops.append(POINT_TO_INVALID)
        return ops

    def _emit_class(self, spec: ClassSpec, count: int, invalid_count: int):
        entities = [DATA[f"{spec.name}{i}"] for i in range(count)]
        corrupted = set(self.rng.sample(range(count), invalid_count))
        self.valid[spec.name] = []
        self.invalid[spec.name] = []
        for i, entity in enumerate(entities):
            self.graph.add(entity, RDF.type, UB[spec.name])
            operator, victim = None, None
            if i in corrupted:
                operator = self.rng.choice(self._operators(spec))
                victim = self._victim(spec, operator)
                self.corruptions[operator] += 1
            broken = operator is not None
            for prop in spec.properties:
                if operator == DROP and prop is victim:
                    continue
                value = self._object(spec, i, entity, prop, prop is victim and operator == POINT_TO_INVALID)
                if value is None:
                    # no valid neighbor exists; the entity cascades to invalid
                    value = self.rng.choice(self.invalid[prop.target])
                    broken = True
                self.graph.add(entity, UB[prop.predicate], value)
                if operator == DUPLICATE and prop is victim:
                    self.graph.add(entity, UB[prop.predicate], self._extra(spec, i, entity, prop, value))
            (self.invalid if broken else self.valid)[spec.name].append(entity)

    def _victim(self, spec: ClassSpec, operator: str) -> Property:
        if operator == DROP:
            pool = [p for p in spec.properties if p.has_min]
        elif operator == DUPLICATE:
            pool = [p for p in spec.properties if p.has_max]
        else:
            pool = [p for p in spec.properties if p.has_min and p.target and self.invalid.get(p.target)]
        return self.rng.choice(pool)

    def _object(self, spec: ClassSpec, index: int, entity: URIRef, prop: Property, to_invalid: bool):
        if prop.target is None:
            return _value(entity, spec.name, index, prop)
        pool = self.invalid[prop.target] if to_invalid else self.valid[prop.target]
        if not pool:
            return None
        return self.rng.choice(pool)

    def _extra(self, spec: ClassSpec, index: int, entity: URIRef, prop: Property, first):
        if prop.target is None:
            return _value(entity, spec.name, index, prop, variant=1)
        others = [e for e in self.valid[prop.target] + self.invalid[prop.target] if e != first]
        if not others:
            return DATA[f"{prop.target}Extra{index}"]
        return self.rng.choice(others)


def constraint_averages(schema: ShapeSchema) -> Dict[str, float]:
    """Average number of inter- and intra-shape constraints per shape."""
    inter = sum(1 for s in schema for c in s.constraints if c.is_inter)
    intra = schema.constraint_count() - inter
    n = max(len(schema), 1)
    return {'inter': round(inter / n, 4), 'intra': round(intra / n, 4)}


def generate_benchmark(spec: BenchSpec) -> BenchArtifacts:
    """
    Generate a testbed and label it with the oracle.

    Args:
        spec: Benchmark spec

    Returns:
        BenchArtifacts with schema text, N-Triples text and manifest

    Raises:
        BenchmarkError: Infeasible spec
    """
    schema = tier_schema(spec.schema_size)
    generator = _Generator(spec)
    generator.run()
    graph = generator.graph

    schema_text = serialize_schema(schema)
    data_text = graph.to_ntriples()
    verdicts = oracle_verdicts(schema, graph)
    records = sorted(
        ([e.n3(), s, v.value] for (e, s), v in verdicts.items()),
        key=lambda r: (r[1], r[0])
    )
    invalid = sum(1 for v in verdicts.values() if v is Verdict.FALSE)
    total = len(verdicts)

    manifest = {
        'spec': spec.to_dict(),
        'shapes': len(schema),
        'constraints': schema.constraint_count(),
        'triples': graph.edge_count,
        'targeted': total,
        'invalid': invalid,
        'invalid_pct_realized': round(100.0 * invalid / total, 4) if total else 0.0,
        'corruptions': dict(generator.corruptions),
        'constraint_averages': constraint_averages(schema),
        'digests': {
            SCHEMA_FILE: hash_content(schema_text.encode('utf-8')),
            DATA_FILE: hash_content(data_text.encode('utf-8')),
        },
        'verdicts': records,
    }
    logger.info("Generated %s: %d triples, %d/%d invalid (%.2f%%)",
                spec.label, graph.edge_count, invalid, total, manifest['invalid_pct_realized'])
    return BenchArtifacts(schema_text, data_text, manifest)


def write_benchmark(artifacts: BenchArtifacts, destination: str) -> List[str]:
    """Write schema.json, data.nt and manifest.json into a directory."""
    os.makedirs(destination, exist_ok=True)
    paths = []
    for name, text in ((SCHEMA_FILE, artifacts.schema_text), (DATA_FILE, artifacts.data_text),
                       (MANIFEST_FILE, json.dumps(artifacts.manifest, indent=2, sort_keys=True) + '\n')):
        path = os.path.join(destination, name)
        with open(path, 'w', encoding='utf-8', newline='\n') as f:
            f.write(text)
        paths.append(path)
    return paths


def load_manifest(path: str) -> dict:
    with open(path, 'r', encoding='utf-8') as f:
        return json.load(f)


OFF = 'off'


@dataclass
class MatrixCell:
    spec: str
    config: str
    runs: int = 0
    mean_time: float = 0.0
    std_time: float = 0.0
    comp: int = 0
    dief_t: float = 0.0
    rules_grounded: int = 0
    mismatches: int = 0
    error: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            'spec': self.spec,
            'config': self.config,
            'runs': self.runs,
            'mean_time': self.mean_time,
            'std_time': self.std_time,
            'comp': self.comp,
            'dief_t': self.dief_t,
            'rules_grounded': self.rules_grounded,
            'mismatches': self.mismatches,
            'error': self.error,
        }


def _cell_config(base: RunConfig, name: str) -> RunConfig:
    if name == OFF:
        return replace(base, config_name=None, rewriting=False)
    return replace(base, config_name=name, rewriting=True)


def _run_cell(label: str, name: str, schema: ShapeSchema, graph: Graph,
              expected: Dict[Tuple, Verdict], config: RunConfig, reps: int) -> MatrixCell:
    cell = MatrixCell(label, name)
    times, dief = [], []
    try:
        for _ in range(reps):
            source = EmbeddedSource(graph, config.max_answers)
            result = run_validation(schema, source, None, config)
            metrics = summarize(result.trace)
            times.append(metrics.validation_time)
            dief.append(metrics.dief_t)
            cell.comp = metrics.comp
            cell.rules_grounded = result.ledger.rules_grounded
            got = {(e, s): v for e, s, v in result.records()}
            cell.mismatches = sum(1 for k, v in expected.items() if got.get(k) is not v)
    except ShaclTravError as exc:
        cell.error = str(exc)
        logger.error("Cell %s/%s failed: %s", label, name, exc)
    cell.runs = len(times)
    if times:
        cell.mean_time, cell.std_time = aggregate_runs(times)
        cell.dief_t = aggregate_runs(dief)[0]
    return cell


def run_matrix(specs: Sequence[BenchSpec], configs: Sequence[str], reps: int = 1,
               base: Optional[RunConfig] = None, parallel_cells: int = 1) -> List[MatrixCell]:
    """
    Run every (spec, config) pair `reps` times on embedded data.

    Config names are "1".."9" or "off" for the rewriting-off baseline. Each
    run gets a fresh source and engine. A failing cell records its error and
    the matrix moves on. With parallel_cells > 1 the cells of a testbed run
    on a thread pool; the graph is shared read-only and timings then include
    contention between cells.

    Args:
        specs: Testbeds to generate
        configs: Configuration names
        reps: Runs per cell
        base: Run configuration the cells start from
        parallel_cells: Cells evaluated at once

    Returns:
        One MatrixCell per (spec, config), specs outermost, configs in input order
    """
    if reps < 1:
        raise BenchmarkError(f"reps must be >= 1, got {reps}")
    if parallel_cells < 1:
        raise BenchmarkError(f"parallel_cells must be >= 1, got {parallel_cells}")
    base = base or RunConfig()
    cells = []
    for spec in specs:
        artifacts = generate_benchmark(spec)
        schema = artifacts.schema
        graph = artifacts.graph()
        expected = artifacts.expected_verdicts()
        jobs = [(spec.label, name, schema, graph, expected, _cell_config(base, name), reps)
                for name in configs]
        if parallel_cells == 1:
            cells.extend(_run_cell(*job) for job in jobs)
            continue
        with ThreadPoolExecutor(max_workers=parallel_cells, thread_name_prefix='cell') as pool:
            cells.extend(pool.map(lambda job: _run_cell(*job), jobs))
    return cells


def format_matrix(cells: Sequence[MatrixCell]) -> str:
    header = f"{'spec':<24} {'config':<7} {'runs':>4} {'mean_s':>10} {'std_s':>10} " \
             f"{'comp':>7} {'dief@t':>12} {'rules':>9} {'mism':>5}"
    lines = [header, '-' * len(header)]
    for c in cells:
        line = (f"{c.spec:<24} {c.config:<7} {c.runs:>4} {c.mean_time:>10.4f} {c.std_time:>10.4f} "
                f"{c.comp:>7} {c.dief_t:>12.4f} {c.rules_grounded:>9} {c.mismatches:>5}")
        if c.error:
            line += f"  error: {c.error}"
        lines.append(line)
    return "\n".join(lines) + "\n"
