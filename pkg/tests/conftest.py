import json

import pytest
from rdflib import Literal, Namespace
from rdflib.namespace import RDF, XSD

from src.bench import UB, university_schema
from src.endpoint import StubEndpoint
from src.errors import NegativeCycleError
from src.schema import build_dependency_graph, parse_schema, stratify
from src.store import Graph

EX = Namespace('http://example.org/data/')

U1, U2, U3 = EX.u1, EX.u2, EX.u3
D1, D2, D3 = EX.d1, EX.d2, EX.d3
P1, P2, P3 = EX.p1, EX.p2, EX.p3
C1, C2, C3, C4 = EX.c1, EX.c2, EX.c3, EX.c4

UNIVERSITY_VALID = {
    ('University', U1), ('Department', D1), ('Professor', P1), ('Professor', P3),
    ('Course', C1), ('Course', C3),
}
UNIVERSITY_INVALID = {
    ('University', U2), ('University', U3), ('Department', D2), ('Department', D3),
    ('Professor', P2), ('Course', C2), ('Course', C4),
}


def _professor(graph, entity, works_for):
    graph.add(entity, RDF.type, UB.Professor)
    graph.add(entity, UB.name, Literal(f"Professor {entity[-2:]}"))
    graph.add(entity, UB.emailAddress, Literal(f"{entity[-2:]}@example.org"))
    graph.add(entity, UB.telephone, Literal('555-0100'))
    graph.add(entity, UB.doctoralDegreeFrom, U1)
    for department in works_for:
        graph.add(entity, UB.worksFor, department)


def build_university_graph() -> Graph:
    g = Graph()
    g.add(U1, RDF.type, UB.University)
    g.add(U1, UB.name, Literal('University One'))
    g.add(U2, RDF.type, UB.University)
    g.add(U3, RDF.type, UB.University)
    g.add(U3, UB.name, Literal('University Three'))
    g.add(U3, UB.name, Literal('Third University'))

    g.add(D1, RDF.type, UB.Department)
    g.add(D1, UB.subOrganizationOf, U1)
    g.add(D1, UB.name, Literal('Department One'))
    g.add(D2, RDF.type, UB.Department)
    g.add(D2, UB.subOrganizationOf, U2)
    g.add(D2, UB.name, Literal('Department Two'))
    g.add(D3, RDF.type, UB.Department)
    g.add(D3, UB.name, Literal('Department Three'))

    _professor(g, P1, [D1])
    _professor(g, P2, [D2])
    _professor(g, P3, [D1, D2])

    g.add(C1, RDF.type, UB.Course)
    g.add(C1, UB.taughtBy, P1)
    g.add(C1, UB.name, Literal('Course One'))
    g.add(C2, RDF.type, UB.Course)
    g.add(C2, UB.taughtBy, P2)
    g.add(C3, RDF.type, UB.Course)
    g.add(C3, UB.taughtBy, P2)
    g.add(C3, UB.taughtBy, P3)
    g.add(C4, RDF.type, UB.Course)
    g.add(C4, UB.taughtBy, P1)
    g.add(C4, UB.name, Literal('Course Four'))
    g.add(C4, UB.name, Literal('Course 4'))
    return g


# Department additionally needs a faculty member, closing a positive cycle
# between Department and Professor.
CYCLIC_SCHEMA = {
    'shapes': [
        {'name': 'University', 'targetClass': str(UB.University), 'constraints': [
            {'kind': 'min', 'count': 1, 'path': str(UB.name)},
            {'kind': 'max', 'count': 1, 'path': str(UB.name)},
        ]},
        {'name': 'Department', 'targetClass': str(UB.Department), 'constraints': [
            {'kind': 'min', 'count': 1, 'path': str(UB.subOrganizationOf), 'shape': 'University'},
            {'kind': 'min', 'count': 1, 'path': str(UB.hasFaculty), 'shape': 'Professor'},
            {'kind': 'max', 'count': 1, 'path': str(UB.name)},
        ]},
        {'name': 'Professor', 'targetClass': str(UB.Professor), 'constraints': [
            {'kind': 'min', 'count': 1, 'path': str(UB.doctoralDegreeFrom), 'shape': 'University'},
            {'kind': 'min', 'count': 1, 'path': str(UB.worksFor), 'shape': 'Department'},
            {'kind': 'max', 'count': 1, 'path': str(UB.name)},
        ]},
        {'name': 'Course', 'targetClass': str(UB.Course), 'constraints': [
            {'kind': 'min', 'count': 1, 'path': str(UB.taughtBy), 'shape': 'Professor'},
        ]},
    ]
}

NEGATIVE_CYCLE_SCHEMA = {
    'shapes': [
        {'name': 'A', 'targetClass': 'http://example.org/A', 'constraints': [
            {'kind': 'max', 'count': 0, 'path': 'http://example.org/p', 'shape': 'B'},
        ]},
        {'name': 'B', 'targetClass': 'http://example.org/B', 'constraints': [
            {'kind': 'min', 'count': 1, 'path': 'http://example.org/q', 'shape': 'A'},
        ]},
    ]
}


R = Namespace('http://example.org/random/')
PREDICATES = [R.p, R.q, R.r]
LABEL = R.label


def _random_constraint(rng, n_shapes):
    if rng.random() < 0.3:
        c = {'kind': rng.choice(['min', 'max']), 'path': str(LABEL)}
        c['count'] = rng.randint(1, 2) if c['kind'] == 'min' else rng.randint(0, 1)
        roll = rng.random()
        if roll < 0.3:
            c['value'] = '"a"'
        elif roll < 0.5:
            c['datatype'] = str(XSD.integer)
        return c
    c = {'kind': rng.choice(['min', 'min', 'max']), 'path': str(rng.choice(PREDICATES))}
    c['count'] = rng.randint(1, 2) if c['kind'] == 'min' else rng.randint(0, 2)
    if rng.random() < 0.7:
        c['shape'] = f"S{rng.randrange(n_shapes)}"
    return c


def random_schema_document(rng):
    n = rng.randint(1, 6)
    shapes = []
    for i in range(n):
        shape = {
            'name': f"S{i}",
            'constraints': [_random_constraint(rng, n) for _ in range(rng.randint(1, 3))],
        }
        if i == 0 or rng.random() < 0.7:
            shape['targetClass'] = str(R[f"C{i}"])
        shapes.append(shape)
    return {'shapes': shapes}


def random_schema(rng):
    """Random shape schema; retried until stratifiable."""
    while True:
        schema = parse_schema(json.dumps(random_schema_document(rng)))
        try:
            stratify(build_dependency_graph(schema))
        except NegativeCycleError:
            continue
        return schema


def random_graph(rng, n_shapes):
    graph = Graph()
    entities = [R[f"e{i}"] for i in range(rng.randint(3, 25))]
    literals = [Literal('a'), Literal('b'), Literal(1), Literal(2), Literal('a', lang='en')]
    for entity in entities:
        for i in range(n_shapes):
            if rng.random() < 0.5:
                graph.add(entity, RDF.type, R[f"C{i}"])
        for predicate in PREDICATES:
            for _ in range(rng.choice([0, 0, 1, 1, 2, 3])):
                graph.add(entity, predicate, rng.choice(entities))
        for _ in range(rng.choice([0, 1, 1, 2])):
            graph.add(entity, LABEL, rng.choice(literals))
    return graph


@pytest.fixture
def university():
    return university_schema()


@pytest.fixture
def university_graph():
    return build_university_graph()


@pytest.fixture
def cyclic_schema():
    return parse_schema(json.dumps(CYCLIC_SCHEMA))


@pytest.fixture
def schema_file(tmp_path, university):
    from src.schema import serialize_schema

    path = tmp_path / 'schema.json'
    path.write_text(serialize_schema(university), encoding='utf-8')
    return str(path)


@pytest.fixture
def data_file(tmp_path, university_graph):
    path = tmp_path / 'data.nt'
    path.write_text(university_graph.to_ntriples(), encoding='utf-8')
    return str(path)


@pytest.fixture
def stub(university_graph):
    with StubEndpoint(university_graph) as endpoint:
        yield endpoint
