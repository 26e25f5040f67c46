import pytest
from rdflib import BNode, Literal, URIRef, Variable

from conftest import EX, D1, D2, U1, U2, U3
from src.endpoint import GET_LENGTH_LIMIT, method_for, parse_results, remote_execute
from src.errors import PayloadError, TransportError
from src.query import ENTITY, gen_min_query, gen_target_query, push_instance_filter, serialize
from src.sources import EmbeddedSource, RemoteSource


def test_parse_results_converts_terms():
    payload = {
        'head': {'vars': ['x', 'v']},
        'results': {'bindings': [
            {'x': {'type': 'uri', 'value': 'http://ex.org/a'},
             'v': {'type': 'literal', 'value': 'hi', 'xml:lang': 'en'}},
            {'x': {'type': 'bnode', 'value': 'b1'},
             'v': {'type': 'typed-literal', 'value': '5',
                   'datatype': 'http://www.w3.org/2001/XMLSchema#integer'}},
        ]},
    }
    rows = parse_results(payload)
    assert rows[0] == {Variable('x'): URIRef('http://ex.org/a'), Variable('v'): Literal('hi', lang='en')}
    assert rows[1][Variable('x')] == BNode('b1')
    assert rows[1][Variable('v')].toPython() == 5


@pytest.mark.parametrize('payload', [
    {},
    {'head': {'vars': ['x']}},
    {'head': {'vars': 'x'}, 'results': {'bindings': []}},
    {'head': {'vars': ['x']}, 'results': {'bindings': [{}]}},
    {'head': {'vars': ['x']}, 'results': {'bindings': [{'x': {'type': 'triple', 'value': '?'}}]}},
])
def test_malformed_payloads(payload):
    with pytest.raises(PayloadError):
        parse_results(payload)


def test_payload_error_is_transport_error():
    assert issubclass(PayloadError, TransportError)


def test_method_switches_on_length():
    assert method_for('x' * GET_LENGTH_LIMIT) == 'GET'
    assert method_for('x' * (GET_LENGTH_LIMIT + 1)) == 'POST'


def test_stub_answers_like_embedded_store(stub, university, university_graph):
    remote = RemoteSource(stub.url)
    embedded = EmbeddedSource(university_graph)
    try:
        for shape in ('Department', 'Professor', 'Course'):
            query = gen_min_query(university[shape])
            assert remote.execute(query) == embedded.execute(query)
        assert remote.execute(gen_target_query(university['University']).paged(2, 1)) == [
            {ENTITY: U2}, {ENTITY: U3},
        ]
    finally:
        remote.close()
    assert stub.requests[0][0] == 'GET'


def test_long_query_is_posted(stub, university):
    query = gen_min_query(university['Department'])
    many = [EX[f"u{i:04d}"] for i in range(200)] + [U1]
    filtered = push_instance_filter(query, many, many + [U2, U3], query.groups[0].head)
    assert len(serialize(filtered)) > GET_LENGTH_LIMIT
    rows = remote_execute(stub.url, serialize(filtered))
    assert rows == [{ENTITY: D1, Variable('p0'): U1}]
    assert stub.requests[-1][0] == 'POST'


def test_stub_caps_answers(university_graph, university):
    from src.endpoint import StubEndpoint

    with StubEndpoint(university_graph, max_answers=1) as endpoint:
        rows = remote_execute(endpoint.url, serialize(gen_min_query(university['Department'])))
    assert rows == [{ENTITY: D1, Variable('p0'): U1}]
    assert D2 not in [r[ENTITY] for r in rows]


def test_http_error_status(stub, university):
    stub.fail_status = 500
    with pytest.raises(TransportError) as info:
        remote_execute(stub.url, serialize(gen_target_query(university['Course'])))
    assert info.value.status == 500


def test_unreachable_endpoint():
    with pytest.raises(TransportError) as info:
        remote_execute('http://127.0.0.1:9/sparql', 'SELECT ?x WHERE { ?x ?p ?o }', timeout=2)
    assert info.value.status is None
