"""
Endpoint Module - SPARQL Protocol client and a stub endpoint for tests and demos

The client speaks the SPARQL 1.1 Protocol with the JSON results format; the
stub serves an rdflib graph over HTTP with the same ordering and answer cap
as the embedded store.
"""

import json
import logging
import re
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Dict, List, Optional
from urllib.parse import parse_qs, urlparse

import requests
from rdflib import BNode, Literal, URIRef
from rdflib import Graph as RDFGraph
from rdflib.term import Identifier, Variable

from .errors import PayloadError, TransportError
from .query import term_sort_key

logger = logging.getLogger(__name__)

RESULTS_JSON = 'application/sparql-results+json'

# Queries longer than this go in a POST body instead of the URL.
GET_LENGTH_LIMIT = 2000

BindingRow = Dict[Variable, Identifier]


def method_for(sparql_text: str) -> str:
    return 'GET' if len(sparql_text) <= GET_LENGTH_LIMIT else 'POST'


def parse_value(obj: dict) -> Identifier:
    """Convert one SPARQL JSON binding value to an rdflib term."""
    if not isinstance(obj, dict) or 'type' not in obj or 'value' not in obj:
        raise PayloadError(f"Malformed binding value: {obj!r}")
    kind = obj['type']
    value = obj['value']
    if kind == 'uri':
        return URIRef(value)
    if kind in ('literal', 'typed-literal'):
        lang = obj.get('xml:lang')
        datatype = obj.get('datatype')
        if lang:
            return Literal(value, lang=lang)
        return Literal(value, datatype=URIRef(datatype) if datatype else None)
    if kind == 'bnode':
        return BNode(value)
    raise PayloadError(f"Unknown binding type {kind!r}")


def parse_results(payload: dict) -> List[BindingRow]:
    """
    Parse a SPARQL JSON result document into binding rows.

    Raises:
        PayloadError: head/results structure missing or a projected variable unbound
    """
    try:
        variables = payload['head']['vars']
        bindings = payload['results']['bindings']
    except (KeyError, TypeError) as exc:
        raise PayloadError(f"Not a SPARQL JSON result: missing {exc}") from exc
    if not isinstance(variables, list) or not isinstance(bindings, list):
        raise PayloadError("Not a SPARQL JSON result: head.vars and results.bindings must be lists")

    rows = []
    for binding in bindings:
        row = {}
        for var in variables:
            if var not in binding:
                raise PayloadError(f"Row without a value for ?{var}")
            row[Variable(var)] = parse_value(binding[var])
        rows.append(row)
    return rows


def _term_json(term: Identifier) -> dict:
    if isinstance(term, URIRef):
        return {'type': 'uri', 'value': str(term)}
    if isinstance(term, BNode):
        return {'type': 'bnode', 'value': str(term)}
    data = {'type': 'literal', 'value': str(term)}
    if term.language:
        data['xml:lang'] = term.language
    elif term.datatype is not None:
        data['datatype'] = str(term.datatype)
    return data


class SparqlClient:
    """
    Thin SPARQL Protocol client over a requests session.

    A semaphore bounds the number of requests in flight.
    """

    def __init__(self, endpoint: str, timeout: float = 60.0, max_in_flight: int = 4,
                 session: Optional[requests.Session] = None):
        self.endpoint = endpoint
        self.timeout = timeout
        self.session = session or requests.Session()
        self.session.headers.update({'Accept': RESULTS_JSON})
        self._slots = threading.BoundedSemaphore(max_in_flight)

    def select(self, sparql_text: str) -> List[BindingRow]:
        """
        Run a SELECT query and return its rows.

        Raises:
            TransportError: Connection failure, timeout or HTTP status >= 400
            PayloadError: Response is not a SPARQL JSON result
        """
        method = method_for(sparql_text)
        with self._slots:
            try:
                if method == 'GET':
                    response = self.session.get(
                        self.endpoint, params={'query': sparql_text}, timeout=self.timeout
                    )
                else:
                    response = self.session.post(
                        self.endpoint, data={'query': sparql_text}, timeout=self.timeout
                    )
            except requests.Timeout as exc:
                raise TransportError(f"Timeout after {self.timeout}s querying {self.endpoint}") from exc
            except requests.RequestException as exc:
                raise TransportError(f"Cannot reach {self.endpoint}: {exc}") from exc

        if response.status_code >= 400:
            raise TransportError(
                f"Endpoint answered HTTP {response.status_code}: {response.text[:200]}",
                status=response.status_code,
            )
        try:
            payload = response.json()
        except ValueError as exc:
            raise PayloadError(f"Response is not JSON: {response.text[:200]!r}") from exc
        logger.debug("%s %d chars -> %d bytes", method, len(sparql_text), len(response.content))
        return parse_results(payload)

    def close(self):
        self.session.close()


def remote_execute(endpoint: str, sparql_text: str, timeout: float = 60.0) -> List[BindingRow]:
    """One-shot SELECT against a SPARQL endpoint."""
    client = SparqlClient(endpoint, timeout=timeout)
    try:
        return client.select(sparql_text)
    finally:
        client.close()


_SLICE = re.compile(r'\s+LIMIT\s+(\d+)(?:\s+OFFSET\s+(\d+))?\s*$|\s+OFFSET\s+(\d+)\s*$', re.IGNORECASE)


def _split_slice(text: str):
    """Strip a trailing LIMIT/OFFSET so ordering can be applied first."""
    match = _SLICE.search(text)
    if not match:
        return text, None, 0
    limit = int(match.group(1)) if match.group(1) else None
    offset = int(match.group(2) or match.group(3) or 0)
    return text[:match.start()], limit, offset


class _StubHandler(BaseHTTPRequestHandler):
    server: '_StubServer'

    def log_message(self, format, *args):
        logger.debug("stub: " + format, *args)

    def do_GET(self):
        params = parse_qs(urlparse(self.path).query)
        self._answer(params.get('query', [None])[0], 'GET')

    def do_POST(self):
        length = int(self.headers.get('Content-Length', 0))
        body = self.rfile.read(length).decode('utf-8')
        content_type = self.headers.get('Content-Type', '')
        if content_type.startswith('application/sparql-query'):
            query = body
        else:
            query = parse_qs(body).get('query', [None])[0]
        self._answer(query, 'POST')

    def _send(self, status: int, body: bytes, content_type: str):
        self.send_response(status)
        self.send_header('Content-Type', content_type)
        self.send_header('Content-Length', str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _answer(self, query: Optional[str], method: str):
        stub = self.server.stub
        stub.requests.append((method, len(query or '')))
        if stub.fail_status is not None:
            self._send(stub.fail_status, b'stub failure', 'text/plain')
            return
        if not query:
            self._send(400, b'missing query parameter', 'text/plain')
            return
        try:
            payload = stub.run(query)
        except Exception as exc:
            self._send(400, str(exc).encode('utf-8'), 'text/plain')
            return
        self._send(200, json.dumps(payload).encode('utf-8'), RESULTS_JSON)


class _StubServer(ThreadingHTTPServer):
    daemon_threads = True

    def __init__(self, address, stub: 'StubEndpoint'):
        super().__init__(address, _StubHandler)
        self.stub = stub


class StubEndpoint:
    """
    Local SPARQL endpoint over an rdflib graph.

    Rows are ordered like the embedded store (code-point order per projected
    variable) and capped at max_answers per request.

    Usage:
        with StubEndpoint(graph, max_answers=100) as stub:
            source = RemoteSource(stub.url)
    """

    def __init__(self, graph, max_answers: int = 10000, host: str = '127.0.0.1', port: int = 0):
        self.graph: RDFGraph = graph.to_rdflib() if hasattr(graph, 'to_rdflib') else graph
        self.max_answers = max_answers
        self.fail_status: Optional[int] = None
        self.requests: List[tuple] = []
        self._lock = threading.Lock()
        self._server = _StubServer((host, port), self)
        self._thread: Optional[threading.Thread] = None

    @property
    def url(self) -> str:
        host, port = self._server.server_address[:2]
        return f"http://{host}:{port}/sparql"

    def run(self, query: str) -> dict:
        text, limit, offset = _split_slice(query)
        with self._lock:
            result = self.graph.query(text)
            variables = [str(v) for v in result.vars]
            rows = [tuple(row) for row in result]
        rows.sort(key=lambda values: tuple(term_sort_key(v) for v in values))
        rows = rows[offset:]
        if limit is not None:
            rows = rows[:limit]
        rows = rows[:self.max_answers]
        bindings = [
            {var: _term_json(value) for var, value in zip(variables, values) if value is not None}
            for values in rows
        ]
        return {'head': {'vars': variables}, 'results': {'bindings': bindings}}

    def start(self) -> 'StubEndpoint':
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)
        self._thread.start()
        logger.info("Stub endpoint listening on %s", self.url)
        return self

    def serve_forever(self):
        logger.info("Stub endpoint listening on %s", self.url)
        self._server.serve_forever()

    def stop(self):
        if self._thread is not None:
            self._server.shutdown()
            self._thread.join(timeout=5)
            self._thread = None
        self._server.server_close()

    def __enter__(self) -> 'StubEndpoint':
        return self.start()

    def __exit__(self, *exc):
        self.stop()
