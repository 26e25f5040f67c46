import random

import pytest

from conftest import R, random_graph, random_schema
from src.assignment import Verdict
from src.bench import OFF, BenchSpec, generate_benchmark, run_matrix
from src.config import RunConfig
from src.engine import build_plan, run_validation
from src.metrics import AnswerTrace, dief_at_t, summarize, write_report
from src.oracle import oracle_verdicts
from src.planner import TRAVERSAL_CONFIGURATIONS
from src.sources import EmbeddedSource


def _verdicts(result):
    return {(e, s): v for e, s, v in result.records()}


def _run(schema, graph, **settings):
    config = RunConfig(**settings)
    return run_validation(schema, EmbeddedSource(graph, config.max_answers), None, config)


SETTINGS = [
    {},
    {'rewriting': False},
    {'page_size': 2, 'max_answers': 2},
    {'max_query_len': 300, 'max_parts': 3},
    {'strategy': 'bfs', 'seed_degree': 'out', 'seed_constraints': 'few'},
]


@pytest.mark.parametrize('seed', range(200))
def test_engine_matches_oracle(seed):
    rng = random.Random(seed)
    schema = random_schema(rng)
    graph = random_graph(rng, len(schema))
    expected = oracle_verdicts(schema, graph)
    for settings in SETTINGS:
        assert _verdicts(_run(schema, graph, **settings)) == expected, settings


@pytest.fixture(scope='module')
def university_testbed():
    return generate_benchmark(BenchSpec(4, 10000, 75.0))


def test_configuration_invariance(university_testbed):
    schema = university_testbed.schema
    graph = university_testbed.graph()
    expected = university_testbed.expected_verdicts()
    for name in TRAVERSAL_CONFIGURATIONS:
        assert _verdicts(_run(schema, graph, config_name=name)) == expected, name
    assert _verdicts(_run(schema, graph, rewriting=False)) == expected


@pytest.mark.slow
def test_configuration_invariance_matrix():
    specs = [BenchSpec(size, 10000, pct) for size in (3, 7, 14) for pct in (10.0, 50.0, 75.0)]
    cells = run_matrix(specs, list(TRAVERSAL_CONFIGURATIONS) + [OFF])
    assert all(c.error is None and c.mismatches == 0 for c in cells)


def test_rewriting_reduces_grounded_rules(university_testbed):
    manifest = university_testbed.manifest
    assert manifest['invalid_pct_realized'] >= 70.0
    schema = university_testbed.schema
    graph = university_testbed.graph()
    on = _run(schema, graph).ledger.rules_grounded
    off = _run(schema, graph, rewriting=False).ledger.rules_grounded
    assert on < off
    assert 5 * on <= off


def test_paging_defeats_answer_truncation(university_testbed):
    schema = university_testbed.schema
    graph = university_testbed.graph()
    expected = university_testbed.expected_verdicts()
    paged = _verdicts(_run(schema, graph, max_answers=100, page_size=100))
    assert paged == expected
    truncated = _verdicts(_run(schema, graph, max_answers=100, page_size=100, paged=False))
    assert sum(1 for k, v in expected.items() if truncated.get(k) is not v) >= 1


def _step_area(times, t):
    area = 0.0
    for i, start in enumerate(times):
        end = times[i + 1] if i + 1 < len(times) else t
        end = min(end, t)
        if end > start:
            area += (i + 1) * (end - start)
    return area


@pytest.mark.parametrize('seed', range(20))
def test_dief_matches_step_integral(seed):
    rng = random.Random(seed)
    times = sorted(rng.uniform(0.0, 10.0) for _ in range(rng.randint(0, 40)))
    trace = AnswerTrace()
    for i, t in enumerate(times):
        trace.record(t, R[f"e{i}"], 'S', Verdict.TRUE)
    previous = -1.0
    for t in sorted(rng.uniform(0.0, 12.0) for _ in range(10)):
        value = dief_at_t(trace, t)
        assert value == pytest.approx(_step_area(times, t), abs=1e-9)
        assert value >= previous
        previous = value


@pytest.mark.slow
def test_first_verdict_arrives_early():
    artifacts = generate_benchmark(BenchSpec(3, 50000, 75.0))
    result = _run(artifacts.schema, artifacts.graph())
    metrics = summarize(result.trace)
    assert metrics.tfff < 0.2 * metrics.validation_time


def test_runs_are_deterministic(tmp_path):
    artifacts = generate_benchmark(BenchSpec(4, 2000, 50.0))
    outputs = []
    for run in range(2):
        result = _run(artifacts.schema, artifacts.graph())
        destination = tmp_path / f"run{run}"
        write_report(result.trace, summarize(result.trace), str(destination))
        trace_rows = [
            line.split(',', 1)[1]
            for line in (destination / 'trace.csv').read_text(encoding='utf-8').splitlines()[1:]
        ]
        outputs.append(((destination / 'verdicts.csv').read_bytes(), trace_rows,
                        result.ledger.to_dict()))
    assert outputs[0] == outputs[1]


def test_university_traversal_order(university):
    plan = build_plan(university, RunConfig(config_name='5'))
    assert plan.order == ('University', 'Department', 'Professor', 'Course')
