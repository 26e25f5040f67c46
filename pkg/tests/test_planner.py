import json

import pytest

from src.errors import NoTargetedShapeError, UnknownShapeError
from src.planner import (
    TRAVERSAL_CONFIGURATIONS,
    Connectivity,
    ConstraintTiebreak,
    PlannerConfig,
    Strategy,
    declaration_order_plan,
    degree_stats,
    explain_plan,
    plan_traversal,
    select_seed,
    traversal_order,
)
from src.schema import ShapeSchema, build_dependency_graph, parse_schema

UNIVERSITY_ORDER = ('University', 'Department', 'Professor', 'Course')


def _config(strategy='dfs', degree='in', constraints='many', rng_seed=0):
    return PlannerConfig(Strategy(strategy), Connectivity(degree), ConstraintTiebreak(constraints), rng_seed)


def test_degree_stats(university):
    assert degree_stats(build_dependency_graph(university)) == {
        'University': (2, 0),
        'Department': (1, 1),
        'Professor': (1, 2),
        'Course': (0, 1),
    }


@pytest.mark.parametrize('strategy', ['dfs', 'bfs'])
def test_university_in_degree_order(university, strategy):
    plan = plan_traversal(university, _config(strategy))
    assert plan.seed == 'University'
    assert plan.order == UNIVERSITY_ORDER


def test_out_degree_seed_and_dfs_order(university):
    plan = plan_traversal(university, _config('dfs', 'out'))
    assert plan.seed == 'Professor'
    assert plan.order == ('Professor', 'University', 'Department', 'Course')


def test_out_degree_bfs_order(university):
    plan = plan_traversal(university, _config('bfs', 'out'))
    assert plan.order == ('Professor', 'University', 'Department', 'Course')


def test_constraint_tiebreak_on_cyclic_schema(cyclic_schema):
    graph = build_dependency_graph(cyclic_schema)
    assert select_seed(cyclic_schema, graph, _config(constraints='many')) == 'Professor'
    assert select_seed(cyclic_schema, graph, _config(constraints='few')) == 'University'


def test_only_targeted_shapes_can_seed():
    schema = parse_schema(json.dumps({'shapes': [
        {'name': 'Hub', 'constraints': [{'kind': 'min', 'count': 1, 'path': 'http://ex.org/p'}]},
        {'name': 'A', 'targetClass': 'http://ex.org/A', 'constraints': [
            {'kind': 'min', 'count': 1, 'path': 'http://ex.org/p', 'shape': 'Hub'}]},
        {'name': 'B', 'targetClass': 'http://ex.org/B', 'constraints': [
            {'kind': 'min', 'count': 1, 'path': 'http://ex.org/p', 'shape': 'Hub'}]},
    ]}))
    plan = plan_traversal(schema, _config())
    assert plan.seed == 'A'
    assert plan.order == ('A', 'Hub', 'B')


def test_no_targeted_shape():
    schema = parse_schema(json.dumps({'shapes': [
        {'name': 'A', 'constraints': [{'kind': 'min', 'count': 1, 'path': 'http://ex.org/p'}]},
    ]}))
    with pytest.raises(NoTargetedShapeError):
        plan_traversal(schema, _config())


def test_restart_after_component_is_exhausted():
    schema = parse_schema(json.dumps({'shapes': [
        {'name': 'Lone', 'constraints': [{'kind': 'min', 'count': 1, 'path': 'http://ex.org/p'}]},
        {'name': 'A', 'targetClass': 'http://ex.org/A', 'constraints': [
            {'kind': 'min', 'count': 1, 'path': 'http://ex.org/p', 'shape': 'B'}]},
        {'name': 'B', 'constraints': [{'kind': 'min', 'count': 1, 'path': 'http://ex.org/q'}]},
    ]}))
    assert plan_traversal(schema, _config('dfs')).order == ('A', 'B', 'Lone')
    assert plan_traversal(schema, _config('bfs')).order == ('A', 'B', 'Lone')


def test_traversal_is_linear(university):
    graph = build_dependency_graph(university)
    plan = traversal_order(graph, 'University', _config())
    assert plan.nodes_expanded == len(graph.nodes)
    assert plan.edges_touched <= 2 * len(graph.unsigned_edges())


def test_unknown_seed(university):
    with pytest.raises(UnknownShapeError):
        traversal_order(build_dependency_graph(university), 'Nope', _config())


def test_random_is_reproducible(university):
    first = plan_traversal(university, _config('random', rng_seed=7))
    second = plan_traversal(university, _config('random', rng_seed=7))
    assert first.order == second.order
    assert sorted(first.order) == sorted(UNIVERSITY_ORDER)
    assert first.seed == first.order[0]


def test_declaration_order_plan(university):
    assert declaration_order_plan(university, _config()).order == UNIVERSITY_ORDER


def test_empty_schema_gives_empty_plan():
    assert plan_traversal(ShapeSchema(()), _config()).order == ()


def test_named_configurations():
    assert list(TRAVERSAL_CONFIGURATIONS) == [str(i) for i in range(1, 10)]
    assert TRAVERSAL_CONFIGURATIONS['5'] == PlannerConfig()
    assert TRAVERSAL_CONFIGURATIONS['4'] == _config('bfs', 'out', 'few')
    assert TRAVERSAL_CONFIGURATIONS['9'].strategy is Strategy.RANDOM


def test_planner_config_round_trip():
    config = _config('bfs', 'out', 'few', 3)
    assert PlannerConfig.from_dict(config.to_dict()) == config


def test_explain_plan_university(university):
    text = explain_plan(university, _config())
    assert 'Seed: University (highest in-degree (2))' in text
    assert 'Order: University, Department, Professor, Course' in text
    assert '  3: Course' in text


def test_explain_random_is_stable(university):
    config = _config('random', rng_seed=7)
    assert explain_plan(university, config) == explain_plan(university, config)
