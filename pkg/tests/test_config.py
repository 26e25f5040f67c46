import json

import pytest

from src.config import RunConfig, load_bench_config, load_run_config, save_run_config
from src.errors import ConfigError
from src.planner import Strategy, TRAVERSAL_CONFIGURATIONS


def test_defaults():
    config = load_run_config(environ={})
    assert config.page_size == 10000
    assert config.max_query_len == 65000
    assert config.max_parts == 10
    assert config.rewriting and config.paged and not config.prefetch


def test_precedence(tmp_path):
    path = tmp_path / 'run.json'
    path.write_text(json.dumps({'page_size': 50, 'strategy': 'bfs'}), encoding='utf-8')
    environ = {'SHACLTRAV_PAGE_SIZE': '20', 'SHACLTRAV_MAX_PARTS': '3', 'SHACLTRAV_STRATEGY': 'random'}
    config = load_run_config({'page_size': 7, 'strategy': None}, str(path), environ)
    assert config.page_size == 7
    assert config.strategy == 'bfs'
    assert config.max_parts == 3


def test_environment_booleans():
    config = load_run_config(environ={'SHACLTRAV_REWRITING': 'off', 'SHACLTRAV_PREFETCH': 'yes'})
    assert config.rewriting is False
    assert config.prefetch is True


@pytest.mark.parametrize('settings', [
    {'page_size': 0},
    {'timeout': 0},
    {'strategy': 'zigzag'},
    {'config_name': '10'},
    {'data': 'a.nt', 'endpoint': 'http://localhost/sparql'},
])
def test_bad_values(settings):
    with pytest.raises(ConfigError):
        RunConfig(**settings)


def test_unparseable_values():
    with pytest.raises(ConfigError):
        load_run_config(environ={'SHACLTRAV_PAGE_SIZE': 'many'})
    with pytest.raises(ConfigError):
        load_run_config({'rewriting': 'maybe'}, environ={})


def test_unknown_keys(tmp_path):
    path = tmp_path / 'run.json'
    path.write_text(json.dumps({'page_sise': 5}), encoding='utf-8')
    with pytest.raises(ConfigError):
        load_run_config(config_path=str(path), environ={})
    with pytest.raises(ConfigError):
        RunConfig.from_dict({'colour': 'red'})


def test_unreadable_config_file(tmp_path):
    with pytest.raises(ConfigError):
        load_run_config(config_path=str(tmp_path / 'missing.json'), environ={})
    bad = tmp_path / 'bad.json'
    bad.write_text('{not json', encoding='utf-8')
    with pytest.raises(ConfigError):
        load_run_config(config_path=str(bad), environ={})


def test_named_configuration_keeps_rng_seed():
    config = RunConfig(config_name='9', rng_seed=11)
    assert config.planner.strategy is Strategy.RANDOM
    assert config.planner.rng_seed == 11
    assert config.planner.connectivity is TRAVERSAL_CONFIGURATIONS['9'].connectivity


def test_save_and_reload(tmp_path):
    path = tmp_path / 'saved.json'
    config = RunConfig(page_size=5, strategy='bfs', rewriting=False)
    save_run_config(config, str(path))
    assert load_run_config(config_path=str(path), environ={}) == config


def test_bench_defaults():
    bench = load_bench_config(environ={})
    assert bench.schema_sizes == (3,)
    assert bench.scales == (10000,)
    assert bench.invalid_pcts == (10.0, 50.0, 75.0)
    assert bench.configs[-1] == 'off' and len(bench.configs) == 10
    assert bench.parallel_cells == 1


def test_bench_environment_and_precedence():
    environ = {
        'SHACLTRAV_BENCH_SCALES': 'small, 2500',
        'SHACLTRAV_BENCH_CONFIGS': '3,off',
        'SHACLTRAV_BENCH_PARALLEL_CELLS': '4',
        'SHACLTRAV_BENCH_REPS': '2',
    }
    bench = load_bench_config({'reps': 5, 'configs': None, 'invalid_pcts': [75]}, environ)
    assert bench.scales == (10000, 2500)
    assert bench.configs == ('3', 'off')
    assert bench.parallel_cells == 4
    assert bench.reps == 5
    assert bench.invalid_pcts == (75.0,)


@pytest.mark.parametrize('environ', [
    {'SHACLTRAV_BENCH_SCALES': 'huge'},
    {'SHACLTRAV_BENCH_PARALLEL_CELLS': '0'},
    {'SHACLTRAV_BENCH_CONFIGS': '1,12'},
    {'SHACLTRAV_BENCH_SCHEMA_SIZES': ','},
    {'SHACLTRAV_BENCH_INVALID_PCTS': 'half'},
])
def test_bad_bench_values(environ):
    with pytest.raises(ConfigError):
        load_bench_config(environ=environ)
