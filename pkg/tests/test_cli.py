import json
import os

import pytest

import shacl_trav
from conftest import NEGATIVE_CYCLE_SCHEMA
from src.metrics import read_report


@pytest.fixture(autouse=True)
def clean_environment(monkeypatch):
    for key in list(os.environ):
        if key.startswith('SHACLTRAV_'):
            monkeypatch.delenv(key)


def test_validate_writes_report(schema_file, data_file, tmp_path, capsys):
    out = tmp_path / 'report'
    code = shacl_trav.main(['validate', '--schema', schema_file, '--data', data_file,
                            '--output', str(out)])
    assert code == shacl_trav.EXIT_OK
    printed = capsys.readouterr().out
    assert 'Plan: University, Department, Professor, Course' in printed
    assert 'Verdicts: 13' in printed
    trace, metrics, document = read_report(str(out))
    assert metrics.comp == 13
    assert not document['partial']
    assert document['ledger']['rules_grounded'] > 0
    lines = (out / 'verdicts.csv').read_text(encoding='utf-8').splitlines()
    assert lines[0] == 'entity,shape,verdict'
    assert len(lines) == 14


def test_validate_baseline_flag(schema_file, data_file, tmp_path):
    out = tmp_path / 'baseline'
    code = shacl_trav.main(['validate', '--schema', schema_file, '--data', data_file,
                            '--rewriting', 'off', '--output', str(out)])
    assert code == shacl_trav.EXIT_OK
    _, _, document = read_report(str(out))
    assert document['metadata']['rewriting'] == 'off'


def test_negative_cycle_exits_with_schema_code(data_file, tmp_path, capsys):
    path = tmp_path / 'cycle.json'
    path.write_text(json.dumps(NEGATIVE_CYCLE_SCHEMA), encoding='utf-8')
    code = shacl_trav.main(['validate', '--schema', str(path), '--data', data_file,
                            '--output', str(tmp_path / 'out')])
    assert code == shacl_trav.EXIT_SCHEMA
    assert 'A' in capsys.readouterr().err


def test_malformed_schema_exits_with_schema_code(data_file, tmp_path):
    path = tmp_path / 'broken.json'
    path.write_text('{"shapes": [', encoding='utf-8')
    assert shacl_trav.main(['plan', '--schema', str(path)]) == shacl_trav.EXIT_SCHEMA


def test_unreachable_endpoint_exits_with_transport_code(schema_file, tmp_path):
    out = tmp_path / 'partial'
    code = shacl_trav.main(['validate', '--schema', schema_file,
                            '--endpoint', 'http://127.0.0.1:9/sparql', '--timeout', '2',
                            '--output', str(out)])
    assert code == shacl_trav.EXIT_TRANSPORT
    _, _, document = read_report(str(out))
    assert document['partial'] is True


def test_validate_against_stub(stub, schema_file, tmp_path):
    out = tmp_path / 'remote'
    code = shacl_trav.main(['validate', '--schema', schema_file, '--endpoint', stub.url,
                            '--page-size', '2', '--output', str(out)])
    assert code == shacl_trav.EXIT_OK
    assert read_report(str(out))[1].comp == 13


def test_missing_data_is_config_error(schema_file):
    assert shacl_trav.main(['validate', '--schema', schema_file]) == shacl_trav.EXIT_CONFIG


def test_bad_config_value_is_config_error(schema_file, data_file, monkeypatch):
    monkeypatch.setenv('SHACLTRAV_PAGE_SIZE', 'lots')
    code = shacl_trav.main(['validate', '--schema', schema_file, '--data', data_file])
    assert code == shacl_trav.EXIT_CONFIG


def test_plan_output(schema_file, capsys):
    code = shacl_trav.main(['plan', '--schema', schema_file, '--config-name', '5'])
    assert code == shacl_trav.EXIT_OK
    text = capsys.readouterr().out
    assert 'Seed: University' in text
    assert 'Order: University, Department, Professor, Course' in text


def test_bench_generate(tmp_path, capsys):
    out = tmp_path / 'bed'
    code = shacl_trav.main(['bench', 'generate', '--schema-size', '4', '--scale', '500',
                            '--invalid-pct', '50', '--output', str(out)])
    assert code == shacl_trav.EXIT_OK
    assert 'Generated s4-500-50-r0' in capsys.readouterr().out
    assert sorted(p.name for p in out.iterdir()) == ['data.nt', 'manifest.json', 'schema.json']


def test_bench_matrix(tmp_path, capsys):
    out = tmp_path / 'matrix.json'
    code = shacl_trav.main(['bench', 'matrix', '--schema-sizes', '4', '--scales', '500',
                            '--invalid-pcts', '75', '--configs', '1', 'off', '--output', str(out)])
    assert code == shacl_trav.EXIT_OK
    cells = json.loads(out.read_text(encoding='utf-8'))
    assert [c['config'] for c in cells] == ['1', 'off']
    assert all(c['mismatches'] == 0 for c in cells)


def test_metrics_recomputed(schema_file, data_file, tmp_path, capsys):
    out = tmp_path / 'report'
    shacl_trav.main(['validate', '--schema', schema_file, '--data', data_file, '--output', str(out)])
    capsys.readouterr()
    assert shacl_trav.main(['metrics', str(out), '--t', '0']) == shacl_trav.EXIT_OK
    text = capsys.readouterr().out
    assert 'comp             13' in text
    assert 'dief@t           0.000000' in text


def test_metrics_of_missing_report(tmp_path):
    assert shacl_trav.main(['metrics', str(tmp_path / 'none')]) == shacl_trav.EXIT_CONFIG


def test_no_command_prints_help(capsys):
    assert shacl_trav.main([]) == shacl_trav.EXIT_CONFIG
    assert 'usage' in capsys.readouterr().out


def test_malformed_data_line_is_config_error(schema_file, tmp_path, capsys):
    path = tmp_path / 'broken.nt'
    path.write_text('<http://example.org/a> <http://example.org/p> .\n', encoding='utf-8')
    code = shacl_trav.main(['validate', '--schema', schema_file, '--data', str(path),
                            '--output', str(tmp_path / 'out')])
    assert code == shacl_trav.EXIT_CONFIG
    assert 'Line 1' in capsys.readouterr().err


def test_unwritable_output_is_config_error(schema_file, data_file, tmp_path, capsys):
    blocker = tmp_path / 'occupied'
    blocker.write_text('', encoding='utf-8')
    code = shacl_trav.main(['validate', '--schema', schema_file, '--data', data_file,
                            '--output', str(blocker / 'report')])
    assert code == shacl_trav.EXIT_CONFIG
    assert 'Cannot write report' in capsys.readouterr().err


def test_unwritable_matrix_output_is_config_error(tmp_path):
    blocker = tmp_path / 'occupied'
    blocker.write_text('', encoding='utf-8')
    code = shacl_trav.main(['bench', 'matrix', '--schema-sizes', '4', '--scales', '500',
                            '--invalid-pcts', '50', '--configs', '1',
                            '--output', str(blocker / 'matrix.json')])
    assert code == shacl_trav.EXIT_CONFIG


def test_bench_matrix_reads_environment(tmp_path, monkeypatch):
    monkeypatch.setenv('SHACLTRAV_BENCH_SCHEMA_SIZES', '4')
    monkeypatch.setenv('SHACLTRAV_BENCH_SCALES', '500')
    monkeypatch.setenv('SHACLTRAV_BENCH_INVALID_PCTS', '50,75')
    monkeypatch.setenv('SHACLTRAV_BENCH_CONFIGS', '1,off')
    out = tmp_path / 'matrix.json'
    code = shacl_trav.main(['bench', 'matrix', '--parallel-cells', '2', '--output', str(out)])
    assert code == shacl_trav.EXIT_OK
    cells = json.loads(out.read_text(encoding='utf-8'))
    assert [(c['spec'], c['config']) for c in cells] == [
        ('s4-500-50-r0', '1'), ('s4-500-50-r0', 'off'), ('s4-500-75-r0', '1'), ('s4-500-75-r0', 'off'),
    ]
    assert all(c['mismatches'] == 0 for c in cells)


def test_bad_bench_environment_is_config_error(monkeypatch):
    monkeypatch.setenv('SHACLTRAV_BENCH_REPS', 'twice')
    assert shacl_trav.main(['bench', 'matrix']) == shacl_trav.EXIT_CONFIG
