import numpy as np
import pytest

from conftest import EX
from src.assignment import Verdict
from src.metrics import (
    AnswerTrace,
    aggregate_runs,
    dief_at_t,
    format_metrics,
    read_report,
    summarize,
    verdict_records,
    write_report,
)


def _trace(times, duration=None):
    trace = AnswerTrace(duration=duration)
    for i, t in enumerate(times):
        trace.record(t, EX[f"e{i}"], 'S', Verdict.TRUE if i % 2 else Verdict.FALSE)
    return trace


def test_dief_step_area():
    assert dief_at_t(_trace([1.0, 2.0, 3.0]), 3.0) == pytest.approx(3.0)
    assert dief_at_t(_trace([1.0, 2.0, 3.0]), 4.0) == pytest.approx(6.0)


def test_dief_empty_and_early():
    assert dief_at_t(AnswerTrace(), 5.0) == 0.0
    assert dief_at_t(_trace([2.0]), 1.0) == 0.0


def test_dief_rejects_negative_t():
    with pytest.raises(ValueError):
        dief_at_t(_trace([1.0]), -1.0)


def test_dief_favors_earlier_answers():
    early = _trace([0.1, 0.2, 0.3], duration=1.0)
    late = _trace([0.7, 0.8, 0.9], duration=1.0)
    assert dief_at_t(early, 1.0) > dief_at_t(late, 1.0)


def test_record_keeps_times_monotone():
    trace = _trace([1.0, 0.5])
    assert trace.times().tolist() == [1.0, 1.0]


def test_summarize():
    metrics = summarize(_trace(np.linspace(0.2, 2.0, 10).tolist(), duration=2.0))
    assert metrics.comp == 10
    assert metrics.throughput == pytest.approx(5.0)
    assert metrics.tfff == pytest.approx(0.2)
    assert metrics.inverse_tfft == pytest.approx(5.0)
    assert metrics.inverse_et == pytest.approx(0.5)
    assert metrics.validation_time == 2.0


def test_summarize_empty_trace():
    metrics = summarize(AnswerTrace(duration=0.0))
    assert metrics.comp == 0
    assert metrics.tfff is None
    assert metrics.throughput == 0.0
    assert 'n/a' in format_metrics(metrics)


def test_aggregate_runs():
    mean, std = aggregate_runs([1.0, 2.0, 3.0])
    assert mean == pytest.approx(2.0)
    assert std == pytest.approx(1.0)
    assert aggregate_runs([4.0]) == (4.0, 0.0)
    with pytest.raises(ValueError):
        aggregate_runs([])


def test_verdict_records_sorted_by_shape_then_entity():
    trace = AnswerTrace()
    trace.record(0.1, EX.b, 'T', Verdict.TRUE)
    trace.record(0.2, EX.a, 'T', Verdict.FALSE)
    trace.record(0.3, EX.c, 'S', Verdict.TRUE)
    assert [(e, s) for e, s, _ in verdict_records(trace)] == [(EX.c, 'S'), (EX.a, 'T'), (EX.b, 'T')]


def test_report_round_trip(tmp_path):
    trace = _trace([0.25, 0.5, 1.5], duration=2.0)
    trace.metadata['planner'] = 'dfs/in/many'
    metrics = summarize(trace)
    write_report(trace, metrics, str(tmp_path), ledger={'rules_grounded': 7})
    again, stored, document = read_report(str(tmp_path))
    assert stored == metrics
    assert summarize(again) == metrics
    assert document['ledger'] == {'rules_grounded': 7}
    assert document['metadata']['planner'] == 'dfs/in/many'
    assert (tmp_path / 'verdicts.csv').read_text(encoding='utf-8').splitlines()[1] == \
        '<http://example.org/data/e0>,S,false'


def test_empty_report_has_headers(tmp_path):
    trace = AnswerTrace(duration=0.0)
    write_report(trace, summarize(trace), str(tmp_path))
    assert (tmp_path / 'verdicts.csv').read_text(encoding='utf-8') == 'entity,shape,verdict\n'
    assert (tmp_path / 'trace.csv').read_text(encoding='utf-8') == \
        'elapsed_seconds,entity,shape,verdict\n'


def test_partial_flag_is_stored(tmp_path):
    trace = _trace([0.1], duration=0.2)
    trace.partial = True
    write_report(trace, summarize(trace), str(tmp_path))
    again, _, document = read_report(str(tmp_path))
    assert document['partial'] is True
    assert again.partial
