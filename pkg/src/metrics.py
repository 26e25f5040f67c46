"""
Metrics Module - Answer traces, diefficiency and run reports

dief@t is the area under the cumulative verdict count up to time t. It is
computed exactly: each verdict produced at t_i <= t contributes (t - t_i).
"""

import csv
import json
import logging
import os
from dataclasses import asdict, dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from rdflib.term import Identifier

from .assignment import Verdict
from .schema import parse_term

logger = logging.getLogger(__name__)

VERDICTS_FILE = 'verdicts.csv'
TRACE_FILE = 'trace.csv'
METRICS_FILE = 'metrics.json'


@dataclass(frozen=True)
class TraceEntry:
    elapsed: float
    entity: Identifier
    shape: str
    verdict: Verdict


@dataclass
class AnswerTrace:
    """
    Timestamped verdict stream of one run.

    `duration` is run end minus run start; it is set when the run stops.
    """

    entries: List[TraceEntry] = field(default_factory=list)
    metadata: Dict[str, str] = field(default_factory=dict)
    duration: Optional[float] = None
    partial: bool = False

    def record(self, elapsed: float, entity: Identifier, shape: str, verdict: Verdict):
        if self.entries and elapsed < self.entries[-1].elapsed:
            elapsed = self.entries[-1].elapsed
        self.entries.append(TraceEntry(elapsed, entity, shape, verdict))

    def times(self) -> np.ndarray:
        return np.fromiter((e.elapsed for e in self.entries), dtype=float, count=len(self.entries))

    def __len__(self) -> int:
        return len(self.entries)


@dataclass(frozen=True)
class MetricSet:
    validation_time: float
    tfff: Optional[float]
    throughput: float
    comp: int
    dief_t: float
    inverse_tfft: float
    inverse_et: float

    def to_dict(self) -> dict:
        return asdict(self)

    @staticmethod
    def from_dict(data: dict) -> 'MetricSet':
        return MetricSet(
            validation_time=float(data['validation_time']),
            tfff=None if data.get('tfff') is None else float(data['tfff']),
            throughput=float(data['throughput']),
            comp=int(data['comp']),
            dief_t=float(data['dief_t']),
            inverse_tfft=float(data['inverse_tfft']),
            inverse_et=float(data['inverse_et']),
        )


def dief_at_t(trace: AnswerTrace, t: float) -> float:
    """
    Area under the verdict-count step function over [0, t].

    Time Complexity: O(n)

    Args:
        trace: Answer trace
        t: Time bound in seconds (>= 0)

    Returns:
        Area in verdict-seconds; 0 for an empty trace or t before the first verdict
    """
    if t < 0:
        raise ValueError("t must be >= 0")
    if not trace.entries:
        return 0.0
    return float(np.clip(t - trace.times(), 0.0, None).sum())


def summarize(trace: AnswerTrace, t: Optional[float] = None) -> MetricSet:
    """
    Compute the metric set of a finished trace.

    dief@t is evaluated at the end of the run unless t is given.
    """
    duration = trace.duration
    if duration is None:
        duration = trace.entries[-1].elapsed if trace.entries else 0.0
    comp = len(trace.entries)
    tfff = trace.entries[0].elapsed if trace.entries else None
    throughput = comp / duration if duration > 0 else 0.0
    return MetricSet(
        validation_time=duration,
        tfff=tfff,
        throughput=throughput,
        comp=comp,
        dief_t=dief_at_t(trace, duration if t is None else t),
        inverse_tfft=1.0 / tfff if tfff else 0.0,
        inverse_et=1.0 / duration if duration > 0 else 0.0,
    )


def aggregate_runs(values: Sequence[float]) -> Tuple[float, float]:
    """Mean and sample standard deviation; the deviation of a single run is 0."""
    if not values:
        raise ValueError("No runs to aggregate")
    data = np.asarray(values, dtype=float)
    std = float(np.std(data, ddof=1)) if len(data) > 1 else 0.0
    return float(np.mean(data)), std


def verdict_records(trace: AnswerTrace) -> List[Tuple[Identifier, str, Verdict]]:
    """One record per traced (entity, shape), sorted by shape then entity."""
    records = [(e.entity, e.shape, e.verdict) for e in trace.entries]
    return sorted(records, key=lambda r: (r[1], r[0].n3()))


def write_report(trace: AnswerTrace, metrics: MetricSet, destination: str,
                 ledger: Optional[dict] = None) -> List[str]:
    """
    Write verdicts.csv, trace.csv and metrics.json into a directory.

    Args:
        trace: Answer trace (its `partial` flag is copied to the metrics file)
        metrics: Summary of the trace
        destination: Output directory, created if missing
        ledger: Grounding ledger counters

    Returns:
        Paths of the files written

    Raises:
        OSError: Destination not writable
    """
    os.makedirs(destination, exist_ok=True)
    verdicts_path = os.path.join(destination, VERDICTS_FILE)
    trace_path = os.path.join(destination, TRACE_FILE)
    metrics_path = os.path.join(destination, METRICS_FILE)

    with open(verdicts_path, 'w', encoding='utf-8', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(['entity', 'shape', 'verdict'])
        for entity, shape, verdict in verdict_records(trace):
            writer.writerow([entity.n3(), shape, verdict.value])

    with open(trace_path, 'w', encoding='utf-8', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(['elapsed_seconds', 'entity', 'shape', 'verdict'])
        for e in trace.entries:
            writer.writerow([repr(e.elapsed), e.entity.n3(), e.shape, e.verdict.value])

    document = {
        'metrics': metrics.to_dict(),
        'duration': trace.duration,
        'partial': trace.partial,
        'metadata': trace.metadata,
        'ledger': ledger or {},
    }
    with open(metrics_path, 'w', encoding='utf-8', newline='\n') as f:
        json.dump(document, f, indent=2, sort_keys=True)
        f.write('\n')

    logger.info("Wrote report (%d verdicts) to %s", metrics.comp, destination)
    return [verdicts_path, trace_path, metrics_path]


def read_report(destination: str) -> Tuple[AnswerTrace, MetricSet, dict]:
    """
    Read a report directory back.

    Returns:
        (trace, metrics, raw metrics document); summarize(trace) equals metrics
    """
    with open(os.path.join(destination, METRICS_FILE), 'r', encoding='utf-8') as f:
        document = json.load(f)

    trace = AnswerTrace(
        metadata=document.get('metadata', {}),
        duration=document.get('duration'),
        partial=bool(document.get('partial', False)),
    )
    with open(os.path.join(destination, TRACE_FILE), 'r', encoding='utf-8', newline='') as f:
        for row in csv.DictReader(f):
            trace.entries.append(TraceEntry(
                float(row['elapsed_seconds']),
                parse_term(row['entity']),
                row['shape'],
                Verdict(row['verdict']),
            ))
    return trace, MetricSet.from_dict(document['metrics']), document


def read_verdicts(path: str) -> List[Tuple[Identifier, str, Verdict]]:
    with open(path, 'r', encoding='utf-8', newline='') as f:
        return [(parse_term(r['entity']), r['shape'], Verdict(r['verdict'])) for r in csv.DictReader(f)]


def format_metrics(metrics: MetricSet) -> str:
    tfff = f"{metrics.tfff:.6f}" if metrics.tfff is not None else "n/a"
    return "\n".join([
        f"validation_time  {metrics.validation_time:.6f} s",
        f"tfff             {tfff} s",
        f"throughput       {metrics.throughput:.3f} verdicts/s",
        f"comp             {metrics.comp}",
        f"dief@t           {metrics.dief_t:.6f}",
        f"inverse_tfft     {metrics.inverse_tfft:.6f}",
        f"inverse_et       {metrics.inverse_et:.6f}",
    ]) + "\n"


def verdict_sets(records: Iterable[Tuple[Identifier, str, Verdict]]) -> Dict[str, Dict[str, set]]:
    """Group records into {shape: {'true': set, 'false': set}} for comparisons."""
    grouped: Dict[str, Dict[str, set]] = {}
    for entity, shape, verdict in records:
        grouped.setdefault(shape, {'true': set(), 'false': set()})
        grouped[shape][verdict.value].add(entity)
    return grouped
