#!/usr/bin/env python3
"""
shacl-trav - Command Line Interface

Validates shape schemas over N-Triples files or SPARQL endpoints, explains
traversal plans, generates testbeds and compares planner configurations.

Exit codes: 0 success, 1 configuration or input error, 2 schema error,
3 transport failure.
"""

import argparse
import json
import logging
import os
import sys

from src.bench import OFF, BenchSpec, format_matrix, generate_benchmark, run_matrix, write_benchmark
from src.config import SCALES, load_bench_config, load_run_config, parse_scale
from src.endpoint import StubEndpoint
from src.engine import run_validation
from src.errors import (
    ConfigError,
    PlannerError,
    SchemaError,
    ShaclTravError,
    TransportError,
)
from src.metrics import format_metrics, read_report, summarize, write_report
from src.planner import TRAVERSAL_CONFIGURATIONS, explain_plan
from src.schema import load_schema
from src.sources import EmbeddedSource, RemoteSource
from src.store import load_ntriples_file

logger = logging.getLogger('shacl_trav')

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_SCHEMA = 2
EXIT_TRANSPORT = 3

DEFAULT_REPORT_DIR = 'report'

BENCH_FLAGS = (
    'schema_sizes', 'scales', 'invalid_pcts', 'configs', 'reps', 'rng_seed', 'parallel_cells',
)

RUN_FLAGS = (
    'schema', 'data', 'endpoint', 'output', 'dataset_id', 'strategy', 'seed_degree',
    'seed_constraints', 'rng_seed', 'config_name', 'page_size', 'max_query_len',
    'max_parts', 'max_answers', 'timeout', 'max_in_flight', 'rewriting', 'paged', 'prefetch',
)


def exit_code_for(exc: BaseException) -> int:
    """Map an exception to the documented exit code."""
    if isinstance(exc, TransportError):
        return EXIT_TRANSPORT
    if isinstance(exc, (SchemaError, PlannerError)):
        return EXIT_SCHEMA
    return EXIT_CONFIG


def _run_config(args):
    overrides = {name: getattr(args, name, None) for name in RUN_FLAGS}
    return load_run_config(overrides, config_path=getattr(args, 'config', None))


def _open_source(config):
    if config.endpoint:
        return RemoteSource(config.endpoint, config.max_answers, config.timeout, config.max_in_flight)
    if config.data:
        try:
            graph = load_ntriples_file(config.data)
        except OSError as exc:
            raise ConfigError(f"Cannot read data file {config.data}: {exc}") from exc
        return EmbeddedSource(graph, config.max_answers)
    raise ConfigError("Give a data file (--data) or an endpoint (--endpoint)")


def _load_schema(path):
    if not path:
        raise ConfigError("No schema given (--schema)")
    try:
        return load_schema(path)
    except OSError as exc:
        raise ConfigError(f"Cannot read schema {path}: {exc}") from exc


def _write(result, destination):
    metrics = summarize(result.trace)
    try:
        write_report(result.trace, metrics, destination, result.ledger.to_dict())
    except OSError as exc:
        raise ConfigError(f"Cannot write report to {destination}: {exc}") from exc
    return metrics


def cmd_validate(args):
    """Validate a schema and write verdicts, trace and metrics."""
    config = _run_config(args)
    schema = _load_schema(config.schema)
    destination = config.output or DEFAULT_REPORT_DIR
    source = _open_source(config)
    logger.info("Validating %d shapes against %s", len(schema), source.description)
    try:
        result = run_validation(schema, source, None, config)
    except TransportError as exc:
        partial = getattr(exc, 'result', None)
        if partial is not None:
            try:
                _write(partial, destination)
                print(f"Partial report written to {destination}", file=sys.stderr)
            except ConfigError as write_error:
                logger.error("%s", write_error)
        raise
    finally:
        source.close()

    metrics = _write(result, destination)
    counts = result.assignment.counts()
    print(f"Plan: {', '.join(result.plan.order)}")
    print(f"Verdicts: {metrics.comp} ({counts['true']} valid, {counts['false']} invalid atoms)")
    print(f"Rules grounded: {result.ledger.rules_grounded}")
    print(format_metrics(metrics), end='')
    print(f"Report written to {destination}")
    return EXIT_OK


def cmd_plan(args):
    """Explain the traversal plan of a schema without touching data."""
    config = _run_config(args)
    schema = _load_schema(config.schema)
    print(explain_plan(schema, config.planner), end='')
    return EXIT_OK


def _scale(text):
    try:
        return parse_scale(text)
    except ConfigError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def cmd_bench_generate(args):
    """Generate one testbed with its oracle manifest."""
    bench = load_bench_config({'rng_seed': args.rng_seed})
    spec = BenchSpec(
        args.schema_size if args.schema_size is not None else bench.schema_sizes[0],
        args.scale if args.scale is not None else bench.scales[0],
        args.invalid_pct if args.invalid_pct is not None else bench.invalid_pcts[-1],
        bench.rng_seed,
    )
    artifacts = generate_benchmark(spec)
    try:
        paths = write_benchmark(artifacts, args.output)
    except OSError as exc:
        raise ConfigError(f"Cannot write testbed to {args.output}: {exc}") from exc
    manifest = artifacts.manifest
    print(f"Generated {spec.label}: {manifest['triples']} triples, "
          f"{manifest['invalid']}/{manifest['targeted']} invalid "
          f"({manifest['invalid_pct_realized']:.2f}%)")
    for path in paths:
        print(f"  {path}")
    return EXIT_OK


def cmd_bench_matrix(args):
    """Run every spec against every configuration and print the comparison table."""
    bench = load_bench_config({name: getattr(args, name) for name in BENCH_FLAGS})
    specs = [
        BenchSpec(size, scale, pct, bench.rng_seed)
        for size in bench.schema_sizes for scale in bench.scales for pct in bench.invalid_pcts
    ]
    base = load_run_config({'page_size': args.page_size, 'max_answers': args.max_answers},
                           config_path=args.config)
    cells = run_matrix(specs, bench.configs, bench.reps, base, bench.parallel_cells)
    print(format_matrix(cells), end='')
    if args.output:
        try:
            os.makedirs(os.path.dirname(os.path.abspath(args.output)), exist_ok=True)
            with open(args.output, 'w', encoding='utf-8') as f:
                json.dump([c.to_dict() for c in cells], f, indent=2, sort_keys=True)
                f.write('\n')
        except OSError as exc:
            raise ConfigError(f"Cannot write matrix to {args.output}: {exc}") from exc
    failed = [c for c in cells if c.error]
    return EXIT_CONFIG if failed and len(failed) == len(cells) else EXIT_OK


def cmd_metrics(args):
    """Recompute the metrics of a report directory."""
    try:
        trace, stored, _ = read_report(args.report)
    except OSError as exc:
        raise ConfigError(f"Cannot read report {args.report}: {exc}") from exc
    metrics = summarize(trace, args.t)
    if trace.partial:
        print("(partial run)")
    print(format_metrics(metrics), end='')
    return EXIT_OK


def cmd_stub(args):
    """Serve an N-Triples file as a SPARQL endpoint until interrupted."""
    try:
        graph = load_ntriples_file(args.data)
    except OSError as exc:
        raise ConfigError(f"Cannot read data file {args.data}: {exc}") from exc
    stub = StubEndpoint(graph, max_answers=args.max_answers, host=args.host, port=args.port)
    print(stub.url, flush=True)
    try:
        stub.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        stub.stop()
    return EXIT_OK


def _add_planner_flags(parser):
    parser.add_argument('--strategy', choices=['bfs', 'dfs', 'random'], help='Traversal strategy')
    parser.add_argument('--seed-degree', dest='seed_degree', choices=['in', 'out'],
                        help='Prefer high in- or out-degree seeds')
    parser.add_argument('--seed-constraints', dest='seed_constraints', choices=['many', 'few'],
                        help='Tie-break on constraint count')
    parser.add_argument('--rng-seed', dest='rng_seed', type=int, help='Seed for the random strategy')
    parser.add_argument('--config-name', dest='config_name', choices=list(TRAVERSAL_CONFIGURATIONS),
                        help='Named planner configuration 1-9')


def _on_off(text):
    if text not in ('on', 'off'):
        raise argparse.ArgumentTypeError("expected on or off")
    return text == 'on'


def build_parser():
    parser = argparse.ArgumentParser(
        description='shacl-trav - traversal-optimized shape schema validation'
    )
    parser.add_argument('-v', '--verbose', action='store_true', help='Debug logging on stderr')
    parser.add_argument('--config', help='JSON run configuration file')

    subparsers = parser.add_subparsers(dest='command', help='Commands')

    # validate
    parser_validate = subparsers.add_parser('validate', help='Validate data against a schema')
    parser_validate.add_argument('--schema', help='Schema document (JSON)')
    parser_validate.add_argument('--data', help='N-Triples file')
    parser_validate.add_argument('--endpoint', help='SPARQL endpoint URL')
    parser_validate.add_argument('--output', help=f'Report directory (default: {DEFAULT_REPORT_DIR})')
    parser_validate.add_argument('--dataset-id', dest='dataset_id', help='Dataset label for the trace')
    _add_planner_flags(parser_validate)
    parser_validate.add_argument('--page-size', dest='page_size', type=int)
    parser_validate.add_argument('--max-query-len', dest='max_query_len', type=int)
    parser_validate.add_argument('--max-parts', dest='max_parts', type=int)
    parser_validate.add_argument('--max-answers', dest='max_answers', type=int)
    parser_validate.add_argument('--timeout', type=float)
    parser_validate.add_argument('--max-in-flight', dest='max_in_flight', type=int)
    parser_validate.add_argument('--rewriting', type=_on_off, help='on (default) or off')
    parser_validate.add_argument('--unpaged', dest='paged', action='store_const', const=False,
                                 help='Issue queries without LIMIT/OFFSET (diagnostic)')
    parser_validate.add_argument('--prefetch', action='store_const', const=True,
                                 help='Fetch the next page while grounding the current one')
    parser_validate.set_defaults(func=cmd_validate)

    # plan
    parser_plan = subparsers.add_parser('plan', help='Explain the traversal plan')
    parser_plan.add_argument('--schema', help='Schema document (JSON)')
    _add_planner_flags(parser_plan)
    parser_plan.set_defaults(func=cmd_plan)

    # bench
    parser_bench = subparsers.add_parser('bench', help='Testbed generation and comparison')
    bench_sub = parser_bench.add_subparsers(dest='bench_command')

    parser_generate = bench_sub.add_parser('generate', help='Generate a testbed')
    parser_generate.add_argument('--schema-size', dest='schema_size', type=int,
                                 choices=[3, 4, 7, 14], help='Default: first of SHACLTRAV_BENCH_SCHEMA_SIZES, or 3')
    parser_generate.add_argument('--scale', type=_scale,
                                 help=f"Approximate triples, or {'/'.join(SCALES)}")
    parser_generate.add_argument('--invalid-pct', dest='invalid_pct', type=float,
                                 help='Default: last of SHACLTRAV_BENCH_INVALID_PCTS, or 75')
    parser_generate.add_argument('--rng-seed', dest='rng_seed', type=int)
    parser_generate.add_argument('--output', required=True, help='Output directory')
    parser_generate.set_defaults(func=cmd_bench_generate)

    parser_matrix = bench_sub.add_parser('matrix', help='Compare configurations over testbeds')
    parser_matrix.add_argument('--schema-sizes', dest='schema_sizes', type=int, nargs='+')
    parser_matrix.add_argument('--scales', type=_scale, nargs='+')
    parser_matrix.add_argument('--invalid-pcts', dest='invalid_pcts', type=float, nargs='+')
    parser_matrix.add_argument('--configs', nargs='+', choices=list(TRAVERSAL_CONFIGURATIONS) + [OFF])
    parser_matrix.add_argument('--reps', type=int)
    parser_matrix.add_argument('--rng-seed', dest='rng_seed', type=int)
    parser_matrix.add_argument('--parallel-cells', dest='parallel_cells', type=int,
                               help='Cells evaluated at once (default 1)')
    parser_matrix.add_argument('--page-size', dest='page_size', type=int)
    parser_matrix.add_argument('--max-answers', dest='max_answers', type=int)
    parser_matrix.add_argument('--output', help='Write the table as JSON')
    parser_matrix.set_defaults(func=cmd_bench_matrix)

    # metrics
    parser_metrics = subparsers.add_parser('metrics', help='Recompute metrics of a report')
    parser_metrics.add_argument('report', help='Report directory')
    parser_metrics.add_argument('--t', type=float, help='Evaluate dief@t at this time (default: run end)')
    parser_metrics.set_defaults(func=cmd_metrics)

    # stub
    parser_stub = subparsers.add_parser('stub', help='Serve an N-Triples file over SPARQL')
    parser_stub.add_argument('--data', required=True, help='N-Triples file')
    parser_stub.add_argument('--host', default='127.0.0.1')
    parser_stub.add_argument('--port', type=int, default=8890)
    parser_stub.add_argument('--max-answers', dest='max_answers', type=int, default=10000)
    parser_stub.set_defaults(func=cmd_stub)

    return parser


def main(argv=None):
    """Main CLI entry point."""
    parser = build_parser()
    args = parser.parse_args(argv)

    logging.basicConfig(
        stream=sys.stderr,
        level=logging.DEBUG if args.verbose else logging.INFO,
        format='%(levelname)s %(name)s: %(message)s',
    )

    if not args.command or not hasattr(args, 'func'):
        parser.print_help()
        return EXIT_CONFIG

    try:
        return args.func(args)
    except (ShaclTravError, OSError) as exc:
        print(f"Error: {exc}", file=sys.stderr)
        return exit_code_for(exc)


if __name__ == '__main__':
    sys.exit(main())
