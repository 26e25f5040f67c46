"""shacl-trav - Package initialization."""

from .assignment import Assignment, ConstraintState, GroundingLedger, Verdict
from .bench import BenchSpec, generate_benchmark, run_matrix, university_schema
from .config import RunConfig, load_run_config
from .engine import ValidationEngine, ValidationResult, build_plan, run_validation
from .metrics import AnswerTrace, MetricSet, dief_at_t, summarize, write_report
from .oracle import oracle_verdicts
from .planner import PlannerConfig, TraversalPlan, explain_plan, plan_traversal
from .query import SelectQuery, gen_max_queries, gen_min_query, gen_target_query, serialize
from .schema import ShapeSchema, build_dependency_graph, parse_schema, stratify
from .sources import EmbeddedSource, RemoteSource, evaluate_all_pages
from .store import Graph, load_ntriples

__all__ = [
    'Assignment',
    'ConstraintState',
    'GroundingLedger',
    'Verdict',
    'BenchSpec',
    'generate_benchmark',
    'run_matrix',
    'university_schema',
    'RunConfig',
    'load_run_config',
    'ValidationEngine',
    'ValidationResult',
    'build_plan',
    'run_validation',
    'AnswerTrace',
    'MetricSet',
    'dief_at_t',
    'summarize',
    'write_report',
    'oracle_verdicts',
    'PlannerConfig',
    'TraversalPlan',
    'explain_plan',
    'plan_traversal',
    'SelectQuery',
    'gen_max_queries',
    'gen_min_query',
    'gen_target_query',
    'serialize',
    'ShapeSchema',
    'build_dependency_graph',
    'parse_schema',
    'stratify',
    'EmbeddedSource',
    'RemoteSource',
    'evaluate_all_pages',
    'Graph',
    'load_ntriples',
]
