"""Static assertion verifier for interrupt-driven programs.

Analyzes programs made of prioritized interrupt handlers sharing global
variables: each handler is analyzed in isolation over an interval domain, the
values it stores are propagated to the other handlers' reads, and the process
iterates to a fixed point. A priority-aware feasibility pass proves certain
cross-handler store-to-load flows impossible and removes them from the
propagation, which turns many spurious warnings into proofs. A bounded
concrete-execution oracle provides ground truth on small instances.
"""

from .analyzer import (
    AnalysisConfig,
    AnalysisReport,
    AnalysisResult,
    analyze,
    analyze_local,
    analyze_program,
    collect_interferences,
)
from .cfg import AccessInfo, Cfg, NodeId, access_info, build_cfg, dominators, post_dominators
from .domain import AbstractState, Interval, Verdict, check_assert, join, leq, transfer, widen
from .feasibility import (
    FactBase,
    FeasibilityResult,
    covered_loads,
    extract_facts,
    intercepted_stores,
    must_not_read_from,
    no_preempt,
)
from .ir import Diagnostic, Handler, Program, format_program, validate
from .oracle import (
    OracleConfig,
    OracleLimitError,
    OracleResult,
    SchedulerState,
    collect_traces,
    enumerate_executions,
    thread_enumerate,
)
from .parser import ParseError, parse_file, parse_program

__version__ = "0.1.0"

__all__ = [
    "AbstractState",
    "AccessInfo",
    "AnalysisConfig",
    "AnalysisReport",
    "AnalysisResult",
    "Cfg",
    "Diagnostic",
    "FactBase",
    "FeasibilityResult",
    "Handler",
    "Interval",
    "NodeId",
    "OracleConfig",
    "OracleLimitError",
    "OracleResult",
    "ParseError",
    "Program",
    "SchedulerState",
    "Verdict",
    "access_info",
    "analyze",
    "analyze_local",
    "analyze_program",
    "build_cfg",
    "check_assert",
    "collect_interferences",
    "collect_traces",
    "covered_loads",
    "dominators",
    "enumerate_executions",
    "extract_facts",
    "format_program",
    "intercepted_stores",
    "join",
    "leq",
    "must_not_read_from",
    "no_preempt",
    "parse_file",
    "parse_program",
    "post_dominators",
    "thread_enumerate",
    "transfer",
    "validate",
    "widen",
]
