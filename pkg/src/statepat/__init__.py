"""statepat: prioritized synchronous statecharts with verifiably correct
model patterns (two-way communication, configurable execution order), an
interactive simulator, and an explicit-state model checker."""

from .model import (
    Diagnostic,
    InterfaceDecl,
    Model,
    Query,
    QueryMode,
    SourceSpan,
    Statechart,
    Transition,
    VarDecl,
    validate_model,
)
from .text import ParseError, parse_model, parse_query, parse_query_file, serialize_model
from .patterns import (
    PatternContractError,
    PatternError,
    PatternRuntime,
    apply_both,
    apply_ceo,
    apply_pattern,
    apply_twc,
    ceo_run,
    ceo_update_exe_info,
    twc_init_event_queue,
    twc_is_normal_exe,
    twc_pop,
    twc_push,
)
from .engine import (
    CompiledModel,
    CycleRecord,
    EngineError,
    RuntimeState,
    Session,
    StepTrace,
    compile_model,
    format_trace,
    init_session,
    run_cycle,
    timed_step,
)
from .verifier import (
    ResourceLimitError,
    Trace,
    VerificationResult,
    check_query,
    env_choices,
    explore,
    random_simulate,
    replay,
    violating_snapshot,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
