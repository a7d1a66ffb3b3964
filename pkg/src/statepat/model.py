"""Core data model for multi-statechart systems.

Every other module consumes and produces these types: a ``Model`` is a named
set of prioritized statecharts over a shared interface of events and bounded
integer variables, plus the query AST used by the verifier.  All types are
immutable values and safe to share across threads.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional, Union


@dataclass(frozen=True)
class SourceSpan:
    """Location of a construct in DSL source text (1-based line/column)."""

    line: int
    column: int
    length: int = 1


# Spans never participate in structural equality; transformed models carry
# synthesized nodes without source positions.
def _span_field():
    return field(default=None, compare=False, repr=False)


# ---------------------------------------------------------------------------
# expressions


@dataclass(frozen=True)
class IntLit:
    value: int
    span: Optional[SourceSpan] = _span_field()


@dataclass(frozen=True)
class BoolLit:
    value: bool
    span: Optional[SourceSpan] = _span_field()


@dataclass(frozen=True)
class VarRef:
    name: str
    span: Optional[SourceSpan] = _span_field()


@dataclass(frozen=True)
class Arith:
    """Integer arithmetic, `+` or `-`."""

    op: str
    left: "Expr"
    right: "Expr"
    span: Optional[SourceSpan] = _span_field()


@dataclass(frozen=True)
class Compare:
    """Integer comparison: one of < <= == != >= >."""

    op: str
    left: "Expr"
    right: "Expr"
    span: Optional[SourceSpan] = _span_field()


@dataclass(frozen=True)
class BoolOp:
    """Boolean connective, `&&` or `||`."""

    op: str
    left: "Expr"
    right: "Expr"
    span: Optional[SourceSpan] = _span_field()


@dataclass(frozen=True)
class Not:
    operand: "Expr"
    span: Optional[SourceSpan] = _span_field()


@dataclass(frozen=True)
class NativeCall:
    """Call to a registered native function, e.g. ``TWC.pop(2, 1)``."""

    name: str
    args: tuple["Expr", ...] = ()
    span: Optional[SourceSpan] = _span_field()


@dataclass(frozen=True)
class StateAtom:
    """Query atom ``Chart.State``: true when the chart is in that state."""

    chart: str
    state: str
    span: Optional[SourceSpan] = _span_field()


Expr = Union[IntLit, BoolLit, VarRef, Arith, Compare, BoolOp, Not, NativeCall, StateAtom]


# ---------------------------------------------------------------------------
# actions and transitions


@dataclass(frozen=True)
class Assign:
    """Variable assignment; the result saturates to the declared range."""

    var: str
    expr: Expr
    span: Optional[SourceSpan] = _span_field()


@dataclass(frozen=True)
class RaiseEvent:
    event: str
    span: Optional[SourceSpan] = _span_field()


Action = Union[Assign, RaiseEvent, NativeCall]


@dataclass(frozen=True)
class EventTrigger:
    event: str


@dataclass(frozen=True)
class TimeTrigger:
    """Fires once the chart has stayed in the source state >= `seconds` steps."""

    seconds: int


Trigger = Union[EventTrigger, TimeTrigger]


@dataclass(frozen=True)
class Transition:
    source: str
    target: str
    trigger: Optional[Trigger] = None
    guard: Optional[Expr] = None
    actions: tuple[Action, ...] = ()
    span: Optional[SourceSpan] = _span_field()


@dataclass(frozen=True)
class Statechart:
    """A flat statechart; declaration order of transitions is firing priority."""

    id: int
    name: str
    states: tuple[str, ...]
    initial: str
    transitions: tuple[Transition, ...] = ()
    manager: bool = False
    span: Optional[SourceSpan] = _span_field()

    def outgoing(self, state: str) -> tuple[Transition, ...]:
        return tuple(t for t in self.transitions if t.source == state)


@dataclass(frozen=True)
class VarDecl:
    name: str
    lo: int
    hi: int
    init: int
    span: Optional[SourceSpan] = _span_field()


@dataclass(frozen=True)
class InterfaceDecl:
    in_events: tuple[str, ...] = ()
    internal_events: tuple[str, ...] = ()
    variables: tuple[VarDecl, ...] = ()
    exe_orders: Optional[tuple[int, ...]] = None

    @property
    def events(self) -> tuple[str, ...]:
        return self.in_events + self.internal_events


@dataclass(frozen=True)
class Model:
    """A complete system: interface plus charts in ascending priority order.

    `patterns` records which model patterns were applied ("twc", "ceo"); a
    tagged model is rejected for re-transformation.
    """

    name: str
    interface: InterfaceDecl
    charts: tuple[Statechart, ...]
    patterns: frozenset[str] = frozenset()

    def chart(self, name: str) -> Statechart:
        for c in self.charts:
            if c.name == name:
                return c
        raise KeyError(name)

    @property
    def manager(self) -> Optional[Statechart]:
        for c in self.charts:
            if c.manager:
                return c
        return None

    @property
    def user_charts(self) -> tuple[Statechart, ...]:
        return tuple(c for c in self.charts if not c.manager)

    @property
    def event_ids(self) -> dict[str, int]:
        """Declaration-order event numbering, 1-based (in-events first)."""
        return {e: i + 1 for i, e in enumerate(self.interface.events)}

    @property
    def native_bindings(self) -> frozenset[str]:
        names: set[str] = set()
        for chart in self.charts:
            for tr in chart.transitions:
                if tr.guard is not None:
                    _collect_natives(tr.guard, names)
                for act in tr.actions:
                    if isinstance(act, NativeCall):
                        names.add(act.name)
                        for a in act.args:
                            _collect_natives(a, names)
                    elif isinstance(act, Assign):
                        _collect_natives(act.expr, names)
        return frozenset(names)


def _collect_natives(expr: Expr, out: set[str]) -> None:
    if isinstance(expr, NativeCall):
        out.add(expr.name)
        for a in expr.args:
            _collect_natives(a, out)
    elif isinstance(expr, (Arith, Compare, BoolOp)):
        _collect_natives(expr.left, out)
        _collect_natives(expr.right, out)
    elif isinstance(expr, Not):
        _collect_natives(expr.operand, out)


# ---------------------------------------------------------------------------
# queries


class QueryMode(enum.Enum):
    EXISTS_EVENTUALLY = "E<>"
    ALWAYS_GLOBALLY = "A[]"


@dataclass(frozen=True)
class Query:
    """TCTL-lite formula: E<> or A[] over a boolean state predicate."""

    mode: QueryMode
    pred: Expr
    text: str = field(default="", compare=False)


# ---------------------------------------------------------------------------
# validation

# Native functions the execution engine registers, with arity and result type.
NATIVE_SIGNATURES: dict[str, tuple[int, str]] = {
    "TWC.initEventQueue": (1, "int"),
    "TWC.push": (2, "unit"),
    "TWC.pop": (2, "bool"),
    "TWC.isNormalExe": (0, "bool"),
    "CEO.updateExeInfo": (1, "int"),
    "CEO.run": (1, "bool"),
}


@dataclass(frozen=True)
class Diagnostic:
    code: str
    message: str
    span: Optional[SourceSpan] = None

    def __str__(self) -> str:
        where = f"{self.span.line}:{self.span.column}: " if self.span else ""
        return f"{where}{self.message} [{self.code}]"


class _TypeError(Exception):
    def __init__(self, diag: Diagnostic):
        self.diag = diag


def validate_model(m: Model) -> list[Diagnostic]:
    """Check every structural invariant; returns one diagnostic per violation.

    Idempotent and side-effect free.  A model with no diagnostics is safe to
    hand to the execution engine.
    """
    diags: list[Diagnostic] = []
    out = diags.append

    ids = [c.id for c in m.charts]
    if sorted(ids) != list(range(1, len(ids) + 1)):
        out(Diagnostic("chart-ids", f"chart priority IDs must be unique and contiguous from 1, got {ids}"))
    elif ids != sorted(ids):
        out(Diagnostic("chart-order", "charts must be listed in ascending priority-ID order"))
    names = [c.name for c in m.charts]
    for name in sorted(set(n for n in names if names.count(n) > 1)):
        out(Diagnostic("chart-name", f"duplicate chart name {name!r}"))

    managers = [c for c in m.charts if c.manager]
    if len(managers) > 1:
        out(Diagnostic("manager", "at most one chart may be flagged manager"))
    elif managers and managers[0].id != 1:
        out(Diagnostic("manager", f"manager chart must have priority ID 1, got {managers[0].id}"))

    events = m.interface.events
    for ev in sorted(set(e for e in events if events.count(e) > 1)):
        out(Diagnostic("event-name", f"duplicate event declaration {ev!r}"))
    declared_vars = {v.name: v for v in m.interface.variables}
    if len(declared_vars) != len(m.interface.variables):
        out(Diagnostic("var-name", "duplicate variable declaration"))
    for v in m.interface.variables:
        if not (v.lo <= v.init <= v.hi):
            out(Diagnostic("var-range", f"variable {v.name}: initial {v.init} outside [{v.lo}, {v.hi}]", v.span))

    if m.interface.exe_orders is not None:
        orderable = sorted(c.id for c in m.charts if not c.manager)
        if sorted(m.interface.exe_orders) != orderable:
            out(Diagnostic(
                "exe-orders",
                f"order {list(m.interface.exe_orders)} is not a permutation of chart IDs {orderable}",
            ))

    event_set = set(events)
    internal_set = set(m.interface.internal_events)
    for chart in m.charts:
        state_list = list(chart.states)
        for s in sorted(set(s for s in state_list if state_list.count(s) > 1)):
            out(Diagnostic("state-name", f"chart {chart.name}: duplicate state {s!r}", chart.span))
        state_set = set(state_list)
        if chart.initial not in state_set:
            out(Diagnostic("initial", f"chart {chart.name}: initial state {chart.initial!r} is not declared", chart.span))
        for tr in chart.transitions:
            for endpoint in (tr.source, tr.target):
                if endpoint not in state_set:
                    out(Diagnostic("endpoint", f"chart {chart.name}: transition endpoint {endpoint!r} is not a declared state", tr.span))
            if isinstance(tr.trigger, EventTrigger) and tr.trigger.event not in event_set:
                out(Diagnostic("event-ref", f"chart {chart.name}: trigger event {tr.trigger.event!r} is not declared", tr.span))
            if isinstance(tr.trigger, TimeTrigger) and tr.trigger.seconds < 1:
                out(Diagnostic("after", f"chart {chart.name}: time trigger duration must be >= 1s", tr.span))
            if tr.guard is not None:
                try:
                    ty = _type_of(tr.guard, declared_vars, chart.name)
                    if ty != "bool":
                        out(Diagnostic("guard-type", f"chart {chart.name}: guard must be boolean, got {ty}", tr.span))
                except _TypeError as exc:
                    out(exc.diag)
            for act in tr.actions:
                _check_action(act, chart.name, declared_vars, internal_set, out)
    return diags


def _check_action(act: Action, chart: str, declared_vars, internal_set, out) -> None:
    if isinstance(act, Assign):
        if act.var not in declared_vars:
            out(Diagnostic("var-ref", f"chart {chart}: assignment to undeclared variable {act.var!r}", act.span))
        try:
            ty = _type_of(act.expr, declared_vars, chart)
            if ty != "int":
                out(Diagnostic("assign-type", f"chart {chart}: assignment to {act.var} must be integer, got {ty}", act.span))
        except _TypeError as exc:
            out(exc.diag)
    elif isinstance(act, RaiseEvent):
        if act.event not in internal_set:
            out(Diagnostic("raise", f"chart {chart}: raise of {act.event!r}, which is not a declared internal event", act.span))
    elif isinstance(act, NativeCall):
        try:
            _type_of(act, declared_vars, chart)
        except _TypeError as exc:
            out(exc.diag)


def _type_of(expr: Expr, declared_vars, chart: str) -> str:
    if isinstance(expr, IntLit):
        return "int"
    if isinstance(expr, BoolLit):
        return "bool"
    if isinstance(expr, VarRef):
        if expr.name not in declared_vars:
            raise _TypeError(Diagnostic("var-ref", f"chart {chart}: reference to undeclared variable {expr.name!r}", expr.span))
        return "int"
    if isinstance(expr, Arith):
        for side in (expr.left, expr.right):
            if _type_of(side, declared_vars, chart) != "int":
                raise _TypeError(Diagnostic("arith-type", f"chart {chart}: arithmetic over non-integer operand", expr.span))
        return "int"
    if isinstance(expr, Compare):
        for side in (expr.left, expr.right):
            if _type_of(side, declared_vars, chart) != "int":
                raise _TypeError(Diagnostic("cmp-type", f"chart {chart}: comparison over non-integer operand", expr.span))
        return "bool"
    if isinstance(expr, BoolOp):
        for side in (expr.left, expr.right):
            if _type_of(side, declared_vars, chart) != "bool":
                raise _TypeError(Diagnostic("bool-type", f"chart {chart}: {expr.op} over non-boolean operand", expr.span))
        return "bool"
    if isinstance(expr, Not):
        if _type_of(expr.operand, declared_vars, chart) != "bool":
            raise _TypeError(Diagnostic("bool-type", f"chart {chart}: ! over non-boolean operand", expr.span))
        return "bool"
    if isinstance(expr, NativeCall):
        sig = NATIVE_SIGNATURES.get(expr.name)
        if sig is None:
            raise _TypeError(Diagnostic("native", f"chart {chart}: unregistered native function {expr.name!r}", expr.span))
        arity, result = sig
        if len(expr.args) != arity:
            raise _TypeError(Diagnostic("native-arity", f"chart {chart}: {expr.name} takes {arity} argument(s), got {len(expr.args)}", expr.span))
        for a in expr.args:
            if _type_of(a, declared_vars, chart) != "int":
                raise _TypeError(Diagnostic("native-arg", f"chart {chart}: {expr.name} arguments must be integers", expr.span))
        return result
    if isinstance(expr, StateAtom):
        raise _TypeError(Diagnostic("atom", f"chart {chart}: state atoms are only valid in queries", expr.span))
    raise AssertionError(f"unknown expression node {expr!r}")


def conj(*parts: Optional[Expr]) -> Optional[Expr]:
    """Left-assoc `&&` of the non-None parts (None when all are None)."""
    present = [p for p in parts if p is not None]
    if not present:
        return None
    acc = present[0]
    for p in present[1:]:
        acc = BoolOp("&&", acc, p)
    return acc
