"""Deterministic priority-based synchronous interpreter.

One timed step is one second of model time and consists of one normal cycle
plus the logic cycles mandated by the applied patterns:

* untransformed model: 1 cycle;
* TWC: one cycle per chart including the Manager (queue phases);
* CEO: one cycle per ordered chart (token cycles);
* both: CEO token passes nest inside each TWC phase, so a cycle is a whole
  phase and a chart still fires at most once per cycle.

Charts are processed in ascending priority order within a pass; the first
transition (declaration order) whose trigger and guard are satisfied fires,
and events raised by plain ``raise`` actions are visible only to charts not
yet processed in that cycle.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Sequence

from .model import (
    Arith,
    Assign,
    BoolLit,
    BoolOp,
    Compare,
    EventTrigger,
    Expr,
    IntLit,
    Model,
    NativeCall,
    Not,
    RaiseEvent,
    TimeTrigger,
    VarRef,
    validate_model,
)
from .patterns import (
    PatternRuntime,
    ceo_run,
    ceo_update_exe_info,
    queue_capacity,
    twc_init_event_queue,
    twc_pop,
    twc_push,
)


class EngineError(Exception):
    """Structural or runtime execution failure (invalid model, unknown event)."""


_EMPTY: frozenset = frozenset()


@dataclass(frozen=True)
class RuntimeState:
    """Immutable execution snapshot at a cycle or timed-step boundary."""

    active: tuple[str, ...]         # active state name per chart, model order
    vars: tuple[int, ...]           # value per declared variable
    timers: tuple[int, ...]         # capped seconds-in-state per chart
    clock: int                      # whole seconds since init
    queue_events: tuple[int, ...]   # pattern queue E[]
    queue_senders: tuple[int, ...]  # pattern queue S[]
    exe: bool                       # normal-cycle flag
    cycle: int                      # pattern cycle counter c
    token: int                      # execution token t
    raised_now: frozenset = frozenset()  # always empty at boundaries

    def canonical(self) -> tuple:
        """Dedup key for exploration; excludes the clock (reporting only)."""
        return (
            self.active,
            self.vars,
            self.timers,
            self.queue_events,
            self.queue_senders,
            self.exe,
            self.cycle,
            self.token,
        )

    @property
    def pattern(self) -> PatternRuntime:
        """Queue/counter view of the pattern runtime (fresh mutable copy)."""
        return PatternRuntime(
            exe=self.exe,
            c=self.cycle,
            t=self.token,
            events=self.queue_events,
            senders=self.queue_senders,
        )


@dataclass(frozen=True)
class CycleRecord:
    kind: str  # "normal" or "logic:<i>"
    fired: tuple[tuple[str, str, str], ...]       # (chart, source, target)
    raised: tuple[tuple[str, str], ...]           # (event, raising chart)
    var_deltas: tuple[tuple[str, int, int], ...]  # (variable, old, new)
    snapshot: RuntimeState


@dataclass(frozen=True)
class StepTrace:
    step: int  # 1-based step number (clock value after the step)
    env: tuple[str, ...]
    cycles: tuple[CycleRecord, ...]


def _flatten_bool(expr: Expr, op: str) -> list[Expr]:
    if isinstance(expr, BoolOp) and expr.op == op:
        return _flatten_bool(expr.left, op) + _flatten_bool(expr.right, op)
    return [expr]


class _Ctx:
    __slots__ = ("active", "vars", "timers", "clock", "rt", "env", "raised", "raised_log")

    def __init__(self):
        self.active: list[int] = []
        self.vars: list[int] = []
        self.timers: list[int] = []
        self.clock = 0
        self.rt: PatternRuntime = PatternRuntime()
        self.env: frozenset = frozenset()
        self.raised: set[str] = set()
        self.raised_log: list[tuple[str, str]] = []


class _Transition:
    __slots__ = ("event", "after", "guard", "actions", "target", "source_name", "target_name")

    def __init__(self, event, after, guard, actions, target, source_name, target_name):
        self.event = event
        self.after = after
        self.guard = guard
        self.actions = actions
        self.target = target
        self.source_name = source_name
        self.target_name = target_name


class CompiledModel:
    """A validated model lowered to index-based tables and guard closures."""

    def __init__(self, model: Model):
        diags = validate_model(model)
        if diags:
            raise EngineError("model failed validation: " + "; ".join(str(d) for d in diags))
        self.model = model
        self.chart_names = tuple(c.name for c in model.charts)
        self.chart_ids = tuple(c.id for c in model.charts)
        self.manager_index = next((i for i, c in enumerate(model.charts) if c.manager), None)
        self.var_names = tuple(v.name for v in model.interface.variables)
        self._var_index = {n: i for i, n in enumerate(self.var_names)}
        self.var_bounds = tuple((v.lo, v.hi) for v in model.interface.variables)
        self.var_init = tuple(v.init for v in model.interface.variables)
        self.event_ids = model.event_ids
        self.event_names = {i: n for n, i in self.event_ids.items()}
        self.in_events = model.interface.in_events

        self.twc = "twc" in model.patterns
        self.ceo = "ceo" in model.patterns
        self.st_num_twc = len(model.charts)
        user = model.user_charts
        self.st_num_ceo = len(user)
        self.orders: tuple[int, ...] = ()
        if self.ceo:
            self.orders = model.interface.exe_orders or tuple(c.id for c in user)
        if (self.twc or self.ceo) and self.manager_index is None:
            raise EngineError("pattern-tagged model has no manager chart")
        self.capacity = queue_capacity(model)
        self.cycles_per_step = self.st_num_twc if self.twc else (self.st_num_ceo if self.ceo else 1)
        self.passes_per_cycle = self.st_num_ceo if (self.twc and self.ceo) else 1
        # Manager actions are driven at phase/pass boundaries, not in the pass.
        self.pass_indices = tuple(
            i
            for i in range(len(model.charts))
            if not (i == self.manager_index and (self.twc or self.ceo))
        )

        self.state_names: list[tuple[str, ...]] = []
        self.initial: list[int] = []
        self.timer_caps: list[int] = []
        self.table: list[list[list[_Transition]]] = []  # chart -> state -> transitions
        for chart in model.charts:
            names = chart.states if chart.states else (chart.initial,)
            index = {s: i for i, s in enumerate(names)}
            self.state_names.append(tuple(names))
            self.initial.append(index[chart.initial])
            cap = 0
            by_state: list[list[_Transition]] = [[] for _ in names]
            for tr in chart.transitions:
                event = tr.trigger.event if isinstance(tr.trigger, EventTrigger) else None
                after = tr.trigger.seconds if isinstance(tr.trigger, TimeTrigger) else None
                if after is not None:
                    cap = max(cap, after)
                guard = self._compile_expr(tr.guard) if tr.guard is not None else None
                actions = tuple(self._compile_action(a, chart.name) for a in tr.actions)
                by_state[index[tr.source]].append(
                    _Transition(event, after, guard, actions, index[tr.target], tr.source, tr.target)
                )
            self.table.append(by_state)
            self.timer_caps.append(cap)

    # -- expression compilation -------------------------------------------

    def _compile_expr(self, expr: Expr) -> Callable[[_Ctx], object]:
        if isinstance(expr, IntLit):
            value = expr.value
            return lambda ctx: value
        if isinstance(expr, BoolLit):
            value = expr.value
            return lambda ctx: value
        if isinstance(expr, VarRef):
            idx = self._var_index[expr.name]
            return lambda ctx: ctx.vars[idx]
        if isinstance(expr, Arith):
            left, right = self._compile_expr(expr.left), self._compile_expr(expr.right)
            if expr.op == "+":
                return lambda ctx: left(ctx) + right(ctx)
            return lambda ctx: left(ctx) - right(ctx)
        if isinstance(expr, Compare):
            left = self._compile_expr(expr.left)
            op = expr.op
            if isinstance(expr.right, IntLit):
                # Comparisons against literals dominate transformed guards.
                k = expr.right.value
                if op == "<":
                    return lambda ctx: left(ctx) < k
                if op == "<=":
                    return lambda ctx: left(ctx) <= k
                if op == "==":
                    return lambda ctx: left(ctx) == k
                if op == "!=":
                    return lambda ctx: left(ctx) != k
                if op == ">=":
                    return lambda ctx: left(ctx) >= k
                return lambda ctx: left(ctx) > k
            right = self._compile_expr(expr.right)
            if op == "<":
                return lambda ctx: left(ctx) < right(ctx)
            if op == "<=":
                return lambda ctx: left(ctx) <= right(ctx)
            if op == "==":
                return lambda ctx: left(ctx) == right(ctx)
            if op == "!=":
                return lambda ctx: left(ctx) != right(ctx)
            if op == ">=":
                return lambda ctx: left(ctx) >= right(ctx)
            return lambda ctx: left(ctx) > right(ctx)
        if isinstance(expr, BoolOp):
            # Flatten &&/|| chains into a single short-circuiting closure.
            parts = tuple(self._compile_expr(p) for p in _flatten_bool(expr, expr.op))
            if expr.op == "&&":

                def conj_eval(ctx, _parts=parts):
                    for p in _parts:
                        if not p(ctx):
                            return False
                    return True

                return conj_eval

            def disj_eval(ctx, _parts=parts):
                for p in _parts:
                    if p(ctx):
                        return True
                return False

            return disj_eval
        if isinstance(expr, Not):
            operand = self._compile_expr(expr.operand)
            return lambda ctx: not operand(ctx)
        if isinstance(expr, NativeCall):
            return self._compile_native(expr)
        raise EngineError(f"cannot compile expression {expr!r}")

    def _compile_native(self, call: NativeCall) -> Callable[[_Ctx], object]:
        name = call.name
        literal = all(isinstance(a, IntLit) for a in call.args)
        if name == "TWC.pop" and literal:
            # Transformed models always pass literal IDs: check the contract
            # once here and inline the queue scan (identical to twc_pop).
            e, r = (a.value for a in call.args)
            if not (e > 0 and r > 0):
                raise EngineError(f"TWC.pop requires positive literal IDs, got ({e}, {r})")

            def pop_literal(ctx, _e=e, _r=r):
                rt = ctx.rt
                events = rt.events
                senders = rt.senders
                exe = rt.exe
                for i in range(len(events)):
                    if events[i] == _e and ((exe and _r > senders[i]) or (not exe and _r < senders[i])):
                        return True
                return False

            return pop_literal
        if name == "CEO.run" and literal:
            (st,) = (a.value for a in call.args)
            if st <= 0:
                raise EngineError(f"CEO.run requires a positive literal chart ID, got {st}")
            return lambda ctx: ctx.rt.orders[ctx.rt.t - 1] == st
        if name == "TWC.isNormalExe":
            return lambda ctx: ctx.rt.exe
        args = tuple(self._compile_expr(a) for a in call.args)
        if name == "TWC.pop":
            e, r = args
            return lambda ctx: twc_pop(ctx.rt, e(ctx), r(ctx))
        if name == "CEO.run":
            (st,) = args
            return lambda ctx: ceo_run(ctx.rt, st(ctx))
        if name == "TWC.push":
            e, s = args
            return lambda ctx: twc_push(ctx.rt, e(ctx), s(ctx))
        if name == "TWC.initEventQueue":
            (st,) = args
            return lambda ctx: twc_init_event_queue(ctx.rt, st(ctx), ctx.rt.c)
        if name == "CEO.updateExeInfo":
            (st,) = args
            return lambda ctx: ceo_update_exe_info(ctx.rt, st(ctx))
        raise EngineError(f"unregistered native function {name!r}")

    def _compile_action(self, action, chart_name: str) -> Callable[[_Ctx], None]:
        if isinstance(action, Assign):
            idx = self._var_index[action.var]
            lo, hi = self.var_bounds[idx]
            value = self._compile_expr(action.expr)

            def assign(ctx, _idx=idx, _lo=lo, _hi=hi, _value=value):
                v = _value(ctx)
                if v < _lo:
                    v = _lo
                elif v > _hi:
                    v = _hi
                ctx.vars[_idx] = v

            return assign
        if isinstance(action, RaiseEvent):
            name = action.event

            def raise_event(ctx, _name=name, _chart=chart_name):
                ctx.raised.add(_name)
                ctx.raised_log.append((_name, _chart))

            return raise_event
        if isinstance(action, NativeCall):
            if action.name == "TWC.push":
                e, s = (self._compile_expr(a) for a in action.args)
                names = self.event_names

                def push(ctx, _e=e, _s=s, _chart=chart_name, _names=names):
                    eid = _e(ctx)
                    twc_push(ctx.rt, eid, _s(ctx))
                    ctx.raised_log.append((_names.get(eid, f"#{eid}"), _chart))

                return push
            fn = self._compile_native(action)
            return lambda ctx, _fn=fn: (_fn(ctx), None)[1]
        raise EngineError(f"cannot compile action {action!r}")

    # -- state conversion ---------------------------------------------------

    def initial_state(self) -> RuntimeState:
        return RuntimeState(
            active=tuple(self.state_names[i][s] for i, s in enumerate(self.initial)),
            vars=self.var_init,
            timers=tuple(0 for _ in self.chart_names),
            clock=0,
            queue_events=(),
            queue_senders=(),
            exe=True,
            cycle=0,
            token=self.st_num_ceo if self.ceo else 1,
        )

    def thaw(self, state: RuntimeState) -> _Ctx:
        ctx = _Ctx()
        ctx.active = [self.state_names[i].index(s) for i, s in enumerate(state.active)]
        ctx.vars = list(state.vars)
        ctx.timers = list(state.timers)
        ctx.clock = state.clock
        ctx.rt = PatternRuntime(
            capacity=self.capacity,
            orders=self.orders,
            exe=state.exe,
            c=state.cycle,
            t=state.token,
            events=state.queue_events,
            senders=state.queue_senders,
        )
        return ctx

    def freeze(self, ctx: _Ctx) -> RuntimeState:
        rt = ctx.rt
        return RuntimeState(
            active=tuple(self.state_names[i][s] for i, s in enumerate(ctx.active)),
            vars=tuple(ctx.vars),
            timers=tuple(ctx.timers),
            clock=ctx.clock,
            queue_events=tuple(rt.events),
            queue_senders=tuple(rt.senders),
            exe=rt.exe,
            cycle=rt.c,
            token=rt.t,
        )

    def is_normal(self, state: RuntimeState) -> bool:
        """Whether the next cycle run from `state` is the step's normal cycle."""
        if self.twc:
            return state.cycle == 0
        if self.ceo:
            return state.token == self.st_num_ceo
        return True

    def describe(self, state: RuntimeState) -> dict:
        """Name-keyed snapshot used by the service and trace tooling."""
        return {
            "active": dict(zip(self.chart_names, state.active)),
            "vars": dict(zip(self.var_names, state.vars)),
            "timers": dict(zip(self.chart_names, state.timers)),
            "clock": state.clock,
            "queue": [
                {"event": self.event_names.get(e, f"#{e}"), "sender": self._chart_by_id(s)}
                for e, s in zip(state.queue_events, state.queue_senders)
            ],
            "normal_exe": state.exe,
            "cycle_counter": state.cycle,
            "token": state.token if self.ceo else None,
        }

    def _chart_by_id(self, cid: int) -> str:
        for name, i in zip(self.chart_names, self.chart_ids):
            if i == cid:
                return name
        return f"#{cid}"

    # -- execution ------------------------------------------------------------

    def _run_pass(self, ctx: _Ctx, fired_cycle: set, rec_fired: Optional[list]) -> None:
        active = ctx.active
        timers = ctx.timers
        env = ctx.env
        raised = ctx.raised
        table = self.table
        for ci in self.pass_indices:
            if ci in fired_cycle:
                continue  # at most one transition per chart per cycle
            for tr in table[ci][active[ci]]:
                if tr.event is not None and tr.event not in env and tr.event not in raised:
                    continue
                if tr.after is not None and timers[ci] < tr.after:
                    continue
                if tr.guard is not None and not tr.guard(ctx):
                    continue
                for act in tr.actions:
                    act(ctx)
                active[ci] = tr.target
                timers[ci] = 0  # state (re-)entry resets the timer
                fired_cycle.add(ci)
                if rec_fired is not None:
                    rec_fired.append((self.chart_names[ci], tr.source_name, tr.target_name))
                break
        if raised:
            raised.clear()

    def run_cycle_ctx(self, ctx: _Ctx, normal: bool, env: frozenset) -> CycleRecord:
        if normal:
            kind = "normal"
        elif self.twc:
            kind = f"logic:{ctx.rt.c}"  # pre-advance counter = phase index
        else:
            kind = f"logic:{ctx.rt.t}"  # pre-advance token = cycle index
        rec_fired: list[tuple[str, str, str]] = []
        ctx.raised_log = []
        old_vars = list(ctx.vars)
        if self.twc:
            twc_init_event_queue(ctx.rt, self.st_num_twc, ctx.rt.c)
            if normal:
                for name in sorted(env):
                    twc_push(ctx.rt, self.event_ids[name], 1)  # sender 1: environment proxy
        if self.manager_index is not None and (self.twc or self.ceo):
            mi = self.manager_index
            mstate = self.state_names[mi][ctx.active[mi]]
            rec_fired.append((self.chart_names[mi], mstate, mstate))
        ctx.env = env if (normal and not self.twc) else frozenset()
        fired_cycle: set[int] = set()
        for _ in range(self.passes_per_cycle):
            if self.ceo:
                ceo_update_exe_info(ctx.rt, self.st_num_ceo)
            self._run_pass(ctx, fired_cycle, rec_fired)
        deltas = tuple(
            (self.var_names[i], old, new)
            for i, (old, new) in enumerate(zip(old_vars, ctx.vars))
            if old != new
        )
        return CycleRecord(
            kind=kind,
            fired=tuple(rec_fired),
            raised=tuple(ctx.raised_log),
            var_deltas=deltas,
            snapshot=self.freeze(ctx),
        )

    def run_cycle_fast(self, ctx: _Ctx, normal: bool, env: frozenset) -> None:
        """Record-free cycle execution; the hot path for exploration."""
        if ctx.raised_log:
            del ctx.raised_log[:]
        if self.twc:
            twc_init_event_queue(ctx.rt, self.st_num_twc, ctx.rt.c)
            if normal:
                for name in sorted(env):
                    twc_push(ctx.rt, self.event_ids[name], 1)
        ctx.env = env if (normal and not self.twc) else _EMPTY
        fired_cycle: set[int] = set()
        for _ in range(self.passes_per_cycle):
            if self.ceo:
                ceo_update_exe_info(ctx.rt, self.st_num_ceo)
            self._run_pass(ctx, fired_cycle, None)

    def finish_step(self, ctx: _Ctx) -> None:
        """Clock and timer bookkeeping after the step's last cycle."""
        ctx.clock += 1
        for ci, cap in enumerate(self.timer_caps):
            if ctx.timers[ci] < cap:
                ctx.timers[ci] += 1

    def step_fast(self, ctx: _Ctx, env: frozenset) -> None:
        for i in range(self.cycles_per_step):
            self.run_cycle_fast(ctx, i == 0, env if i == 0 else _EMPTY)
        self.finish_step(ctx)


_COMPILE_CACHE: dict[int, tuple[Model, CompiledModel]] = {}


def compile_model(model: Model) -> CompiledModel:
    cached = _COMPILE_CACHE.get(id(model))
    if cached is not None and cached[0] is model:
        return cached[1]
    cm = CompiledModel(model)
    if len(_COMPILE_CACHE) > 256:
        _COMPILE_CACHE.clear()
    _COMPILE_CACHE[id(model)] = (model, cm)
    return cm


def _as_compiled(model) -> CompiledModel:
    return model if isinstance(model, CompiledModel) else compile_model(model)


def init_session(model) -> RuntimeState:
    """Initial snapshot: charts in initial states, declared variable initials,
    clock 0, empty queue, counters reset."""
    return _as_compiled(model).initial_state()


def run_cycle(model, state: RuntimeState, env_events: Iterable[str] = ()) -> tuple[RuntimeState, CycleRecord]:
    """Execute one execution cycle (normal or logic, per the state's position)."""
    cm = _as_compiled(model)
    env = frozenset(env_events)
    _check_env(cm, env)
    ctx = cm.thaw(state)
    record = cm.run_cycle_ctx(ctx, cm.is_normal(state), env)
    return record.snapshot, record


def timed_step(model, state: RuntimeState, env_events: Iterable[str] = ()) -> tuple[RuntimeState, StepTrace]:
    """Advance one second: one normal cycle, the pattern's logic cycles, then
    clock/timer bookkeeping.  Environment events reach only the normal cycle."""
    cm = _as_compiled(model)
    env = frozenset(env_events)
    _check_env(cm, env)
    ctx = cm.thaw(state)
    records = []
    for i in range(cm.cycles_per_step):
        records.append(cm.run_cycle_ctx(ctx, i == 0, env if i == 0 else _EMPTY))
    cm.finish_step(ctx)
    final = cm.freeze(ctx)
    trace = StepTrace(step=final.clock, env=tuple(sorted(env)), cycles=tuple(records))
    return final, trace


def _check_env(cm: CompiledModel, env: frozenset) -> None:
    for name in env:
        if name not in cm.in_events:
            raise EngineError(f"unknown in-event {name!r}")


class Session:
    """Single-threaded interactive session: inject events, step time."""

    def __init__(self, model: Model, history_bound: int = 500):
        self.cm = compile_model(model)
        self.model = model
        self.state = self.cm.initial_state()
        self.pending: set[str] = set()
        self.history: list[StepTrace] = []
        self.history_bound = history_bound

    def inject(self, event: str) -> None:
        """Queue an in-event for the next step; re-injection is idempotent."""
        if event not in self.cm.in_events:
            raise EngineError(f"unknown in-event {event!r}")
        self.pending.add(event)

    def step(self, count: int = 1) -> list[StepTrace]:
        traces = []
        for _ in range(count):
            env = frozenset(self.pending)
            self.pending.clear()
            self.state, trace = timed_step(self.cm, self.state, env)
            traces.append(trace)
        self.history.extend(traces)
        if len(self.history) > self.history_bound:
            del self.history[: len(self.history) - self.history_bound]
        return traces


def format_trace(model, traces: Sequence[StepTrace]) -> str:
    """Stable dump: one line per cycle per chart (see docs/dsl.md)."""
    cm = _as_compiled(model)
    lines = []
    for trace in traces:
        for rec in trace.cycles:
            fired = {chart: f"{src}->{dst}" for chart, src, dst in rec.fired}
            raised: dict[str, list[str]] = {}
            for event, chart in rec.raised:
                raised.setdefault(chart, []).append(event)
            vars_text = ",".join(f"{n}:{v}" for n, v in zip(cm.var_names, rec.snapshot.vars))
            for chart in cm.chart_names:
                lines.append(
                    f"step={trace.step} cycle={rec.kind} chart={chart}"
                    f" fired={fired.get(chart, '-')}"
                    f" raised=[{','.join(raised.get(chart, []))}]"
                    f" vars={{{vars_text}}}"
                )
    return "\n".join(lines) + ("\n" if lines else "")
