"""Explicit-state exhaustive model checker for TCTL-lite queries.

Exploration is a breadth-first search over timed-step successors; nodes are
deduplicated on the canonical snapshot (clock excluded).  Query predicates
are evaluated at the initial state and after every execution cycle, so
intermediate states inside a step count; BFS therefore yields a shortest
counterexample/witness in steps.
"""
from __future__ import annotations

import itertools
import time
from collections import deque
from dataclasses import dataclass
from typing import Callable, Optional

from .engine import CompiledModel, RuntimeState, StepTrace, _EMPTY, compile_model, timed_step
from .model import (
    BoolLit,
    BoolOp,
    Compare,
    Expr,
    IntLit,
    Model,
    Not,
    Query,
    QueryMode,
    StateAtom,
    VarRef,
)

DEFAULT_STATE_LIMIT = 10**6

ENV_POLICIES = ("one-or-none", "subset", "closed")


class QueryError(Exception):
    """Query atom does not resolve against the model."""


class ResourceLimitError(Exception):
    """State-count limit exceeded before a verdict was reached."""

    def __init__(self, limit: int, states: int):
        super().__init__(f"state limit {limit} exceeded after {states} states")
        self.limit = limit
        self.states = states


def env_choices(model, policy: str = "one-or-none") -> tuple[frozenset, ...]:
    """Environment alternatives per timed step, in deterministic order."""
    cm = model if isinstance(model, CompiledModel) else compile_model(model)
    events = cm.in_events
    if policy == "closed":
        return (_EMPTY,)
    if policy == "one-or-none":
        return (_EMPTY,) + tuple(frozenset((e,)) for e in events)
    if policy == "subset":
        out = []
        for size in range(len(events) + 1):
            for combo in itertools.combinations(events, size):
                out.append(frozenset(combo))
        return tuple(out)
    raise ValueError(f"unknown env policy {policy!r} (expected one of {ENV_POLICIES})")


@dataclass(frozen=True)
class Trace:
    """Replayable schedule: injected events per step, ending at `terminal`.

    `violation_cycle` is the cycle index inside the last step at which the
    predicate flipped, or None when the initial state itself is the witness.
    """

    steps: tuple[tuple[str, ...], ...]
    terminal: RuntimeState
    violation_cycle: Optional[int] = None


@dataclass(frozen=True)
class VerificationResult:
    query: Query
    verdict: str  # "holds" | "fails"
    trace: Optional[Trace]
    states: int
    frontier_peak: int
    wall_time: float

    @property
    def holds(self) -> bool:
        return self.verdict == "holds"

    @property
    def trace_len(self) -> int:
        return len(self.trace.steps) if self.trace is not None else 0


@dataclass
class StateGraph:
    nodes: list[RuntimeState]
    edges: list[list[tuple[int, int]]]  # node -> [(choice index, successor)]
    parents: list[Optional[tuple[int, int]]]  # node -> (predecessor, choice index)
    choices: tuple[frozenset, ...]
    step_traces: Optional[list[list[StepTrace]]]  # per node, per choice (when recorded)
    frontier_peak: int
    wall_time: float

    @property
    def states(self) -> int:
        return len(self.nodes)


# ---------------------------------------------------------------------------
# predicates


def compile_predicate(model, pred: Expr) -> Callable[[RuntimeState], bool]:
    """Predicate over immutable snapshots (used on recorded traces)."""
    cm = model if isinstance(model, CompiledModel) else compile_model(model)
    fn = _compile_pred(cm, pred, on_ctx=False)
    return fn


def _compile_pred(cm: CompiledModel, pred: Expr, on_ctx: bool) -> Callable:
    """Compile against either snapshots (`.active` names) or the mutable
    execution context (`.active` indices); the hot simulation path uses the
    latter."""
    if isinstance(pred, BoolLit):
        value = pred.value
        return lambda s: value
    if isinstance(pred, IntLit):
        value = pred.value
        return lambda s: value
    if isinstance(pred, VarRef):
        if pred.name not in cm.var_names:
            raise QueryError(f"unknown variable {pred.name!r} in query")
        idx = cm.var_names.index(pred.name)
        return lambda s: s.vars[idx]
    if isinstance(pred, StateAtom):
        if pred.chart not in cm.chart_names:
            raise QueryError(f"unknown chart {pred.chart!r} in query")
        ci = cm.chart_names.index(pred.chart)
        if pred.state not in cm.state_names[ci]:
            raise QueryError(f"chart {pred.chart} has no state {pred.state!r}")
        if on_ctx:
            si = cm.state_names[ci].index(pred.state)
            return lambda s: s.active[ci] == si
        name = pred.state
        return lambda s: s.active[ci] == name
    if isinstance(pred, Compare):
        left = _compile_pred(cm, pred.left, on_ctx)
        right = _compile_pred(cm, pred.right, on_ctx)
        op = pred.op
        if op == "<":
            return lambda s: left(s) < right(s)
        if op == "<=":
            return lambda s: left(s) <= right(s)
        if op == "==":
            return lambda s: left(s) == right(s)
        if op == "!=":
            return lambda s: left(s) != right(s)
        if op == ">=":
            return lambda s: left(s) >= right(s)
        return lambda s: left(s) > right(s)
    if isinstance(pred, BoolOp):
        left = _compile_pred(cm, pred.left, on_ctx)
        right = _compile_pred(cm, pred.right, on_ctx)
        if pred.op == "&&":
            return lambda s: left(s) and right(s)
        return lambda s: left(s) or right(s)
    if isinstance(pred, Not):
        operand = _compile_pred(cm, pred.operand, on_ctx)
        return lambda s: not operand(s)
    raise QueryError(f"unsupported query node {pred!r}")


# ---------------------------------------------------------------------------
# exploration


def explore(
    model,
    policy: str = "one-or-none",
    limit: int = DEFAULT_STATE_LIMIT,
    record_traces: bool = False,
) -> StateGraph:
    """BFS the full reachable graph of timed-step boundary snapshots."""
    cm = model if isinstance(model, CompiledModel) else compile_model(model)
    choices = env_choices(cm, policy)
    started = time.perf_counter()
    init = cm.initial_state()
    nodes = [init]
    index = {init.canonical(): 0}
    edges: list[list[tuple[int, int]]] = [[]]
    parents: list[Optional[tuple[int, int]]] = [None]
    step_traces: Optional[list[list[StepTrace]]] = [[]] if record_traces else None
    frontier = deque([0])
    peak = 1
    while frontier:
        peak = max(peak, len(frontier))
        at = frontier.popleft()
        state = nodes[at]
        for c_i, env in enumerate(choices):
            nxt, trace = timed_step(cm, state, env)
            key = nxt.canonical()
            succ = index.get(key)
            if succ is None:
                succ = len(nodes)
                if succ >= limit:
                    raise ResourceLimitError(limit, succ)
                index[key] = succ
                nodes.append(nxt)
                edges.append([])
                parents.append((at, c_i))
                if step_traces is not None:
                    step_traces.append([])
                frontier.append(succ)
            edges[at].append((c_i, succ))
            if step_traces is not None:
                step_traces[at].append(trace)
    return StateGraph(
        nodes=nodes,
        edges=edges,
        parents=parents,
        choices=choices,
        step_traces=step_traces,
        frontier_peak=peak,
        wall_time=time.perf_counter() - started,
    )


def check_query(
    model,
    query: Query,
    policy: str = "one-or-none",
    limit: int = DEFAULT_STATE_LIMIT,
) -> VerificationResult:
    """Decide one query by exhaustive BFS.

    A[] p holds iff p is true in every reachable cycle state; E<> p holds iff
    p is true in some reachable cycle state.  The recorded trace (shortest in
    steps) is a counterexample for a failed A[] or a witness for a satisfied
    E<>.
    """
    cm = model if isinstance(model, CompiledModel) else compile_model(model)
    pred = _compile_pred(cm, query.pred, on_ctx=True)
    exists = query.mode is QueryMode.EXISTS_EVENTUALLY
    choices = env_choices(cm, policy)
    started = time.perf_counter()

    init = cm.initial_state()
    init_ctx = cm.thaw(init)
    if pred(init_ctx) == exists:
        # The initial state itself decides the query (E<> witness / A[] violation).
        trace = Trace(steps=(), terminal=init, violation_cycle=None)
        return VerificationResult(
            query=query,
            verdict="holds" if exists else "fails",
            trace=trace,
            states=1,
            frontier_peak=1,
            wall_time=time.perf_counter() - started,
        )

    nodes = [init]
    index = {init.canonical(): 0}
    parents: list[Optional[tuple[int, int]]] = [None]
    frontier = deque([0])
    peak = 1
    while frontier:
        peak = max(peak, len(frontier))
        at = frontier.popleft()
        state = nodes[at]
        for c_i, env in enumerate(choices):
            ctx = cm.thaw(state)
            hit: Optional[int] = None
            for k in range(cm.cycles_per_step):
                cm.run_cycle_fast(ctx, k == 0, env if k == 0 else _EMPTY)
                if hit is None and pred(ctx) == exists:
                    hit = k
            cm.finish_step(ctx)
            nxt = cm.freeze(ctx)
            if hit is not None:
                steps = _schedule(parents, nodes, choices, at) + (tuple(sorted(env)),)
                trace = Trace(steps=steps, terminal=nxt, violation_cycle=hit)
                return VerificationResult(
                    query=query,
                    verdict="holds" if exists else "fails",
                    trace=trace,
                    states=len(nodes),
                    frontier_peak=peak,
                    wall_time=time.perf_counter() - started,
                )
            key = nxt.canonical()
            if key not in index:
                succ = len(nodes)
                if succ >= limit:
                    raise ResourceLimitError(limit, succ)
                index[key] = succ
                nodes.append(nxt)
                parents.append((at, c_i))
                frontier.append(succ)
    # Exhausted the reachable space without hitting the target predicate value.
    return VerificationResult(
        query=query,
        verdict="fails" if exists else "holds",
        trace=None,
        states=len(nodes),
        frontier_peak=peak,
        wall_time=time.perf_counter() - started,
    )


def _schedule(parents, nodes, choices, at: int) -> tuple[tuple[str, ...], ...]:
    envs: list[tuple[str, ...]] = []
    while parents[at] is not None:
        pred_idx, c_i = parents[at]
        envs.append(tuple(sorted(choices[c_i])))
        at = pred_idx
    envs.reverse()
    return tuple(envs)


def replay(model, trace: Trace) -> RuntimeState:
    """Re-execute a recorded schedule; the terminal snapshot must match exactly."""
    cm = model if isinstance(model, CompiledModel) else compile_model(model)
    state = cm.initial_state()
    step_traces: list[StepTrace] = []
    for env in trace.steps:
        state, st = timed_step(cm, state, frozenset(env))
        step_traces.append(st)
    if state != trace.terminal:
        raise ValueError("trace does not replay to its recorded terminal snapshot")
    return state


def replay_step_traces(model, trace: Trace) -> list[StepTrace]:
    """Deterministic re-execution returning the full per-step cycle records."""
    cm = model if isinstance(model, CompiledModel) else compile_model(model)
    state = cm.initial_state()
    out: list[StepTrace] = []
    for env in trace.steps:
        state, st = timed_step(cm, state, frozenset(env))
        out.append(st)
    if state != trace.terminal:
        raise ValueError("trace does not replay to its recorded terminal snapshot")
    return out


def violating_snapshot(model, trace: Trace) -> RuntimeState:
    """The cycle snapshot the verdict points at (initial state for empty traces)."""
    cm = model if isinstance(model, CompiledModel) else compile_model(model)
    if not trace.steps:
        return cm.initial_state()
    steps = replay_step_traces(cm, trace)
    cycle = trace.violation_cycle if trace.violation_cycle is not None else -1
    return steps[-1].cycles[cycle].snapshot


def random_simulate(
    model,
    query: Query,
    schedules: int,
    steps: int,
    seed: int = 0,
    policy: str = "one-or-none",
) -> Optional[tuple[int, int, int]]:
    """Randomized refutation oracle for A[] queries.

    Runs `schedules` random environment schedules of `steps` timed steps and
    reports the first observed predicate violation as (schedule, step, cycle),
    or None.  Shares nothing with check_query's search: exploration order,
    choice of successors, and dedup logic play no part here.
    """
    import random as _random

    cm = model if isinstance(model, CompiledModel) else compile_model(model)
    pred = _compile_pred(cm, query.pred, on_ctx=True)
    choices = env_choices(cm, policy)
    rng = _random.Random(seed)
    init = cm.initial_state()
    cycles = cm.cycles_per_step
    branching = len(choices) > 1
    for sched in range(schedules):
        ctx = cm.thaw(init)
        if not pred(ctx):
            return (sched, 0, -1)
        for step in range(steps):
            env = choices[rng.randrange(len(choices))] if branching else choices[0]
            for k in range(cycles):
                cm.run_cycle_fast(ctx, k == 0, env if k == 0 else _EMPTY)
                if not pred(ctx):
                    return (sched, step + 1, k)
            cm.finish_step(ctx)
        if not branching:
            break  # no environment nondeterminism: one schedule covers all
    return None
