"""Model patterns: two-way communication (TWC) and configurable execution
order (CEO).

The six runtime functions mirror the proven WHILE programs statement for
statement; their contracts are the Hoare triples exercised by the property
suites in tests.  ``apply_twc`` / ``apply_ceo`` are the model-to-model
transformations that install the pattern machinery: a highest-priority
Manager chart plus guard/action rewrites on the user charts.
"""
from __future__ import annotations

from dataclasses import replace

from .model import (
    Action,
    EventTrigger,
    IntLit,
    Model,
    NativeCall,
    RaiseEvent,
    Statechart,
    Transition,
    conj,
)

MANAGER_NAME = "Manager"
MANAGER_STATE = "Run"


class PatternError(Exception):
    """Transformation precondition violated (wrong shape, re-application)."""


class PatternContractError(Exception):
    """A runtime function was called outside its proven precondition."""


class QueueOverflowError(Exception):
    """Event queue exceeded its capacity (impossible in transformed models)."""


class PatternRuntime:
    """Mutable pattern state: the variables of the TWC/CEO interfaces.

    `events`/`senders` are the live queue (E[] and S[], length == n),
    `exe` the normal-cycle flag, `c` the cycle counter, `t` the execution
    token, and `orders` the configured execution order O[].
    """

    __slots__ = ("events", "senders", "capacity", "exe", "c", "t", "orders")

    def __init__(
        self,
        capacity: int = 64,
        orders: tuple[int, ...] = (),
        exe: bool = True,
        c: int = 0,
        t: int = 1,
        events: tuple[int, ...] = (),
        senders: tuple[int, ...] = (),
    ):
        self.events: list[int] = list(events)
        self.senders: list[int] = list(senders)
        self.capacity = capacity
        self.exe = exe
        self.c = c
        self.t = t
        self.orders = tuple(orders)

    @property
    def n(self) -> int:
        return len(self.events)

    def copy(self) -> "PatternRuntime":
        return PatternRuntime(
            capacity=self.capacity,
            orders=self.orders,
            exe=self.exe,
            c=self.c,
            t=self.t,
            events=tuple(self.events),
            senders=tuple(self.senders),
        )

    def __eq__(self, other) -> bool:
        if not isinstance(other, PatternRuntime):
            return NotImplemented
        return (
            self.events == other.events
            and self.senders == other.senders
            and self.exe == other.exe
            and self.c == other.c
            and self.t == other.t
            and self.orders == other.orders
        )

    def __repr__(self) -> str:
        return (
            f"PatternRuntime(E={self.events}, S={self.senders}, exe={self.exe}, "
            f"c={self.c}, t={self.t}, O={list(self.orders)})"
        )


def twc_init_event_queue(rt: PatternRuntime, st_num: int, cycle_num: int) -> int:
    """Start an execution cycle: set the normal-cycle flag, clear the queue on
    normal cycles, and return the next cycle number (wrapping to 0).

    Contract: requires cycle_num < st_num and st_num > 1; ensures
    (ret == 1 and exe and n == 0) or ((ret == 0 or ret == cycle_num + 1) and not exe).
    """
    if not (cycle_num < st_num and st_num > 1):
        raise PatternContractError(
            f"initEventQueue requires cycleNum < stNum and stNum > 1, got ({st_num}, {cycle_num})"
        )
    if cycle_num == 0:
        rt.exe = True
        del rt.events[:]
        del rt.senders[:]
    else:
        rt.exe = False
    a = cycle_num
    if cycle_num == st_num - 1:
        nxt = 0
    else:
        nxt = a + 1
    rt.c = nxt
    return nxt


def twc_push(rt: PatternRuntime, event: int, sender: int) -> None:
    """Append a raised event and its sender to the queue.

    Contract: requires event > 0, sender > 0, n < capacity; ensures
    E[n-1] == event, S[n-1] == sender, n == old(n) + 1.
    """
    if not (event > 0 and sender > 0):
        raise PatternContractError(f"push requires positive event and sender IDs, got ({event}, {sender})")
    if len(rt.events) >= rt.capacity:
        raise QueueOverflowError(f"event queue capacity {rt.capacity} exceeded")
    rt.events.append(event)
    rt.senders.append(sender)


def twc_pop(rt: PatternRuntime, event: int, receiver: int) -> bool:
    """Check whether a queued event is valid for `receiver` this cycle:
    normal cycles deliver downward (receiver id > sender id), logic cycles
    upward.  Never mutates the queue.

    Contract: requires event > 0, receiver > 0; ensures the result is true
    iff some queued (E[v], S[v]) has E[v] == event and
    (exe and receiver > S[v]) or (not exe and receiver < S[v]).
    """
    if not (event > 0 and receiver > 0):
        raise PatternContractError(f"pop requires positive event and receiver IDs, got ({event}, {receiver})")
    x = False
    i = 0
    v = 0  # index of the last match; unobservable through the return value
    n = len(rt.events)
    while i < n:
        if rt.events[i] == event and (
            (rt.exe and receiver > rt.senders[i]) or (not rt.exe and receiver < rt.senders[i])
        ):
            v = i
            x = True
        i += 1
    return x


def twc_is_normal_exe(rt: PatternRuntime) -> bool:
    """Report whether the current cycle is a normal cycle (pure)."""
    return rt.exe


def ceo_update_exe_info(rt: PatternRuntime, st_num: int) -> int:
    """Advance the execution token, wrapping from st_num back to 1.

    Contract: requires t > 0 and st_num > 0; ensures
    (old(t) == st_num and ret == 1) or (old(t) != st_num and ret == old(t) + 1).
    """
    if not (rt.t > 0 and st_num > 0):
        raise PatternContractError(f"updateExeInfo requires t > 0 and stNum > 0, got (t={rt.t}, stNum={st_num})")
    if rt.t == st_num:
        a = 1
    else:
        a = rt.t + 1
    rt.t = a
    return a


def ceo_run(rt: PatternRuntime, st: int) -> bool:
    """Check whether chart `st` holds the current execution token.

    Contract: requires t > 0 and st > 0; ensures ret iff O[t-1] == st.
    """
    if not (rt.t > 0 and st > 0):
        raise PatternContractError(f"run requires t > 0 and st > 0, got (t={rt.t}, st={st})")
    if rt.orders[rt.t - 1] == st:
        return True
    return False


# ---------------------------------------------------------------------------
# transformations


def _assert_clean(m: Model, pattern: str) -> None:
    if pattern in m.patterns:
        raise PatternError(f"model {m.name!r} already has the {pattern} pattern applied")
    for chart in m.charts:
        if chart.name == MANAGER_NAME and not chart.manager:
            raise PatternError(f"chart name {MANAGER_NAME!r} is reserved for the pattern manager")


def _make_manager(actions: tuple[Action, ...]) -> Statechart:
    return Statechart(
        id=1,
        name=MANAGER_NAME,
        states=(MANAGER_STATE,),
        initial=MANAGER_STATE,
        transitions=(Transition(MANAGER_STATE, MANAGER_STATE, actions=actions),),
        manager=True,
    )


def _shift_charts(m: Model) -> tuple[tuple[Statechart, ...], dict[int, int]]:
    """Renumber user charts to 2..n+1, reserving priority 1 for the Manager."""
    mapping = {c.id: c.id + 1 for c in m.charts}
    shifted = tuple(replace(c, id=mapping[c.id]) for c in m.charts)
    return shifted, mapping


def apply_twc(m: Model) -> Model:
    """Install the two-way communication pattern (queue + Manager + rewrites).

    Every raise action becomes a queue push, every event trigger becomes a
    queue pop in the guard, and event-free guards gain an isNormalExe()
    conjunct.  User states and transitions are otherwise untouched.
    """
    _assert_clean(m, "twc")
    if len(m.charts) < 2:
        raise PatternError("the TWC pattern requires at least 2 statecharts")
    if m.manager is not None:
        raise PatternError("model already contains a manager chart")

    event_ids = m.event_ids
    shifted, mapping = _shift_charts(m)
    st_num = len(shifted) + 1  # including the Manager

    charts = [_make_manager((NativeCall("TWC.initEventQueue", (IntLit(st_num),)),))]
    for chart in shifted:
        transitions = []
        for tr in chart.transitions:
            actions = tuple(
                NativeCall("TWC.push", (IntLit(event_ids[a.event]), IntLit(chart.id)))
                if isinstance(a, RaiseEvent)
                else a
                for a in tr.actions
            )
            if isinstance(tr.trigger, EventTrigger):
                pop = NativeCall("TWC.pop", (IntLit(event_ids[tr.trigger.event]), IntLit(chart.id)))
                transitions.append(replace(tr, trigger=None, guard=conj(pop, tr.guard), actions=actions))
            else:
                normal = NativeCall("TWC.isNormalExe", ())
                transitions.append(replace(tr, guard=conj(tr.guard, normal), actions=actions))
        charts.append(replace(chart, transitions=tuple(transitions)))

    exe_orders = m.interface.exe_orders
    if exe_orders is not None:
        exe_orders = tuple(mapping[i] for i in exe_orders)
    interface = replace(m.interface, exe_orders=exe_orders)
    return Model(m.name, interface, tuple(charts), patterns=m.patterns | {"twc"})


def apply_ceo(m: Model) -> Model:
    """Install the configurable execution order pattern (token + rewrites).

    Adds a Manager (or extends the TWC Manager) that advances the token each
    cycle, and conjoins ``CEO.run(chartID)`` onto every user transition guard.
    The order defaults to declaration order when the model declares none.
    """
    _assert_clean(m, "ceo")
    manager = m.manager
    user = m.user_charts
    if not user:
        raise PatternError("the CEO pattern requires at least 1 user statechart")
    st_num = len(user)
    update = NativeCall("CEO.updateExeInfo", (IntLit(st_num),))

    if manager is not None:
        if len(manager.transitions) != 1:
            raise PatternError("manager chart must consist of a single self-loop transition")
        orders = m.interface.exe_orders or tuple(c.id for c in user)
        loop = manager.transitions[0]
        new_manager = replace(manager, transitions=(replace(loop, actions=loop.actions + (update,)),))
        shifted = user
    else:
        shifted, mapping = _shift_charts(m)
        orders = m.interface.exe_orders or tuple(c.id for c in m.charts)
        orders = tuple(mapping[i] for i in orders)
        new_manager = _make_manager((update,))

    charts = [new_manager]
    for chart in shifted:
        gate = NativeCall("CEO.run", (IntLit(chart.id),))
        transitions = tuple(replace(tr, guard=conj(tr.guard, gate)) for tr in chart.transitions)
        charts.append(replace(chart, transitions=transitions))

    interface = replace(m.interface, exe_orders=orders)
    return Model(m.name, interface, tuple(charts), patterns=m.patterns | {"ceo"})


def apply_both(m: Model) -> Model:
    """TWC first, then CEO sharing the one Manager (the case-study pipeline)."""
    return apply_ceo(apply_twc(m))


def apply_pattern(m: Model, pattern: str) -> Model:
    if pattern == "twc":
        return apply_twc(m)
    if pattern == "ceo":
        return apply_ceo(m)
    if pattern == "both":
        return apply_both(m)
    raise PatternError(f"unknown pattern {pattern!r} (expected twc, ceo, or both)")


def queue_capacity(m: Model) -> int:
    """Queue bound: raise sites plus environment events, times TWC phases."""
    pushes = 0
    for chart in m.charts:
        for tr in chart.transitions:
            for act in tr.actions:
                if isinstance(act, RaiseEvent):
                    pushes += 1
                elif isinstance(act, NativeCall) and act.name == "TWC.push":
                    pushes += 1
    phases = len(m.charts) if "twc" in m.patterns else 1
    return max(1, (pushes + len(m.interface.in_events)) * phases)
