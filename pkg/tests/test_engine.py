"""Execution semantics: cycles, steps, event scoping, determinism."""
import random

import pytest

import statepat as sp
from statepat.engine import EngineError
from statepat.model import NativeCall

from gen import random_model


def active(model, state):
    return dict(zip(sp.compile_model(model).chart_names, state.active))


def var(model, state, name):
    cm = sp.compile_model(model)
    return state.vars[cm.var_names.index(name)]


class TestInitSession:
    def test_laser_initials(self, laser):
        state = sp.init_session(laser)
        assert active(laser, state) == {"Laser": "Off", "Ventilator": "On"}
        assert var(laser, state, "SpO") == 100
        assert state.clock == 0

    def test_toy_initials(self, twc_toy):
        state = sp.init_session(twc_toy)
        assert active(twc_toy, state) == {"S1": "A1", "S2": "A2"}

    def test_degenerate_single_state(self):
        m = sp.parse_model("model one\n\nchart A priority 1\n  initial S\n  state S\n")
        state = sp.init_session(m)
        assert active(m, state) == {"A": "S"} and state.clock == 0

    def test_invalid_model_rejected(self, laser):
        from dataclasses import replace

        bad = replace(laser, charts=(replace(laser.charts[0], initial="Nope"),) + laser.charts[1:])
        with pytest.raises(EngineError):
            sp.init_session(bad)

    def test_pattern_runtime_initialised(self, laser_both):
        state = sp.init_session(laser_both)
        assert state.queue_events == () and state.cycle == 0
        assert state.token == 2  # wraps to 1 on the first update


class TestRunCycle:
    def test_downward_delivery_same_cycle(self, laser):
        # startLaser moves the laser out of Off and the raised deactivateVen
        # reaches the lower-priority ventilator within the same cycle.
        state = sp.init_session(laser)
        state, rec = sp.run_cycle(laser, state, {"startLaser"})
        assert ("Laser", "Off", "Syn") in rec.fired
        assert ("Ventilator", "On", "Off") in rec.fired
        assert ("deactivateVen", "Laser") in rec.raised
        assert rec.kind == "normal"

    def test_upward_event_is_lost_untransformed(self, twc_toy):
        state = sp.init_session(twc_toy)
        state, rec = sp.run_cycle(twc_toy, state, ())
        # S2 raised EB after S1 was processed; it is cleared at cycle end.
        assert ("EB", "S2") in rec.raised
        assert state.raised_now == frozenset()
        for _ in range(5):
            state, rec = sp.run_cycle(twc_toy, state, ())
            assert rec.fired == ()
        assert active(twc_toy, state)["S1"] == "B1"  # C1 never reached

    def test_stutter_leaves_state_unchanged(self, laser):
        state = sp.init_session(laser)
        after, rec = sp.run_cycle(laser, state, ())
        assert rec.fired == () and after == state


class TestTimedStep:
    def test_spo_decreases_while_ventilator_off(self, laser_both):
        session = sp.Session(laser_both)
        session.inject("startLaser")
        session.step(1)
        before = var(laser_both, session.state, "SpO")
        session.step(1)
        assert var(laser_both, session.state, "SpO") == before - 1

    def test_plain_model_has_one_cycle(self, laser):
        state = sp.init_session(laser)
        _, trace = sp.timed_step(laser, state, ())
        assert len(trace.cycles) == 1 and trace.cycles[0].kind == "normal"

    def test_twc_model_has_n_minus_one_logic_cycles(self, twc_toy):
        m = sp.apply_twc(twc_toy)  # 3 charts including the Manager
        state = sp.init_session(m)
        _, trace = sp.timed_step(m, state, ())
        assert [c.kind for c in trace.cycles] == ["normal", "logic:1", "logic:2"]

    def test_ceo_model_cycles_match_user_charts(self, ceo_toy):
        m = sp.apply_ceo(ceo_toy)
        state = sp.init_session(m)
        _, trace = sp.timed_step(m, state, ())
        assert [c.kind for c in trace.cycles] == ["normal", "logic:1"]

    def test_composed_model_has_twc_phase_cycles(self, laser_both):
        state = sp.init_session(laser_both)
        _, trace = sp.timed_step(laser_both, state, ())
        assert [c.kind for c in trace.cycles] == ["normal", "logic:1", "logic:2"]

    def test_clock_and_timers_advance(self, laser):
        state = sp.init_session(laser)
        state, _ = sp.timed_step(laser, state, ())
        assert state.clock == 1
        assert state.timers == (1, 1)


class TestInject:
    def test_inject_then_step_fires(self, laser):
        session = sp.Session(laser)
        session.inject("startLaser")
        session.step(1)
        assert active(laser, session.state)["Laser"] == "Syn"

    def test_unknown_event_rejected(self, laser):
        session = sp.Session(laser)
        with pytest.raises(EngineError):
            session.inject("foo")

    def test_double_injection_delivered_once(self, twc_toy):
        m = sp.parse_model(
            "model m\nin event go\nvar n: int[0..5] = 0\n\n"
            "chart A priority 1\n  initial S\n  state S\n"
            "  transition S -> S on go do n = n + 1\n"
        )
        session = sp.Session(m)
        session.inject("go")
        session.inject("go")
        session.step(1)
        assert var(m, session.state, "n") == 1
        session.step(1)
        assert var(m, session.state, "n") == 1  # not re-delivered


class TestInvariants:
    def test_raised_now_empty_after_every_cycle(self, twc_toy):
        state = sp.init_session(twc_toy)
        for _ in range(4):
            state, rec = sp.run_cycle(twc_toy, state, ())
            assert rec.snapshot.raised_now == frozenset()

    def test_at_most_one_transition_per_chart_per_cycle(self, laser_both):
        state = sp.init_session(laser_both)
        schedule = [{"startLaser"}, (), (), (), (), (), (), {"startLaser"}, (), ()]
        for env in schedule:
            state, trace = sp.timed_step(laser_both, state, env)
            for rec in trace.cycles:
                charts = [chart for chart, _, _ in rec.fired]
                assert len(charts) == len(set(charts))

    def test_variable_saturation(self):
        rng = random.Random(23)
        for i in range(15):
            m = random_model(rng, name=f"sat{i}")
            state = sp.init_session(m)
            for _ in range(12):
                state, _ = sp.timed_step(m, state, frozenset(m.interface.in_events))
                for idx, decl in enumerate(m.interface.variables):
                    assert decl.lo <= state.vars[idx] <= decl.hi

    def test_logic_cycle_conservatism(self, laser, twc_toy):
        # In TWC-transformed models, a logic cycle only fires transitions whose
        # rewritten guard contains a TWC.pop call.
        for source in (laser, twc_toy):
            m = sp.apply_twc(source)
            pops = set()
            for chart in m.charts:
                for tr in chart.transitions:
                    if tr.guard is not None and "TWC.pop" in _natives(tr.guard):
                        pops.add((chart.name, tr.source, tr.target))
            state = sp.init_session(m)
            schedule = [frozenset(m.interface.in_events)] + [frozenset()] * 9
            for env in schedule:
                state, trace = sp.timed_step(m, state, env)
                for rec in trace.cycles:
                    if rec.kind == "normal":
                        continue
                    for chart, src, dst in rec.fired:
                        if chart == "Manager":
                            continue
                        assert (chart, src, dst) in pops, rec

    def test_determinism_byte_identical_traces(self, laser_both):
        def run():
            session = sp.Session(laser_both)
            out = []
            for k in range(12):
                if k % 5 == 0:
                    session.inject("startLaser")
                out.extend(session.step(1))
            return sp.format_trace(laser_both, out)

        assert run() == run()


def _natives(expr):
    names = set()
    stack = [expr]
    while stack:
        node = stack.pop()
        if isinstance(node, NativeCall):
            names.add(node.name)
            stack.extend(node.args)
        else:
            for attr in ("left", "right", "operand", "expr"):
                child = getattr(node, attr, None)
                if child is not None:
                    stack.append(child)
    return names
