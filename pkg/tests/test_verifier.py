"""Model checker: exploration, verdicts, traces, and its soundness checks."""
import random

import pytest

import statepat as sp
from statepat.verifier import ResourceLimitError, env_choices

from conftest import with_order
from gen import random_invariant_queries, random_model


def q(text):
    return sp.parse_query(text)


def snapshot_active(model, state):
    return dict(zip(sp.compile_model(model).chart_names, state.active))


class TestExplore:
    def test_raw_laser_reaches_unsafe_state(self, laser):
        graph = sp.explore(laser)
        assert any(s.active == ("On", "On") for s in graph.nodes)
        # Regression anchors from this implementation's own exhaustive run.
        assert graph.states == 14

    def test_single_state_fixpoint(self):
        m = sp.parse_model("model one\n\nchart A priority 1\n  initial S\n  state S\n")
        assert sp.explore(m).states == 1

    def test_transformed_laser_golden_count(self, laser_both):
        assert sp.explore(laser_both).states == 24

    def test_deterministic(self, laser_both):
        a = sp.explore(laser_both)
        b = sp.explore(laser_both)
        assert a.states == b.states
        assert [s.canonical() for s in a.nodes] == [s.canonical() for s in b.nodes]

    def test_state_limit_is_explicit_error(self, laser):
        with pytest.raises(ResourceLimitError) as exc:
            sp.explore(laser, limit=5)
        assert exc.value.states == 5

    def test_env_choices_order(self, laser):
        assert env_choices(laser, "closed") == (frozenset(),)
        assert env_choices(laser, "one-or-none") == (frozenset(), frozenset({"startLaser"}))
        assert len(env_choices(laser, "subset")) == 2


class TestCheckQuery:
    def test_p1_fails_on_raw_laser(self, laser):
        r = sp.check_query(laser, q("A[] !(Laser.On && Ventilator.On)"))
        assert r.verdict == "fails" and r.trace is not None
        terminal = sp.replay(laser, r.trace)
        bad = sp.violating_snapshot(laser, r.trace)
        assert snapshot_active(laser, bad) == {"Laser": "On", "Ventilator": "On"}
        assert terminal == r.trace.terminal

    def test_p1_p2_hold_after_both_patterns(self, laser_both):
        for text in ("A[] !(Laser.On && Ventilator.On)", "A[] SpO >= 95"):
            r = sp.check_query(laser_both, q(text))
            assert r.verdict == "holds" and r.trace is None

    def test_reachability_on_both(self, laser_both):
        for text in ("E<> Ventilator.Off", "E<> Laser.Off"):
            r = sp.check_query(laser_both, q(text))
            assert r.verdict == "holds" and r.trace is not None

    def test_witness_replay_for_toy(self, twc_toy):
        m = sp.apply_twc(twc_toy)
        r = sp.check_query(m, q("E<> S2.B2"))
        assert r.verdict == "holds"
        bad = sp.violating_snapshot(m, r.trace)
        assert snapshot_active(m, bad)["S2"] == "B2"

    def test_empty_trace_is_initial_state(self, laser):
        r = sp.check_query(laser, q("E<> Laser.Off"))
        assert r.verdict == "holds" and r.trace.steps == ()
        assert sp.replay(laser, r.trace) == sp.init_session(laser)

    def test_shortest_counterexample_length(self, laser):
        r = sp.check_query(laser, q("A[] !(Laser.On && Ventilator.On)"))
        assert r.trace_len == 7

    def test_unknown_atom_rejected(self, laser):
        from statepat.verifier import QueryError

        with pytest.raises(QueryError):
            sp.check_query(laser, q("E<> Laser.Open"))
        with pytest.raises(QueryError):
            sp.check_query(laser, q("A[] nope >= 1"))

    def test_deterministic(self, laser):
        p1 = q("A[] !(Laser.On && Ventilator.On)")
        a, b = sp.check_query(laser, p1), sp.check_query(laser, p1)
        assert (a.states, a.trace_len, a.trace.steps) == (b.states, b.trace_len, b.trace.steps)


class TestDuality:
    """A[] p fails  <=>  E<> !p holds, across the query corpus."""

    def test_named_corpus(self, laser, laser_both, twc_toy, ceo_toy):
        corpus = [
            (laser, "!(Laser.On && Ventilator.On)"),
            (laser, "SpO >= 95"),
            (laser_both, "!(Laser.On && Ventilator.On)"),
            (laser_both, "SpO >= 95"),
            (laser_both, "Ventilator.On imply Laser.Off"),
            (sp.apply_twc(twc_toy), "!S1.C1"),
            (sp.apply_ceo(ceo_toy), "x >= y"),
            (sp.apply_ceo(ceo_toy), "y >= x"),
        ]
        for model, text in corpus:
            always = sp.check_query(model, q(f"A[] {text}"))
            exists = sp.check_query(model, q(f"E<> !({text})"))
            assert (always.verdict == "fails") == (exists.verdict == "holds"), text

    def test_random_corpus(self):
        rng = random.Random(41)
        for i in range(12):
            model = random_model(rng, f"dual{i}")
            for query in random_invariant_queries(rng, model)[:3]:
                always = sp.check_query(model, query)
                negated = sp.Query(sp.QueryMode.EXISTS_EVENTUALLY, sp.model.Not(query.pred))
                exists = sp.check_query(model, negated)
                assert (always.verdict == "fails") == (exists.verdict == "holds")


class TestEnvMonotonicity:
    """Allowing more environment events never turns a failing A[] into holding."""

    def test_on_corpus(self, laser):
        rng = random.Random(43)
        cases = [(laser, q("A[] !(Laser.On && Ventilator.On)"))]
        for i in range(10):
            model = random_model(rng, f"mono{i}")
            for query in random_invariant_queries(rng, model)[:2]:
                cases.append((model, query))
        for model, query in cases:
            small = sp.check_query(model, query)
            if small.verdict == "fails":
                large = sp.check_query(model, query, policy="subset")
                assert large.verdict == "fails", query.text


class TestSimulatorCrossCheck:
    def test_fails_verdicts_replay(self, laser, ceo_toy):
        for model, text in ((laser, "A[] !(Laser.On && Ventilator.On)"), (sp.apply_ceo(ceo_toy), "A[] y >= x")):
            r = sp.check_query(model, q(text))
            assert r.verdict == "fails"
            pred = sp.verifier.compile_predicate(model, r.query.pred)
            assert not pred(sp.violating_snapshot(model, r.trace))

    def test_holds_verdict_never_refuted(self, laser_both):
        # Spec-rate soundness cross-check: 10^4 random 100-step schedules.
        for text in ("A[] !(Laser.On && Ventilator.On)", "A[] SpO >= 95"):
            query = q(text)
            assert sp.check_query(laser_both, query).verdict == "holds"
            assert sp.random_simulate(laser_both, query, schedules=10_000, steps=100, seed=5) is None

    def test_simulator_finds_real_violations(self, laser):
        hit = sp.random_simulate(laser, q("A[] !(Laser.On && Ventilator.On)"), schedules=2000, steps=60, seed=9)
        assert hit is not None


class TestCompletenessProperties:
    def test_twc_delivery_completeness(self, twc_toy, laser):
        # Every event a chart raises, with a receiver transition, is firable
        # somewhere in the reachable graph of the TWC-transformed model.
        for source in (twc_toy, laser):
            raised_by = {}
            receivers = []
            for chart in source.charts:
                for tr in chart.transitions:
                    for act in tr.actions:
                        if isinstance(act, sp.model.RaiseEvent):
                            raised_by.setdefault(act.event, set()).add(chart.name)
                    if isinstance(tr.trigger, sp.model.EventTrigger):
                        if tr.trigger.event in source.interface.internal_events:
                            receivers.append((chart.name, tr.trigger.event, tr.source, tr.target))
            m = sp.apply_twc(source)
            graph = sp.explore(m, record_traces=True)
            fired = set()
            for per_choice in graph.step_traces:
                for trace in per_choice:
                    for rec in trace.cycles:
                        fired.update(rec.fired)
            for chart, event, src, dst in receivers:
                assert raised_by.get(event), f"no raiser for {event}"
                assert (chart, src, dst) in fired, f"{chart} never fired on {event}"

    def test_ceo_firing_order_is_configured_order(self, ceo_toy):
        for order in ((1, 2), (2, 1)):
            m = sp.apply_ceo(with_order(ceo_toy, order))
            cm = sp.compile_model(m)
            id_by_name = dict(zip(cm.chart_names, cm.chart_ids))
            graph = sp.explore(m, record_traces=True)
            for per_choice in graph.step_traces:
                for trace in per_choice:
                    fired_ids = [
                        id_by_name[chart]
                        for rec in trace.cycles
                        for chart, _, _ in rec.fired
                        if chart != "Manager"
                    ]
                    expected = [i for i in cm.orders if i in fired_ids]
                    assert fired_ids == expected
