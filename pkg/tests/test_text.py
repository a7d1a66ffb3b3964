"""Parser and serializer, including the round-trip identity."""
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import statepat as sp
from statepat.model import Arith, BoolLit, BoolOp, Compare, IntLit, Not, QueryMode, StateAtom, VarRef
from statepat.text import ParseError

from gen import random_model

_CMP_OPS = ("<", "<=", "==", "!=", ">=", ">")


def int_exprs(depth: int = 2):
    leaf = st.one_of(
        st.integers(min_value=-9, max_value=99).map(IntLit),
        st.sampled_from(["x", "y"]).map(VarRef),
    )
    if depth == 0:
        return leaf
    return st.one_of(
        leaf,
        st.builds(Arith, st.sampled_from(["+", "-"]), int_exprs(depth - 1), int_exprs(depth - 1)),
    )


def bool_exprs(depth: int = 2):
    leaf = st.one_of(
        st.booleans().map(BoolLit),
        st.builds(Compare, st.sampled_from(_CMP_OPS), int_exprs(1), int_exprs(1)),
    )
    if depth == 0:
        return leaf
    return st.one_of(
        leaf,
        st.builds(BoolOp, st.sampled_from(["&&", "||"]), bool_exprs(depth - 1), bool_exprs(depth - 1)),
        st.builds(Not, bool_exprs(depth - 1)),
    )


class TestParseModel:
    def test_laser_shape(self, laser):
        assert len(laser.charts) == 2
        assert all(len(c.states) == 3 for c in laser.charts)
        assert laser.interface.in_events == ("startLaser",)
        assert laser.interface.internal_events == ("deactivateVen", "deactivateLaser")

    def test_empty_input(self):
        with pytest.raises(ParseError) as exc:
            sp.parse_model("")
        assert (exc.value.span.line, exc.value.span.column) == (1, 1)

    def test_truncated_guard_points_at_comparison(self, laser):
        text = sp.serialize_model(laser)
        broken = text.replace("if SpO >= 97", "if SpO <")
        with pytest.raises(ParseError) as exc:
            sp.parse_model(broken)
        line = broken.splitlines()[exc.value.span.line - 1]
        assert "SpO <" in line
        assert exc.value.expected

    def test_spans_populated(self, laser):
        for chart in laser.charts:
            assert chart.span is not None and chart.span.line >= 1
            for tr in chart.transitions:
                assert tr.span is not None and tr.span.column >= 1

    def test_comments_and_blank_lines(self):
        m = sp.parse_model("# heading\nmodel m\n\n# chart\nchart A priority 1\n  initial S\n  state S\n")
        assert m.name == "m" and m.charts[0].states == ("S",)


class TestRoundTrip:
    def test_toy(self, twc_toy):
        assert sp.parse_model(sp.serialize_model(twc_toy)) == twc_toy

    def test_transformed_guards_carry_pop_calls(self, twc_toy):
        out = sp.serialize_model(sp.apply_twc(twc_toy))
        assert "TWC.pop(" in out and "TWC.push(" in out
        assert sp.parse_model(out) == sp.apply_twc(twc_toy)

    def test_no_transitions(self):
        text = "model empty\n\nchart A priority 1\n  initial S\n  state S\n"
        m = sp.parse_model(text)
        assert m.charts[0].transitions == ()
        assert sp.parse_model(sp.serialize_model(m)) == m

    def test_generated_models(self):
        rng = random.Random(11)
        for i in range(60):
            m = random_model(rng, name=f"rt{i}")
            assert sp.parse_model(sp.serialize_model(m)) == m

    def test_generated_transformed_models(self):
        rng = random.Random(12)
        for i in range(20):
            m = sp.apply_both(random_model(rng, name=f"rtt{i}"))
            assert sp.parse_model(sp.serialize_model(m)) == m

    def test_serializer_is_deterministic(self, laser_both):
        assert sp.serialize_model(laser_both) == sp.serialize_model(laser_both)

    @settings(max_examples=300, deadline=None)
    @given(guard=bool_exprs(), update=int_exprs())
    def test_guard_and_action_expressions_round_trip(self, guard, update):
        # Arbitrary well-typed expressions survive print -> parse unchanged,
        # including precedence and associativity parenthesization.
        skeleton = sp.Model(
            name="h",
            interface=sp.InterfaceDecl(variables=(sp.VarDecl("x", 0, 9, 0), sp.VarDecl("y", 0, 9, 0))),
            charts=(
                sp.Statechart(
                    id=1,
                    name="A",
                    states=("S",),
                    initial="S",
                    transitions=(sp.Transition("S", "S", None, guard, (sp.model.Assign("x", update),)),),
                ),
            ),
        )
        reparsed = sp.parse_model(sp.serialize_model(skeleton))
        tr = reparsed.charts[0].transitions[0]
        assert tr.guard == guard
        assert tr.actions[0].expr == update


class TestParseQuery:
    def test_safety_formula(self):
        q = sp.parse_query("A[] !(Laser.On && Ventilator.On)")
        assert q.mode is QueryMode.ALWAYS_GLOBALLY
        assert isinstance(q.pred, Not)
        inner = q.pred.operand
        assert isinstance(inner, BoolOp) and inner.op == "&&"
        assert inner.left == StateAtom("Laser", "On")

    def test_reachability_formula(self):
        q = sp.parse_query("E<> S1.C1")
        assert q.mode is QueryMode.EXISTS_EVENTUALLY
        assert q.pred == StateAtom("S1", "C1")

    def test_imply_formula(self):
        q = sp.parse_query("A[] Ventilator.On imply Laser.Off")
        assert q.mode is QueryMode.ALWAYS_GLOBALLY
        assert isinstance(q.pred, BoolOp) and q.pred.op == "||"

    def test_imply_desugars_to_not_or(self):
        sugar = sp.parse_query("A[] Ventilator.On imply Laser.Off")
        plain = sp.parse_query("A[] (!Ventilator.On) || Laser.Off")
        assert sugar.pred == plain.pred

    def test_imply_equivalence_on_verdicts(self, laser_both):
        for text in ("Ventilator.On imply Laser.Off", "SpO >= 95 imply SpO >= 90"):
            sugar = sp.check_query(laser_both, sp.parse_query(f"A[] {text}"))
            p, q = text.split(" imply ")
            plain = sp.check_query(laser_both, sp.parse_query(f"A[] (!({p})) || ({q})"))
            assert sugar.verdict == plain.verdict

    def test_variable_comparison(self):
        q = sp.parse_query("A[] x >= y")
        assert isinstance(q.pred, Compare) and q.pred.op == ">="

    def test_malformed(self):
        for text in ("", "A[]", "E<> ", "A[] Laser.", "A[] (x >= 1", "G[] x >= 1", "A[] x >= 1 &&"):
            with pytest.raises(ParseError):
                sp.parse_query(text)

    def test_query_file(self):
        qs = sp.parse_query_file("# props\nA[] SpO >= 95\n\nE<> Laser.Off\n")
        assert [q.mode for q in qs] == [QueryMode.ALWAYS_GLOBALLY, QueryMode.EXISTS_EVENTUALLY]
