"""Structural validation of the core data model."""
import random
from dataclasses import replace

import pytest

import statepat as sp
from statepat.model import (
    EventTrigger,
    InterfaceDecl,
    IntLit,
    NativeCall,
    RaiseEvent,
    Statechart,
    TimeTrigger,
    Transition,
    VarDecl,
    VarRef,
)

from gen import random_model


def test_laser_model_is_clean(laser):
    assert sp.validate_model(laser) == []


def test_undeclared_transition_target():
    chart = Statechart(1, "S", ("On", "Off"), "Off", (Transition("Off", "Onn"),))
    m = sp.Model("bad", InterfaceDecl(), (chart,))
    diags = sp.validate_model(m)
    assert len(diags) == 1
    assert diags[0].code == "endpoint"


def test_order_must_be_permutation():
    charts = (
        Statechart(1, "A", ("S",), "S"),
        Statechart(2, "B", ("S",), "S"),
    )
    m = sp.Model("bad", InterfaceDecl(exe_orders=(1, 1)), charts)
    diags = sp.validate_model(m)
    assert len(diags) == 1
    assert diags[0].code == "exe-orders"


def test_validate_is_idempotent_and_pure(laser):
    first = sp.validate_model(laser)
    second = sp.validate_model(laser)
    assert first == second == []
    assert laser == sp.parse_model(sp.serialize_model(laser))


@pytest.mark.parametrize(
    "mutate, code",
    [
        (lambda m: replace(m, charts=(replace(m.charts[0], id=3),) + m.charts[1:]), "chart-ids"),
        (lambda m: replace(m, charts=(replace(m.charts[0], initial="Nope"),) + m.charts[1:]), "initial"),
        (lambda m: replace(m, charts=(replace(m.charts[0], states=("On", "On", "Off", "Syn")),) + m.charts[1:]), "state-name"),
        (
            lambda m: replace(
                m,
                charts=m.charts[:1]
                + (replace(m.charts[1], transitions=m.charts[1].transitions + (Transition("On", "Off", EventTrigger("nope")),)),),
            ),
            "event-ref",
        ),
        (
            lambda m: replace(
                m,
                charts=m.charts[:1]
                + (replace(m.charts[1], transitions=m.charts[1].transitions + (Transition("On", "Off", None, None, (RaiseEvent("startLaser"),)),)),),
            ),
            "raise",
        ),
        (
            lambda m: replace(
                m,
                charts=m.charts[:1]
                + (replace(m.charts[1], transitions=m.charts[1].transitions + (Transition("On", "Off", None, VarRef("SpO")),)),),
            ),
            "guard-type",
        ),
        (
            lambda m: replace(
                m,
                charts=m.charts[:1]
                + (replace(m.charts[1], transitions=m.charts[1].transitions + (Transition("On", "Off", None, NativeCall("TWC.pop", (IntLit(1),))),)),),
            ),
            "native-arity",
        ),
        (
            lambda m: replace(m, interface=replace(m.interface, variables=(VarDecl("SpO", 0, 100, 101),))),
            "var-range",
        ),
        (
            lambda m: replace(
                m,
                charts=m.charts[:1]
                + (replace(m.charts[1], transitions=m.charts[1].transitions + (Transition("On", "Off", TimeTrigger(0)),)),),
            ),
            "after",
        ),
    ],
)
def test_single_violations_are_reported(laser, mutate, code):
    diags = sp.validate_model(mutate(laser))
    assert [d.code for d in diags] == [code]


def test_manager_must_have_priority_one(twc_toy):
    flagged = replace(twc_toy, charts=(twc_toy.charts[0], replace(twc_toy.charts[1], manager=True)))
    assert any(d.code == "manager" for d in sp.validate_model(flagged))


def test_generated_models_validate_and_execute():
    rng = random.Random(7)
    for i in range(40):
        m = random_model(rng, name=f"gen{i}")
        assert sp.validate_model(m) == [], m
        state = sp.init_session(m)
        for _ in range(5):
            state, _ = sp.timed_step(m, state, frozenset(m.interface.in_events[:1]))
        for idx, decl in enumerate(m.interface.variables):
            assert decl.lo <= state.vars[idx] <= decl.hi


def test_native_bindings_collected(laser_both):
    assert "TWC.pop" in laser_both.native_bindings
    assert "CEO.run" in laser_both.native_bindings
    assert "TWC.initEventQueue" in laser_both.native_bindings
