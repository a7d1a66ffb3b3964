import pathlib
import sys

import pytest

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parent))

import statepat as sp

MODELS = pathlib.Path(__file__).resolve().parent.parent / "models"


def load_model(name: str) -> sp.Model:
    return sp.parse_model((MODELS / name).read_text())


def with_order(model: sp.Model, order: tuple[int, ...]) -> sp.Model:
    from dataclasses import replace

    return replace(model, interface=replace(model.interface, exe_orders=order))


@pytest.fixture(scope="session")
def laser():
    return load_model("laser.scm")


@pytest.fixture(scope="session")
def laser_both(laser):
    return sp.apply_both(laser)


@pytest.fixture(scope="session")
def twc_toy():
    return load_model("twc_toy.scm")


@pytest.fixture(scope="session")
def ceo_toy():
    return load_model("ceo_toy.scm")
