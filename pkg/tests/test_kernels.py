import random
from array import array

import pytest

import streams
from iottrust import _kernels_py, kernels
from iottrust.behavior import restore_score
from iottrust.engine import Engine, build_scenario


def _random_engine(seed, n=30, literal=False):
    rng = random.Random(seed)
    scen = streams.scenario(rng, n_devices=n)
    if literal:
        scen["params"]["sbt_v_convention"] = "PaperLiteral"
    engine = Engine(build_scenario(scen))
    engine.replay(streams.events(rng, scen, 400))
    return engine


def test_restore_matches_scalar(kernel_impl):
    rng = random.Random(3)
    c = array("d", (rng.random() for _ in range(50)))
    n = array("d", (rng.random() for _ in range(50)))
    expected_c = [restore_score(x, 0.003, 17.25) for x in c]
    expected_n = [restore_score(x, 0.0071, 17.25) for x in n]
    kernels.restore_all(c, n, 0.003, 0.0071, 17.25)
    assert list(c) == expected_c
    assert list(n) == expected_n


def test_empty_state(kernel_impl):
    engine = Engine()
    assert all(len(col) == 0 for col in kernels.score_all(engine.state))


@pytest.mark.skipif(kernels.BACKEND != "compiled", reason="extension not built")
@pytest.mark.parametrize("seed", range(5))
@pytest.mark.parametrize("literal", [False, True])
def test_backends_bit_identical(seed, literal):
    from iottrust import _kernels

    engine = _random_engine(seed, literal=literal)
    py = kernels.score_all(engine.state, impl=_kernels_py)
    cy = kernels.score_all(engine.state, impl=_kernels)
    assert [list(col) for col in py] == [list(col) for col in cy]

    a = array("d", engine.state.bbt_c), array("d", engine.state.bbt_n)
    b = array("d", engine.state.bbt_c), array("d", engine.state.bbt_n)
    _kernels_py.restore_all(*a, 0.001, 0.002, 123.456)
    _kernels.restore_all(*b, 0.001, 0.002, 123.456)
    assert a == b


def test_env_forces_pure(monkeypatch):
    monkeypatch.setenv("IOTTRUST_PURE", "1")
    impl, name = kernels._load()
    assert impl is _kernels_py and name == "python"
