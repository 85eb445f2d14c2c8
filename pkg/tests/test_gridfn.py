import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hjvar.gridfn import GridFunction, make_initial_condition


def test_interpolation_and_extension():
    u = GridFunction.from_callable(np.abs, -1.0, 1.0, 0.25, lip=1.0)
    assert u(0.0) == pytest.approx(0.0)
    assert u(0.125) == pytest.approx(0.125)
    # clamped-slope linear extension
    assert u(2.0) == pytest.approx(2.0)
    assert u(-3.5) == pytest.approx(3.5)


def test_extension_clamps_slope():
    vals = np.array([0.0, 1.0, 0.0])
    u = GridFunction(0.0, 1.0, vals, lip=1.0)
    # boundary slopes are +-1, both certified
    assert u(-1.0) == pytest.approx(-1.0)
    assert u(3.0) == pytest.approx(-1.0)
    tight = GridFunction(0.0, 1.0, vals, lip=1.0)
    assert tight.measured_lip() == pytest.approx(1.0)


def test_lip_certification_rejected_when_too_small():
    with pytest.raises(ValueError, match="below measured"):
        GridFunction(0.0, 0.1, np.array([0.0, 1.0]), lip=1.0)


def test_mollified_stays_close_and_lipschitz():
    u = GridFunction.from_callable(np.abs, -2.0, 2.0, 0.01, lip=1.0)
    um = u.mollified(2.0)
    assert um.lip <= u.lip + 1e-12
    x = np.linspace(-2, 2, 1001)
    assert float(np.max(np.abs(um(x) - u(x)))) <= 3 * u.lip * 0.01


def test_derivative_fn_matches_smooth():
    u = GridFunction.from_callable(np.cos, -3.0, 3.0, 0.005, lip=1.0)
    du = u.derivative_fn()
    x = np.linspace(-2.5, 2.5, 101)
    assert float(np.max(np.abs(du(x) + np.sin(x)))) < 5e-4


def test_restrict():
    u = GridFunction.from_callable(lambda x: x ** 2 / 2, -2.0, 2.0, 0.1, lip=2.0)
    v = u.restrict(-0.55, 0.55)
    assert v.origin <= -0.55 and v.hi >= 0.55
    x = np.linspace(-0.5, 0.5, 20)
    np.testing.assert_allclose(v(x), u(x), atol=0)


def test_ic_registry():
    u = make_initial_condition("abs", -1, 1, 0.5)
    assert u(0.5) == pytest.approx(0.5)
    u = make_initial_condition("linear -0.75", -1, 1, 0.5)
    assert u(2.0) == pytest.approx(-1.5)
    assert u.lip == pytest.approx(0.75, abs=1e-12)
    u = make_initial_condition("constant 3", -1, 1, 0.5)
    assert u(10.0) == pytest.approx(3.0)
    with pytest.raises(KeyError):
        make_initial_condition("bogus", -1, 1, 0.5)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=3, max_size=40),
       st.floats(0.05, 2.0))
def test_extension_preserves_global_lipschitz(vals, h):
    vals = np.asarray(vals)
    lip = float(np.max(np.abs(np.diff(vals)))) / h + 1e-9
    u = GridFunction(0.0, h, vals, lip=max(lip, 1e-9))
    x = np.linspace(-5 * h, (len(vals) + 5) * h, 200)
    y = u(x)
    assert np.all(np.abs(np.diff(y)) <= u.lip * np.diff(x) + 1e-7)
