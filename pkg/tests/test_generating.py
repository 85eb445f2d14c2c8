import math

import numpy as np
import pytest

from hjvar.generating import (
    FamilyPoint,
    Subdivision,
    critical_points_S,
    eval_F,
    eval_S,
    quadratic_normal_form,
)
from hjvar.gridfn import GridFunction
from hjvar.hamiltonians import get_model, localization_radii


def u_linear(a=1.0):
    return (lambda x: a * np.asarray(x, float), lambda x: a + 0.0 * np.asarray(x, float), abs(a))


class TestEvalF:
    def test_zero_hamiltonian(self):
        H = get_model("zero")
        fe = eval_F(H, 0.0, 0.8, Q=0.3, p=1.2)
        assert float(fe.value) == pytest.approx(0.0, abs=1e-13)
        assert float(fe.dQ) == pytest.approx(0.0, abs=1e-13)
        assert float(fe.dp) == pytest.approx(0.0, abs=1e-13)

    def test_quadratic_independent_of_Q(self):
        H = get_model("quadratic")
        t = 0.3
        for Q in (-1.0, 0.0, 2.5):
            fe = eval_F(H, 0.0, t, Q=Q, p=0.7)
            assert float(fe.value) == pytest.approx(-t * 0.7 ** 2 / 2, abs=1e-12)

    def test_fd_gradient_consistency_nonintegrable(self):
        H = get_model("pendulum")
        t, Q, p = 0.2, 0.4, 0.9
        fe = eval_F(H, 0.0, t, Q=Q, p=p)
        e = 1e-6
        dQ_fd = (float(eval_F(H, 0, t, Q + e, p).value) - float(eval_F(H, 0, t, Q - e, p).value)) / (2 * e)
        dp_fd = (float(eval_F(H, 0, t, Q, p + e).value) - float(eval_F(H, 0, t, Q, p - e).value)) / (2 * e)
        assert dQ_fd == pytest.approx(float(fe.dQ), abs=1e-5)
        assert dp_fd == pytest.approx(float(fe.dp), abs=1e-5)

    def test_fd_gradient_consistency_bump(self):
        H = get_model("nonconvex_bump", a=0.5)
        t, Q = 0.2, 0.1
        p = np.linspace(-1.5, 1.5, 11)
        fe = eval_F(H, 0.0, t, Q=Q, p=p)
        e = 1e-6
        dp_fd = (eval_F(H, 0, t, Q, p + e).value - eval_F(H, 0, t, Q, p - e).value) / (2 * e)
        np.testing.assert_allclose(dp_fd, fe.dp, atol=1e-5)
        np.testing.assert_allclose(fe.dQ, 0.0, atol=1e-12)  # P = p for H(p)


class TestEvalS:
    def test_zero_hamiltonian_bilinear(self):
        H = get_model("zero")
        sub = Subdivision.single(0.0, 0.5)
        u = u_linear(0.7)
        ev = eval_S(H, u, 0.0, 0.5, sub, Q=0.2, xi=FamilyPoint(q=-0.1, p=0.4))
        # S = u(q) + p (Q - q)
        assert ev.value == pytest.approx(0.7 * -0.1 + 0.4 * 0.3, abs=1e-12)
        assert ev.grad_q == pytest.approx(0.7 - 0.4, abs=1e-12)
        assert ev.grad_p == pytest.approx(0.3, abs=1e-12)

    def test_stationary_at_graph_point(self):
        H = get_model("zero")
        sub = Subdivision.single(0.0, 0.5)
        u = (lambda x: np.cos(x), lambda x: -np.sin(x), 1.0)
        Q = 0.9
        ev = eval_S(H, u, 0.0, 0.5, sub, Q=Q, xi=FamilyPoint(q=Q, p=-math.sin(Q)))
        assert ev.value == pytest.approx(math.cos(Q), abs=1e-12)
        assert ev.grad_norm() <= 1e-12

    def test_quadratic_characteristic_value(self):
        H = get_model("quadratic")
        t, Q = 0.6, 1.1
        sub = Subdivision.single(0.0, t)
        ev = eval_S(H, u_linear(1.0), 0.0, t, sub, Q=Q, xi=FamilyPoint(q=Q - t, p=1.0))
        assert ev.value == pytest.approx(Q - t / 2, abs=1e-12)
        assert ev.grad_norm() <= 1e-12
        assert ev.dQ == pytest.approx(1.0, abs=1e-12)

    def test_time_derivatives_at_critical_point(self):
        # dS/dt = -H(t, Q, P), dS/ds = H(s, q, p) checked by differencing
        H = get_model("pendulum")
        u = (lambda x: np.cos(x), lambda x: -np.sin(x), 1.0)
        s, t, Q = 0.0, 0.18, 0.3
        cps = critical_points_S(H, u, s, t, Q, search_window=(-2.0, 2.5))
        cp = cps[0]
        sub = Subdivision.single(s, t)
        ev = eval_S(H, u, s, t, sub, Q, cp.xi)
        assert ev.grad_norm() <= 1e-6
        e = 1e-5

        def value_at(s2, t2):
            cs = critical_points_S(H, u, s2, t2, Q, search_window=(-2.0, 2.5))
            k = int(np.argmin([abs(c.xi.q - cp.xi.q) for c in cs]))
            return cs[k].value

        dt_fd = (value_at(s, t + e) - value_at(s, t - e)) / (2 * e)
        ds_fd = (value_at(s + e, t) - value_at(s - e, t)) / (2 * e)
        assert dt_fd == pytest.approx(ev.dt, abs=1e-4)
        assert ds_fd == pytest.approx(ev.ds, abs=1e-4)

    def test_multi_leg_gradient_fd(self):
        H = get_model("pendulum")
        s, t = 0.0, 0.36
        sub = Subdivision.uniform(s, t, 2)
        u = (lambda x: np.cos(x), lambda x: -np.sin(x), 1.0)
        Q = 0.2
        xi = FamilyPoint(q=0.1, p=-0.2, nu=(0.15, -0.25))
        ev = eval_S(H, u, s, t, sub, Q, xi)
        e = 1e-6

        def val(q, p, nu0, nu1):
            return eval_S(H, u, s, t, sub, Q, FamilyPoint(q, p, (nu0, nu1))).value

        g_fd = [
            (val(0.1 + e, -0.2, 0.15, -0.25) - val(0.1 - e, -0.2, 0.15, -0.25)) / (2 * e),
            (val(0.1, -0.2 + e, 0.15, -0.25) - val(0.1, -0.2 - e, 0.15, -0.25)) / (2 * e),
            (val(0.1, -0.2, 0.15 + e, -0.25) - val(0.1, -0.2, 0.15 - e, -0.25)) / (2 * e),
            (val(0.1, -0.2, 0.15, -0.25 + e) - val(0.1, -0.2, 0.15, -0.25 - e)) / (2 * e),
        ]
        got = [ev.grad_q, ev.grad_p, ev.grad_nu[0], ev.grad_nu[1]]
        np.testing.assert_allclose(got, g_fd, atol=2e-5)

    def test_subdivision_independence_of_critical_values(self):
        # inserting an interior or zero-length step changes no critical value
        H = get_model("pendulum")
        u = (lambda x: 0.5 * np.cos(x), lambda x: -0.5 * np.sin(x), 0.5)
        s, t, Q = 0.0, 0.2, 0.15
        base = critical_points_S(H, u, s, t, Q, search_window=(-2.0, 2.3))
        vals = sorted(c.value for c in base)
        for sub in (Subdivision.uniform(s, t, 2),
                    Subdivision(times=(s, 0.12, 0.12, t), max_step=0.12)):
            cps = critical_points_S(H, u, s, t, Q, search_window=(-2.0, 2.3),
                                    subdivision=sub)
            vals2 = sorted(c.value for c in cps)
            np.testing.assert_allclose(vals2, vals, atol=1e-9)
            for c in cps:
                ev = eval_S(H, u, s, t, sub, Q, c.xi)
                assert ev.grad_norm() <= 1e-6
                assert ev.value == pytest.approx(c.value, abs=1e-9)


class TestCriticalPoints:
    def test_zero_hamiltonian_identity_root(self):
        H = get_model("zero")
        u = (lambda x: np.cos(x), lambda x: -np.sin(x), 1.0)
        cps = critical_points_S(H, u, 0.0, 0.4, Q=0.7, search_window=(-2, 3.5))
        assert len(cps) == 1
        assert cps[0].xi.q == pytest.approx(0.7, abs=1e-9)
        assert cps[0].value == pytest.approx(math.cos(0.7), abs=1e-9)
        assert cps[0].P_end == pytest.approx(-math.sin(0.7), abs=1e-9)

    def test_quadratic_linear_characteristic(self):
        H = get_model("quadratic")
        t, Q = 0.35, 0.6
        cps = critical_points_S(H, u_linear(1.0), 0.0, t, Q, search_window=(-2, 3))
        assert len(cps) == 1
        assert cps[0].xi.q == pytest.approx(Q - t, abs=1e-9)
        assert cps[0].value == pytest.approx(Q - t / 2, abs=1e-9)
        assert cps[0].P_end == pytest.approx(1.0, abs=1e-10)

    def test_three_roots_past_focus_time(self):
        # u = -q^2/2 clamped to slopes +-1, H = p^2/2, t past the focusing time
        H = get_model("quadratic")
        u = GridFunction.from_callable(
            lambda x: np.where(np.abs(x) <= 1, -x ** 2 / 2, -np.abs(x) + 0.5),
            -6.0, 6.0, 0.002, lip=1.0)
        t = 1.5
        cps = critical_points_S(H, u, 0.0, t, Q=0.0, search_window=(-5.5, 5.5),
                                mollify_cells=2.0)
        assert len(cps) == 3
        qs = sorted(c.xi.q for c in cps)
        assert qs[0] == pytest.approx(-1.5, abs=5e-3)
        assert qs[1] == pytest.approx(0.0, abs=5e-3)
        assert qs[2] == pytest.approx(1.5, abs=5e-3)
        # dense-scan oracle: values of u(q) + t p^2/2 at the roots
        vals = sorted(c.value for c in cps)
        assert vals[0] == pytest.approx(-0.25, abs=5e-3)
        assert vals[1] == pytest.approx(-0.25, abs=5e-3)
        assert vals[2] == pytest.approx(0.0, abs=5e-3)

    def test_window_too_small_raises(self):
        H = get_model("quadratic")
        with pytest.raises(ValueError, match="window"):
            critical_points_S(H, u_linear(1.0), 0.0, 0.3, Q=0.0,
                              search_window=(-0.1, 0.1))

    def test_localization_of_roots(self):
        H = get_model("pendulum")
        u = (lambda x: np.cos(x), lambda x: -np.sin(x), 1.0)
        s, t, Q = 0.0, 0.2, 0.4
        r_q, r_p = localization_radii(H.constant_C, 1.0, s, t)
        cps = critical_points_S(H, u, s, t, Q, search_window=(Q - 2 * r_q, Q + 2 * r_q))
        for c in cps:
            assert abs(c.xi.q - Q) < r_q
            assert abs(c.xi.p) < r_p


class TestQuadraticNormalForm:
    def test_single_leg_no_tail(self):
        nf = quadratic_normal_form(Subdivision.single(0.0, 0.3), 0.0)
        np.testing.assert_allclose(nf.matrix, [[0.0, -0.5], [-0.5, 0.0]], atol=0)
        assert nf.index == 1

    def test_single_leg_with_tail(self):
        tau, z = 0.4, 0.8
        nf = quadratic_normal_form(Subdivision.single(0.0, tau), z)
        np.testing.assert_allclose(nf.matrix, [[tau * z, -0.5], [-0.5, 0.0]], atol=1e-15)
        assert nf.index == 1
        assert np.linalg.det(nf.matrix) == pytest.approx(-0.25, abs=1e-12)

    def test_two_leg_band(self):
        nf = quadratic_normal_form(Subdivision.uniform(0.0, 0.4, 2), 0.0)
        assert nf.matrix.shape == (4, 4)
        assert nf.index == 2
        eig = np.linalg.eigvalsh(nf.matrix)
        assert float(np.min(np.abs(eig))) > 1e-8
