import math

import numpy as np
import pytest

from hjvar.hamiltonians import (
    CutoffProfile,
    audit_growth_constants,
    band_truncate,
    cutoff_compact_support,
    get_model,
    legendre_transform,
    localization_radii,
    max_step_delta1,
    twist_step_bound,
)


def test_registry_names():
    for name in ("zero", "quadratic", "pendulum", "nonconvex_bump", "concave_quadratic"):
        H = get_model(name)
        assert H.constant_C > 0
    with pytest.raises(KeyError, match="registry"):
        get_model("unknown_model")


def test_growth_audit_passes_for_builtin_models():
    for name in ("zero", "quadratic", "pendulum", "concave_quadratic"):
        audit_growth_constants(get_model(name))
    audit_growth_constants(get_model("nonconvex_bump", a=2.0))


def test_growth_audit_catches_undersized_constant():
    H = get_model("quadratic")
    bad = type(H)(name="bad", value=H.value, dq=H.dq, dp=H.dp,
                  constant_C=0.3, kind="convex", integrable=True, modulus=1.0)
    with pytest.raises(ValueError, match="curvature bound"):
        audit_growth_constants(bad)


def test_max_step_formula():
    assert max_step_delta1(math.log(1.5)) == pytest.approx(1.0, abs=1e-15)
    assert max_step_delta1(10 * math.log(1.5)) == pytest.approx(0.1, abs=1e-15)
    assert max_step_delta1(1.0) == pytest.approx(0.4054651081081644, abs=1e-15)
    with pytest.raises(ValueError):
        max_step_delta1(0.0)


def test_localization_radii_values():
    r_q, r_p = localization_radii(1.0, 1.0, 0.0, 0.0)
    assert r_q == 0.0 and r_p == pytest.approx(1.0)
    r_q, r_p = localization_radii(1.0, 1.0, 0.0, 0.5)
    assert r_q == pytest.approx((math.exp(0.5) - 1.0) * 2.0, rel=1e-12)
    assert r_p == pytest.approx(math.exp(0.5) * 2.0 - 1.0, rel=1e-12)
    r_q, r_p = localization_radii(1.0, 1.0, 0.0, 0.5, integrable=True)
    assert (r_q, r_p) == (pytest.approx(1.0), pytest.approx(1.0))


def test_twist_step_bound_monotone_halved():
    d2 = twist_step_bound(1.0, 1.0)
    # definition: largest tau with m tau >= 4(e^{C tau} - 1 - C tau), halved
    tau_star = 2 * d2
    assert 1.0 * tau_star >= 4 * (math.expm1(tau_star) - tau_star) - 1e-10
    assert 1.0 * (tau_star * 1.01) < 4 * (math.expm1(tau_star * 1.01) - tau_star * 1.01)
    assert twist_step_bound(2.0, 1.0) < d2


class TestCutoff:
    def test_inner_region_untouched(self):
        H = get_model("pendulum")
        Hc = cutoff_compact_support(H, R=2.0, eps=0.5)
        p = np.linspace(-1.0, 1.0, 11)
        np.testing.assert_allclose(Hc.value(0.0, 0.3, p), H.value(0.0, 0.3, p), rtol=0, atol=0)
        assert Hc.constant_C == pytest.approx(H.constant_C * 1.5)

    def test_outer_region_zero(self):
        H = get_model("quadratic")
        eps = 1.0
        Hc = cutoff_compact_support(H, R=2.0, eps=eps)
        outer_nominal = (1.0 + max(1.0, 2.0)) * math.exp(12.0 / eps) - 1.0
        assert Hc.support_radius <= outer_nominal * (1 + 1e-9)
        p = np.array([Hc.support_radius * 1.01, outer_nominal])
        np.testing.assert_allclose(Hc.value(0.0, 0.0, p), 0.0, atol=0)

    @pytest.mark.parametrize("eps", [0.25, 0.5, 1.0])
    def test_profile_derivative_bounds(self, eps):
        H = get_model("quadratic")
        Hc = cutoff_compact_support(H, R=1.5, eps=eps)
        prof = Hc.cutoff
        r = np.expm1(np.linspace(0.0, np.log1p(prof.outer_radius * 1.1), 20000))
        dphi = prof.deriv(r)
        assert np.all(np.abs(dphi) <= eps / (6.0 * (1.0 + r)) + 1e-12)
        rr = r[r > 0]
        assert np.all(np.abs(prof.deriv(rr)) / rr <= eps / (6.0 * (1.0 + rr) ** 2) + 1e-12)
        # second derivative via differences of the stored slope
        mid = 0.5 * (r[1:] + r[:-1])
        d2 = np.diff(dphi) / np.diff(r)
        assert np.all(np.abs(d2) <= eps / (6.0 * (1.0 + mid) ** 2) + 1e-9)

    def test_fd_gradient_growth_after_cutoff(self):
        H = get_model("nonconvex_bump", a=0.5)
        eps = 0.5
        Hc = cutoff_compact_support(H, R=2.0, eps=eps)
        p = np.linspace(-6.0, 6.0, 301)
        e = 1e-5
        dfd = (Hc.value(0.0, 0.0, p + e) - Hc.value(0.0, 0.0, p - e)) / (2 * e)
        bound = Hc.constant_C * (1.0 + np.abs(p))
        assert np.all(np.abs(dfd) <= bound + 1e-6)

    def test_band_truncate_agrees_inside_and_vanishes_outside(self):
        H = get_model("nonconvex_bump", a=0.5)
        Ht = band_truncate(H, R=1.5, width=0.5)
        p_in = np.linspace(-1.5, 1.5, 7)
        np.testing.assert_array_equal(Ht.value(0, 0.0, p_in), H.value(0, 0.0, p_in))
        p_out = np.array([-3.0, 2.01, 5.0])
        np.testing.assert_allclose(Ht.value(0, 0.0, p_out), 0.0, atol=0)


class TestLegendre:
    def test_quadratic_self_dual(self):
        H = get_model("quadratic")
        L, p = legendre_transform(H, 0.0, 0.0, 3.0)
        assert L == pytest.approx(4.5, abs=1e-9)
        assert p == pytest.approx(3.0, abs=1e-9)

    def test_pendulum_at_origin(self):
        H = get_model("pendulum")
        L, p = legendre_transform(H, 0.0, 0.0, 0.0)
        assert L == pytest.approx(-1.0, abs=1e-9)
        assert p == pytest.approx(0.0, abs=1e-6)

    def test_legendre_inequality_random(self):
        H = get_model("pendulum")
        rng = np.random.default_rng(7)
        for _ in range(50):
            v = float(rng.uniform(-3, 3))
            p = float(rng.uniform(-3, 3))
            q = float(rng.uniform(-3, 3))
            L, p_star = legendre_transform(H, 0.0, q, v)
            slack = L + float(H.value(0.0, q, p)) - p * v
            assert slack >= -1e-9
            L2, _ = legendre_transform(H, 0.0, q, float(H.dp(0.0, q, p)))
            assert L2 + float(H.value(0.0, q, p)) - p * float(H.dp(0.0, q, p)) == pytest.approx(0.0, abs=1e-8)

    def test_concave_uses_inf(self):
        H = get_model("concave_quadratic")
        L, p = legendre_transform(H, 0.0, 0.0, 2.0)
        # inf_p (p v + p^2/2) at p = -v
        assert p == pytest.approx(-2.0, abs=1e-8)
        assert L == pytest.approx(-2.0, abs=1e-8)
