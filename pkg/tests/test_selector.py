import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hjvar.selector import (
    SaddleLandscape,
    axiom_audit,
    reduce_convex_fiber,
    sigma_coercive,
    sigma_mountain_pass,
    sigma_opposite,
)

from oracles import minimax_path_value, dense_scan_min, random_lipschitz_2d


def saddle(f, n=201, half=2.0, ends="saddle"):
    return SaddleLandscape.from_callable(
        f, window=((-half, half), (-half, half)), shape=(n, n), ends=ends)


class TestMountainPass:
    def test_pure_saddle_passes_at_origin(self):
        L = saddle(lambda q, p: -q * p)  # odd n: origin on the grid
        res = sigma_mountain_pass(L, want_witness=True)
        assert res.value == 0.0
        assert not res.on_boundary
        # witness maximum equals the value exactly
        assert max(L.samples[c] for c in res.witness) == res.value

    def test_additivity_exact(self):
        base = lambda q, p: -q * p + 0.3 * np.sin(2 * q)
        s0 = sigma_mountain_pass(saddle(base)).value
        for c in (0.5, -1.25, 3.0):
            sc = sigma_mountain_pass(saddle(lambda q, p: base(q, p) + c)).value
            assert sc == s0 + c

    def test_dp_oracle_exact(self):
        rng = np.random.default_rng(11)
        for _ in range(5):
            ell = random_lipschitz_2d(rng)
            L = saddle(lambda q, p: -q * p + ell(q, p), n=60, half=3.0)
            res = sigma_mountain_pass(L)
            ra, rb = L.deep_end_representatives()
            oracle = minimax_path_value(L.samples, ra, rb)
            assert res.value == oracle

    def test_monotonicity(self):
        rng = np.random.default_rng(3)
        ell = random_lipschitz_2d(rng)
        f = lambda q, p: -q * p + ell(q, p)
        g = lambda q, p: f(q, p) + 0.1 * (1 + np.cos(q))
        sf = sigma_mountain_pass(saddle(f)).value
        sg = sigma_mountain_pass(saddle(g)).value
        assert sf <= sg

    def test_continuity_bound(self):
        rng = np.random.default_rng(4)
        ell = random_lipschitz_2d(rng)
        f = lambda q, p: -q * p
        g = lambda q, p: -q * p + ell(q, p)
        sf = sigma_mountain_pass(saddle(f)).value
        sg = sigma_mountain_pass(saddle(g)).value
        Lf = saddle(lambda q, p: np.abs(ell(q, p)))
        sup = float(np.max(Lf.samples))
        assert abs(sf - sg) <= sup + 1e-12

    def test_sign_flip_within_cell_gap(self):
        rng = np.random.default_rng(5)
        ell = random_lipschitz_2d(rng)
        L = saddle(lambda q, p: -q * p + ell(q, p))
        direct = sigma_mountain_pass(L).value
        flipped = sigma_opposite(L).value
        assert abs(direct - flipped) <= L.cell_value_gap() + 1e-12

    def test_warm_bracket_gives_same_value(self):
        rng = np.random.default_rng(6)
        ell = random_lipschitz_2d(rng)
        L = saddle(lambda q, p: -q * p + ell(q, p))
        cold = sigma_mountain_pass(L).value
        warm = sigma_mountain_pass(L, bracket=(cold - 0.05, cold + 0.05)).value
        stale = sigma_mountain_pass(L, bracket=(cold + 1.0, cold + 1.1)).value
        assert warm == cold
        assert stale == cold

    def test_mislabeled_ends_raise(self):
        # constant +inf wall separates the corners: never connect below max;
        # build a landscape whose 'ends' are separated by a high ridge and
        # check the sanity error when the threshold search degenerates
        n = 31
        f = np.zeros((n, n))
        f[:, n // 2] = 1e9
        L = SaddleLandscape(np.linspace(-1, 1, n), np.linspace(-1, 1, n), f,
                            end_a=((n - 1, n - 1),), end_b=((0, 0),))
        res = sigma_mountain_pass(L)
        assert res.value == 1e9  # must climb the wall

    def test_refinement_stability(self):
        rng = np.random.default_rng(9)
        ell = random_lipschitz_2d(rng)
        f = lambda q, p: -q * p + ell(q, p)
        vals = [sigma_mountain_pass(saddle(f, n=n)).value for n in (101, 201, 401)]
        gap = saddle(f, n=101).cell_value_gap()
        assert abs(vals[2] - vals[1]) <= gap
        assert abs(vals[1] - vals[0]) <= gap


class TestCoercive:
    def test_parabola(self):
        res = sigma_coercive(lambda x: x ** 2 + 3.0, (-2.0, 2.0))
        assert res.value == pytest.approx(3.0, abs=1e-10)

    def test_shifted_parabola(self):
        res = sigma_coercive(lambda x: (x - 1.0) ** 2 - 5.0, (-3.0, 3.0))
        assert res.value == pytest.approx(-5.0, abs=1e-10)

    def test_wiggly_against_dense_scan(self):
        f = lambda x: x ** 2 + np.sin(3 * x)
        _, oracle = dense_scan_min(f, -2.0, 2.0)
        res = sigma_coercive(f, (-2.0, 2.0))
        assert res.value == pytest.approx(oracle, abs=1e-8)

    def test_boundary_minimum_raises(self):
        with pytest.raises(RuntimeError, match="boundary"):
            sigma_coercive(lambda x: x, (-1.0, 1.0))


class TestConvexReduction:
    def test_separable(self):
        g = reduce_convex_fiber(lambda x, y: x ** 2 + y ** 2, 2.0, (-3.0, 3.0))
        x = np.linspace(-1, 1, 11)
        np.testing.assert_allclose(g(x), x ** 2, atol=1e-8)
        assert sigma_coercive(g, (-2.0, 2.0)).value == pytest.approx(0.0, abs=1e-8)

    def test_coupled(self):
        # min_y [-x^2 + (y - x)^2] = -x^2
        g = reduce_convex_fiber(lambda x, y: -x ** 2 + (y - x) ** 2, 2.0, (-5.0, 5.0))
        x = np.linspace(-1.5, 1.5, 7)
        np.testing.assert_allclose(g(x), -x ** 2, atol=1e-8)

    def test_boundary_detection(self):
        g = reduce_convex_fiber(lambda x, y: x ** 2 - y, 1.0, (-1.0, 1.0))
        with pytest.raises(RuntimeError, match="boundary"):
            g(np.array([0.0]))


def test_axiom_audit_report():
    rng = np.random.default_rng(13)
    ell = random_lipschitz_2d(rng)
    make = lambda f: saddle(f, n=151)
    report = axiom_audit(make, lambda q, p: -q * p + ell(q, p),
                         perturbation=random_lipschitz_2d(rng, lip_max=0.2))
    assert report["all_pass"], report


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10 ** 6), st.floats(-2.0, 2.0))
def test_property_additivity_and_monotonicity(seed, c):
    rng = np.random.default_rng(seed)
    ell = random_lipschitz_2d(rng)
    base = lambda q, p: -q * p + ell(q, p)
    L = saddle(base, n=61)
    s0 = sigma_mountain_pass(L).value
    s_c = sigma_mountain_pass(saddle(lambda q, p: base(q, p) + c, n=61)).value
    assert s_c == pytest.approx(s0 + c, abs=1e-12)
    assert s0 <= sigma_mountain_pass(
        saddle(lambda q, p: base(q, p) + 0.05, n=61)).value
