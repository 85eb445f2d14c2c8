"""Hamiltonian models on T*R^1 with certified growth constants.

A model carries H and its analytic first derivatives plus a constant C
certifying the growth bounds

    ||d2 H|| <= C,   ||dH|| <= C(1 + |p|),   |H| <= C(1 + |p|)^2,

which are what every time-step bound and localization radius in this
package is derived from.  Models are immutable; all callables accept
numpy arrays in q and p.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

__all__ = [
    "HamiltonianModel",
    "PhasePoint",
    "CutoffProfile",
    "max_step_delta1",
    "twist_step_bound",
    "localization_radii",
    "cutoff_compact_support",
    "band_truncate",
    "legendre_transform",
    "audit_growth_constants",
    "make_model",
    "REGISTRY",
    "get_model",
]


@dataclass(frozen=True)
class PhasePoint:
    """A point (q, p) of phase space."""

    q: float
    p: float

    def __post_init__(self):
        if not (math.isfinite(self.q) and math.isfinite(self.p)):
            raise ValueError("phase point has non-finite components")


@dataclass(frozen=True)
class HamiltonianModel:
    """H(t, q, p) with analytic spatial derivatives and certified bounds.

    ``kind`` records fiberwise convexity ("general", "convex", "concave");
    ``integrable`` flags models of the momentum alone, H = H(p), for which
    the flow is exact and every estimate sharpens.  ``modulus`` is the
    uniform convexity (or concavity) constant m with d2_p H >= m (<= -m).
    ``support_radius``/``quadratic_tail`` describe a known tail
    H(t,q,p) = Z(p) = quadratic_tail * p**2 for |p| >= support_radius.
    """

    name: str
    value: Callable
    dq: Callable
    dp: Callable
    constant_C: float
    kind: str = "general"
    integrable: bool = False
    modulus: float = 0.0
    support_radius: Optional[float] = None
    quadratic_tail: float = 0.0
    time_dependent: bool = False
    cutoff: Optional["CutoffProfile"] = field(default=None, compare=False)

    def __post_init__(self):
        if self.constant_C <= 0:
            raise ValueError("constant_C must be positive")
        if self.kind not in ("general", "convex", "concave"):
            raise ValueError(f"unknown kind {self.kind!r}")
        if self.kind in ("convex", "concave") and self.modulus <= 0:
            raise ValueError("convex/concave models need a positive modulus")

    def eval(self, t, q, p):
        """Return (value, dq, dp) at (t, q, p); array-friendly."""
        return self.value(t, q, p), self.dq(t, q, p), self.dp(t, q, p)

    @property
    def is_convex(self) -> bool:
        return self.kind == "convex"

    @property
    def is_concave(self) -> bool:
        return self.kind == "concave"


def max_step_delta1(C: float) -> float:
    """Largest time step ln(3/2)/C on which the flow stays a 1/2-Lipschitz
    perturbation of the identity, so (q, p) -> (Q, p) is invertible."""
    if C <= 0:
        raise ValueError("C must be positive")
    return math.log(1.5) / C


def twist_step_bound(C: float, m: float) -> float:
    """Step bound for the convex shooting map: largest tau with
    m*tau >= 4*(exp(C*tau) - 1 - C*tau), halved for safety.

    Below the returned bound, dQ/dp >= m*(t-s)/2 > 0, so shooting on p is
    monotone and bisection brackets are valid.
    """
    if C <= 0 or m <= 0:
        raise ValueError("C and m must be positive")

    def gap(tau):
        return m * tau - 4.0 * (math.expm1(C * tau) - C * tau)

    lo, hi = 0.0, 1.0 / C
    while gap(hi) > 0:
        lo, hi = hi, 2 * hi
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if gap(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * lo


def localization_radii(C, L, s, t, integrable=False):
    """Radii (r_q, r_p) of the position/momentum balls around (Q, 0) that
    contain every characteristic feeding the solution value at Q.

    General models: r_q = (e^{C(t-s)} - 1)(1+L), r_p = e^{C(t-s)}(1+L) - 1.
    Models of p alone keep their momentum, so r_q = C(t-s)(1+L), r_p = L.
    """
    if C <= 0 or L < 0 or t < s:
        raise ValueError("need C > 0, L >= 0, s <= t")
    tau = t - s
    if integrable:
        return C * tau * (1.0 + L), float(L)
    g = math.expm1(C * tau)
    return g * (1.0 + L), g * (1.0 + L) + L


# ---------------------------------------------------------------------------
# fiberwise cutoff
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CutoffProfile:
    """C^2 taper phi: [0, inf) -> [0, 1], equal to 1 on [0, R], vanishing at
    a finite outer radius, with the slow-decay derivative bounds

        |phi'| <= eps/(6(1+r)),  |phi''| <= eps/(6(1+r)^2),
        |phi'|/r <= eps/(6(1+r)^2)

    that keep the growth constant of a tapered Hamiltonian within a factor
    (1 + eps) of the original.
    """

    R: float
    eps: float
    knots: np.ndarray = field(repr=False)       # radii (log-spaced)
    values: np.ndarray = field(repr=False)      # phi at knots
    slopes: np.ndarray = field(repr=False)      # phi' at knots
    outer_radius: float = 0.0

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        return np.interp(r, self.knots, self.values, left=1.0, right=0.0)

    def deriv(self, r):
        r = np.asarray(r, dtype=float)
        return np.interp(r, self.knots, self.slopes, left=0.0, right=0.0)


def _build_cutoff_profile(R: float, eps: float) -> CutoffProfile:
    # Work in y = ln(1 + r), where the three bounds on g(y) = -d(phi)/dy read
    #     g <= (eps/6) (1 - e^{-y}),   |g - g'| <= eps/6,
    # and the total descent is int g dy = 1 over a budget of 12/eps in y.
    # Profile: linear rise at rate eps/7, a stretch hugging 98% of the cap,
    # then the steepest admissible relaxation g' = 0.97 (g - eps/6) down to
    # zero; a Gaussian mollification in y makes phi C^2 and the descent start
    # y_d is tuned so the mollified descent integrates to exactly 1.
    from scipy.ndimage import gaussian_filter1d

    Rp = max(1.0, R)
    y0 = math.log1p(Rp)
    y_budget = 12.0 / eps
    n = 30001
    ys = np.linspace(y0, y0 + 1.02 * y_budget, n)
    dy = ys[1] - ys[0]
    sigma_y = max(3.0 * dy, 0.06)
    # the rise starts clear of the left grid edge so mollification cannot
    # smear descent mass below y0 (phi must stay exactly 1 for r <= R)
    y_start = y0 + 6.0 * sigma_y
    cap = 0.98 * (eps / 6.0) * (1.0 - np.exp(-ys))
    rise = (eps / 7.0) * (ys - y_start)
    head = np.clip(np.minimum(rise, cap), 0.0, None)

    def g_of(y_d):
        g = head.copy()
        tail = ys > y_d
        g_yd = float(np.interp(y_d, ys, head))
        desc = eps / 6.0 - (eps / 6.0 - g_yd) * np.exp(0.97 * (ys - y_d))
        g[tail] = np.maximum(0.0, desc[tail])
        g = gaussian_filter1d(g, sigma=sigma_y / dy, mode="nearest")
        g[ys <= y0 + 3.0 * sigma_y] = 0.0
        return np.maximum(0.0, g)

    def descent(y_d):
        return float(np.trapezoid(g_of(y_d), ys))

    lo, hi = y0 + 0.5, y0 + y_budget - 0.5
    if descent(hi) < 1.0:
        raise RuntimeError("cutoff profile cannot reach zero within budget")
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if descent(mid) < 1.0:
            lo = mid
        else:
            hi = mid
    g = g_of(hi)
    g *= 1.0 / float(np.trapezoid(g, ys))  # exact unit descent
    values = 1.0 - np.concatenate(
        ([0.0], np.cumsum(0.5 * (g[1:] + g[:-1]) * dy)))
    knots = np.expm1(ys)
    slopes = -g / (1.0 + knots)
    # support ends where the descent rate does (cumulative mass is 1 there
    # up to float accumulation noise)
    nonzero = np.nonzero(g > 0)[0]
    k = min(int(nonzero[-1]) + 1, n - 1) if nonzero.size else n - 1
    if abs(values[k]) > 1e-10:
        raise RuntimeError("cutoff profile descent did not close")
    outer = float(knots[k])
    values = np.clip(values, 0.0, 1.0)
    values[k:] = 0.0
    slopes[k:] = 0.0
    return CutoffProfile(R=R, eps=eps, knots=knots, values=values,
                         slopes=slopes, outer_radius=outer)


def cutoff_compact_support(H: HamiltonianModel, R: float, eps: float) -> HamiltonianModel:
    """Taper H to zero in the fiber: returns phi(|p|) * H(t,q,p) with the
    slow-decay profile, certified constant C*(1+eps), equal to H for |p| <= R.

    The outer support radius is huge for small eps (that is the price of the
    (1+eps) certificate); use :func:`band_truncate` when the zero region must
    sit inside a prescribed window.
    """
    if R <= 0 or not (0 < eps <= 1):
        raise ValueError("need R > 0 and 0 < eps <= 1")
    prof = _build_cutoff_profile(R, eps)
    Hv, Hq, Hp = H.value, H.dq, H.dp

    def value(t, q, p):
        return prof(np.abs(p)) * Hv(t, q, p)

    def dq(t, q, p):
        return prof(np.abs(p)) * Hq(t, q, p)

    def dp(t, q, p):
        p = np.asarray(p, dtype=float)
        r = np.abs(p)
        return prof.deriv(r) * np.sign(p) * Hv(t, q, p) + prof(r) * Hp(t, q, p)

    return HamiltonianModel(
        name=f"{H.name}|cutoff(R={R:g},eps={eps:g})",
        value=value, dq=dq, dp=dp,
        constant_C=H.constant_C * (1.0 + eps),
        kind="general",
        integrable=H.integrable,
        support_radius=prof.outer_radius,
        quadratic_tail=0.0,
        time_dependent=H.time_dependent,
        cutoff=prof,
    )


def _smoothstep_c2(u):
    u = np.clip(u, 0.0, 1.0)
    return u ** 3 * (u * (6.0 * u - 15.0) + 10.0)


def _smoothstep_c2_deriv(u):
    inside = (u > 0.0) & (u < 1.0)
    u = np.clip(u, 0.0, 1.0)
    return np.where(inside, 30.0 * u ** 2 * (u - 1.0) ** 2, 0.0)


def band_truncate(H: HamiltonianModel, R: float, width: float) -> HamiltonianModel:
    """Hard C^2 truncation of H to zero across the band R <= |p| <= R + width.

    Unlike :func:`cutoff_compact_support` this does not certify a (1+eps)
    growth constant, but it leaves H untouched for |p| <= R and every
    characteristic with momentum inside that ball — and hence every critical
    point of the reduced action — is identical for H and the truncation.
    """
    if R <= 0 or width <= 0:
        raise ValueError("need positive R and width")
    Hv, Hq, Hp = H.value, H.dq, H.dp

    def chi(p):
        return 1.0 - _smoothstep_c2((np.abs(p) - R) / width)

    def chi_prime(p):
        return -_smoothstep_c2_deriv((np.abs(p) - R) / width) / width * np.sign(p)

    def value(t, q, p):
        return chi(p) * Hv(t, q, p)

    def dq(t, q, p):
        return chi(p) * Hq(t, q, p)

    def dp(t, q, p):
        return chi_prime(p) * Hv(t, q, p) + chi(p) * Hp(t, q, p)

    return HamiltonianModel(
        name=f"{H.name}|band(R={R:g},w={width:g})",
        value=value, dq=dq, dp=dp,
        constant_C=H.constant_C,  # inherited; valid inside |p| <= R where it is used
        kind="general",
        integrable=H.integrable,
        support_radius=R + width,
        quadratic_tail=0.0,
        time_dependent=H.time_dependent,
    )


# ---------------------------------------------------------------------------
# Legendre transform
# ---------------------------------------------------------------------------


def legendre_transform(H: HamiltonianModel, t, q, v):
    """sup_p (p*v - H(t,q,p)) and its maximizer, for uniformly convex models
    (inf version for concave ones).  Vectorized in v.

    The stationarity condition dH/dp = v has a unique root by strict
    convexity; it is bracketed using the modulus and solved by bisection.
    """
    if H.kind not in ("convex", "concave"):
        raise ValueError("legendre_transform needs a convex or concave model")
    sign = 1.0 if H.is_convex else -1.0
    v = np.asarray(v, dtype=float)
    scalar = v.ndim == 0
    v = np.atleast_1d(v)
    m, C = H.modulus, H.constant_C

    def slope(p):
        return sign * H.dp(t, q, p)

    # dH/dp is m-strongly monotone; |dH/dp(0)| <= C
    half = (np.abs(v) + C) / m + 1.0
    lo, hi = -half, half
    if np.any(slope(lo) > sign * v) or np.any(slope(hi) < sign * v):
        raise RuntimeError("legendre bracket failed; wrong convexity flag?")
    for _ in range(90):
        mid = 0.5 * (lo + hi)
        take_hi = slope(mid) < sign * v
        lo = np.where(take_hi, mid, lo)
        hi = np.where(take_hi, hi, mid)
    p_star = 0.5 * (lo + hi)
    L = p_star * v - H.value(t, q, p_star)
    if scalar:
        return float(L[0]), float(p_star[0])
    return L, p_star


# ---------------------------------------------------------------------------
# growth-constant audit
# ---------------------------------------------------------------------------


def audit_growth_constants(H: HamiltonianModel, q_range=(-6.0, 6.0),
                           p_range=(-6.0, 6.0), n=41, t_samples=(0.0, 0.37, 1.0),
                           fd_step=1e-5, slack=1e-6):
    """Spot-check the three growth bounds against constant_C on a sample grid.

    Returns a dict of measured suprema; raises ValueError naming the violated
    bound when a sampled value exceeds the certified constant.
    """
    C = H.constant_C
    qs = np.linspace(*q_range, n)
    ps = np.linspace(*p_range, n)
    Q, P = np.meshgrid(qs, ps, indexing="ij")
    worst = {"value_ratio": 0.0, "grad_ratio": 0.0, "hess": 0.0}
    e = fd_step
    for t in t_samples:
        val, dq, dp = H.eval(t, Q, P)
        scale1 = 1.0 + np.abs(P)
        worst["value_ratio"] = max(worst["value_ratio"], float(np.max(np.abs(val) / scale1 ** 2)))
        grad = np.hypot(dq, dp)
        worst["grad_ratio"] = max(worst["grad_ratio"], float(np.max(grad / scale1)))
        # second derivatives from analytic first derivatives
        dqq = (H.dq(t, Q + e, P) - H.dq(t, Q - e, P)) / (2 * e)
        dqp = (H.dq(t, Q, P + e) - H.dq(t, Q, P - e)) / (2 * e)
        dpp = (H.dp(t, Q, P + e) - H.dp(t, Q, P - e)) / (2 * e)
        hess = np.sqrt(dqq ** 2 + 2 * dqp ** 2 + dpp ** 2)
        worst["hess"] = max(worst["hess"], float(np.max(hess)))
        if not H.time_dependent:
            break
    tol = 1.0 + slack
    if worst["hess"] > np.sqrt(2) * C * tol:
        raise ValueError(
            f"curvature bound violated: sampled ||d2H|| = {worst['hess']:.6g} "
            f"exceeds certified C = {C:g}")
    if worst["grad_ratio"] > C * tol:
        raise ValueError(
            f"gradient growth bound violated: sampled ||dH||/(1+|p|) = "
            f"{worst['grad_ratio']:.6g} exceeds certified C = {C:g}")
    if worst["value_ratio"] > C * tol:
        raise ValueError(
            f"value growth bound violated: sampled |H|/(1+|p|)^2 = "
            f"{worst['value_ratio']:.6g} exceeds certified C = {C:g}")
    return worst


# ---------------------------------------------------------------------------
# built-in models
# ---------------------------------------------------------------------------


def _zero_model():
    z = lambda t, q, p: np.zeros(np.broadcast(q, p).shape)
    return HamiltonianModel("zero", z, z, z, constant_C=1.0, integrable=True)


def _quadratic_model():
    return HamiltonianModel(
        "quadratic",
        value=lambda t, q, p: 0.5 * np.asarray(p, dtype=float) ** 2,
        dq=lambda t, q, p: np.zeros(np.broadcast(q, p).shape),
        dp=lambda t, q, p: np.asarray(p, dtype=float) + 0.0,
        constant_C=1.0, kind="convex", integrable=True, modulus=1.0,
        quadratic_tail=0.5,
    )


def _pendulum_model():
    return HamiltonianModel(
        "pendulum",
        value=lambda t, q, p: 0.5 * p ** 2 + np.cos(q) + 0.0 * (p + q),
        dq=lambda t, q, p: -np.sin(q) + 0.0 * p,
        dp=lambda t, q, p: p + 0.0 * q,
        constant_C=2.0, kind="convex", integrable=False, modulus=1.0,
    )


def _bump_model(a=0.5):
    a = float(a)
    if a <= 0:
        raise ValueError("bump amplitude must be positive")
    return HamiltonianModel(
        f"nonconvex_bump(a={a:g})",
        value=lambda t, q, p: 0.5 * p ** 2 - a * np.exp(-np.asarray(p, float) ** 2)
        + 0.0 * np.asarray(q, float),
        dq=lambda t, q, p: np.zeros(np.broadcast(q, p).shape),
        dp=lambda t, q, p: p + 2.0 * a * p * np.exp(-np.asarray(p, float) ** 2)
        + 0.0 * np.asarray(q, float),
        constant_C=1.0 + 2.0 * a,
        kind="general", integrable=True,
        quadratic_tail=0.5,
    )


def _concave_quadratic_model():
    return HamiltonianModel(
        "concave_quadratic",
        value=lambda t, q, p: -0.5 * np.asarray(p, dtype=float) ** 2,
        dq=lambda t, q, p: np.zeros(np.broadcast(q, p).shape),
        dp=lambda t, q, p: -np.asarray(p, dtype=float),
        constant_C=1.0, kind="concave", integrable=True, modulus=1.0,
        quadratic_tail=-0.5,
    )


REGISTRY = {
    "zero": _zero_model,
    "quadratic": _quadratic_model,
    "pendulum": _pendulum_model,
    "nonconvex_bump": _bump_model,
    "concave_quadratic": _concave_quadratic_model,
}


def get_model(name: str, **params) -> HamiltonianModel:
    """Look a model up by registry name; unknown names list the registry."""
    if name not in REGISTRY:
        raise KeyError(
            f"unknown hamiltonian {name!r}; registry: {sorted(REGISTRY)}")
    return REGISTRY[name](**params)


def make_model(name, value, dq, dp, constant_C, kind="general",
               integrable=False, modulus=0.0, time_dependent=False,
               validate=True) -> HamiltonianModel:
    """Assemble a model from callables and optionally audit its constants."""
    model = HamiltonianModel(
        name=name, value=value, dq=dq, dp=dp, constant_C=constant_C,
        kind=kind, integrable=integrable, modulus=modulus,
        time_dependent=time_dependent,
    )
    if validate:
        audit_growth_constants(model)
    return model
