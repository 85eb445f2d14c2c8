"""Reduced action families built from broken flow arcs.

For a time span cut at s = t_0 <= ... <= t_{N+1} = t, each leg carries the
endpoint family F (the action of the unique arc with prescribed start
momentum and end position), and the legs are sewn with bilinear boundary
terms:

    S(Q; q, p_0, nu) = u(q) + sum_i [ F_i(Q_i, p_i) + p_i . (Q_i - Q_{i-1}) ]

with Q_{-1} = q and Q_N = Q.  Stationarity in the inner variables is exactly
the condition that the arcs concatenate into one flow line starting on the
graph of du, and the stationary value is u(q) plus that line's action.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, List, NamedTuple, Sequence, Tuple

import numpy as np

from .flow import flow_map, flow_start_from_endpoint
from .gridfn import GridFunction
from .hamiltonians import HamiltonianModel, localization_radii, max_step_delta1

__all__ = [
    "Subdivision",
    "FamilyPoint",
    "FamilyEval",
    "QuadraticNormalForm",
    "eval_F",
    "eval_S",
    "critical_points_S",
    "quadratic_normal_form",
    "CriticalPoint",
]


@dataclass(frozen=True)
class Subdivision:
    """Interior cut times for [s, t]; legs must respect the model's step."""

    times: Tuple[float, ...]
    max_step: float

    @staticmethod
    def single(s: float, t: float) -> "Subdivision":
        return Subdivision(times=(s, t), max_step=t - s)

    @staticmethod
    def uniform(s: float, t: float, legs: int) -> "Subdivision":
        ts = tuple(np.linspace(s, t, legs + 1))
        return Subdivision(times=ts, max_step=(t - s) / legs)

    def __post_init__(self):
        if len(self.times) < 2:
            raise ValueError("subdivision needs at least the two endpoints")
        dt = np.diff(self.times)
        if np.any(dt < -1e-15):
            raise ValueError("subdivision times must be non-decreasing")

    @property
    def legs(self) -> int:
        return len(self.times) - 1

    @property
    def n_inner(self) -> int:
        return self.legs - 1

    def validate_for(self, H: HamiltonianModel):
        if H.integrable:
            return  # exact legs for any span
        d1 = max_step_delta1(H.constant_C)
        if max(np.diff(self.times), default=0.0) > d1 * (1 + 1e-12):
            raise ValueError(
                f"subdivision step exceeds admissible step {d1:g} for "
                f"constant C={H.constant_C:g}")


@dataclass(frozen=True)
class FamilyPoint:
    """Inner variables (q, p, nu) above a fixed output position Q.

    nu interleaves the sewing variables (Q_0, p_1, ..., Q_{N-1}, p_N); it is
    empty for a single-leg family.
    """

    q: float
    p: float
    nu: Tuple[float, ...] = ()

    def inner_positions(self):
        return np.asarray(self.nu[0::2], dtype=float)

    def inner_momenta(self):
        return np.asarray(self.nu[1::2], dtype=float)

    @property
    def dim(self) -> int:
        return 2 + len(self.nu)


@dataclass(frozen=True)
class FamilyEval:
    value: float
    grad_q: float
    grad_p: float
    grad_nu: np.ndarray
    dQ: float
    dt: float | None = None
    ds: float | None = None

    def grad_norm(self) -> float:
        g = np.concatenate(([self.grad_q, self.grad_p], self.grad_nu))
        return float(np.max(np.abs(g))) if g.size else 0.0


class _FEval(NamedTuple):
    value: np.ndarray
    dQ: np.ndarray       # = P - p
    dp: np.ndarray       # = q - Q
    q_start: np.ndarray
    P_end: np.ndarray


def eval_F(H: HamiltonianModel, s: float, t: float, Q, p, tol: float = 1e-11) -> _FEval:
    """One-leg family value and derivatives at (Q, p), vectorized.

    F(Q, p) = action of the arc with p(s) = p, q(t) = Q, minus p.(Q - q(s));
    its gradient is (dF/dQ, dF/dp) = (P - p, q - Q) with (q, P) the arc's
    free endpoints.
    """
    if t < s:
        raise ValueError("need s <= t")
    if not H.integrable and (t - s) > max_step_delta1(H.constant_C) * (1 + 1e-12):
        raise ValueError("leg longer than the admissible step for this model")
    q, Qe, Pe, act = flow_start_from_endpoint(H, Q, p, s, t, tol=tol)
    Q = np.asarray(Q, dtype=float)
    p = np.asarray(p, dtype=float)
    value = act - p * (Q - q)
    return _FEval(value=value, dQ=Pe - p, dp=q - Q, q_start=q, P_end=Pe)


def _as_c1(u, mollify_cells: float = 2.0):
    """Normalize u to (value_fn, deriv_fn, lip)."""
    if isinstance(u, GridFunction):
        return u, u.derivative_fn(mollify_cells), u.lip
    if isinstance(u, tuple) and len(u) in (2, 3):
        fv, fd = u[0], u[1]
        lip = u[2] if len(u) == 3 else 1.0
        return fv, fd, lip
    raise TypeError("u must be a GridFunction or a (value, derivative[, lip]) tuple")


def eval_S(H: HamiltonianModel, u, s: float, t: float, subdivision: Subdivision,
           Q: float, xi: FamilyPoint, tol: float = 1e-11,
           mollify_cells: float = 2.0) -> FamilyEval:
    """Value and full gradient of the sewn family at (Q, xi).

    dt/ds are filled with the stationary-point formulas -H(t, Q, P_end) and
    H(s, q, p); they are meaningful when the gradient vanishes.
    """
    subdivision.validate_for(H)
    uv, du, _ = _as_c1(u, mollify_cells)
    ts = subdivision.times
    N = subdivision.n_inner
    if len(xi.nu) != 2 * N:
        raise ValueError(f"xi.nu must hold {2 * N} sewing variables")

    Qs = np.concatenate(([xi.q], xi.inner_positions(), [Q]))   # Q_{-1}..Q_N
    ps = np.concatenate(([xi.p], xi.inner_momenta()))          # p_0..p_N

    value = float(np.asarray(uv(xi.q), dtype=float))
    grad = np.zeros(2 + 2 * N)
    # index map: 0 -> q, 1 -> p0, 2+2k -> Q_k, 3+2k -> p_{k+1}
    grad[0] = float(du(xi.q))
    P_prev = None
    P_end = None
    for i in range(N + 1):
        fe = eval_F(H, ts[i], ts[i + 1], Qs[i + 1], ps[i], tol=tol)
        value += float(fe.value) + ps[i] * (Qs[i + 1] - Qs[i])
        # d/dp_i: (q_i - Q_i) + (Q_i - Q_{i-1})
        gpi = float(fe.dp) + (Qs[i + 1] - Qs[i])
        # d/dQ_i picks up (P_i - p_i) + p_i now and -p_{i+1} from leg i+1
        gQi = float(fe.dQ) + ps[i]
        if i == 0:
            grad[0] -= ps[0]
            grad[1] = gpi
        else:
            grad[3 + 2 * (i - 1)] = gpi
        if i < N:
            grad[2 + 2 * i] = gQi  # completed below by -p_{i+1}
        P_end = float(fe.P_end)
        P_prev = gQi
    for k in range(N):
        grad[2 + 2 * k] -= ps[k + 1]

    dQ_S = P_prev  # = P_N for the last leg
    Hval_t = float(np.asarray(H.value(t, Q, P_end), dtype=float))
    Hval_s = float(np.asarray(H.value(s, xi.q, xi.p), dtype=float))
    return FamilyEval(
        value=value,
        grad_q=grad[0],
        grad_p=grad[1],
        grad_nu=grad[2:],
        dQ=float(dQ_S),
        dt=-Hval_t,
        ds=Hval_s,
    )


@dataclass(frozen=True)
class CriticalPoint:
    xi: FamilyPoint
    value: float
    P_end: float


def critical_points_S(H: HamiltonianModel, u, s: float, t: float, Q: float,
                      search_window: Tuple[float, float], tol: float = 1e-9,
                      subdivision: Subdivision | None = None,
                      scan_step: float | None = None,
                      mollify_cells: float = 2.0) -> List[CriticalPoint]:
    """All inner critical points above Q: solutions q of Q^t_s(q, du(q)) = Q.

    Sign-change bracketing on a dense scan of the root map, then bisection;
    roots closer than 2*tol are merged.  The window must contain the
    localization ball for Lip(u), else the root count is meaningless.
    """
    if subdivision is None:
        subdivision = Subdivision.single(s, t)
    subdivision.validate_for(H)
    uv, du, lip = _as_c1(u, mollify_cells)
    lo, hi = search_window
    r_q, _ = localization_radii(H.constant_C, lip, s, t, integrable=H.integrable)
    if lo > Q - r_q + 1e-12 or hi < Q + r_q - 1e-12:
        raise ValueError(
            f"search window {search_window} smaller than the localization "
            f"ball of radius {r_q:g} around Q={Q:g}")
    if scan_step is None:
        scan_step = (u.h / 4.0) if isinstance(u, GridFunction) else (hi - lo) / 2048.0

    qs = np.arange(lo, hi + 0.5 * scan_step, scan_step)
    ps = np.asarray(du(qs), dtype=float)
    Qe, Pe, act = flow_map(H, qs, ps, s, t)
    g = Qe - Q

    roots = []
    exact = np.nonzero(np.abs(g) < 1e-14)[0]
    roots.extend(qs[exact])
    sign_change = np.nonzero(g[:-1] * g[1:] < 0)[0]
    if sign_change.size:
        a = qs[sign_change]
        b = qs[sign_change + 1]
        ga = g[sign_change]
        for _ in range(60):
            mid = 0.5 * (a + b)
            Qm, _, _ = flow_map(H, mid, np.asarray(du(mid), dtype=float), s, t)
            gm = Qm - Q
            left = ga * gm <= 0
            b = np.where(left, mid, b)
            a = np.where(left, a, mid)
            ga = np.where(left, ga, gm)
            if float(np.max(b - a)) < tol * 0.5:
                break
        roots.extend(0.5 * (a + b))
    if not roots:
        raise RuntimeError(
            "no critical point found in an adequate window; derivative of u "
            "may be discontinuous (mollify first)")
    roots = np.sort(np.asarray(roots))
    merged = [roots[0]]
    for r in roots[1:]:
        if r - merged[-1] > 2 * tol:
            merged.append(r)

    out = []
    ts = subdivision.times
    for q in merged:
        p = float(du(q))
        Qe, Pe, act = flow_map(H, q, p, s, t)
        value = float(np.asarray(uv(q), dtype=float)) + float(act)
        nu: List[float] = []
        for ti in ts[1:-1]:
            Qi, Pi, _ = flow_map(H, q, p, s, ti)
            nu.extend([float(Qi), float(Pi)])
        out.append(CriticalPoint(
            xi=FamilyPoint(q=float(q), p=p, nu=tuple(nu)),
            value=value, P_end=float(Pe)))
    return out


@dataclass(frozen=True)
class QuadraticNormalForm:
    matrix: np.ndarray
    index: int

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


def quadratic_normal_form(subdivision: Subdivision, Z_coeff: float) -> QuadraticNormalForm:
    """Quadratic part of the sewn family for a pure-tail model Z(p) = z p^2,
    in the basis (p, p_1, ..., p_N, q, Q_0, ..., Q_{N-1}).

    Block structure: diagonal tau_i * z on the momentum block, and the
    +-1/2 sewing band coupling momenta to positions.  Nondegenerate for any
    z; its negative index is what the critical-value selection keys on.
    """
    taus = np.diff(subdivision.times)
    N = len(taus) - 1
    n = 2 * (N + 1)
    M = np.zeros((n, n))
    for i, tau in enumerate(taus):
        M[i, i] = tau * Z_coeff
    # momentum i couples to position block (q, Q_0, ..., Q_{N-1})
    for i in range(N + 1):
        col = (N + 1) + i
        M[i, col] -= 0.5
        M[col, i] -= 0.5
        if i + 1 <= N:
            M[i, col + 1] += 0.5
            M[col + 1, i] += 0.5
    eig = np.linalg.eigvalsh(M)
    if float(np.min(np.abs(eig))) < 1e-12 * max(1.0, float(np.max(np.abs(eig)))):
        raise ValueError("degenerate quadratic part")
    return QuadraticNormalForm(matrix=M, index=int(np.sum(eig < 0)))
