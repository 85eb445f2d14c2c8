"""Flow integration for 1-d Hamiltonian systems.

Two layers: :func:`integrate_flow` is the audited, adaptive single-trajectory
integrator returning a sampled :class:`Trajectory` with accumulated action;
:func:`flow_map` is the vectorized fixed-step workhorse the operators use to
push whole arrays of initial conditions (and their running action) at once.
Both integrate the augmented system

    dq = dH/dp,  dp = -dH/dq,  da = p * dH/dp - H,

so the action integral rides along at the integrator's order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np

from .hamiltonians import HamiltonianModel, PhasePoint

__all__ = ["Trajectory", "integrate_flow", "flow_map", "flow_start_from_endpoint"]


@dataclass(frozen=True)
class Trajectory:
    """A sampled flow line (t_k, q_k, p_k) with its accumulated action."""

    times: np.ndarray
    q: np.ndarray
    p: np.ndarray
    action: float
    steps_taken: int
    error_estimate: float

    def __post_init__(self):
        dt = np.diff(self.times)
        if self.times.size < 1 or (dt.size and np.min(dt) <= 0):
            raise ValueError("sample times must be strictly increasing")

    @property
    def samples(self) -> List[Tuple[float, PhasePoint]]:
        return [(float(t), PhasePoint(float(q), float(p)))
                for t, q, p in zip(self.times, self.q, self.p)]

    def start(self) -> PhasePoint:
        return PhasePoint(float(self.q[0]), float(self.p[0]))

    def end(self) -> PhasePoint:
        return PhasePoint(float(self.q[-1]), float(self.p[-1]))


def _rhs(H: HamiltonianModel, t, state):
    q, p, _ = state
    val, hq, hp = H.eval(t, q, p)
    return np.stack([hp, -hq, p * hp - val])


def _rk4_step(H, t, state, dt):
    k1 = _rhs(H, t, state)
    k2 = _rhs(H, t + 0.5 * dt, state + 0.5 * dt * k1)
    k3 = _rhs(H, t + 0.5 * dt, state + 0.5 * dt * k2)
    k4 = _rhs(H, t + dt, state + dt * k3)
    return state + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def integrate_flow(H: HamiltonianModel, start: PhasePoint, s: float, t: float,
                   tol: float = 1e-9, max_steps: int = 200000) -> Trajectory:
    """Integrate the flow from (q, p) at time s to time t.

    Classical RK4 with step doubling: each accepted step compares a full step
    against two half steps and keeps the local error estimate below tol,
    shrinking dt as needed.  Raises on step-size underflow, which signals a
    model far outside its certified bounds.
    """
    if t < s:
        raise ValueError("need s <= t")
    if tol <= 0:
        raise ValueError("tol must be positive")
    state = np.array([start.q, start.p, 0.0])
    if t == s:
        return Trajectory(np.array([s]), np.array([start.q]),
                          np.array([start.p]), 0.0, 0, 0.0)

    dt = min((t - s), max_step_guess(H))
    times = [s]
    qs = [start.q]
    ps = [start.p]
    now = s
    err_total = 0.0
    n = 0
    min_dt = (t - s) * 1e-13
    while now < t:
        if n >= max_steps:
            raise RuntimeError("integrate_flow exceeded max_steps")
        dt = min(dt, t - now)
        full = _rk4_step(H, now, state, dt)
        half = _rk4_step(H, now, state, 0.5 * dt)
        half = _rk4_step(H, now + 0.5 * dt, half, 0.5 * dt)
        err = float(np.max(np.abs(half - full))) / 15.0
        if err <= tol or dt <= min_dt:
            if dt <= min_dt and err > tol:
                raise RuntimeError(
                    "step-size underflow: adaptive steps collapsed below "
                    "machine scale (near-singular model?)")
            # 5th-order local extrapolation of the doubled step
            state = half + (half - full) / 15.0
            now += dt
            err_total += err
            times.append(now)
            qs.append(float(state[0]))
            ps.append(float(state[1]))
            n += 1
        if err > 0:
            dt = dt * min(2.0, max(0.2, 0.9 * (tol / err) ** 0.2))
        else:
            dt = dt * 2.0
    return Trajectory(np.array(times), np.array(qs), np.array(ps),
                      float(state[2]), n, err_total)


def max_step_guess(H: HamiltonianModel) -> float:
    # C bounds the Jacobian of the vector field, so 1/(8C) keeps RK4 safely
    # inside its accuracy region
    return 1.0 / (8.0 * H.constant_C)


# C * dt for the fixed-step vectorized integrator; RK4 at this step size
# keeps accumulated flow errors near 1e-8 over unit time spans
_FIXED_STEP_SCALE = 0.005


def flow_map(H: HamiltonianModel, q0, p0, s: float, t: float,
             n_steps: int | None = None):
    """Vectorized fixed-step flow: returns (Q, P, action) arrays at time t.

    Integrable models (H = H(p)) are advanced exactly: P = p0,
    Q = q0 + (t-s) H'(p0), action = (t-s)(p0 H'(p0) - H(p0)).
    """
    q0 = np.asarray(q0, dtype=float)
    p0 = np.asarray(p0, dtype=float)
    tau = t - s
    if tau < 0:
        raise ValueError("need s <= t")
    if tau == 0:
        z = np.zeros(np.broadcast(q0, p0).shape)
        return q0 + z, p0 + z, z
    if H.integrable:
        val, _, hp = H.eval(s, q0, p0)
        return q0 + tau * hp, p0 + 0.0 * q0, tau * (p0 * hp - val) + 0.0 * q0
    if n_steps is None:
        n_steps = max(8, int(math.ceil(tau * H.constant_C / _FIXED_STEP_SCALE)))
    dt = tau / n_steps
    state = np.stack(np.broadcast_arrays(q0, p0, np.zeros(np.broadcast(q0, p0).shape))).astype(float)
    now = s
    for _ in range(n_steps):
        state = _rk4_step(H, now, state, dt)
        now += dt
    return state[0], state[1], state[2]


def flow_start_from_endpoint(H: HamiltonianModel, Q, p, s: float, t: float,
                             tol: float = 1e-11, n_steps: int | None = None,
                             max_iter: int = 60):
    """Solve Q^t_s(q, p) = Q for the starting position q, vectorized in (Q, p).

    Valid whenever the flow is a 1/2-Lipschitz perturbation of the identity
    (t - s below the model's admissible step), which makes q -> Q^t_s(q, p)
    a contraction-style fixed point; a secant acceleration finishes it off.
    Returns (q, Q_end, P_end, action) with the residual |Q_end - Q| <= tol.
    """
    Q = np.asarray(Q, dtype=float)
    p = np.asarray(p, dtype=float)
    if H.integrable:
        val, _, hp = H.eval(s, Q * 0.0 + 0.0, p)  # H, H' depend on p only
        q = Q - (t - s) * hp
        act = (t - s) * (p * hp - val)
        return q, Q + 0.0 * q, p + 0.0 * q, act

    def shoot(q):
        Qe, Pe, act = flow_map(H, q, p, s, t, n_steps=n_steps)
        return Qe, Pe, act

    q = Q + np.zeros(np.broadcast(Q, p).shape)
    Qe, Pe, act = shoot(q)
    r = Qe - Q
    # one damped fixed-point step to seed the secant
    q_prev, r_prev = q, r
    q = q - r
    for _ in range(max_iter):
        Qe, Pe, act = shoot(q)
        r = Qe - Q
        if float(np.max(np.abs(r))) <= tol:
            return q, Qe, Pe, act
        denom = r - r_prev
        step = np.where(np.abs(denom) > 1e-300,
                        r * (q - q_prev) / np.where(denom == 0, 1.0, denom),
                        r)
        q_prev, r_prev = q, r
        q = q - step
    raise RuntimeError(
        "endpoint solve did not converge; time span exceeds the admissible "
        "step for this model")
