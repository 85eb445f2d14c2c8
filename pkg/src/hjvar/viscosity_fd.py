"""Monotone finite-difference reference solver and comparison tooling.

An explicit central scheme with enough artificial dissipation is monotone
for arbitrary smooth Hamiltonians, so it singles out the same solution the
iterated variational operator converges to; it serves as the independent
oracle for that convergence.  The stencil eats one cell per step at each
boundary, so the initial domain must be inflated by the numerical domain of
dependence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from .gridfn import GridFunction
from .hamiltonians import HamiltonianModel, localization_radii
from .operators import IterationSchedule, OperatorConfig, iterated_operator

__all__ = ["FDConfig", "solve_lax_friedrichs", "sup_distance", "convergence_study"]


@dataclass(frozen=True)
class FDConfig:
    h: float
    cfl: float = 0.5
    artificial_viscosity: float | None = None  # None: sampled from the model

    def __post_init__(self):
        if self.h <= 0:
            raise ValueError("h must be positive")
        if not (0 < self.cfl <= 0.5):
            raise ValueError("cfl must lie in (0, 0.5]")
        if self.artificial_viscosity is not None and self.artificial_viscosity <= 0:
            raise ValueError("artificial_viscosity must be positive")


def _dissipation_coefficient(H: HamiltonianModel, L: float, T: float) -> float:
    """Max |dH/dp| over the momentum range gradients can visit up to time T,
    with a safety margin; this is the monotonicity requirement and also the
    numerical propagation speed."""
    if H.integrable:
        p_max = L
    else:
        _, p_max = localization_radii(H.constant_C, L, 0.0, T)
    ps = np.linspace(-p_max - 0.1, p_max + 0.1, 2049)
    qs = np.linspace(-8.0, 8.0, 65)
    worst = 0.0
    for q in qs:
        worst = max(worst, float(np.max(np.abs(H.dp(0.0, q, ps)))))
        if H.integrable:
            break
    return 1.1 * worst + 1e-9


def solve_lax_friedrichs(H: HamiltonianModel, u0: GridFunction, s: float,
                         t: float, cfg: FDConfig) -> GridFunction:
    """Explicit monotone march to time t.

    Update: u^{n+1}_j = u_j - dt H(t_n, q_j, D0 u_j)
                          + (alpha dt / 2h)(u_{j+1} - 2 u_j + u_{j-1}),
    monotone when alpha >= |dH/dp| along encountered gradients and
    dt <= cfl h / alpha.  The valid domain shrinks one cell per step.
    """
    T = t - s
    if T < 0:
        raise ValueError("need s <= t")
    h = cfg.h
    u = u0
    if abs(u.h - h) > 1e-15:
        u = GridFunction.from_callable(u0, u0.origin, u0.hi, h, lip=u0.lip)
    if T == 0:
        return GridFunction(u.origin, u.h, u.values.copy(), u.lip)
    alpha = cfg.artificial_viscosity
    if alpha is None:
        alpha = _dissipation_coefficient(H, u.lip, T)
    dt = cfg.cfl * h / alpha
    n_steps = max(1, int(math.ceil(T / dt - 1e-12)))
    dt = T / n_steps
    if dt > cfg.cfl * h / alpha * (1 + 1e-12):
        raise ValueError("monotonicity (CFL) condition violated")
    if n_steps + 2 >= u.n // 2:
        raise ValueError(
            f"domain too small: {n_steps} steps eat {n_steps} cells per side")

    vals = u.values.copy()
    origin = u.origin
    now = s
    lam = dt / (2.0 * h)
    for _ in range(n_steps):
        qs = origin + h * np.arange(vals.size)
        grad = (vals[2:] - vals[:-2]) / (2.0 * h)
        Hv = H.value(now, qs[1:-1], grad)
        vals = vals[1:-1] - dt * Hv + alpha * lam * (vals[2:] - 2 * vals[1:-1] + vals[:-2])
        origin += h
        now += dt
    measured = float(np.max(np.abs(np.diff(vals)))) / h
    return GridFunction(origin, h, vals, measured * (1 + 1e-9) + 1e-15)


def fd_domain_for(window: Tuple[float, float], H: HamiltonianModel, L: float,
                  T: float, cfg: FDConfig) -> Tuple[float, float]:
    """Initial domain needed so the valid region still covers the window at
    time T: inflate by the numerical dependence speed alpha/cfl."""
    alpha = cfg.artificial_viscosity or _dissipation_coefficient(H, L, T)
    pad = alpha * T / cfg.cfl + 4 * cfg.h
    return window[0] - pad, window[1] + pad


def sup_distance(a: GridFunction, b: GridFunction,
                 window: Tuple[float, float] | None = None) -> float:
    """max |a - b| over the window, sampled on the finer of the two grids."""
    lo = max(a.origin, b.origin)
    hi = min(a.hi, b.hi)
    if window is not None:
        lo, hi = max(lo, window[0]), min(hi, window[1])
    if hi <= lo:
        raise ValueError("empty overlap between the two grids")
    h = min(a.h, b.h)
    x = np.arange(lo, hi + 0.5 * h, h)
    return float(np.max(np.abs(a(x) - b(x))))


def convergence_study(H: HamiltonianModel, u0: GridFunction, s: float, t: float,
                      schedules: Sequence[IterationSchedule],
                      cfg: OperatorConfig, fd_cfg: FDConfig,
                      window: Tuple[float, float],
                      reference: GridFunction | None = None) -> dict:
    """Distances between the iterated operator and the monotone reference,
    per schedule, on a fixed interior window; flags whether they are
    non-increasing as the step shrinks (within 10% noise)."""
    if reference is None:
        reference = solve_lax_friedrichs(H, u0, s, t, fd_cfg)
    rows = []
    for sched in schedules:
        approx = iterated_operator(H, u0, sched, cfg)
        rows.append((sched.delta, sup_distance(approx, reference, window)))
    rows.sort(key=lambda r: -r[0])
    dists = [d for _, d in rows]
    non_increasing = all(dists[i + 1] <= dists[i] * 1.10 for i in range(len(dists) - 1))
    return {"rows": rows, "non_increasing": non_increasing,
            "final_distance": dists[-1] if dists else None}
