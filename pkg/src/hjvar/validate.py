"""Executable verification suite.

Each criterion function measures a documented property at its pinned
tolerance and returns records {name, measured, bound, slack, passed}.  The
suites group them for the CLI; the acceptance test module asserts them
one-to-one.  Reference values are computed by independent routes (a
Dijkstra-style minimax-path search, pointwise minimization oracles, the
monotone finite-difference solver), never by the code path under test.
"""

from __future__ import annotations

import heapq
import math
import time
from typing import Callable, List

import numpy as np

from .gridfn import GridFunction
from .hamiltonians import (
    HamiltonianModel,
    get_model,
    localization_radii,
    max_step_delta1,
)
from .generating import critical_points_S
from .operators import (
    IterationSchedule,
    OperatorConfig,
    hopf_lax,
    iterated_operator,
    iterated_snapshots,
    nonmarkov_defect,
    step_diagnostics,
    variational_step,
)
from .selector import SaddleLandscape, sigma_mountain_pass, sigma_opposite
from .viscosity_fd import (
    FDConfig,
    fd_domain_for,
    solve_lax_friedrichs,
    sup_distance,
)

__all__ = ["run_validate", "SUITES", "CRITERIA"]


def _record(name, measured, bound, passed=None, detail=""):
    if passed is None:
        passed = bool(measured <= bound)
    return {"name": name, "measured": float(measured), "bound": float(bound),
            "slack": float(bound - measured), "passed": bool(passed),
            "detail": detail}


# ---------------------------------------------------------------------------
# independent oracles
# ---------------------------------------------------------------------------

_NBRS8 = [(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)]


def _dp_minimax(f, start, goal):
    """Widest-path Dijkstra: min over 8-connected paths of the max cell."""
    nq, npp = f.shape
    best = np.full(f.shape, np.inf)
    best[start] = f[start]
    heap = [(f[start], start)]
    while heap:
        d, (i, j) = heapq.heappop(heap)
        if (i, j) == goal:
            return d
        if d > best[i, j]:
            continue
        for di, dj in _NBRS8:
            ni, nj = i + di, j + dj
            if 0 <= ni < nq and 0 <= nj < npp:
                nd = max(d, f[ni, nj])
                if nd < best[ni, nj]:
                    best[ni, nj] = nd
                    heapq.heappush(heap, (nd, (ni, nj)))
    raise RuntimeError("goal unreachable")


def _random_lipschitz(rng, lip_max=0.5, n_modes=6):
    amps = rng.uniform(0.2, 1.0, n_modes)
    freqs = rng.uniform(0.3, 2.0, (n_modes, 2))
    phases = rng.uniform(0, 2 * np.pi, n_modes)
    scale = lip_max / float(np.sum(amps * np.hypot(freqs[:, 0], freqs[:, 1])))

    def ell(q, p):
        out = 0.0
        for a, (wq, wp), ph in zip(amps, freqs, phases):
            out = out + a * np.sin(wq * q + wp * p + ph)
        return scale * out

    return ell


def _saddle(f, n=200, half=3.0):
    return SaddleLandscape.from_callable(
        f, window=((-half, half), (-half, half)), shape=(n, n), ends="saddle")


def _clamped(fn, lo, hi, h, lip):
    return GridFunction.from_callable(fn, lo, hi, h, lip=lip)


# ---------------------------------------------------------------------------
# criteria
# ---------------------------------------------------------------------------


def criterion_1_selector_axioms(n_instances=200, n_oracle=20) -> List[dict]:
    """Selection identities on randomized planar landscapes -qp + ell."""
    t0 = time.time()
    rng = np.random.default_rng(2024)
    add_fail = mono_fail = 0
    cont_worst = -np.inf
    opp_worst = -np.inf
    for _ in range(n_instances):
        ell = _random_lipschitz(rng)
        pert = _random_lipschitz(rng, lip_max=rng.uniform(0.05, 0.4))
        c = float(rng.uniform(-2, 2))
        base = lambda q, p: -q * p + ell(q, p)
        L = _saddle(base)
        s0 = sigma_mountain_pass(L).value
        s_add = sigma_mountain_pass(_saddle(lambda q, p: base(q, p) + c)).value
        if s_add != s0 + c:
            add_fail += 1
        g = lambda q, p: base(q, p) + np.abs(pert(q, p))
        sg = sigma_mountain_pass(_saddle(g)).value
        if not (s0 <= sg + 1e-15):
            mono_fail += 1
        sup = float(np.max(np.abs(pert(L.q_axis[:, None], L.p_axis[None, :]))))
        cont_worst = max(cont_worst, abs(sg - s0) - sup)
        s_opp = sigma_opposite(L).value
        opp_worst = max(opp_worst, abs(s_opp - s0) - L.cell_value_gap())
    dp_fail = 0
    for _ in range(n_oracle):
        ell = _random_lipschitz(rng)
        L = _saddle(lambda q, p: -q * p + ell(q, p), n=60)
        ra, rb = L.deep_end_representatives()
        if sigma_mountain_pass(L).value != _dp_minimax(L.samples, ra, rb):
            dp_fail += 1
    runtime = time.time() - t0
    return [
        _record("1. additivity exact (failures)", add_fail, 0),
        _record("1. monotonicity (failures)", mono_fail, 0),
        _record("1. continuity overshoot", cont_worst, 1e-12),
        _record("1. sign flip minus one-cell gap", opp_worst, 1e-12),
        _record("1. minimax-path oracle mismatches", dp_fail, 0),
        _record("1. runtime [s]", runtime, 60.0),
    ]


def criterion_2_convex_equivalence() -> List[dict]:
    """Single mountain-pass step vs pointwise minimization for H = p^2/2."""
    t0 = time.time()
    H = get_model("quadratic")
    t = 0.2
    h = 1e-3
    cfg = OperatorConfig(landscape_grid=(400, 400))
    data = {
        "abs": lambda x: np.abs(x),
        "neg_abs": lambda x: -np.abs(x),
        "cos": lambda x: np.cos(x),
    }
    out = []
    for name, fn in data.items():
        u = _clamped(fn, -0.75, 0.75, h, lip=1.0)
        vs = variational_step(H, u, 0.0, t, cfg)
        # the minimization oracle needs the datum on the wider search domain
        u_wide = _clamped(fn, -1.3, 1.3, h, lip=1.0)
        hl = hopf_lax(H, u_wide, 0.0, t)
        d = sup_distance(vs, hl, (-0.5, 0.5))
        out.append(_record(f"2. one-step vs pointwise-min sup ({name})", d, 5e-3))
    out.append(_record("2. runtime [s]", time.time() - t0, 120.0))
    return out


def _lip_case(H, u, CL, tau=0.15, dt=0.03, h=5e-3):
    C, L = CL
    eps_grid = 4.0 * L * h
    cfg = OperatorConfig(landscape_grid=(200, 200))
    recs = []
    base = variational_step(H, u, 0.0, tau, cfg)
    bound_lip = math.expm1(C * tau) * (1 + L) + L
    recs.append(_record(f"3. Lip bound (C={C},L={L})", base.measured_lip(),
                        bound_lip + eps_grid))
    # t-Lipschitz
    later = variational_step(H, u, 0.0, tau + dt, cfg)
    d = sup_distance(base, later)
    bound_t = C * math.exp(2 * C * (tau + dt)) * (1 + L) ** 2 * dt
    recs.append(_record(f"3. t-Lipschitz (C={C},L={L})", d, bound_t + eps_grid))
    # s-Lipschitz: same end time, shifted start
    shifted = variational_step(H, u, dt, tau, cfg)
    d = sup_distance(base, shifted)
    bound_s = C * (1 + L) ** 2 * dt
    recs.append(_record(f"3. s-Lipschitz (C={C},L={L})", d, bound_s + eps_grid))
    # locality: perturb beyond the certified ball around one point
    Qhat = 0.1
    r_ball = math.expm1(C * tau) * (1 + L)
    join = 0.15 * L

    def bump(x):
        d = np.abs(x - Qhat) - (r_ball + 0.05)
        return np.where(d > 0, join * np.minimum(d, 2.0), 0.0)

    v = GridFunction(u.origin, u.h, u.values + bump(u.grid()), u.lip)
    pert = variational_step(H, v, 0.0, tau, cfg)
    i = int(round((Qhat - base.origin) / base.h))
    delta = abs(float(base.values[i] - pert.values[i]))
    recs.append(_record(f"3. locality at Q (C={C},L={L})", delta, 1e-10))
    return recs


def criterion_3_lipschitz_bounds() -> List[dict]:
    recs = []
    H1 = get_model("quadratic")
    u1 = _clamped(lambda x: 0.8 * np.cos(x), -1.15, 1.15, 5e-3, lip=1.0)
    recs += _lip_case(H1, u1, (1.0, 1.0))
    H2 = get_model("pendulum")
    u2 = _clamped(lambda x: 0.4 * np.cos(x), -1.35, 1.35, 5e-3, lip=0.5)
    recs += _lip_case(H2, u2, (2.0, 0.5))
    return recs


def criterion_4_hamiltonian_dependence() -> List[dict]:
    """|R_{H1} u - R_{H0} u| <= (t - s) sup |H1 - H0| on the certified box."""
    C_shared = 2.02
    a0, da = 0.5, 0.1
    base = get_model("nonconvex_bump", a=a0)
    H0 = HamiltonianModel(
        name=base.name, value=base.value, dq=base.dq, dp=base.dp,
        constant_C=C_shared, kind="general", integrable=True,
        quadratic_tail=0.5)
    pert = get_model("nonconvex_bump", a=a0 - da)  # = H0 + da * exp(-p^2)
    H1 = HamiltonianModel(
        name=pert.name, value=pert.value, dq=pert.dq, dp=pert.dp,
        constant_C=C_shared, kind="general", integrable=True,
        quadratic_tail=0.5)
    tau = 0.2
    h = 5e-3
    u = _clamped(np.cos, -1.6, 1.6, h, lip=1.0)
    cfg = OperatorConfig(landscape_grid=(220, 220))
    r0 = variational_step(H0, u, 0.0, tau, cfg)
    r1 = variational_step(H1, u, 0.0, tau, cfg)
    d = sup_distance(r0, r1)
    eps_grid = 4.0 * u.lip * h
    return [_record("4. model dependence sup", d, tau * da + eps_grid)]


def criterion_5_integrable_sharpening() -> List[dict]:
    """Momentum-only models never raise the Lipschitz constant."""
    recs = []
    h = 5e-3
    tau = 0.2
    cfg = OperatorConfig(landscape_grid=(200, 200))
    for name, params in (("quadratic", {}), ("nonconvex_bump", {"a": 0.5})):
        H = get_model(name, **params)
        u = _clamped(lambda x: np.abs(x), -1.2, 1.2, h, lip=1.0)
        out = variational_step(H, u, 0.0, tau, cfg)
        recs.append(_record(f"5. output Lip ({name})", out.measured_lip(),
                            1.0 + 4.0 * h))
    return recs


def criterion_6_nonmarkov() -> List[dict]:
    recs = []
    cfg = OperatorConfig(landscape_grid=(240, 240))
    # always: within the a-priori bound (nonconvex, kinked datum)
    Hb = get_model("nonconvex_bump", a=0.5)
    ub = _clamped(lambda x: -np.abs(x), -3.0, 3.0, 0.01, lip=1.0)
    defect, bound = nonmarkov_defect(Hb, ub, 0.0, 0.15, 0.3, cfg)
    recs.append(_record("6. split defect within bound (bump)", defect, bound))
    # convex: vanishes to grid accuracy
    Hq = get_model("quadratic")
    uq = _clamped(lambda x: -np.abs(x), -3.0, 3.0, 0.005, lip=1.0)
    defect, bound = nonmarkov_defect(Hq, uq, 0.0, 0.15, 0.3,
                                     OperatorConfig(landscape_grid=(260, 260)))
    recs.append(_record("6. split defect (convex)", defect, 5e-3))
    recs.append(_record("6. convex defect within bound", defect, bound))
    return recs


def criterion_7_small_step_convergence() -> List[dict]:
    """Iterated steps approach the monotone reference as the step shrinks."""
    t0 = time.time()
    H = get_model("nonconvex_bump", a=2.0)
    T = 1.0
    window = (-1.0, 1.0)
    h_fd = 5e-4
    fd_cfg = FDConfig(h=h_fd)
    lo, hi = fd_domain_for(window, H, 1.0, T, fd_cfg)
    u_fd = _clamped(lambda x: -np.abs(x), lo, hi, h_fd, lip=1.0)
    ref = solve_lax_friedrichs(H, u_fd, 0.0, T, fd_cfg)
    fd_half = FDConfig(h=h_fd / 2)
    lo2, hi2 = fd_domain_for(window, H, 1.0, T, fd_half)
    u_fd2 = _clamped(lambda x: -np.abs(x), lo2, hi2, h_fd / 2, lip=1.0)
    ref2 = solve_lax_friedrichs(H, u_fd2, 0.0, T, fd_half)
    self_err = sup_distance(ref, ref2, window)

    h_u = 0.01
    # domain wide enough for ~ (speed * T) of shrink per side plus margin
    u0 = _clamped(lambda x: -np.abs(x), -4.4, 4.4, h_u, lip=1.0)
    # momentum resolution sets the per-step selection error, which is what
    # accumulates over the 40-step schedule; 256 cells keep it at the
    # reference's own floor
    cfg = OperatorConfig(landscape_grid=(200, 256))
    dists = []
    for delta in (0.2, 0.1, 0.05, 0.025):
        sched = IterationSchedule.uniform(0.0, T, delta)
        approx = iterated_operator(H, u0, sched, cfg)
        dists.append((delta, sup_distance(approx, ref, window)))
    # non-increasing within 10% noise; rows below the reference-equivalence
    # scale (3 x self-error, the same threshold the final clause uses) are
    # statistically indistinguishable from reference error, so that scale
    # anchors the noise allowance
    excess = max(dists[i + 1][1] - max(1.10 * dists[i][1], 3.0 * self_err)
                 for i in range(len(dists) - 1))
    recs = [_record("7. distances non-increasing (excess past 10% + noise floor)",
                    excess, 0.0, passed=excess <= 0.0, detail=str(dists))]
    recs.append(_record("7. final distance vs 3x reference self-error",
                        dists[-1][1], 3.0 * self_err,
                        detail=f"self_err={self_err:g}"))
    recs.append(_record("7. runtime [s]", time.time() - t0, 600.0))
    return recs


def criterion_8_finite_propagation() -> List[dict]:
    """Data changes outside B(0, R) cannot reach B(0, R - C(1+2L)T)."""
    H = get_model("quadratic")
    C, L, T, R = 1.0, 1.0, 0.15, 2.0
    ball = R - C * (1 + 2 * L) * T  # 1.55
    h = 2e-3

    def u_fn(x):
        return 0.5 * np.cos(x)

    def bump(x):
        d = np.abs(x) - R
        return np.where(d > 0, np.minimum(0.4 * d, 1.0), 0.0)

    recs = []
    # variational side (single admissible step)
    u = _clamped(u_fn, -3.2, 3.2, h, lip=L)
    v = GridFunction(u.origin, u.h, u.values + bump(u.grid()), L)
    cfg = OperatorConfig(landscape_grid=(200, 200))
    ru = variational_step(H, u, 0.0, T, cfg)
    rv = variational_step(H, v, 0.0, T, cfg)
    x = np.arange(-ball, ball + h / 2, h)
    recs.append(_record("8. variational unchanged on shrunken ball",
                        float(np.max(np.abs(ru(x) - rv(x)))), 1e-10))
    # monotone-scheme side
    fd_cfg = FDConfig(h=h)
    lo, hi = fd_domain_for((-R, R), H, L, T, fd_cfg)
    uf = _clamped(u_fn, lo - 3.0, hi + 3.0, h, lip=L)
    vf = GridFunction(uf.origin, uf.h, uf.values + bump(uf.grid()), L)
    su = solve_lax_friedrichs(H, uf, 0.0, T, fd_cfg)
    sv = solve_lax_friedrichs(H, vf, 0.0, T, fd_cfg)
    recs.append(_record("8. monotone scheme unchanged on shrunken ball",
                        float(np.max(np.abs(su(x) - sv(x)))), 1e-10))
    return recs


def criterion_9_variational_property() -> List[dict]:
    """The selected value is a critical value, and the pass cell sits at a
    characteristic's start, for smooth data."""
    H = get_model("pendulum")
    tau = 0.15
    h = 0.01
    u = _clamped(np.cos, -2.2, 2.2, h, lip=1.0)
    u_c1 = (lambda x: np.cos(x), lambda x: -np.sin(x), 1.0)
    cfg = OperatorConfig(landscape_grid=(220, 220))
    r_q, _ = localization_radii(H.constant_C, 1.0, 0.0, tau)
    worst_val = -np.inf
    worst_cells = -np.inf
    for Q in np.linspace(-1.2, 1.2, 41):
        diag = step_diagnostics(H, u, 0.0, tau, Q, cfg)
        cps = critical_points_S(H, u_c1, 0.0, tau, Q,
                                search_window=(Q - 2 * r_q, Q + 2 * r_q))
        gap_val = min(abs(diag["sigma"] - c.value) for c in cps)
        worst_val = max(worst_val, gap_val - diag["cell_gap"])
        dist_cells = min(
            max(abs(diag["pass_q"] - c.xi.q) / diag["cell_q"],
                abs(diag["pass_p"] - c.xi.p) / diag["cell_p"])
            for c in cps)
        worst_cells = max(worst_cells, dist_cells)
    return [
        _record("9. selected value is critical (gap past cell gap)",
                worst_val, 0.0, passed=worst_val <= 1e-12),
        _record("9. pass cell within 3 cells of a characteristic",
                worst_cells, 3.0),
    ]


def _residual_fraction(H, snaps, window, tol):
    times = [t for t, _ in snaps]
    dt = times[1] - times[0]
    good = total = 0
    for k in range(1, len(snaps) - 1):
        t, g = snaps[k]
        lo = max(window[0], snaps[k + 1][1].origin, snaps[k - 1][1].origin)
        hi = min(window[1], snaps[k + 1][1].hi, snaps[k - 1][1].hi)
        x = np.arange(lo + g.h, hi - g.h / 2, g.h)
        u_t = (snaps[k + 1][1](x) - snaps[k - 1][1](x)) / (2 * dt)
        u_q = (g(x + g.h) - g(x - g.h)) / (2 * g.h)
        res = np.abs(u_t + H.value(t, x, u_q))
        good += int(np.sum(res <= tol))
        total += x.size
    return good / max(total, 1)


def criterion_10_solves_almost_everywhere() -> List[dict]:
    """Space-time residual of the selected solution away from shocks."""
    recs = []
    cases = [
        ("convex", get_model("quadratic"), lambda x: np.abs(x)),
        ("nonconvex", get_model("nonconvex_bump", a=0.5), lambda x: -np.abs(x)),
    ]
    for name, H, fn in cases:
        u = _clamped(fn, -2.4, 2.4, 0.01, lip=1.0)
        sched = IterationSchedule.uniform(0.0, 0.5, 0.05)
        snaps = iterated_snapshots(H, u, sched,
                                   OperatorConfig(landscape_grid=(200, 160)))
        frac = _residual_fraction(H, snaps, (-1.2, 1.2), tol=0.05)
        recs.append(_record(f"10. residual fraction >= 0.9 ({name})", -frac, -0.9,
                            detail=f"fraction={frac:.3f}"))
    return recs


CRITERIA = {
    1: criterion_1_selector_axioms,
    2: criterion_2_convex_equivalence,
    3: criterion_3_lipschitz_bounds,
    4: criterion_4_hamiltonian_dependence,
    5: criterion_5_integrable_sharpening,
    6: criterion_6_nonmarkov,
    7: criterion_7_small_step_convergence,
    8: criterion_8_finite_propagation,
    9: criterion_9_variational_property,
    10: criterion_10_solves_almost_everywhere,
}

SUITES = {
    "selector_axioms": (1,),
    "convex_equivalence": (2,),
    "operator_estimates": (3, 4, 5, 6, 9, 10),
    "wei_convergence": (7,),
    "propagation": (8,),
    "all": tuple(range(1, 11)),
}


def run_validate(suite: str = "all") -> dict:
    """Execute a suite; returns a machine-readable report with one record per
    checked property and an overall pass flag."""
    if suite not in SUITES:
        raise ValueError(f"unknown suite {suite!r}; choose from {sorted(SUITES)}")
    t0 = time.time()
    records = []
    for crit in SUITES[suite]:
        records.extend(CRITERIA[crit]())
    runtime = time.time() - t0
    report = {
        "suite": suite,
        "records": records,
        "runtime_s": runtime,
        "passed": all(r["passed"] for r in records),
    }
    if suite == "all" and runtime > 600:
        report["warning"] = "full suite exceeded the 10 minute soft budget"
    return report
