"""Run orchestration and result export."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .config import ProblemConfig
from .gridfn import GridFunction
from .hamiltonians import localization_radii, max_step_delta1
from .operators import (
    IterationSchedule,
    Wavefront,
    hopf_lax,
    iterated_snapshots,
    lax_oleinik_step,
    variational_step,
    wavefront,
)
from .viscosity_fd import solve_lax_friedrichs

__all__ = ["RunResult", "run_solve", "export", "load_result", "MODES"]

MODES = ("variational", "iterated", "hopf_lax", "lax_oleinik", "viscosity_fd",
         "wavefront")


class ModeError(ValueError):
    pass


@dataclass(frozen=True)
class RunResult:
    mode: str
    snapshots: List[Tuple[float, GridFunction]]
    metadata: dict
    front: Optional[Wavefront] = None


def _metadata(cfg: ProblemConfig, mode: str) -> dict:
    H, u0, T = cfg.hamiltonian, cfg.u0, cfg.horizon
    r_q, r_p = localization_radii(H.constant_C, u0.lip, 0.0, max(T, 1e-12),
                                  integrable=H.integrable)
    return {
        "mode": mode,
        "hamiltonian": H.name,
        "constant_C": H.constant_C,
        "kind": H.kind,
        "integrable": H.integrable,
        "lipschitz_L": u0.lip,
        "admissible_step": max_step_delta1(H.constant_C),
        "localization_r_q": r_q,
        "localization_r_p": r_p,
        "cutoff_eps": cfg.operator.cutoff_eps,
        "grid_slack": 4.0 * u0.lip * cfg.h,
        "domain": list(cfg.domain),
        "h": cfg.h,
        "horizon": T,
        "schedule_delta": cfg.schedule_delta,
        "fd_h": cfg.fd.h,
        "fd_cfl": cfg.fd.cfl,
        "landscape_grid": list(cfg.operator.landscape_grid),
        "window_margin": cfg.operator.window_margin,
    }


def run_solve(cfg: ProblemConfig, mode: str) -> RunResult:
    """Solve per the requested mode; snapshots at the configured output
    times.  Mode/model mismatches are rejected with an explanation."""
    if mode not in MODES:
        raise ModeError(f"unknown mode {mode!r}; choose from {MODES}")
    H, u0, T = cfg.hamiltonian, cfg.u0, cfg.horizon
    times = sorted(set(cfg.output_times) | {T})
    meta = _metadata(cfg, mode)

    if mode == "variational":
        if not H.integrable and T > max_step_delta1(H.constant_C) * (1 + 1e-12):
            raise ModeError(
                "variational mode is a single step and needs T within the "
                f"admissible step {max_step_delta1(H.constant_C):g}; use "
                "iterated mode for longer horizons")
        snaps = [(t, variational_step(H, u0, 0.0, t, cfg.operator)) for t in times]
        return RunResult(mode, snaps, meta)

    if mode == "iterated":
        delta = cfg.schedule_delta or 0.9 * max_step_delta1(H.constant_C)
        snaps = []
        cur, now = u0, 0.0
        for t in times:
            if t > now:
                cur = _advance(H, cur, now, t, delta, cfg)
                now = t
            snaps.append((t, cur))
        meta["schedule_delta"] = delta
        return RunResult(mode, snaps, meta)

    if mode == "hopf_lax":
        if not (H.integrable and H.kind in ("convex", "concave")):
            raise ModeError(
                "hopf_lax needs a momentum-only uniformly convex (or concave) "
                f"model; {H.name} has kind={H.kind}, integrable={H.integrable}")
        snaps = [(t, hopf_lax(H, u0, 0.0, t)) for t in times]
        return RunResult(mode, snaps, meta)

    if mode == "lax_oleinik":
        if H.kind not in ("convex", "concave"):
            raise ModeError(
                f"lax_oleinik needs a convex or concave model; {H.name} is "
                f"kind={H.kind}")
        snaps = [(t, lax_oleinik_step(H, u0, 0.0, t, cfg.operator)) for t in times]
        return RunResult(mode, snaps, meta)

    if mode == "viscosity_fd":
        snaps = [(t, solve_lax_friedrichs(H, u0, 0.0, t, cfg.fd)) for t in times]
        return RunResult(mode, snaps, meta)

    # wavefront
    front = wavefront(H, u0, 0.0, T, cfg.operator,
                      n_times=max(2, len(times)),
                      schedule_delta=cfg.schedule_delta)
    snaps = list(zip(front.times, front.selected))
    return RunResult(mode, snaps, meta, front=front)


def _advance(H, u, s, t, delta, cfg):
    sched = IterationSchedule.uniform(s, t, delta)
    return iterated_snapshots(H, u, sched, cfg.operator)[-1][1]


# ---------------------------------------------------------------------------
# export
# ---------------------------------------------------------------------------


def _fmt(x: float) -> str:
    return repr(float(x))


def export(result: RunResult, fmt: str, path) -> None:
    """Write the result deterministically.

    CSV columns are exactly t,q,value (wavefront runs add branch,P); JSON
    mirrors the result with metadata and grid payloads.
    """
    if fmt == "csv":
        lines = []
        if result.front is not None:
            lines.append("t,q,value,branch,P")
            fr = result.front
            for k, t in enumerate(fr.times):
                for q, v, b, p in zip(fr.q[k], fr.value[k], fr.branch[k], fr.p[k]):
                    lines.append(f"{_fmt(t)},{_fmt(q)},{_fmt(v)},{int(b)},{_fmt(p)}")
        else:
            lines.append("t,q,value")
            for t, g in result.snapshots:
                for q, v in zip(g.grid(), g.values):
                    lines.append(f"{_fmt(t)},{_fmt(q)},{_fmt(v)}")
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")
        return
    if fmt == "json":
        payload = {
            "mode": result.mode,
            "metadata": result.metadata,
            "snapshots": [
                {"t": t, "origin": g.origin, "h": g.h, "lip": g.lip,
                 "values": g.values.tolist()}
                for t, g in result.snapshots
            ],
        }
        if result.front is not None:
            fr = result.front
            payload["front"] = [
                {"t": t,
                 "start": fr.start[k].tolist(), "q": fr.q[k].tolist(),
                 "p": fr.p[k].tolist(), "value": fr.value[k].tolist(),
                 "branch": fr.branch[k].tolist()}
                for k, t in enumerate(fr.times)
            ]
        with open(path, "w") as fh:
            json.dump(payload, fh, sort_keys=True, indent=1)
            fh.write("\n")
        return
    raise ValueError(f"unknown export format {fmt!r} (csv or json)")


def load_result(path) -> RunResult:
    """Round-trip loader for JSON exports; grids reproduce exactly."""
    with open(path) as fh:
        payload = json.load(fh)
    snaps = [(s["t"], GridFunction(s["origin"], s["h"],
                                   np.asarray(s["values"]), s["lip"]))
             for s in payload["snapshots"]]
    return RunResult(payload["mode"], snaps, payload["metadata"])
