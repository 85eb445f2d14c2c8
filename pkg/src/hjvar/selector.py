"""Critical value selection on saddle landscapes.

A landscape is a sampled two-variable function equal to a nondegenerate
index-1 quadratic plus a Lipschitz part, with its two "deep ends" marked on
the window boundary.  The selected value is the least threshold a at which
the two ends lie in one connected component of the sublevel set {f <= a} —
the bottleneck (minimax-path) value.  Sorting cells and merging with a
union-find realizes that definition; the implementation below bisects over
attained cell values with C-speed connected-component labeling, which
produces the identical value with far fewer passes.

Coercive reductions (plain minimization, min over a uniformly convex fiber)
and the sign-flip identity are provided as separate entry points so that the
convex-case operators and the audits can cross-check the same object.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Iterable, List, Optional, Tuple

import numpy as np
from scipy import ndimage

__all__ = [
    "SaddleLandscape",
    "SelectorResult",
    "sigma_mountain_pass",
    "sigma_opposite",
    "sigma_coercive",
    "reduce_convex_fiber",
    "axiom_audit",
    "bottleneck_value",
]

_EIGHT = np.ones((3, 3), dtype=np.int8)
_NBRS = [(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)]


@dataclass(frozen=True)
class SaddleLandscape:
    """Sampled f on a rectangle with the two deep ends marked.

    samples has shape (n_q, n_p): axis 0 walks the first window coordinate.
    end_a / end_b are tuples of cell indices (i, j) on the window boundary;
    for the standard -q*p saddle these are the (+,+) and (-,-) corners, and
    the complementary corners host the ends of the negated landscape.
    """

    q_axis: np.ndarray
    p_axis: np.ndarray
    samples: np.ndarray
    end_a: Tuple[Tuple[int, int], ...]
    end_b: Tuple[Tuple[int, int], ...]

    def __post_init__(self):
        f = np.asarray(self.samples, dtype=float)
        if f.ndim != 2:
            raise ValueError("samples must be 2-d")
        if f.shape != (self.q_axis.size, self.p_axis.size):
            raise ValueError("samples shape must match the axes")
        if not (self.end_a and self.end_b):
            raise ValueError("both ends must be nonempty")
        ss = set(self.end_a) & set(self.end_b)
        if ss:
            raise ValueError("ends must be disjoint")
        for (i, j) in tuple(self.end_a) + tuple(self.end_b):
            if not (i in (0, f.shape[0] - 1) or j in (0, f.shape[1] - 1)):
                raise ValueError("end cells must lie on the window boundary")

    @property
    def grid_step(self) -> Tuple[float, float]:
        return (float(self.q_axis[1] - self.q_axis[0]),
                float(self.p_axis[1] - self.p_axis[0]))

    @property
    def window(self):
        return ((float(self.q_axis[0]), float(self.q_axis[-1])),
                (float(self.p_axis[0]), float(self.p_axis[-1])))

    def cell_value_gap(self) -> float:
        """Largest value jump between 8-neighbors; the natural resolution of
        any threshold computed on this grid."""
        f = self.samples
        g = 0.0
        g = max(g, float(np.max(np.abs(np.diff(f, axis=0)))))
        g = max(g, float(np.max(np.abs(np.diff(f, axis=1)))))
        g = max(g, float(np.max(np.abs(f[1:, 1:] - f[:-1, :-1]))))
        g = max(g, float(np.max(np.abs(f[1:, :-1] - f[:-1, 1:]))))
        return g

    def deep_end_representatives(self) -> Tuple[Tuple[int, int], Tuple[int, int]]:
        f = self.samples
        ra = min(self.end_a, key=lambda ij: f[ij])
        rb = min(self.end_b, key=lambda ij: f[ij])
        return ra, rb

    @staticmethod
    def from_callable(f: Callable, window, shape, ends: str = "saddle") -> "SaddleLandscape":
        """Sample f on the window; ends="saddle" marks the (+,+)/(-,-)
        corners (deep ends of -q*p), "antisaddle" the other two."""
        (q0, q1), (p0, p1) = window
        nq, np_ = shape
        q_axis = np.linspace(q0, q1, nq)
        p_axis = np.linspace(p0, p1, np_)
        samples = f(q_axis[:, None], p_axis[None, :])
        samples = np.broadcast_to(samples, (nq, np_)).astype(float)
        if ends == "saddle":
            ea, eb = ((nq - 1, np_ - 1),), ((0, 0),)
        elif ends == "antisaddle":
            ea, eb = ((nq - 1, 0),), ((0, np_ - 1),)
        else:
            raise ValueError("ends must be 'saddle' or 'antisaddle'")
        return SaddleLandscape(q_axis, p_axis, samples, ea, eb)


@dataclass(frozen=True)
class SelectorResult:
    value: float
    method: str
    pass_cell: Optional[Tuple[int, int]] = None
    witness: Optional[List[Tuple[int, int]]] = None
    argmin_cell: Optional[Tuple[int, int]] = None
    on_boundary: bool = False


# ---------------------------------------------------------------------------
# bottleneck machinery
# ---------------------------------------------------------------------------


def _connected_at(f, a, rep_a, rep_b):
    lab, _ = ndimage.label(f <= a, structure=_EIGHT)
    la, lb = lab[rep_a], lab[rep_b]
    return la != 0 and la == lb


def bottleneck_value(f: np.ndarray, rep_a: Tuple[int, int], rep_b: Tuple[int, int],
                     bracket: Optional[Tuple[float, float]] = None) -> float:
    """Least attained cell value a with rep_a, rep_b 8-connected in {f <= a}.

    Equals the minimax over 8-connected cell paths of the path maximum.  A
    (lo, hi] bracket from a nearby solve cuts the search down to a few
    labeling passes; it is verified and widened if stale.
    """
    f = np.asarray(f, dtype=float)
    fmin = float(min(f[rep_a], f[rep_b]))
    fmax = float(np.max(f))
    lo, hi = fmin, fmax  # invariant: lo disconnected (or below both ends), hi connected
    if not _connected_at(f, fmax, rep_a, rep_b):
        raise RuntimeError("ends not connected even at the window maximum")
    if bracket is not None:
        blo, bhi = max(bracket[0], fmin), min(bracket[1], fmax)
        if blo < bhi:
            if _connected_at(f, bhi, rep_a, rep_b):
                hi = bhi
                if not _connected_at(f, blo, rep_a, rep_b):
                    lo = blo
            else:
                lo = bhi
    # value-space bisection until the band holds few attained values
    span = hi - lo
    while span > 0 and np.count_nonzero((f > lo) & (f <= hi)) > 64:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if _connected_at(f, mid, rep_a, rep_b):
            hi = mid
        else:
            lo = mid
        span = hi - lo
    cand = np.unique(f[(f > lo) & (f <= hi)])
    if cand.size == 0:
        return hi
    ilo, ihi = 0, cand.size - 1  # cand[ihi] connected or == hi
    if not _connected_at(f, cand[ilo], rep_a, rep_b):
        while ihi - ilo > 1:
            mid = (ilo + ihi) // 2
            if _connected_at(f, cand[mid], rep_a, rep_b):
                ihi = mid
            else:
                ilo = mid
        return float(cand[ihi])
    return float(cand[0])


def _pass_cells(f, sigma, rep_a, rep_b):
    """Cells with value sigma that join the two end components of {f < sigma}."""
    strict = f < sigma
    lab, _ = ndimage.label(strict, structure=_EIGHT)
    la, lb = lab[rep_a], lab[rep_b]
    plateau = f == sigma
    pl_lab, n_pl = ndimage.label(plateau, structure=_EIGHT)
    if n_pl == 0:
        return []
    # which strict components touch each plateau component
    big = np.where(strict, lab, 0) + 0
    touch_a = np.zeros(n_pl + 1, dtype=bool)
    touch_b = np.zeros(n_pl + 1, dtype=bool)
    grown = ndimage.grey_dilation(pl_lab, footprint=_EIGHT)
    if la != 0:
        touch_a[np.unique(grown[big == la])] = True
    if lb != 0:
        touch_b[np.unique(grown[big == lb])] = True
    touch_a[0] = touch_b[0] = False
    # an end whose representative sits exactly at sigma belongs to the plateau
    if la == 0 and plateau[rep_a]:
        touch_a[pl_lab[rep_a]] = True
    if lb == 0 and plateau[rep_b]:
        touch_b[pl_lab[rep_b]] = True
    good = np.nonzero(touch_a & touch_b)[0]
    if good.size == 0:
        # merge happens through a chain: report any plateau comp touching A
        good = np.nonzero(touch_a | touch_b)[0]
        if good.size == 0:
            good = np.arange(1, n_pl + 1)
    ii, jj = np.nonzero(pl_lab == good[0])
    return list(zip(ii.tolist(), jj.tolist()))


def _witness_path(f, sigma, rep_a, rep_b):
    """A shortest 8-connected path from rep_a to rep_b inside {f <= sigma}.

    Every such path attains the maximum sigma exactly, by minimality of the
    bottleneck threshold.
    """
    mask = f <= sigma
    nq, npp = f.shape
    prev = -np.ones(f.shape, dtype=np.int64)
    start = rep_a[0] * npp + rep_a[1]
    goal = rep_b[0] * npp + rep_b[1]
    prev_flat = prev.ravel()
    prev_flat[start] = start
    dq = deque([start])
    mflat = mask.ravel()
    while dq:
        cur = dq.popleft()
        if cur == goal:
            break
        ci, cj = divmod(cur, npp)
        for di, dj in _NBRS:
            ni, nj = ci + di, cj + dj
            if 0 <= ni < nq and 0 <= nj < npp:
                idx = ni * npp + nj
                if mflat[idx] and prev_flat[idx] < 0:
                    prev_flat[idx] = cur
                    dq.append(idx)
    if prev_flat[goal] < 0:
        return None
    path = [goal]
    while path[-1] != start:
        path.append(int(prev_flat[path[-1]]))
    return [(idx // npp, idx % npp) for idx in reversed(path)]


def sigma_mountain_pass(landscape: SaddleLandscape, want_witness: bool = False,
                        bracket: Optional[Tuple[float, float]] = None) -> SelectorResult:
    """Selected value of an index-1 landscape: the least threshold joining
    its two deep ends inside the sublevel set."""
    f = landscape.samples
    ra, rb = landscape.deep_end_representatives()
    sigma = bottleneck_value(f, ra, rb, bracket=bracket)
    cells = _pass_cells(f, sigma, ra, rb)
    interior = [c for c in cells
                if c[0] not in (0, f.shape[0] - 1) and c[1] not in (0, f.shape[1] - 1)]
    pass_cell = (interior or cells or [None])[0]
    # flag only a pass that is forced onto the window boundary
    on_boundary = bool(cells) and not interior
    witness = None
    if want_witness:
        witness = _witness_path(f, sigma, ra, rb)
        if witness is not None:
            k = int(np.argmax([f[c] for c in witness]))
            pass_cell = witness[k]
    return SelectorResult(value=float(sigma), method="mountain_pass",
                          pass_cell=pass_cell, witness=witness,
                          on_boundary=on_boundary)


def sigma_opposite(landscape: SaddleLandscape) -> SelectorResult:
    """sigma through the sign-flip identity: compute the pass of -f between
    the negated landscape's ends (the complementary corners) and return its
    negative.  Cross-check path; must agree with the direct pass within one
    cell value gap."""
    f = landscape.samples
    nq, npp = f.shape
    neg = SaddleLandscape(
        q_axis=landscape.q_axis, p_axis=landscape.p_axis, samples=-f,
        end_a=((nq - 1, 0),), end_b=((0, npp - 1),))
    res = sigma_mountain_pass(neg)
    return SelectorResult(value=-res.value, method="max-of-negated",
                          pass_cell=res.pass_cell, witness=None,
                          on_boundary=res.on_boundary)


# ---------------------------------------------------------------------------
# coercive reductions
# ---------------------------------------------------------------------------


def sigma_coercive(f, window, n: int = 4001) -> SelectorResult:
    """min of a coercive one-variable function: dense scan plus a golden
    refinement.  Raises when the minimum sits on the window boundary."""
    if isinstance(f, SaddleLandscape):
        samples = f.samples
        k = np.unravel_index(int(np.argmin(samples)), samples.shape)
        if k[0] in (0, samples.shape[0] - 1) or k[1] in (0, samples.shape[1] - 1):
            raise RuntimeError("minimum attained on window boundary; widen the window")
        return SelectorResult(value=float(samples[k]), method="min", argmin_cell=k)
    lo, hi = window
    xs = np.linspace(lo, hi, n)
    vals = np.asarray(f(xs), dtype=float)
    k = int(np.argmin(vals))
    if k in (0, n - 1):
        raise RuntimeError("minimum attained on window boundary; widen the window")

    def fs(x):
        return float(np.asarray(f(np.asarray([x])))[0])

    a, b = xs[k - 1], xs[k + 1]
    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    c, d = b - invphi * (b - a), a + invphi * (b - a)
    fc, fd = fs(c), fs(d)
    for _ in range(80):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = fs(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = fs(d)
    x_star = 0.5 * (a + b)
    return SelectorResult(value=fs(x_star), method="min",
                          argmin_cell=(k, 0))


def reduce_convex_fiber(f: Callable, modulus: float, window, n_y: int = 801) -> Callable:
    """g(x) = min_y f(x, y) for f uniformly convex in y on the window.

    Vectorized in x: grid minimum in y refined by one exact Newton step on
    the local parabola.  A boundary minimizer signals a wrong convexity
    certificate and raises.
    """
    if modulus <= 0:
        raise ValueError("modulus must be positive")
    (y0, y1) = window[1] if isinstance(window[0], tuple) else window
    ys = np.linspace(y0, y1, n_y)
    dy = ys[1] - ys[0]

    def g(x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        vals = f(x[:, None], ys[None, :])
        k = np.argmin(vals, axis=1)
        if np.any(k == 0) or np.any(k == n_y - 1):
            raise RuntimeError("fiber minimizer on the window boundary; "
                               "not convex in y here?")
        vm = vals[np.arange(x.size), k]
        vl = vals[np.arange(x.size), k - 1]
        vr = vals[np.arange(x.size), k + 1]
        denom = vl - 2 * vm + vr
        delta = np.where(denom > 0, 0.5 * (vl - vr) * dy / np.where(denom == 0, 1, denom), 0.0)
        y_star = ys[k] + np.clip(delta, -dy, dy)
        out = f(x, y_star)
        return out if out.shape else float(out)

    return g


# ---------------------------------------------------------------------------
# axiom audit
# ---------------------------------------------------------------------------


def axiom_audit(make_landscape: Callable[[Callable], SaddleLandscape],
                base: Callable, perturbation: Callable, shift: float = 0.5,
                rng: Optional[np.random.Generator] = None) -> dict:
    """Exercise the selector's defining identities on one landscape family.

    make_landscape turns a callable f(q, p) into a SaddleLandscape on a fixed
    grid.  Checks: additivity sigma(f + c) = sigma(f) + c (exact);
    monotonicity f <= g => sigma(f) <= sigma(g); uniform continuity
    |sigma(f) - sigma(g)| <= sup|f - g|; invariance under an end-preserving
    affine shear; sign flip within one cell gap; pass cell interior.
    Report only: returns a dict of booleans plus measurements.
    """
    rng = rng or np.random.default_rng(0)
    L0 = make_landscape(base)
    s0 = sigma_mountain_pass(L0)
    report = {"sigma": s0.value, "cell_gap": L0.cell_value_gap()}

    s_shift = sigma_mountain_pass(make_landscape(lambda q, p: base(q, p) + shift))
    report["additivity_exact"] = (s_shift.value == s0.value + shift)
    report["additivity_gap"] = abs(s_shift.value - (s0.value + shift))

    bump = lambda q, p: np.abs(perturbation(q, p))
    s_up = sigma_mountain_pass(make_landscape(lambda q, p: base(q, p) + bump(q, p)))
    report["monotone"] = s0.value <= s_up.value + 1e-15

    pert_sup = float(np.max(np.abs(bump(L0.q_axis[:, None], L0.p_axis[None, :]))))
    report["continuity"] = abs(s_up.value - s0.value) <= pert_sup + 1e-12
    report["continuity_gap"] = abs(s_up.value - s0.value) - pert_sup

    s_neg = sigma_opposite(L0)
    report["sign_flip"] = abs(s_neg.value - s0.value) <= L0.cell_value_gap() + 1e-12
    report["sign_flip_gap"] = abs(s_neg.value - s0.value)

    # shear (q, p) -> (q, p + a q) preserves the corner ends for small a
    a = 0.1 * (rng.uniform() - 0.5)
    s_shear = sigma_mountain_pass(make_landscape(lambda q, p: base(q, p + a * q)))
    report["affine_invariance"] = abs(s_shear.value - s0.value) <= 4 * L0.cell_value_gap()
    report["affine_gap"] = abs(s_shear.value - s0.value)

    report["pass_interior"] = not s0.on_boundary
    report["all_pass"] = all(report[k] for k in
                             ("additivity_exact", "monotone", "continuity",
                              "sign_flip", "affine_invariance", "pass_interior"))
    return report
