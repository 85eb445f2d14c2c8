"""Lipschitz functions on uniform 1-d grids.

The carrier type for initial data and operator outputs.  Values between
nodes are linearly interpolated; beyond the domain the function continues
linearly with the one-sided boundary slope clamped to [-lip, lip], so the
certified Lipschitz constant survives extension.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import gaussian_filter1d

__all__ = ["GridFunction", "make_initial_condition", "IC_REGISTRY"]


@dataclass(frozen=True)
class GridFunction:
    origin: float
    h: float
    values: np.ndarray
    lip: float

    def __post_init__(self):
        if self.h <= 0:
            raise ValueError("grid step must be positive")
        vals = np.ascontiguousarray(np.asarray(self.values, dtype=float))
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        if vals.ndim != 1 or vals.size < 2:
            raise ValueError("values must be a 1-d array with >= 2 nodes")
        if not np.all(np.isfinite(vals)):
            raise ValueError("grid values must be finite")
        slope = float(np.max(np.abs(np.diff(vals)))) / self.h
        if slope > self.lip * (1 + 1e-9) + 1e-12:
            raise ValueError(
                f"certified lip {self.lip:g} below measured slope {slope:g}")

    # -- geometry ---------------------------------------------------------

    @property
    def n(self) -> int:
        return self.values.size

    @property
    def hi(self) -> float:
        return self.origin + (self.n - 1) * self.h

    def grid(self) -> np.ndarray:
        return self.origin + self.h * np.arange(self.n)

    @property
    def domain(self):
        return (self.origin, self.hi)

    # -- evaluation -------------------------------------------------------

    def _boundary_slopes(self):
        lo = (self.values[1] - self.values[0]) / self.h
        hi = (self.values[-1] - self.values[-2]) / self.h
        c = self.lip
        return min(max(lo, -c), c), min(max(hi, -c), c)

    def __call__(self, x):
        """Evaluate with linear interpolation and clamped-slope extension."""
        x = np.asarray(x, dtype=float)
        g = self.grid()
        out = np.interp(x, g, self.values)
        s_lo, s_hi = self._boundary_slopes()
        below = x < self.origin
        above = x > self.hi
        if np.any(below):
            out = np.where(below, self.values[0] + s_lo * (x - self.origin), out)
        if np.any(above):
            out = np.where(above, self.values[-1] + s_hi * (x - self.hi), out)
        return out if out.ndim else float(out)

    def measured_lip(self) -> float:
        return float(np.max(np.abs(np.diff(self.values)))) / self.h

    # -- calculus ---------------------------------------------------------

    def mollified(self, width_cells: float = 2.0) -> "GridFunction":
        """Gaussian smoothing at scale width_cells * h; sup-error is bounded
        by lip * width * h, which budgets the induced operator error."""
        sm = gaussian_filter1d(self.values, sigma=width_cells, mode="nearest")
        lip = float(np.max(np.abs(np.diff(sm)))) / self.h
        return GridFunction(self.origin, self.h, sm, min(self.lip, lip * (1 + 1e-9)) + 1e-15)

    def derivative_fn(self, mollify_cells: float = 2.0):
        """du/dq as a callable, from the mollified grid (clamped outside)."""
        sm = gaussian_filter1d(self.values, sigma=mollify_cells, mode="nearest")
        d = np.gradient(sm, self.h)
        d = np.clip(d, -self.lip, self.lip)
        g = self.grid()

        def du(x):
            return np.interp(x, g, d)

        return du

    # -- surgery ----------------------------------------------------------

    def restrict(self, lo: float, hi: float) -> "GridFunction":
        """Sub-grid covering [lo, hi] (snapped outward to nodes)."""
        i0 = max(0, int(math.floor((lo - self.origin) / self.h + 1e-9)))
        i1 = min(self.n - 1, int(math.ceil((hi - self.origin) / self.h - 1e-9)))
        if i1 - i0 < 1:
            raise ValueError("restriction leaves fewer than two nodes")
        return GridFunction(self.origin + i0 * self.h, self.h,
                            self.values[i0:i1 + 1], self.lip)

    def shift_values(self, c: float) -> "GridFunction":
        return GridFunction(self.origin, self.h, self.values + c, self.lip)

    @staticmethod
    def from_callable(f, lo: float, hi: float, h: float, lip: float | None = None):
        n = int(round((hi - lo) / h)) + 1
        x = lo + h * np.arange(n)
        vals = np.asarray(f(x), dtype=float)
        measured = float(np.max(np.abs(np.diff(vals)))) / h
        return GridFunction(lo, h, vals, lip if lip is not None else measured * (1 + 1e-9) + 1e-15)


# ---------------------------------------------------------------------------
# initial-condition registry
# ---------------------------------------------------------------------------

IC_REGISTRY = {
    "abs": (lambda x: np.abs(x), 1.0),
    "neg_abs": (lambda x: -np.abs(x), 1.0),
    "cos": (lambda x: np.cos(x), 1.0),
}


def make_initial_condition(name: str, lo: float, hi: float, h: float,
                           param: float | None = None) -> GridFunction:
    """Build a named initial condition on [lo, hi].

    "abs", "neg_abs", "cos" take no parameter; "linear a" and "constant c"
    take one (supplied either inline in the name or via param).
    """
    parts = name.split()
    key = parts[0]
    if len(parts) > 1:
        param = float(parts[1])
    if key in IC_REGISTRY:
        f, lip = IC_REGISTRY[key]
        return GridFunction.from_callable(f, lo, hi, h, lip=lip)
    if key == "linear":
        if param is None:
            raise ValueError("linear initial condition needs a slope")
        a = float(param)
        return GridFunction.from_callable(lambda x: a * x, lo, hi, h, lip=abs(a) + 1e-15)
    if key == "constant":
        if param is None:
            raise ValueError("constant initial condition needs a value")
        c = float(param)
        return GridFunction.from_callable(lambda x: c + 0.0 * x, lo, hi, h, lip=1e-15)
    raise KeyError(f"unknown initial condition {name!r}; "
                   f"registry: {sorted(IC_REGISTRY) + ['linear a', 'constant c']}")
