"""Independent reference computations for tests.

These deliberately avoid the library's own algorithms: the minimax path
value is computed by a Dijkstra-style widest-path search, minima by dense
scans, and PDE references by closed forms where available.
"""

import heapq

import numpy as np

NBRS8 = [(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)]


def minimax_path_value(f, start, goal):
    """Min over 8-connected cell paths of the max cell value, by a
    Dijkstra-like relaxation on the 'widest path' semiring."""
    f = np.asarray(f, dtype=float)
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
        for di, dj in NBRS8:
            ni, nj = i + di, j + dj
            if 0 <= ni < nq and 0 <= nj < npp:
                nd = max(d, f[ni, nj])
                if nd < best[ni, nj]:
                    best[ni, nj] = nd
                    heapq.heappush(heap, (nd, (ni, nj)))
    raise RuntimeError("goal unreachable")


def dense_scan_min(f, lo, hi, n=400001):
    xs = np.linspace(lo, hi, n)
    vals = np.asarray(f(xs), dtype=float)
    k = int(np.argmin(vals))
    return float(xs[k]), float(vals[k])


def hopf_lax_quadratic(u0_fn, q, t, y_lo, y_hi, n=200001):
    """Reference min_y [u0(y) + (q - y)^2 / (2 t)] by dense scan; for
    H(p) = p^2/2 only."""
    ys = np.linspace(y_lo, y_hi, n)
    u = np.asarray(u0_fn(ys), dtype=float)
    q = np.atleast_1d(np.asarray(q, dtype=float))
    out = np.empty(q.shape)
    for k, qq in enumerate(q):
        out[k] = np.min(u + (qq - ys) ** 2 / (2.0 * t))
    return out if out.size > 1 else float(out[0])


def random_lipschitz_2d(rng, lip_max=0.5, n_modes=6):
    """A smooth random function with certified Lipschitz constant <= lip_max:
    a finite Fourier sum with normalized gradient budget."""
    amps = rng.uniform(0.2, 1.0, n_modes)
    freqs = rng.uniform(0.3, 2.0, (n_modes, 2))
    phases = rng.uniform(0, 2 * np.pi, n_modes)
    budget = np.sum(amps * np.hypot(freqs[:, 0], freqs[:, 1]))
    scale = lip_max / budget

    def ell(q, p):
        out = 0.0
        for a, (wq, wp), ph in zip(amps, freqs, phases):
            out = out + a * np.sin(wq * q + wp * p + ph)
        return scale * out

    return ell
