"""Deterministic 1-d probe grids and local maximization.

The query grid is the base-2 van der Corput sequence scaled into the
interval: its prefixes are nested, so enlarging the budget probes a
strict superset of points and scan maxima can only grow.
"""

from __future__ import annotations

import numpy as np

_INV_GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


def vdc_points(lo: float, hi: float, size: int) -> np.ndarray:
    """First `size` points of the base-2 van der Corput sequence on (lo, hi)."""
    if size < 1:
        raise ValueError("grid size must be >= 1")
    idx = np.arange(1, size + 1, dtype=np.uint64)
    frac = np.zeros(size)
    denom = 1.0
    work = idx.copy()
    while work.any():
        denom *= 2.0
        frac += (work & 1) / denom
        work >>= 1
    return lo + (hi - lo) * frac


def golden_section_max(f, lo: float, hi: float, iters: int = 30):
    """Golden-section maximization on [lo, hi]; returns the best probe seen."""
    a, b = float(lo), float(hi)
    c = b - _INV_GOLDEN * (b - a)
    d = a + _INV_GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    best_x, best_v = (c, fc) if fc >= fd else (d, fd)
    for _ in range(iters):
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INV_GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_GOLDEN * (b - a)
            fd = f(d)
        x, v = (c, fc) if fc >= fd else (d, fd)
        if v > best_v:
            best_x, best_v = x, v
    return best_x, best_v


def refine_max(f, probes: np.ndarray, values: np.ndarray, lo: float, hi: float,
               iters: int = 30):
    """Golden-section refinement bracketing the best probe by its neighbors."""
    order = np.argsort(probes)
    sorted_p = probes[order]
    sorted_v = values[order]
    k = int(np.argmax(sorted_v))
    left = sorted_p[k - 1] if k > 0 else lo
    right = sorted_p[k + 1] if k + 1 < sorted_p.size else hi
    x, v = golden_section_max(f, left, right, iters=iters)
    if sorted_v[k] >= v:
        return float(sorted_p[k]), float(sorted_v[k])
    return float(x), float(v)
