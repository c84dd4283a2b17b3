"""Grid utilities: finite differences on nonuniform grids, quadrature, grids."""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor

import numpy as np
from scipy import integrate


def fd_weights(x: np.ndarray, order: int, width: int = 5) -> tuple[np.ndarray, np.ndarray]:
    """Finite-difference weights for the ``order``-th derivative at every node.

    Uses a ``width``-point stencil, centred in the interior and shifted
    one-sided at the ends (formal accuracy ``width - order``).  Returns
    ``(index, weights)`` of shape ``(N, width)`` so that
    ``(weights * y[index]).sum(axis=1)`` is the derivative.
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    if n < width:
        raise ValueError(f"need at least {width} nodes, got {n}")
    half = width // 2
    start = np.clip(np.arange(n) - half, 0, n - width)
    index = start[:, None] + np.arange(width)[None, :]
    offsets = x[index] - x[:, None]
    scale = np.abs(offsets).max(axis=1, keepdims=True)
    d = offsets / scale
    powers = np.arange(width)
    vander = d[:, None, :] ** powers[None, :, None]  # (N, k, j)
    rhs = np.zeros((n, width))
    rhs[:, order] = math.factorial(order)
    w = np.linalg.solve(vander, rhs[..., None])[..., 0]
    return index, w / scale**order


def derivative(x, y, order: int = 1, width: int = 5) -> np.ndarray:
    """Derivative of samples ``y`` on the (possibly nonuniform) grid ``x``."""
    index, w = fd_weights(x, order, width)
    return (w * np.asarray(y, dtype=float)[index]).sum(axis=1)


def simpson(y, x) -> float:
    """Composite Simpson rule on a possibly uneven grid."""
    return float(integrate.simpson(np.asarray(y, dtype=float), x=np.asarray(x, dtype=float)))


def cumulative_quad(f, nodes: np.ndarray, epsabs: float = 1e-13, epsrel: float = 1e-13) -> np.ndarray:
    """Cumulative integral of ``f`` from ``nodes[0]`` to each node, interval by interval."""
    out = np.zeros(len(nodes))
    total = 0.0
    for i in range(1, len(nodes)):
        val, _ = integrate.quad(f, nodes[i - 1], nodes[i], epsabs=epsabs, epsrel=epsrel, limit=200)
        total += val
        out[i] = total
    return out


def hybrid_grid(lo: float, hi: float, n: int) -> np.ndarray:
    """Union of a geometric and a uniform grid on ``[lo, hi]`` with ``n`` points total."""
    half = n // 2
    g = np.geomspace(lo, hi, half)
    u = np.linspace(lo, hi, n - half)
    grid = np.unique(np.concatenate([g, u]))
    grid[0], grid[-1] = lo, hi
    return grid


def relative_gap(a: float, b: float) -> float:
    """|a - b| / (|a| + |b|), zero when both vanish."""
    denom = abs(a) + abs(b)
    return 0.0 if denom == 0.0 else abs(a - b) / denom


def default_workers() -> int:
    """Worker cap from BNRAD_THREADS (defaults to 1, i.e. serial)."""
    raw = os.environ.get("BNRAD_THREADS", "").strip()
    if not raw:
        return 1
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def ordered_map(fn, items, workers: int | None = None) -> list:
    """map() over a process pool; results come back in input order."""
    items = list(items)
    workers = default_workers() if workers is None else max(1, int(workers))
    if workers == 1 or len(items) < 2:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=min(workers, len(items))) as pool:
        return list(pool.map(fn, items))
