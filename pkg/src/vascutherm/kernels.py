"""Batched per-triangle kernels.

Each kernel has a vectorised numpy implementation and a loop implementation
compiled with numba. The numba path is used when numba imports and the
environment variable ``VASCUTHERM_DISABLE_NUMBA`` is unset or ``0``.
Both paths are always importable so they can be compared in tests and in
``benchmarks/bench_kernels.py``.
"""

import os

import numpy as np

try:
    import numba

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is optional
    HAS_NUMBA = False

USE_NUMBA = HAS_NUMBA and os.environ.get("VASCUTHERM_DISABLE_NUMBA", "0") in ("", "0")

# 3-point edge-midpoint rule: shape-function values at the midpoints of
# edges (0,1), (1,2), (2,0); each weight is A/3.
MIDPOINT_SHAPE = np.array([[0.5, 0.5, 0.0],
                           [0.0, 0.5, 0.5],
                           [0.5, 0.0, 0.5]])
CONVECTION_PATTERN = np.array([[2.0, 1.0, 1.0],
                               [1.0, 2.0, 1.0],
                               [1.0, 1.0, 2.0]]) / 12.0


def _geometry_numpy(nodes, tris):
    p = nodes[tris]
    x, y = p[..., 0], p[..., 1]
    det = (x[:, 1] - x[:, 0]) * (y[:, 2] - y[:, 0]) - (x[:, 2] - x[:, 0]) * (y[:, 1] - y[:, 0])
    grads = np.empty((len(tris), 3, 2))
    grads[:, 0, 0] = y[:, 1] - y[:, 2]
    grads[:, 0, 1] = x[:, 2] - x[:, 1]
    grads[:, 1, 0] = y[:, 2] - y[:, 0]
    grads[:, 1, 1] = x[:, 0] - x[:, 2]
    grads[:, 2, 0] = y[:, 0] - y[:, 1]
    grads[:, 2, 1] = x[:, 1] - x[:, 0]
    grads /= det[:, None, None]
    return 0.5 * det, grads


def _stiffness_numpy(nodes, tris, conductivity, thickness):
    area, g = _geometry_numpy(nodes, tris)
    ke = np.einsum("tai,tij,tbj->tab", g, conductivity, g, optimize=True)
    return ke * (thickness * area)[:, None, None]


def _radiation_numpy(tris, area, theta, eps_sigma, theta_amb):
    tq = theta[tris] @ MIDPOINT_SHAPE.T  # (M, 3) values at the midpoints
    w = area / 3.0
    flux = eps_sigma * (tq**4 - theta_amb**4) * w[:, None]
    res = flux @ MIDPOINT_SHAPE
    dflux = 4.0 * eps_sigma * tq**3 * w[:, None]
    jac = np.einsum("tq,qa,qb->tab", dflux, MIDPOINT_SHAPE, MIDPOINT_SHAPE, optimize=True)
    return res, jac


def _stiffness_loops(nodes, tris, conductivity, thickness):
    m = tris.shape[0]
    out = np.empty((m, 3, 3))
    g = np.empty((3, 2))
    for t in range(m):
        x0, y0 = nodes[tris[t, 0], 0], nodes[tris[t, 0], 1]
        x1, y1 = nodes[tris[t, 1], 0], nodes[tris[t, 1], 1]
        x2, y2 = nodes[tris[t, 2], 0], nodes[tris[t, 2], 1]
        det = (x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0)
        g[0, 0] = (y1 - y2) / det
        g[0, 1] = (x2 - x1) / det
        g[1, 0] = (y2 - y0) / det
        g[1, 1] = (x0 - x2) / det
        g[2, 0] = (y0 - y1) / det
        g[2, 1] = (x1 - x0) / det
        scale = thickness * 0.5 * det
        kxx, kxy = conductivity[t, 0, 0], conductivity[t, 0, 1]
        kyx, kyy = conductivity[t, 1, 0], conductivity[t, 1, 1]
        for a in range(3):
            qx = kxx * g[a, 0] + kyx * g[a, 1]
            qy = kxy * g[a, 0] + kyy * g[a, 1]
            for b in range(3):
                out[t, a, b] = scale * (qx * g[b, 0] + qy * g[b, 1])
    return out


def _radiation_loops(tris, area, theta, eps_sigma, theta_amb):
    m = tris.shape[0]
    res = np.zeros((m, 3))
    jac = np.zeros((m, 3, 3))
    amb4 = theta_amb**4
    for t in range(m):
        w = area[t] / 3.0
        for q in range(3):
            a = q
            b = (q + 1) % 3
            tq = 0.5 * (theta[tris[t, a]] + theta[tris[t, b]])
            r = eps_sigma * (tq**4 - amb4) * w * 0.5
            res[t, a] += r
            res[t, b] += r
            d = 4.0 * eps_sigma * tq**3 * w * 0.25
            jac[t, a, a] += d
            jac[t, a, b] += d
            jac[t, b, a] += d
            jac[t, b, b] += d
    return res, jac


if HAS_NUMBA:
    _stiffness_numba = numba.njit(cache=True)(_stiffness_loops)
    _radiation_numba = numba.njit(cache=True)(_radiation_loops)
else:  # pragma: no cover
    _stiffness_numba = _stiffness_loops
    _radiation_numba = _radiation_loops


def element_geometry(nodes, tris):
    """Signed areas (M,) and shape-function gradients (M, 3, 2)."""
    return _geometry_numpy(np.asarray(nodes, float), np.asarray(tris, np.int64))


def stiffness_batch(nodes, tris, conductivity, thickness, use_numba=None):
    """Conduction blocks ``d * A * G K G^T`` for every triangle, shape (M, 3, 3)."""
    use_numba = USE_NUMBA if use_numba is None else use_numba
    nodes = np.ascontiguousarray(nodes, dtype=float)
    tris = np.ascontiguousarray(tris, dtype=np.int64)
    conductivity = np.ascontiguousarray(np.broadcast_to(conductivity, (len(tris), 2, 2)), dtype=float)
    fn = _stiffness_numba if use_numba else _stiffness_numpy
    return fn(nodes, tris, conductivity, float(thickness))


def convection_batch(area, h):
    """Consistent mass blocks ``h * A / 12 * [[2,1,1],[1,2,1],[1,1,2]]``."""
    return (h * np.asarray(area, float))[:, None, None] * CONVECTION_PATTERN


def radiation_batch(tris, area, theta, eps_sigma, theta_amb, use_numba=None):
    """Radiation residual (M, 3) and Jacobian (M, 3, 3) blocks by the edge-midpoint rule."""
    use_numba = USE_NUMBA if use_numba is None else use_numba
    tris = np.ascontiguousarray(tris, dtype=np.int64)
    area = np.ascontiguousarray(area, dtype=float)
    theta = np.ascontiguousarray(theta, dtype=float)
    fn = _radiation_numba if use_numba else _radiation_numpy
    return fn(tris, area, theta, float(eps_sigma), float(theta_amb))
