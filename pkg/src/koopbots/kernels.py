"""
Per-step numeric kernels
========================

Every kernel exists twice: an explicit-loop version compiled with
``numba.njit`` and a vectorized NumPy version. The active set is chosen
once at import time. Set ``KOOPBOTS_NO_NUMBA=1`` (or run without numba
installed) to force the NumPy path.

Both sets are always importable as ``NUMBA_KERNELS`` / ``NUMPY_KERNELS``
so tests and ``benchmarks/bench_kernels.py`` can compare them directly.
"""

from __future__ import annotations

import math
import os
from types import SimpleNamespace

import numpy as np

_FLAG = os.environ.get("KOOPBOTS_NO_NUMBA", "").strip().lower()
_DISABLED = _FLAG not in ("", "0", "false", "no", "off")

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and not _DISABLED

# below this norm the heading cosine is undefined and reported as 0
COS_EPS = 1e-9


def _njit(fn):
    if not HAVE_NUMBA:
        return fn
    return numba.njit(cache=True)(fn)


# ---------------------------------------------------------------------------
# surface distances
# ---------------------------------------------------------------------------


def _distances_numpy(X, R_w, R_r, cx, cy, pair_radii):
    pos = X[:6].reshape(3, 2)
    wall = R_w - np.hypot(pos[:, 0] - cx, pos[:, 1] - cy) - R_r
    diff = pos[:, None, :] - pos[None, :, :]
    centre = np.hypot(diff[..., 0], diff[..., 1])
    np.fill_diagonal(centre, np.inf)
    pair = centre.min(axis=1) - pair_radii * R_r
    return pair, wall


def _distances_loop(X, R_w, R_r, cx, cy, pair_radii):
    pair = np.empty(3)
    wall = np.empty(3)
    for i in range(3):
        xi = X[2 * i]
        yi = X[2 * i + 1]
        wall[i] = R_w - math.hypot(xi - cx, yi - cy) - R_r
        best = np.inf
        for j in range(3):
            if j != i:
                d = math.hypot(xi - X[2 * j], yi - X[2 * j + 1])
                if d < best:
                    best = d
        pair[i] = best - pair_radii * R_r
    return pair, wall


_distances_impl = _njit(_distances_loop)


# ---------------------------------------------------------------------------
# utility components (18 values, robot-major)
# ---------------------------------------------------------------------------


def _utility_numpy(X, targets, R_w, R_r, cx, cy, pair_radii):
    pos = X[:6].reshape(3, 2)
    vel = X[6:12].reshape(3, 2)
    rel = pos - targets
    nr = np.hypot(rel[:, 0], rel[:, 1])
    nv = np.hypot(vel[:, 0], vel[:, 1])

    ok = (nr >= COS_EPS) & (nv >= COS_EPS)
    dot = np.einsum("ij,ij->i", rel, vel)
    with np.errstate(divide="ignore", invalid="ignore"):
        heading = np.where(ok, dot / (nr * nv), 0.0)

    vstar = 4.0 / (1.0 + np.exp(-10.0 * (nr - 0.2)))
    speed = 1.0 - np.exp(-(((nv - vstar) / (0.8 * vstar)) ** 2))
    near = np.exp(-((nr / 4.0) ** 2)) * np.exp(-((nr / 6.0) ** 2))
    arrived = np.exp(-((nr / 0.05) ** 2)) * np.exp(-((nv / 0.05) ** 2))

    pair, wall = _distances_numpy(X, R_w, R_r, cx, cy, pair_radii)
    wall_pen = np.log1p(6.0 * np.exp(-40.0 * wall))
    pair_pen = np.log1p(10.0 * np.exp(-20.0 * pair))

    out = np.stack([heading, speed, near, arrived, wall_pen, pair_pen], axis=1)
    return out.reshape(18)


def _utility_loop(X, targets, R_w, R_r, cx, cy, pair_radii):
    out = np.empty(18)
    pair, wall = _distances_impl(X, R_w, R_r, cx, cy, pair_radii)
    for i in range(3):
        rx = X[2 * i] - targets[i, 0]
        ry = X[2 * i + 1] - targets[i, 1]
        vx = X[6 + 2 * i]
        vy = X[6 + 2 * i + 1]
        nr = math.hypot(rx, ry)
        nv = math.hypot(vx, vy)
        if nr < COS_EPS or nv < COS_EPS:
            heading = 0.0
        else:
            heading = (rx * vx + ry * vy) / (nr * nv)
        vstar = 4.0 / (1.0 + math.exp(-10.0 * (nr - 0.2)))
        t = (nv - vstar) / (0.8 * vstar)
        b = 6 * i
        out[b] = heading
        out[b + 1] = 1.0 - math.exp(-t * t)
        out[b + 2] = math.exp(-((nr / 4.0) ** 2)) * math.exp(-((nr / 6.0) ** 2))
        out[b + 3] = math.exp(-((nr / 0.05) ** 2)) * math.exp(-((nv / 0.05) ** 2))
        out[b + 4] = math.log1p(6.0 * math.exp(-40.0 * wall[i]))
        out[b + 5] = math.log1p(10.0 * math.exp(-20.0 * pair[i]))
    return out


# ---------------------------------------------------------------------------
# second-order regressor: [d1, d2, u, 1, g1..g5]
# ---------------------------------------------------------------------------


def _bilinear_numpy(d1, d2, u, out):
    n1, n2, m = d1.size, d2.size, u.size
    blocks = (
        d1,
        d2,
        u,
        np.ones(1),
        np.outer(d1, d1).ravel(),
        np.outer(d1, d2).ravel(),
        np.outer(d2, d2).ravel(),
        np.outer(u, d1).ravel(),
        np.outer(u, d2).ravel(),
    )
    pos = 0
    for b in blocks:
        out[pos : pos + b.size] = b
        pos += b.size
    assert pos == n1 + n2 + m + 1 + n1 * n1 + n1 * n2 + n2 * n2 + m * n1 + m * n2
    return out


def _bilinear_loop(d1, d2, u, out):
    n1 = d1.size
    n2 = d2.size
    m = u.size
    p = 0
    for a in range(n1):
        out[p] = d1[a]
        p += 1
    for a in range(n2):
        out[p] = d2[a]
        p += 1
    for a in range(m):
        out[p] = u[a]
        p += 1
    out[p] = 1.0
    p += 1
    for a in range(n1):
        for b in range(n1):
            out[p] = d1[a] * d1[b]
            p += 1
    for a in range(n1):
        for b in range(n2):
            out[p] = d1[a] * d2[b]
            p += 1
    for a in range(n2):
        for b in range(n2):
            out[p] = d2[a] * d2[b]
            p += 1
    for a in range(m):
        for b in range(n1):
            out[p] = u[a] * d1[b]
            p += 1
    for a in range(m):
        for b in range(n2):
            out[p] = u[a] * d2[b]
            p += 1
    return out


# ---------------------------------------------------------------------------
# normalized least-squares update, in place
# ---------------------------------------------------------------------------


def _rls_numpy(theta, P, zeta, y, rho):
    eps = theta.T @ zeta - y
    Pz = P @ zeta
    m2 = rho + zeta @ Pz
    theta -= np.outer(Pz, eps) / m2
    P -= np.outer(Pz, Pz) / m2
    P[...] = 0.5 * (P + P.T)
    return eps, m2


def _rls_loop(theta, P, zeta, y, rho):
    q, p = theta.shape
    eps = np.empty(p)
    for c in range(p):
        s = 0.0
        for r in range(q):
            s += theta[r, c] * zeta[r]
        eps[c] = s - y[c]
    Pz = np.empty(q)
    for r in range(q):
        s = 0.0
        for k in range(q):
            s += P[r, k] * zeta[k]
        Pz[r] = s
    m2 = rho
    for r in range(q):
        m2 += zeta[r] * Pz[r]
    for r in range(q):
        g = Pz[r] / m2
        for c in range(p):
            theta[r, c] -= g * eps[c]
    # upper triangle from the averaged pair, mirrored: keeps P exactly symmetric
    for r in range(q):
        for k in range(r, q):
            v = 0.5 * (P[r, k] + P[k, r]) - Pz[r] * Pz[k] / m2
            P[r, k] = v
            P[k, r] = v
    return eps, m2


NUMPY_KERNELS = SimpleNamespace(
    name="numpy",
    distances=_distances_numpy,
    utility=_utility_numpy,
    bilinear=_bilinear_numpy,
    rls=_rls_numpy,
)

if HAVE_NUMBA:
    NUMBA_KERNELS = SimpleNamespace(
        name="numba",
        distances=_distances_impl,
        utility=_njit(_utility_loop),
        bilinear=_njit(_bilinear_loop),
        rls=_njit(_rls_loop),
    )
else:  # pragma: no cover
    NUMBA_KERNELS = None

ACTIVE = NUMBA_KERNELS if USE_NUMBA else NUMPY_KERNELS

surface_distances = ACTIVE.distances
utility_block = ACTIVE.utility
bilinear_fill = ACTIVE.bilinear
rls_update = ACTIVE.rls
