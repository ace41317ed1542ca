"""Game-theoretic utility components for the three-robot team.

Each robot ``i`` (0-based) carries six components, stored robot-major in
an 18-vector ``z2``: ``z2[6*i + j]`` is component ``j`` (0-based) of robot
``i``. In the full lifted state ``z = [X; z2]`` that entry sits at index
``12 + 6*i + j``.

Components per robot, with ``r`` the offset from the robot's target and
``v`` its velocity:

0. heading: cosine between ``r`` and ``v`` (0 when either is ~zero)
1. speed mismatch against a distance-dependent preferred speed
2. proximity reward ``exp(-(|r|/4)^2) exp(-(|r|/6)^2)``
3. arrived-and-stopped indicator
4. wall penalty ``ln(1 + 6 exp(-40 d_wall))``
5. neighbour penalty ``ln(1 + 10 exp(-20 d_pair))``
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .dynamics import N_ROBOTS, Workspace, pairwise_distances

N_COMPONENTS = 6
UTILITY_DIM = N_ROBOTS * N_COMPONENTS

# default objective profile; see configs/default.yaml
DEFAULT_COMPONENT_WEIGHTS = (-1.0, -1.0, 1.0, 1.0, -1.0, -1.0)


def _offset(X, i, targets):
    X = np.asarray(X, dtype=float)
    t = np.asarray(targets, dtype=float).reshape(N_ROBOTS, 2)
    return X[2 * i : 2 * i + 2] - t[i], X[6 + 2 * i : 8 + 2 * i]


def preferred_speed(dist: float) -> float:
    return 4.0 / (1.0 + np.exp(-10.0 * (dist - 0.2)))


def phi1(X, i, targets) -> float:
    r, v = _offset(X, i, targets)
    nr, nv = np.hypot(*r), np.hypot(*v)
    if nr < kernels.COS_EPS or nv < kernels.COS_EPS:
        return 0.0
    return float(r @ v / (nr * nv))


def phi2(X, i, targets) -> float:
    r, v = _offset(X, i, targets)
    vs = preferred_speed(np.hypot(*r))
    return float(1.0 - np.exp(-(((np.hypot(*v) - vs) / (0.8 * vs)) ** 2)))


def phi3(X, i, targets) -> float:
    nr = np.hypot(*_offset(X, i, targets)[0])
    return float(np.exp(-((nr / 4.0) ** 2)) * np.exp(-((nr / 6.0) ** 2)))


def phi4(X, i, targets) -> float:
    r, v = _offset(X, i, targets)
    return float(np.exp(-((np.hypot(*r) / 0.05) ** 2)) * np.exp(-((np.hypot(*v) / 0.05) ** 2)))


def phi5(X, i, ws: Workspace) -> float:
    _, wall = pairwise_distances(X, ws)
    return float(np.log1p(6.0 * np.exp(-40.0 * wall[i])))


def phi6(X, i, ws: Workspace) -> float:
    pair, _ = pairwise_distances(X, ws)
    return float(np.log1p(10.0 * np.exp(-20.0 * pair[i])))


def utility_vector(X, targets, ws: Workspace) -> np.ndarray:
    """All 18 components for state ``X``."""
    X = np.ascontiguousarray(X, dtype=float)
    t = np.ascontiguousarray(targets, dtype=float).reshape(N_ROBOTS, 2)
    cx, cy = ws.center
    return kernels.utility_block(X, t, float(ws.R_w), float(ws.R_r), float(cx), float(cy), float(ws.pair_radii))


@dataclass
class UtilityWeights:
    """Component weights ``omega`` (3x6) and controller weights ``w`` (18)."""

    omega: np.ndarray = field(default_factory=lambda: np.tile(DEFAULT_COMPONENT_WEIGHTS, (N_ROBOTS, 1)))
    w: np.ndarray = field(default_factory=lambda: np.tile(DEFAULT_COMPONENT_WEIGHTS, N_ROBOTS))

    def __post_init__(self):
        self.omega = np.asarray(self.omega, dtype=float).reshape(N_ROBOTS, N_COMPONENTS)
        self.w = np.asarray(self.w, dtype=float).reshape(UTILITY_DIM)
        if not (np.all(np.isfinite(self.omega)) and np.all(np.isfinite(self.w))):
            raise ValueError("utility weights must be finite")

    def robot_w(self, i: int) -> np.ndarray:
        return self.w[N_COMPONENTS * i : N_COMPONENTS * (i + 1)]


def scalar_utility(z2, omega) -> tuple[float, float, float, float]:
    """Per-robot utilities ``u_i = sum_j omega[i, j] z2[6i + j]`` and their sum."""
    z = np.asarray(z2, dtype=float).reshape(N_ROBOTS, N_COMPONENTS)
    om = np.asarray(omega, dtype=float).reshape(N_ROBOTS, N_COMPONENTS)
    u = (z * om).sum(axis=1)
    return float(u[0]), float(u[1]), float(u[2]), float(u.sum())
