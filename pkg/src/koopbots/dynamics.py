"""Double-integrator kinematics for three disk robots inside a circular wall.

State ordering is fixed: ``X = [x1, y1, x2, y2, x3, y3, vx1, vy1, vx2, vy2, vx3, vy3]``
and input ordering ``U = [ax1, ay1, ax2, ay2, ax3, ay3]``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from . import kernels

N_ROBOTS = 3
STATE_DIM = 12
INPUT_DIM = 6


class RobotState(NamedTuple):
    r: np.ndarray  # position (2,), m
    v: np.ndarray  # velocity (2,), m/s


@dataclass(frozen=True)
class Workspace:
    """Circular arena geometry and sampling period.

    ``pair_radii`` selects how many robot radii are subtracted from the
    centre-to-centre distance of two robots: 2 gives the physical gap
    between two disks (default), 1 reproduces the alternative reading.
    """

    R_w: float = 11.0
    R_r: float = 2.0
    center: tuple[float, float] = (0.0, 0.0)
    dt: float = 0.05
    pair_radii: int = 2

    def __post_init__(self):
        if not (self.R_r > 0 and self.R_w > self.R_r):
            raise ValueError(f"need R_w > R_r > 0, got R_w={self.R_w}, R_r={self.R_r}")
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.pair_radii not in (1, 2):
            raise ValueError(f"pair_radii must be 1 or 2, got {self.pair_radii}")


def build_system_matrices(ws: Workspace) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(A, B)`` with ``X(k+1) = A X(k) + B U(k)``."""
    dt = ws.dt
    I6 = np.eye(6)
    A = np.block([[I6, dt * I6], [np.zeros((6, 6)), I6]])
    B = np.vstack([0.5 * dt * dt * I6, dt * I6])
    return A, B


def step(X: np.ndarray, U: np.ndarray, ws: Workspace) -> np.ndarray:
    """Advance one sampling period.

    Written in block form rather than as ``A @ X + B @ U``; the two agree
    exactly because every block is diagonal.
    """
    X = np.asarray(X, dtype=float)
    U = np.asarray(U, dtype=float)
    dt = ws.dt
    out = np.empty(STATE_DIM)
    out[:6] = X[:6] + dt * X[6:] + (0.5 * dt * dt) * U
    out[6:] = X[6:] + dt * U
    return out


def split_state(X: np.ndarray) -> list[RobotState]:
    X = np.asarray(X, dtype=float)
    return [RobotState(X[2 * i : 2 * i + 2].copy(), X[6 + 2 * i : 8 + 2 * i].copy()) for i in range(N_ROBOTS)]


def join_state(robots: Sequence[RobotState]) -> np.ndarray:
    if len(robots) != N_ROBOTS:
        raise ValueError(f"expected {N_ROBOTS} robots, got {len(robots)}")
    X = np.empty(STATE_DIM)
    for i, rb in enumerate(robots):
        X[2 * i : 2 * i + 2] = rb.r
        X[6 + 2 * i : 8 + 2 * i] = rb.v
    return X


def make_state(positions, velocities=None) -> np.ndarray:
    """Stack ``(3, 2)`` positions and optional velocities into ``X``."""
    pos = np.asarray(positions, dtype=float).reshape(N_ROBOTS, 2)
    vel = np.zeros((N_ROBOTS, 2)) if velocities is None else np.asarray(velocities, dtype=float).reshape(N_ROBOTS, 2)
    return np.concatenate([pos.ravel(), vel.ravel()])


def positions(X: np.ndarray) -> np.ndarray:
    return np.asarray(X, dtype=float)[:6].reshape(N_ROBOTS, 2)


def robot_slice(i: int) -> np.ndarray:
    """Indices of robot ``i``'s ``[x, y, vx, vy]`` inside ``X``."""
    return np.array([2 * i, 2 * i + 1, 6 + 2 * i, 7 + 2 * i])


def pairwise_distances(X: np.ndarray, ws: Workspace) -> tuple[np.ndarray, np.ndarray]:
    """Surface distances ``(robot_robot, robot_wall)``, three values each.

    ``robot_robot[i]`` is the smallest gap from robot ``i`` to any other
    robot; ``robot_wall[i]`` the gap to the wall. Values ``<= 0`` mean
    contact or overlap.
    """
    X = np.ascontiguousarray(X, dtype=float)
    cx, cy = ws.center
    return kernels.surface_distances(X, float(ws.R_w), float(ws.R_r), float(cx), float(cy), float(ws.pair_radii))


def min_clearance(X: np.ndarray, ws: Workspace) -> float:
    pair, wall = pairwise_distances(X, ws)
    return float(min(pair.min(), wall.min()))
