"""Lifted states and regressors for the surrogate utility models.

Three regressor layouts are supported:

``linear`` (36)
    ``[X; z2; U]``
``bilinear`` (901)
    ``[d1; d2; U; 1; g1; g2; g3; g4; g5]`` with ``d1 = X - X0`` and
    ``d2 = z2 - z2_0`` taken about a reference point.
``decentralized`` (109)
    same pattern for one robot: ``d1`` is 4-dim, ``d2`` 6-dim, ``U`` 2-dim.

The second-order blocks stack scaled copies of a vector, row-major in the
scalar multiplier: ``g1 = [d1[0]*d1, d1[1]*d1, ...]``, ``g2 = [d1[l]*d2]``,
``g3 = [d2[l]*d2]``, ``g4 = [U[l]*d1]``, ``g5 = [U[l]*d2]``. Products
``U[a]*U[b]`` are deliberately absent, which keeps every prediction affine
in the input.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .dynamics import INPUT_DIM, N_ROBOTS, STATE_DIM, Workspace, make_state, robot_slice
from .utility import N_COMPONENTS, UTILITY_DIM, utility_vector


@dataclass(frozen=True)
class Layout:
    """Block offsets of a second-order regressor for dims ``(n1, n2, m)``."""

    n1: int
    n2: int
    m: int

    @property
    def sizes(self) -> dict[str, int]:
        n1, n2, m = self.n1, self.n2, self.m
        return {
            "d1": n1,
            "d2": n2,
            "u": m,
            "const": 1,
            "g1": n1 * n1,
            "g2": n1 * n2,
            "g3": n2 * n2,
            "g4": m * n1,
            "g5": m * n2,
        }

    @property
    def slices(self) -> dict[str, slice]:
        out, pos = {}, 0
        for name, size in self.sizes.items():
            out[name] = slice(pos, pos + size)
            pos += size
        return out

    @property
    def size(self) -> int:
        return sum(self.sizes.values())


CENTRAL = Layout(STATE_DIM, UTILITY_DIM, INPUT_DIM)
LOCAL = Layout(4, N_COMPONENTS, 2)
LINEAR_SIZE = STATE_DIM + UTILITY_DIM + INPUT_DIM

assert CENTRAL.size == 901 and LOCAL.size == 109


@dataclass(frozen=True)
class ReferencePoint:
    """Expansion point: robots parked on their targets at rest, ``U0 = 0``."""

    z1: np.ndarray
    z2: np.ndarray

    @property
    def u(self) -> np.ndarray:
        return np.zeros(INPUT_DIM)

    def robot(self, i: int) -> "ReferencePoint":
        return ReferencePoint(self.z1[robot_slice(i)], self.z2[N_COMPONENTS * i : N_COMPONENTS * (i + 1)])


def reference_point(targets, ws: Workspace) -> ReferencePoint:
    z1 = make_state(targets)
    return ReferencePoint(z1, utility_vector(z1, targets, ws))


def lift(X, targets, ws: Workspace) -> np.ndarray:
    """Full 30-dim lifted state ``[X; z2]``."""
    X = np.asarray(X, dtype=float)
    return np.concatenate([X, utility_vector(X, targets, ws)])


def regressor_linear(z1, z2, U) -> np.ndarray:
    return np.concatenate([np.asarray(z1, float), np.asarray(z2, float), np.asarray(U, float)])


def g_products(d1, d2, U):
    """Second-order feature blocks ``(g1, g2, g3, g4, g5)``."""
    d1, d2, U = (np.asarray(a, dtype=float).ravel() for a in (d1, d2, U))
    dims = (d1.size, d2.size, U.size)
    if dims not in ((CENTRAL.n1, CENTRAL.n2, CENTRAL.m), (LOCAL.n1, LOCAL.n2, LOCAL.m)):
        raise ValueError(f"unsupported block dimensions {dims}")
    return (
        np.outer(d1, d1).ravel(),
        np.outer(d1, d2).ravel(),
        np.outer(d2, d2).ravel(),
        np.outer(U, d1).ravel(),
        np.outer(U, d2).ravel(),
    )


def _second_order(d1, d2, U, layout: Layout) -> np.ndarray:
    d1 = np.ascontiguousarray(d1, dtype=float)
    d2 = np.ascontiguousarray(d2, dtype=float)
    U = np.ascontiguousarray(U, dtype=float)
    if (d1.size, d2.size, U.size) != (layout.n1, layout.n2, layout.m):
        raise ValueError(f"expected dims {(layout.n1, layout.n2, layout.m)}, got {(d1.size, d2.size, U.size)}")
    return kernels.bilinear_fill(d1, d2, U, np.empty(layout.size))


def regressor_bilinear(z1, z2, U, ref: ReferencePoint) -> np.ndarray:
    return _second_order(np.asarray(z1, float) - ref.z1, np.asarray(z2, float) - ref.z2, U, CENTRAL)


def regressor_decentralized(z1_s, z2_i, U_i, ref_i: ReferencePoint) -> np.ndarray:
    """Per-robot 109-dim regressor.

    ``z1_s`` is the 4-dim ``[x, y, vx, vy]`` block entering the state
    deviation; the harness passes robot ``i``'s own block unless configured
    otherwise. ``z2_i`` is robot ``i``'s six utility components, which
    already see the other robots through the neighbour penalty.
    """
    return _second_order(np.asarray(z1_s, float) - ref_i.z1, np.asarray(z2_i, float) - ref_i.z2, U_i, LOCAL)


def predict(theta: np.ndarray, zeta: np.ndarray) -> np.ndarray:
    """One-step prediction ``theta.T @ zeta``."""
    theta = np.asarray(theta, dtype=float)
    zeta = np.asarray(zeta, dtype=float)
    if theta.ndim != 2 or theta.shape[0] != zeta.size:
        raise ValueError(f"theta {theta.shape} does not match regressor of length {zeta.size}")
    return theta.T @ zeta


def robot_state_block(X, i: int) -> np.ndarray:
    return np.asarray(X, dtype=float)[robot_slice(i)]


def robot_utility_block(z2, i: int) -> np.ndarray:
    return np.asarray(z2, dtype=float)[N_COMPONENTS * i : N_COMPONENTS * (i + 1)]


__all__ = [
    "CENTRAL",
    "LOCAL",
    "LINEAR_SIZE",
    "N_ROBOTS",
    "Layout",
    "ReferencePoint",
    "g_products",
    "lift",
    "predict",
    "reference_point",
    "regressor_bilinear",
    "regressor_decentralized",
    "regressor_linear",
    "robot_state_block",
    "robot_utility_block",
]
