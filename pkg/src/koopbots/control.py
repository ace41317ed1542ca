"""One-step utility-maximizing control over a box.

Every surrogate model is affine in the input, so ``w.T z2_hat(k+1)`` is
``offset + c.T U`` and its maximizer over a box sits on a corner chosen
by the signs of ``c``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .koopman import CENTRAL, LINEAR_SIZE, LOCAL, Layout, ReferencePoint, _second_order


@dataclass(frozen=True)
class BoxBounds:
    lower: float = -4.0
    upper: float = 3.0

    def __post_init__(self):
        if not self.lower < self.upper:
            raise ValueError(f"box needs lower < upper, got [{self.lower}, {self.upper}]")


@dataclass
class ControlProblem:
    """Maximize ``offset + c @ U`` over the box."""

    c: np.ndarray
    offset: float
    source: str

    def value(self, U) -> float:
        return float(self.offset + self.c @ np.asarray(U, dtype=float))


def linearize_objective_linear(theta, z1, z2, w) -> ControlProblem:
    theta = np.asarray(theta, dtype=float)
    if theta.shape[0] != LINEAR_SIZE:
        raise ValueError(f"linear model needs {LINEAR_SIZE} rows, got {theta.shape[0]}")
    tw = theta @ np.asarray(w, dtype=float)
    z = np.concatenate([np.asarray(z1, float), np.asarray(z2, float)])
    n = z.size
    return ControlProblem(c=tw[n:], offset=float(tw[:n] @ z), source="linear:B2")


def _linearize_second_order(theta, d1, d2, w, layout: Layout, source: str) -> ControlProblem:
    theta = np.asarray(theta, dtype=float)
    if theta.shape[0] != layout.size:
        raise ValueError(f"model needs {layout.size} rows, got {theta.shape[0]}")
    tw = theta @ np.asarray(w, dtype=float)
    sl = layout.slices
    d1 = np.asarray(d1, dtype=float)
    d2 = np.asarray(d2, dtype=float)
    c = (
        tw[sl["u"]]
        + tw[sl["g4"]].reshape(layout.m, layout.n1) @ d1
        + tw[sl["g5"]].reshape(layout.m, layout.n2) @ d2
    )
    # everything that survives at U = 0
    offset = float(tw @ _second_order(d1, d2, np.zeros(layout.m), layout))
    return ControlProblem(c=c, offset=offset, source=source)


def linearize_objective_bilinear(theta, z1, z2, ref: ReferencePoint, w) -> ControlProblem:
    d1 = np.asarray(z1, float) - ref.z1
    d2 = np.asarray(z2, float) - ref.z2
    return _linearize_second_order(theta, d1, d2, w, CENTRAL, "bilinear:B2+Phi4+Phi5")


def solve_box_lp(problem: ControlProblem, bounds: BoxBounds = BoxBounds()) -> np.ndarray:
    """Sign rule: upper bound where ``c > 0``, lower where ``c < 0``, 0 on ties."""
    c = np.asarray(problem.c, dtype=float)
    if not np.all(np.isfinite(c)):
        raise ValueError("objective coefficients must be finite")
    return np.where(c > 0, bounds.upper, np.where(c < 0, bounds.lower, 0.0))


def solve_box_lp_enumerate(problem: ControlProblem, bounds: BoxBounds = BoxBounds()) -> np.ndarray:
    """Brute-force maximizer over all box corners (reference for tests)."""
    c = np.asarray(problem.c, dtype=float)
    best, best_val = None, -np.inf
    for corner in itertools.product((bounds.lower, bounds.upper), repeat=c.size):
        v = c @ np.asarray(corner)
        if v > best_val:
            best, best_val = np.asarray(corner, dtype=float), v
    return best


def decentralized_control(i, theta_i, z1_i, z2_i, ref_i: ReferencePoint, w_i, bounds: BoxBounds = BoxBounds()):
    """Robot ``i``'s 2-dim input from its own 109-row model.

    ``ref_i`` is the per-robot reference (``ReferencePoint.robot(i)``).
    """
    d1 = np.asarray(z1_i, float) - ref_i.z1
    d2 = np.asarray(z2_i, float) - ref_i.z2
    prob = _linearize_second_order(theta_i, d1, d2, w_i, LOCAL, f"decentralized[{i}]")
    return solve_box_lp(prob, bounds)
