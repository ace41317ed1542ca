"""Online estimation of the surrogate parameter matrix ``theta`` (q x p).

The model is ``y(k) = theta.T @ zeta(k)``. :class:`RLSEstimator` runs the
normalized least-squares recursion with a periodic reset of the gain
matrix; :class:`GradientEstimator` is the normalized gradient alternative;
:func:`batch_ls` is the closed-form minimizer of the same regularized cost
and serves as an oracle for the recursion when resets are off.

Checkpoints
-----------
:func:`save_checkpoint` writes one or more estimators to a little-endian
binary file::

    b"KBCKPT01"            8-byte magic
    int64 n_records
    repeated n_records times:
        int64   q
        int64   p
        float64 theta[q*p]   (row-major)
        float64 P[q*q]       (row-major)
        int64   step
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from . import kernels

MAGIC = b"KBCKPT01"


@dataclass
class ErrorRecord:
    eps: np.ndarray  # theta(k).T zeta - y
    eps_a: np.ndarray  # theta(k+1).T zeta - y
    prediction: np.ndarray  # theta(k).T zeta

    @property
    def eps_norm(self) -> float:
        return float(np.linalg.norm(self.eps))

    @property
    def eps_a_norm(self) -> float:
        return float(np.linalg.norm(self.eps_a))


def _as_gain(value, q: int) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        return float(arr) * np.eye(q)
    if arr.shape != (q, q):
        raise ValueError(f"gain matrix must be {q}x{q}, got {arr.shape}")
    return arr.copy()


def _check_sample(zeta, y, q, p):
    zeta = np.ascontiguousarray(zeta, dtype=float).ravel()
    y = np.ascontiguousarray(y, dtype=float).ravel()
    if zeta.size != q or y.size != p:
        raise ValueError(f"expected regressor of length {q} and output of length {p}, got {zeta.size} and {y.size}")
    if not (np.all(np.isfinite(zeta)) and np.all(np.isfinite(y))):
        raise ValueError("regressor and output must be finite")
    return zeta, y


class RLSEstimator:
    """Normalized recursive least squares with periodic gain reset.

    After every update the step counter is incremented; whenever it is a
    multiple of ``reset_interval`` the gain matrix returns to ``P0``.
    ``reset_interval=None`` (or 0) disables resets.
    """

    def __init__(self, q, p, rho=1e-4, P0=100.0, theta0=None, reset_interval=None):
        if not rho > 0:
            raise ValueError(f"rho must be positive, got {rho}")
        self.q, self.p = int(q), int(p)
        self.rho = float(rho)
        self.P0 = _as_gain(P0, self.q)
        self.theta0 = np.zeros((self.q, self.p)) if theta0 is None else np.array(theta0, dtype=float).reshape(self.q, self.p)
        self.reset_interval = int(reset_interval) if reset_interval else None
        self.theta = self.theta0.copy()
        self.P = self.P0.copy()
        self.step = 0

    def predict(self, zeta) -> np.ndarray:
        return self.theta.T @ np.asarray(zeta, dtype=float)

    def update(self, zeta, y) -> ErrorRecord:
        zeta, y = _check_sample(zeta, y, self.q, self.p)
        prediction = self.theta.T @ zeta
        eps, m2 = kernels.rls_update(self.theta, self.P, zeta, y, self.rho)
        assert m2 > 0
        eps_a = self.theta.T @ zeta - y
        self.step += 1
        if self.reset_interval and self.step % self.reset_interval == 0:
            self.P[...] = self.P0
        return ErrorRecord(np.asarray(eps), eps_a, prediction)

    def copy(self) -> "RLSEstimator":
        out = RLSEstimator.__new__(RLSEstimator)
        out.__dict__.update({k: (v.copy() if isinstance(v, np.ndarray) else v) for k, v in self.__dict__.items()})
        return out


class GradientEstimator:
    """Normalized gradient law ``theta -= Gamma zeta eps.T / (rho + zeta.T zeta)``."""

    def __init__(self, q, p, gamma=1.0, rho=1e-4, theta0=None, reset_interval=None):
        if not rho > 0:
            raise ValueError(f"rho must be positive, got {rho}")
        self.q, self.p = int(q), int(p)
        self.rho = float(rho)
        G = _as_gain(gamma, self.q)
        if not np.allclose(G, G.T, rtol=0, atol=1e-12):
            raise ValueError("Gamma must be symmetric")
        ev = np.linalg.eigvalsh(G)
        if ev.min() <= 0 or ev.max() >= 2:
            raise ValueError(f"Gamma eigenvalues must lie in (0, 2), got [{ev.min():.3g}, {ev.max():.3g}]")
        self.gamma = G
        self._scalar_gain = float(G[0, 0]) if np.array_equal(G, G[0, 0] * np.eye(self.q)) else None
        self.theta0 = np.zeros((self.q, self.p)) if theta0 is None else np.array(theta0, dtype=float).reshape(self.q, self.p)
        self.theta = self.theta0.copy()
        # accepted for interface parity with RLSEstimator; there is no gain matrix to reset
        self.reset_interval = reset_interval
        self.step = 0

    def predict(self, zeta) -> np.ndarray:
        return self.theta.T @ np.asarray(zeta, dtype=float)

    def update(self, zeta, y) -> ErrorRecord:
        zeta, y = _check_sample(zeta, y, self.q, self.p)
        prediction = self.theta.T @ zeta
        eps = prediction - y
        m2 = self.rho + zeta @ zeta
        Gz = self._scalar_gain * zeta if self._scalar_gain is not None else self.gamma @ zeta
        self.theta -= np.outer(Gz, eps) / m2
        self.step += 1
        return ErrorRecord(eps, self.theta.T @ zeta - y, prediction)

    def copy(self) -> "GradientEstimator":
        out = GradientEstimator.__new__(GradientEstimator)
        out.__dict__.update({k: (v.copy() if isinstance(v, np.ndarray) else v) for k, v in self.__dict__.items()})
        return out


def batch_ls(zetas, ys, theta0, P0, rho) -> np.ndarray:
    """Minimizer of the regularized squared-error cost.

    ``0.5/rho * sum |theta.T zeta - y|^2 + 0.5 tr[(theta - theta0).T P0^-1 (theta - theta0)]``
    """
    theta0 = np.asarray(theta0, dtype=float)
    q = theta0.shape[0]
    P0 = _as_gain(P0, q)
    Z = np.asarray(zetas, dtype=float).reshape(-1, q)
    Y = np.asarray(ys, dtype=float).reshape(Z.shape[0], theta0.shape[1])
    P0inv = np.linalg.inv(P0)
    lhs = P0inv + Z.T @ Z / rho
    rhs = P0inv @ theta0 + Z.T @ Y / rho
    return np.linalg.solve(lhs, rhs)


def save_checkpoint(path, estimators: Iterable) -> None:
    estimators = list(estimators)
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<q", len(estimators)))
        for est in estimators:
            P = getattr(est, "P", None)
            if P is None:
                P = np.zeros((est.q, est.q))
            fh.write(struct.pack("<qq", est.q, est.p))
            fh.write(np.ascontiguousarray(est.theta, dtype="<f8").tobytes())
            fh.write(np.ascontiguousarray(P, dtype="<f8").tobytes())
            fh.write(struct.pack("<q", est.step))


def load_checkpoint(path) -> list[tuple[np.ndarray, np.ndarray, int]]:
    """Read ``(theta, P, step)`` records written by :func:`save_checkpoint`."""
    data = Path(path).read_bytes()
    if data[:8] != MAGIC:
        raise ValueError(f"{path}: not a koopbots checkpoint")
    (n,) = struct.unpack_from("<q", data, 8)
    pos, out = 16, []
    for _ in range(n):
        q, p = struct.unpack_from("<qq", data, pos)
        pos += 16
        theta = np.frombuffer(data, dtype="<f8", count=q * p, offset=pos).reshape(q, p).astype(float)
        pos += 8 * q * p
        P = np.frombuffer(data, dtype="<f8", count=q * q, offset=pos).reshape(q, q).astype(float)
        pos += 8 * q * q
        (step,) = struct.unpack_from("<q", data, pos)
        pos += 8
        out.append((theta, P, int(step)))
    if pos != len(data):
        raise ValueError(f"{path}: {len(data) - pos} trailing bytes")
    return out


def restore(est, record) -> None:
    """Load a ``(theta, P, step)`` record into an existing estimator."""
    theta, P, step = record
    if theta.shape != (est.q, est.p):
        raise ValueError(f"checkpoint theta {theta.shape} does not fit estimator ({est.q}, {est.p})")
    est.theta = theta.copy()
    if hasattr(est, "P"):
        est.P = P.copy()
    est.step = step
