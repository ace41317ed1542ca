"""Two-phase experiment driver.

Phase I (identification) excites the team with fixed sinusoidal inputs
and fits the surrogate online. Phase II (control) moves the robots to a
case's start positions, retargets them, and closes the loop through the
one-step box maximizer while the estimator keeps adapting.

Log convention: row ``k`` holds the input ``U(k)`` applied at step ``k``
together with everything observed after it, i.e. ``X(k+1)``,
``z2(k+1)``, the prediction ``z2_hat(k+1)`` and the surface distances at
``X(k+1)``. Phase I rows are numbered ``k = 1..k_s``; Phase II continues
the count.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from . import dynamics
from .config import RunConfig
from .control import BoxBounds, decentralized_control, linearize_objective_bilinear, linearize_objective_linear, solve_box_lp
from .dynamics import N_ROBOTS, Workspace, make_state, pairwise_distances
from .estimation import GradientEstimator, RLSEstimator
from .koopman import (
    CENTRAL,
    LINEAR_SIZE,
    LOCAL,
    reference_point,
    regressor_bilinear,
    regressor_decentralized,
    regressor_linear,
    robot_state_block,
    robot_utility_block,
)
from .utility import N_COMPONENTS, UTILITY_DIM, utility_vector

log = logging.getLogger(__name__)

# probing signal: (amplitude, frequency in units of pi per step, sin/cos)
PROBING = (
    (2.0, 0.075, np.sin),
    (3.0, 0.1833, np.cos),
    (3.0, 0.14, np.sin),
    (3.0, 0.095, np.cos),
    (-2.0, 0.06, np.sin),
    (-3.0, 0.092, np.cos),
)


def probing_input(k: int) -> np.ndarray:
    """Excitation applied at identification step ``k`` (counted from 1)."""
    return np.array([a * fn(f * k * np.pi) for a, f, fn in PROBING])


@dataclass(frozen=True)
class CaseSpec:
    name: str
    start: np.ndarray  # (3, 2)
    targets: np.ndarray  # (3, 2)

    @classmethod
    def make(cls, name, start, targets):
        return cls(name, np.asarray(start, float).reshape(N_ROBOTS, 2), np.asarray(targets, float).reshape(N_ROBOTS, 2))


PHASE1 = CaseSpec.make("phase1", [(-7, 3), (0, 7), (7, -4)], [(-4.5, 0), (3, 4), (3, -4)])
PHASE1_DECENTRALIZED = CaseSpec.make("phase1", [(-8.5, -1), (0, 8.5), (8.5, 0)], [(-6.5, 0), (0, 6.5), (6.5, 0)])

CENTRAL_CASES = {
    "I": CaseSpec.make("I", [(-4.48, 3.3), (2.98, 7.11), (3.65, -5.70)], [(-4.5, 0), (3, 4), (3, -4)]),
    "II": CaseSpec.make("II", [(-3.1, 3.3), (4.9, 4.6), (0.9, -5)], [(-3, 0.5), (5, 2), (0.5, -3.5)]),
    "III": CaseSpec.make("III", [(7.5, 2.5), (-5.1, -2.5), (-5.2, 3.5)], [(7.5, 0), (-5, -5), (-5, 5)]),
    "IV": CaseSpec.make("IV", [(-3.1, -0.6), (0, 2.5), (4.8, 3)], [(-3.5, -3.5), (0.2, 0), (5.3, 5)]),
    "V": CaseSpec.make("V", [(-6.4, 5.3), (-2.5, 1.8), (3, -2.7)], [(-6, 2.4), (-2.5, -1.4), (2.5, -1.4)]),
}
DECENTRALIZED_CASES = {
    "I": CaseSpec.make("I", [(-2.5, 7.1), (2.7, 3.3), (-0.8, -3.5)], [(-3.5, 5), (3.5, 5), (0, -5.5)]),
    "II": CaseSpec.make("II", [(-6.5, -2.9), (1.7, 2.3), (2.4, -5.2)], [(-4.5, 0), (3, 4), (3, -4)]),
}


def case_table(cfg: RunConfig) -> dict[str, CaseSpec]:
    return DECENTRALIZED_CASES if cfg.decentralized else CENTRAL_CASES


def get_case(cfg: RunConfig, name: str | None = None) -> CaseSpec:
    name = str(name or cfg.case).upper()
    table = case_table(cfg)
    if name not in table:
        raise KeyError(f"unknown case {name!r} for {cfg.variant}; choose from {sorted(table)}")
    return table[name]


# ---------------------------------------------------------------------------
# recording
# ---------------------------------------------------------------------------


@dataclass
class TrajectoryLog:
    """Per-step record; see the module docstring for the row convention."""

    k: list = field(default_factory=list)
    phase: list = field(default_factory=list)
    X: list = field(default_factory=list)
    U: list = field(default_factory=list)
    z2: list = field(default_factory=list)
    z2_hat: list = field(default_factory=list)
    eps: list = field(default_factory=list)
    eps_a: list = field(default_factory=list)
    eps_norm: list = field(default_factory=list)
    eps_a_norm: list = field(default_factory=list)
    dist: list = field(default_factory=list)  # 3 robot-robot then 3 robot-wall
    theta_norm: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.k)

    def append(self, k, phase, X, U, z2, z2_hat, eps, eps_a, dist, theta_norm):
        self.k.append(int(k))
        self.phase.append(phase)
        self.X.append(np.array(X, dtype=float))
        self.U.append(np.array(U, dtype=float))
        self.z2.append(np.array(z2, dtype=float))
        self.z2_hat.append(np.array(z2_hat, dtype=float))
        self.eps.append(np.array(eps, dtype=float))
        self.eps_a.append(np.array(eps_a, dtype=float))
        self.eps_norm.append(float(np.linalg.norm(eps)))
        self.eps_a_norm.append(float(np.linalg.norm(eps_a)))
        self.dist.append(np.array(dist, dtype=float))
        self.theta_norm.append(float(theta_norm))

    def rows(self, phase: str | None = None) -> np.ndarray:
        idx = [j for j, p in enumerate(self.phase) if phase is None or p == phase]
        return np.asarray(idx, dtype=int)

    def array(self, name: str, phase: str | None = None) -> np.ndarray:
        idx = self.rows(phase)
        vals = getattr(self, name)
        return np.asarray([vals[j] for j in idx], dtype=float)


# ---------------------------------------------------------------------------
# surrogate bundle: estimators + regressor assembly + controller
# ---------------------------------------------------------------------------


class Surrogate:
    """The estimator(s) of one model variant plus the current reference point."""

    def __init__(self, cfg: RunConfig, targets):
        self.cfg = cfg
        self.ws = cfg.workspace()
        self.variant = cfg.variant
        if cfg.decentralized:
            q, p, n = LOCAL.size, N_COMPONENTS, N_ROBOTS
        elif cfg.variant == "bilinear":
            q, p, n = CENTRAL.size, UTILITY_DIM, 1
        else:
            q, p, n = LINEAR_SIZE, UTILITY_DIM, 1
        self.estimators = [self._make_estimator(q, p) for _ in range(n)]
        self.retarget(targets)

    def _make_estimator(self, q, p):
        cfg = self.cfg
        if cfg.estimator == "gradient":
            return GradientEstimator(q, p, gamma=cfg.gamma, rho=cfg.rho)
        return RLSEstimator(q, p, rho=cfg.rho, P0=cfg.p0_scale, reset_interval=cfg.resolved_reset)

    def retarget(self, targets) -> None:
        self.targets = np.asarray(targets, dtype=float).reshape(N_ROBOTS, 2)
        self.ref = reference_point(self.targets, self.ws)

    def utilities(self, X) -> np.ndarray:
        return utility_vector(X, self.targets, self.ws)

    def _state_source(self, X, i) -> np.ndarray:
        if self.cfg.neighbor_state == "self":
            return robot_state_block(X, i)
        pos = dynamics.positions(X)
        gaps = [np.inf if j == i else np.hypot(*(pos[i] - pos[j])) for j in range(N_ROBOTS)]
        return robot_state_block(X, int(np.argmin(gaps)))

    def regressors(self, X, z2, U) -> list[np.ndarray]:
        if self.variant == "linear":
            return [regressor_linear(X, z2, U)]
        if self.variant == "bilinear":
            return [regressor_bilinear(X, z2, U, self.ref)]
        return [
            regressor_decentralized(
                self._state_source(X, i), robot_utility_block(z2, i), U[2 * i : 2 * i + 2], self.ref.robot(i)
            )
            for i in range(N_ROBOTS)
        ]

    def update(self, zetas, z2_next):
        """Feed one sample to every estimator; returns stacked (prediction, eps, eps_a)."""
        if len(self.estimators) == 1:
            rec = self.estimators[0].update(zetas[0], z2_next)
            return rec.prediction, rec.eps, rec.eps_a
        recs = [est.update(zetas[i], robot_utility_block(z2_next, i)) for i, est in enumerate(self.estimators)]
        return tuple(np.concatenate([getattr(r, a) for r in recs]) for a in ("prediction", "eps", "eps_a"))

    def predict(self, zetas) -> np.ndarray:
        return np.concatenate([est.predict(z) for est, z in zip(self.estimators, zetas)])

    def control(self, X, z2, w, bounds: BoxBounds) -> np.ndarray:
        if self.variant == "linear":
            return solve_box_lp(linearize_objective_linear(self.estimators[0].theta, X, z2, w), bounds)
        if self.variant == "bilinear":
            return solve_box_lp(linearize_objective_bilinear(self.estimators[0].theta, X, z2, self.ref, w), bounds)
        U = np.empty(2 * N_ROBOTS)
        for i, est in enumerate(self.estimators):
            U[2 * i : 2 * i + 2] = decentralized_control(
                i,
                est.theta,
                self._state_source(X, i),
                robot_utility_block(z2, i),
                self.ref.robot(i),
                w[N_COMPONENTS * i : N_COMPONENTS * (i + 1)],
                bounds,
            )
        return U

    @property
    def theta_norm(self) -> float:
        return float(np.sqrt(sum(np.sum(e.theta**2) for e in self.estimators)))

    @property
    def step(self) -> int:
        return self.estimators[0].step


def _advance(model: Surrogate, X, U, ws: Workspace, learn: bool = True):
    z2 = model.utilities(X)
    zetas = model.regressors(X, z2, U)
    Xn = dynamics.step(X, U, ws)
    z2n = model.utilities(Xn)
    if learn:
        pred, eps, eps_a = model.update(zetas, z2n)
    else:
        pred = model.predict(zetas)
        eps = eps_a = pred - z2n
    pair, wall = pairwise_distances(Xn, ws)
    return Xn, z2n, pred, eps, eps_a, np.concatenate([pair, wall])


def run_identification(cfg: RunConfig, log_to: TrajectoryLog | None = None):
    """Phase I. Returns ``(surrogate, log, final_state)``."""
    spec = PHASE1_DECENTRALIZED if cfg.decentralized else PHASE1
    ws = cfg.workspace()
    model = Surrogate(cfg, spec.targets)
    out = log_to if log_to is not None else TrajectoryLog()
    out.meta.setdefault("config", cfg.to_dict())
    out.meta.setdefault("config_digest", cfg.digest())
    out.meta["phase1_start"] = spec.start.tolist()
    out.meta["phase1_targets"] = spec.targets.tolist()
    X = make_state(spec.start)
    t0 = time.perf_counter()
    for k in range(1, cfg.k_s + 1):
        U = probing_input(k)
        X, z2n, pred, eps, eps_a, dist = _advance(model, X, U, ws)
        if dist.min() <= 0:
            log.warning("contact during identification at step %d (min gap %.3f)", k, dist.min())
        out.append(k, "identify", X, U, z2n, pred, eps, eps_a, dist, model.theta_norm)
    out.meta["identify_seconds"] = time.perf_counter() - t0
    return model, out, X


@dataclass
class ControlOutcome:
    case: str
    arrived: bool
    arrival_step: int | None  # control steps taken when every robot was inside the tolerance
    steps: int
    terminal_distance: np.ndarray
    min_clearance: float
    seconds: float


def run_control(
    cfg: RunConfig,
    model: Surrogate,
    case: CaseSpec | str | None = None,
    log_to: TrajectoryLog | None = None,
    learn: bool = True,
):
    """Phase II on ``case``. Returns ``(log, outcome)``.

    Velocities restart at zero, the reference point moves to the new
    targets and the estimator keeps its step counter (reset grid continues).
    ``learn=False`` freezes the estimators; errors are still logged.
    """
    spec = case if isinstance(case, CaseSpec) else get_case(cfg, case)
    ws = cfg.workspace()
    bounds = BoxBounds(cfg.lower, cfg.upper)
    w = cfg.weights().w
    out = log_to if log_to is not None else TrajectoryLog()
    out.meta.setdefault("config", cfg.to_dict())
    out.meta.setdefault("config_digest", cfg.digest())
    out.meta["start"] = spec.start.tolist()
    out.meta["targets"] = spec.targets.tolist()
    model.retarget(spec.targets)
    X = make_state(spec.start)
    k0 = out.k[-1] if out.k else 0
    clearance = np.inf
    arrival = None
    taken = 0
    t0 = time.perf_counter()
    for j in range(1, cfg.k_c + 1):
        U = model.control(X, model.utilities(X), w, bounds)
        X, z2n, pred, eps, eps_a, dist = _advance(model, X, U, ws, learn)
        out.append(k0 + j, "control", X, U, z2n, pred, eps, eps_a, dist, model.theta_norm)
        clearance = min(clearance, float(dist.min()))
        taken = j
        reach = np.hypot(*(dynamics.positions(X) - spec.targets).T)
        if arrival is None and reach.max() < cfg.arrival_tolerance:
            arrival = j
            if cfg.stop_on_arrival:
                break
    seconds = time.perf_counter() - t0
    terminal = np.hypot(*(dynamics.positions(X) - spec.targets).T)
    outcome = ControlOutcome(
        case=spec.name,
        arrived=arrival is not None and clearance > 0,
        arrival_step=arrival,
        steps=taken,
        terminal_distance=terminal,
        min_clearance=clearance,
        seconds=seconds,
    )
    out.meta["control_seconds"] = seconds
    out.meta["case"] = spec.name
    return out, outcome


# ---------------------------------------------------------------------------
# summaries
# ---------------------------------------------------------------------------


def reset_windows(n: int, interval: int | None):
    """Row ranges ``[start, stop)`` between gain resets for ``n`` identification rows."""
    if not n:
        return []
    if not interval:
        return [(0, n)]
    edges = list(range(0, n, interval)) + [n]
    return [(a, b) for a, b in zip(edges[:-1], edges[1:])]


def compute_metrics(log: TrajectoryLog, reset_interval: int | None = None, trim: int = 30, edge: int = 10) -> dict:
    """Aggregate a log into a JSON-friendly summary.

    ``trim`` identification rows are skipped for the trimmed maximum;
    ``edge`` rows at each end of a reset window define its start and end
    levels for the growth ratio.
    """
    if not len(log):
        return {}
    out: dict = {}
    ident = log.rows("identify")
    if ident.size:
        ea = np.asarray(log.eps_a_norm)[ident]
        windows = []
        for a, b in reset_windows(ea.size, reset_interval):
            seg = ea[a:b]
            e = min(edge, seg.size)
            head, tail = float(seg[:e].max()), float(seg[-e:].max())
            windows.append(
                {
                    "start": int(log.k[ident[a]]),
                    "stop": int(log.k[ident[b - 1]]),
                    "max": float(seg.max()),
                    "mean": float(seg.mean()),
                    "head_max": head,
                    "tail_max": tail,
                    "growth": tail / head if head > 0 else float("inf"),
                }
            )
        out["identify"] = {
            "steps": int(ea.size),
            "max_eps_a": float(ea.max()),
            "mean_eps_a": float(ea.mean()),
            "max_eps_a_trimmed": float(ea[trim:].max()) if ea.size > trim else None,
            "trim": trim,
            "windows": windows,
            "min_clearance": float(np.asarray(log.dist)[ident].min()),
        }
    ctrl = log.rows("control")
    if ctrl.size:
        X = np.asarray(log.X)[ctrl]
        cfg = log.meta.get("config", {})
        targets = log.meta.get("targets")
        entry = {
            "steps": int(ctrl.size),
            "min_clearance": float(np.asarray(log.dist)[ctrl].min()),
            "max_eps_a": float(np.asarray(log.eps_a_norm)[ctrl].max()),
            "seconds": log.meta.get("control_seconds"),
            "case": log.meta.get("case"),
        }
        if targets is not None:
            t = np.asarray(targets, dtype=float).reshape(N_ROBOTS, 2)
            d = np.hypot(*(X[-1, :6].reshape(N_ROBOTS, 2) - t).T)
            tol = cfg.get("arrival_tolerance", 0.5)
            entry["terminal_distance"] = [float(v) for v in d]
            entry["arrived"] = bool(d.max() < tol and entry["min_clearance"] > 0)
        out["control"] = entry
    return out


def run_case(cfg: RunConfig, case: str | None = None):
    """Phase I followed by Phase II on one case, in a single log."""
    model, trace, _ = run_identification(cfg)
    trace, outcome = run_control(cfg, model, get_case(cfg, case), log_to=trace)
    return model, trace, outcome

