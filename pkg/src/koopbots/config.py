"""Run configuration: YAML in, validated dataclass out.

Every key is optional; an empty file yields the reference protocol
(dt 0.05, rho 1e-4, P0 = 100 I, 300 identification steps, 30 control
steps). Unknown keys are rejected so typos do not silently fall back to
defaults.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from .dynamics import N_ROBOTS, Workspace
from .utility import DEFAULT_COMPONENT_WEIGHTS, N_COMPONENTS, UtilityWeights

VARIANTS = ("linear", "bilinear", "decentralized-bilinear")
ESTIMATORS = ("rls", "gradient")
NEIGHBOR_MODES = ("self", "nearest")
DEFAULT_RESET = {"linear": 130, "bilinear": 75, "decentralized-bilinear": 75}


class ConfigError(ValueError):
    """Raised with a ``field: message`` description."""

    def __init__(self, field_name: str, message: str):
        self.field = field_name
        super().__init__(f"{field_name}: {message}")


@dataclass
class RunConfig:
    variant: str = "bilinear"
    estimator: str = "rls"
    gamma: float = 1.0  # gradient law gain, scalar multiple of I
    dt: float = 0.05
    rho: float = 1e-4
    p0_scale: float = 100.0
    reset_interval: int | None = None  # None -> per-variant default; 0 disables
    k_s: int = 300
    k_c: int = 30
    R_w: float = 11.0
    R_r: float = 2.0
    center: tuple[float, float] = (0.0, 0.0)
    pair_radii: int = 2
    lower: float = -4.0
    upper: float = 3.0
    omega: list = field(default_factory=lambda: list(DEFAULT_COMPONENT_WEIGHTS))
    w: list = field(default_factory=lambda: list(DEFAULT_COMPONENT_WEIGHTS))
    case: str = "I"
    arrival_tolerance: float = 0.5
    stop_on_arrival: bool = True
    neighbor_state: str = "self"
    seed: int = 0
    out: str = "results"

    def __post_init__(self):
        self.validate()

    # -- validation ------------------------------------------------------
    def validate(self) -> None:
        if self.variant not in VARIANTS:
            raise ConfigError("variant", f"must be one of {VARIANTS}, got {self.variant!r}")
        if self.estimator not in ESTIMATORS:
            raise ConfigError("estimator", f"must be one of {ESTIMATORS}, got {self.estimator!r}")
        if self.neighbor_state not in NEIGHBOR_MODES:
            raise ConfigError("neighbor_state", f"must be one of {NEIGHBOR_MODES}, got {self.neighbor_state!r}")
        for name in ("dt", "rho", "p0_scale", "R_w", "R_r", "arrival_tolerance"):
            v = getattr(self, name)
            if not isinstance(v, (int, float)) or isinstance(v, bool) or not np.isfinite(v) or v <= 0:
                raise ConfigError(name, f"must be a positive number, got {v!r}")
        if not 0 < self.gamma < 2:
            raise ConfigError("gamma", f"must lie in (0, 2), got {self.gamma!r}")
        if self.R_w <= self.R_r:
            raise ConfigError("R_w", f"must exceed R_r={self.R_r}, got {self.R_w}")
        for name in ("k_s", "k_c"):
            v = getattr(self, name)
            if not isinstance(v, int) or isinstance(v, bool) or v < 0:
                raise ConfigError(name, f"must be a non-negative integer, got {v!r}")
        if self.reset_interval is not None and (not isinstance(self.reset_interval, int) or self.reset_interval < 0):
            raise ConfigError("reset_interval", f"must be a non-negative integer or null, got {self.reset_interval!r}")
        if self.pair_radii not in (1, 2):
            raise ConfigError("pair_radii", f"must be 1 or 2, got {self.pair_radii!r}")
        if not self.lower < self.upper:
            raise ConfigError("lower", f"must be below upper={self.upper}, got {self.lower}")
        if len(tuple(self.center)) != 2:
            raise ConfigError("center", "needs two coordinates")
        self.center = tuple(float(c) for c in self.center)
        for name in ("omega", "w"):
            try:
                arr = np.asarray(getattr(self, name), dtype=float)
            except (TypeError, ValueError) as exc:
                raise ConfigError(name, f"not numeric ({exc})") from None
            if arr.size not in (N_COMPONENTS, N_ROBOTS * N_COMPONENTS) or not np.all(np.isfinite(arr)):
                raise ConfigError(name, f"needs 6 or 18 finite numbers, got {arr.size}")
        if not isinstance(self.seed, int):
            raise ConfigError("seed", f"must be an integer, got {self.seed!r}")
        self.case = str(self.case)

    # -- derived ---------------------------------------------------------
    @property
    def decentralized(self) -> bool:
        return self.variant == "decentralized-bilinear"

    @property
    def resolved_reset(self) -> int | None:
        r = DEFAULT_RESET[self.variant] if self.reset_interval is None else self.reset_interval
        return r or None

    def workspace(self) -> Workspace:
        return Workspace(R_w=self.R_w, R_r=self.R_r, center=self.center, dt=self.dt, pair_radii=self.pair_radii)

    def weights(self) -> UtilityWeights:
        om = np.asarray(self.omega, dtype=float)
        w = np.asarray(self.w, dtype=float)
        if om.size == N_COMPONENTS:
            om = np.tile(om, (N_ROBOTS, 1))
        if w.size == N_COMPONENTS:
            w = np.tile(w, N_ROBOTS)
        return UtilityWeights(omega=om, w=w)

    def to_dict(self) -> dict[str, Any]:
        d = dataclasses.asdict(self)
        d["center"] = list(self.center)
        d["omega"] = [float(v) for v in np.ravel(self.omega)]
        d["w"] = [float(v) for v in np.ravel(self.w)]
        return d

    def digest(self) -> str:
        return hashlib.sha256(json.dumps(self.to_dict(), sort_keys=True).encode()).hexdigest()[:16]

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)


FIELDS = {f.name for f in dataclasses.fields(RunConfig)}


def config_from_dict(data: dict | None) -> RunConfig:
    data = dict(data or {})
    unknown = sorted(set(data) - FIELDS)
    if unknown:
        raise ConfigError(unknown[0], "unknown key")
    return RunConfig(**data)


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError("<file>", f"cannot read {path}: {exc.strerror}") from None
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError("<file>", f"parse error in {path}: {exc}") from None
    if data is not None and not isinstance(data, dict):
        raise ConfigError("<file>", "top level must be a mapping")
    return config_from_dict(data)
