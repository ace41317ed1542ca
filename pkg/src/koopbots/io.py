"""Result files: trajectory table, summary, checkpoint and plot data.

A result bundle is a directory holding

``trajectory.csv``
    64 columns, one row per step (see :data:`TRAJECTORY_COLUMNS`).
``summary.json``
    metrics, control outcome and the full config used.
``checkpoint.bin``
    estimator state, layout in :mod:`koopbots.estimation`.
``theta_norm.csv``
    ``k, phase, theta_norm`` series behind the parameter-norm plot.

Numbers are written with ``%.17g`` and a fixed ``.`` decimal point so
they re-read bit-identically regardless of locale.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .dynamics import N_ROBOTS
from .estimation import save_checkpoint
from .harness import TrajectoryLog

_R = range(1, N_ROBOTS + 1)
_C = range(1, 7)

TRAJECTORY_COLUMNS = (
    ["k", "phase"]
    + [f"{a}{i}" for i in _R for a in ("x", "y")]
    + [f"{a}{i}" for i in _R for a in ("vx", "vy")]
    + [f"{a}{i}" for i in _R for a in ("ax", "ay")]
    + [f"z2_{i}_{j}" for i in _R for j in _C]
    + [f"z2hat_{i}_{j}" for i in _R for j in _C]
    + ["eps_norm", "eps_a_norm"]
    + [f"pair{i}" for i in _R]
    + [f"wall{i}" for i in _R]
)
assert len(TRAJECTORY_COLUMNS) == 64

TRAJECTORY_FILE = "trajectory.csv"
SUMMARY_FILE = "summary.json"
CHECKPOINT_FILE = "checkpoint.bin"
THETA_FILE = "theta_norm.csv"


def fmt(x) -> str:
    return "%.17g" % x


def write_trajectory(log: TrajectoryLog, path) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(TRAJECTORY_COLUMNS)
        for j in range(len(log)):
            nums = np.concatenate(
                [log.X[j], log.U[j], log.z2[j], log.z2_hat[j], [log.eps_norm[j], log.eps_a_norm[j]], log.dist[j]]
            )
            wr.writerow([log.k[j], log.phase[j]] + [fmt(v) for v in nums])


def read_trajectory(path) -> dict[str, np.ndarray]:
    """Column name -> array (``phase`` as strings, ``k`` as ints)."""
    with open(path, newline="") as fh:
        rd = csv.reader(fh)
        header = next(rd)
        if header != TRAJECTORY_COLUMNS:
            raise ValueError(f"{path}: unexpected header")
        rows = list(rd)
    cols = list(zip(*rows)) if rows else [()] * len(header)
    out = {}
    for name, vals in zip(header, cols):
        if name == "phase":
            out[name] = np.asarray(vals, dtype=str)
        elif name == "k":
            out[name] = np.asarray(vals, dtype=np.int64)
        else:
            out[name] = np.asarray(vals, dtype=float)
    return out


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    return obj


def write_summary(summary: dict, path) -> None:
    Path(path).write_text(json.dumps(_jsonable(summary), indent=2, sort_keys=True) + "\n")


def write_bundle(out_dir, log: TrajectoryLog, summary: dict, estimators=None) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_trajectory(log, out / TRAJECTORY_FILE)
    with open(out / THETA_FILE, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["k", "phase", "theta_norm"])
        for k, ph, t in zip(log.k, log.phase, log.theta_norm):
            wr.writerow([k, ph, fmt(t)])
    doc = dict(summary)
    doc.setdefault("meta", {k: v for k, v in log.meta.items()})
    write_summary(doc, out / SUMMARY_FILE)
    if estimators is not None:
        save_checkpoint(out / CHECKPOINT_FILE, estimators)
    return out


# ---------------------------------------------------------------------------
# plot data
# ---------------------------------------------------------------------------

PLOT_KINDS = ("errors", "params", "trajectory")


def _write_rows(path, header, rows):
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(header)
        wr.writerows(rows)


def export_plot_data(bundle_dir, which: str = "all", dest=None) -> list[Path]:
    """Write plot-ready tables from a bundle; returns the files written.

    ``errors_<phase>.csv``   k, eps_norm, eps_a_norm
    ``params.csv``           k, phase, theta_norm
    ``trajectory_xy.csv``    kind (path|start|target), robot, k, x, y
    """
    bundle = Path(bundle_dir)
    dest = Path(dest) if dest else bundle / "plots"
    dest.mkdir(parents=True, exist_ok=True)
    kinds = PLOT_KINDS if which == "all" else (which,)
    bad = [k for k in kinds if k not in PLOT_KINDS]
    if bad:
        raise ValueError(f"unknown plot kind {bad[0]!r}; choose from {PLOT_KINDS + ('all',)}")
    tr = read_trajectory(bundle / TRAJECTORY_FILE)
    written = []
    if "errors" in kinds:
        for phase in dict.fromkeys(tr["phase"].tolist()):
            sel = tr["phase"] == phase
            path = dest / f"errors_{phase}.csv"
            _write_rows(
                path,
                ["k", "eps_norm", "eps_a_norm"],
                [[k, fmt(a), fmt(b)] for k, a, b in zip(tr["k"][sel], tr["eps_norm"][sel], tr["eps_a_norm"][sel])],
            )
            written.append(path)
    if "params" in kinds:
        src = bundle / THETA_FILE
        path = dest / "params.csv"
        path.write_text(src.read_text())
        written.append(path)
    if "trajectory" in kinds:
        meta = json.loads((bundle / SUMMARY_FILE).read_text()).get("meta", {})
        phase = "control" if "control" in tr["phase"] else "identify"
        sel = tr["phase"] == phase
        start = np.asarray(meta.get("start" if phase == "control" else "phase1_start"), dtype=float).reshape(N_ROBOTS, 2)
        targets = np.asarray(meta.get("targets" if phase == "control" else "phase1_targets"), dtype=float).reshape(N_ROBOTS, 2)
        rows = []
        for i in range(N_ROBOTS):
            rows.append(["start", i + 1, "", fmt(start[i, 0]), fmt(start[i, 1])])
            rows.append(["target", i + 1, "", fmt(targets[i, 0]), fmt(targets[i, 1])])
            for k, x, y in zip(tr["k"][sel], tr[f"x{i + 1}"][sel], tr[f"y{i + 1}"][sel]):
                rows.append(["path", i + 1, k, fmt(x), fmt(y)])
        path = dest / "trajectory_xy.csv"
        _write_rows(path, ["kind", "robot", "k", "x", "y"], rows)
        written.append(path)
    return written
