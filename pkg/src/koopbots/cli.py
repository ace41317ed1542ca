"""Command-line entry point.

::

    koopbots identify [--config cfg.yaml] [--variant bilinear] [--out DIR]
    koopbots control  [--checkpoint DIR/checkpoint.bin] [--case I]
    koopbots case     --case I|II|...|all
    koopbots compare
    koopbots export   --out DIR [--which errors|params|trajectory|all]

The output directory is ``--out``, else ``$KOOPBOTS_OUT``, else the
config's ``out`` key. Exit status is 0 on success even when a robot
misses its target (that outcome is in ``summary.json``); 2 means a
config error and 3 an I/O error.
"""

from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
from pathlib import Path

from .config import ESTIMATORS, VARIANTS, ConfigError, RunConfig, load_config
from .estimation import load_checkpoint, restore
from .harness import Surrogate, case_table, compute_metrics, get_case, run_control, run_identification
from .io import export_plot_data, fmt, write_bundle, write_summary

ENV_OUT = "KOOPBOTS_OUT"
EXIT_CONFIG = 2
EXIT_IO = 3


def _config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    changes = {}
    for name in ("variant", "estimator", "seed", "case"):
        val = getattr(args, name, None)
        if val is not None:
            changes[name] = val
    return cfg.replace(**changes) if changes else cfg


def _out_dir(args, cfg: RunConfig) -> Path:
    return Path(args.out or os.environ.get(ENV_OUT) or cfg.out)


def _outcome_dict(o) -> dict:
    return {
        "case": o.case,
        "arrived": o.arrived,
        "arrival_step": o.arrival_step,
        "steps": o.steps,
        "terminal_distance": list(o.terminal_distance),
        "min_clearance": o.min_clearance,
        "seconds": o.seconds,
    }


def cmd_identify(args) -> int:
    cfg = _config(args)
    model, trace, _ = run_identification(cfg)
    summary = compute_metrics(trace, cfg.resolved_reset)
    out = write_bundle(_out_dir(args, cfg), trace, summary, model.estimators)
    ident = summary.get("identify", {})
    print(f"{cfg.variant}: max |eps_a| = {ident.get('max_eps_a')}  (k >= {ident.get('trim')}: {ident.get('max_eps_a_trimmed')})")
    print(f"wrote {out}")
    return 0


def _phase2(cfg: RunConfig, case: str, checkpoint=None):
    if checkpoint:
        model = Surrogate(cfg, get_case(cfg, case).targets)
        records = load_checkpoint(checkpoint)
        if len(records) != len(model.estimators):
            raise ConfigError("checkpoint", f"holds {len(records)} estimators, {cfg.variant} needs {len(model.estimators)}")
        for est, rec in zip(model.estimators, records):
            try:
                restore(est, rec)
            except ValueError as exc:
                raise ConfigError("checkpoint", str(exc)) from None
        trace, outcome = run_control(cfg, model, case)
    else:
        model, trace, _ = run_identification(cfg)
        trace, outcome = run_control(cfg, model, case, log_to=trace)
    summary = compute_metrics(trace, cfg.resolved_reset)
    summary["outcome"] = _outcome_dict(outcome)
    return model, trace, summary, outcome


def _report(outcome) -> str:
    d = ", ".join(f"{v:.3f}" for v in outcome.terminal_distance)
    state = "arrived" if outcome.arrived else "not arrived"
    return f"case {outcome.case}: {state} after {outcome.steps} steps; terminal distances [{d}] m; min clearance {outcome.min_clearance:.3f} m"


def cmd_control(args) -> int:
    cfg = _config(args)
    model, trace, summary, outcome = _phase2(cfg, cfg.case, args.checkpoint)
    out = write_bundle(_out_dir(args, cfg), trace, summary, model.estimators)
    print(_report(outcome))
    print(f"wrote {out}")
    return 0


def cmd_case(args) -> int:
    cfg = _config(args)
    names = list(case_table(cfg)) if str(cfg.case).lower() == "all" else [cfg.case]
    root = _out_dir(args, cfg)
    table = []
    for name in names:
        model, trace, summary, outcome = _phase2(cfg, name)
        dest = root / f"case_{outcome.case}" if len(names) > 1 else root
        write_bundle(dest, trace, summary, model.estimators)
        table.append(_outcome_dict(outcome))
        print(_report(outcome))
    if len(names) > 1:
        write_summary({"variant": cfg.variant, "cases": table}, root / "cases.json")
    print(f"wrote {root}")
    return 0


def cmd_compare(args) -> int:
    cfg = _config(args)
    root = _out_dir(args, cfg)
    root.mkdir(parents=True, exist_ok=True)
    rows = {}
    for variant in ("linear", "bilinear"):
        c = cfg.replace(variant=variant)
        model, trace, _ = run_identification(c)
        summary = compute_metrics(trace, c.resolved_reset)
        write_bundle(root / variant, trace, summary, model.estimators)
        rows[variant] = summary["identify"]
    # short runs have no trimmed range; fall back to the full one
    bil = rows["bilinear"]["max_eps_a_trimmed"] or rows["bilinear"]["max_eps_a"]
    ratio = rows["linear"]["max_eps_a"] / bil
    with open(root / "compare.csv", "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["variant", "max_eps_a", "max_eps_a_trimmed", "mean_eps_a"])
        for v, s in rows.items():
            trimmed = s["max_eps_a_trimmed"]
            wr.writerow([v, fmt(s["max_eps_a"]), "" if trimmed is None else fmt(trimmed), fmt(s["mean_eps_a"])])
    write_summary({"identify": rows, "ratio_linear_over_bilinear": ratio}, root / "compare.json")
    for v, s in rows.items():
        print(f"{v:9s} max |eps_a| = {s['max_eps_a']:.6g}")
    print(f"ratio linear/bilinear = {ratio:.1f}")
    print(f"wrote {root}")
    return 0


def cmd_export(args) -> int:
    bundle = Path(args.out or os.environ.get(ENV_OUT) or "results")
    files = export_plot_data(bundle, args.which, args.dest)
    for f in files:
        print(f)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="koopbots", description="Koopman utility surrogates for a three-robot team")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, case=False):
        p.add_argument("--config", help="YAML run configuration")
        p.add_argument("--out", help=f"output directory (overrides ${ENV_OUT} and the config)")
        p.add_argument("--seed", type=int)
        p.add_argument("--variant", choices=VARIANTS)
        p.add_argument("--estimator", choices=ESTIMATORS)
        if case:
            p.add_argument("--case", help="case id (I, II, ...); 'all' runs the whole table for `case`")
        return p

    common(sub.add_parser("identify", help="Phase I only")).set_defaults(func=cmd_identify)
    p = common(sub.add_parser("control", help="Phase I then Phase II (or Phase II from a checkpoint)"), case=True)
    p.add_argument("--checkpoint", help="resume from this checkpoint instead of rerunning Phase I")
    p.set_defaults(func=cmd_control)
    common(sub.add_parser("case", help="run one case or all cases"), case=True).set_defaults(func=cmd_case)
    common(sub.add_parser("compare", help="linear vs bilinear Phase I error table")).set_defaults(func=cmd_compare)
    p = sub.add_parser("export", help="plot-ready tables from a result bundle")
    p.add_argument("--out", help=f"bundle directory (default ${ENV_OUT} or ./results)")
    p.add_argument("--which", default="all", choices=("errors", "params", "trajectory", "all"))
    p.add_argument("--dest", help="where to write (default <bundle>/plots)")
    p.set_defaults(func=cmd_export)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except KeyError as exc:
        print(f"config error: {exc.args[0]}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
