"""Command-line harness.

    mfl-sim <subcommand> --config <path> [--out <path>] [--deterministic] [--unsafe-h]

Subcommands: simulate, stationary-error, poc, weak-order, strong-order,
variation-decay, assumptions-check.  Exit codes: 0 success, 2 config error,
3 numerical failure (non-convergence or instability at runtime).
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from . import harness
from .harness import ConfigError, EXPERIMENT_KINDS
from .integrators import NumericalError, UnstableTimestepError
from .model import ModelError, check_assumptions
from .stationary import ConvergenceError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mfl-sim",
        description="Mean-field Langevin particle experiments")
    sub = parser.add_subparsers(dest="kind", required=True)
    for kind in EXPERIMENT_KINDS:
        p = sub.add_parser(kind, help=f"run the {kind} experiment")
        p.add_argument("--config", required=True, help="path to a key = value config file")
        p.add_argument("--out", default=None, help="CSV output path (overrides out.path)")
        p.add_argument("--deterministic", action="store_true",
                       help="force fixed-order reductions (single-threaded runs "
                            "are already order-fixed; this records the intent)")
        p.add_argument("--unsafe-h", action="store_true",
                       help="allow timesteps beyond the stability bound")
    return parser


def _report_slopes(name: str, slopes: dict) -> None:
    for key, fit in sorted(slopes.items(), key=str):
        if isinstance(fit, tuple):
            slope = fit[0]
            extra = f" (r2={fit[2]:.4f})" if len(fit) > 2 else ""
        else:
            slope, extra = fit, ""
        print(f"{name} {key}: slope {slope:.4f}{extra}")


def run(kind: str, cfg, out_path: str | None) -> int:
    model = harness.build_model_from_config(cfg)
    report = check_assumptions(model)
    for warning in report.warnings:
        print(f"warning: {warning}", file=sys.stderr)

    out = out_path or (cfg.out_path or None)
    if kind == "assumptions-check":
        print(f"lam > 0: {'pass' if report.lam_positive else 'FAIL'}")
        print(f"0 <= hess(V) <= k_v on grid: {'pass' if report.hess_v_bounded else 'FAIL'}")
        print(f"lam >= 7 k_v: {'pass' if report.convexity_dominates else 'warn'}")
        return EXIT_OK
    if kind == "simulate":
        rows = harness.run_simulate(cfg, model)
        if out:
            harness.emit_trace_csv(rows, out)
        last = rows[-1]
        print(f"final: mean={last['mean']:.6g} m2={last['m2']:.6g} m4={last['m4']:.6g}")
    elif kind == "stationary-error":
        reports = harness.run_stationary_error(cfg, model)
        if out:
            harness.emit_csv(reports, out)
        for r in reports[-len(cfg.sim_scheme):]:
            print(f"{r.scheme} h={r.h:g}: entropy={r.entropy_error:.6g} l2={r.l2_error:.6g}")
    elif kind == "poc":
        result = harness.run_poc(cfg, model)
        if out:
            harness.emit_poc_csv(result, out)
        _report_slopes("poc l2 vs N", result.l2_slopes)
    elif kind == "weak-order":
        result = harness.run_weak_order(cfg, model)
        if out:
            harness.emit_weak_order_csv(result, out)
        _report_slopes("weak error vs h", result.slopes)
    elif kind == "strong-order":
        result = harness.run_strong_order(cfg, model)
        if out:
            harness.emit_strong_order_csv(result, out)
        _report_slopes("strong error vs h", result.slopes)
    elif kind == "variation-decay":
        result = harness.run_variation_decay(cfg, model)
        if out:
            harness.emit_variation_csv(result, out)
        for s in result.summaries:
            print(f"N={s.n}: column rate {s.column_rate:.4f}, "
                  f"offdiag rate {s.offdiag_rate:.4f}")
        if result.offdiag_n_power is not None:
            print(f"offdiag sum N-power: {result.offdiag_n_power:.4f}")
    else:  # pragma: no cover - argparse restricts kinds
        raise ConfigError(f"unknown experiment kind '{kind}'")
    if out:
        print(f"wrote {out}")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        text = Path(args.config).read_text(encoding="utf-8")
    except OSError as exc:
        print(f"config error: cannot read {args.config}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = harness.parse_config(text, args.kind)
        cfg = replace(cfg, deterministic=args.deterministic,
                      unsafe_h=args.unsafe_h or cfg.unsafe_h)
        return run(args.kind, cfg, args.out)
    except (ConfigError, ModelError, UnstableTimestepError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ConvergenceError, NumericalError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    raise SystemExit(main())
