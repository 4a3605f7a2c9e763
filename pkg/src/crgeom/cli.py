"""Command-line interface: verify / optimize / report.

Exit codes: 0 all checks pass, 1 a check failed (or the optimizer missed
its target), 2 configuration or I/O error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace
from typing import List, Optional

from .harness import (SUITES, ConfigError, RunConfig, VerificationReport,
                      config_from_dict, emit_report, run_check_suite,
                      run_optimize, _dump_json)

__all__ = ["main", "build_parser"]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="crgeom",
        description="Numerical verification of pseudohermitian curvature "
                    "identities, conformal transformation laws and the "
                    "sharp quotient on the CR sphere.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="JSON file mirroring the run "
                                        "config; flags override it")
        p.add_argument("--model", choices=("sphere", "heisenberg"))
        p.add_argument("--m", type=int)
        p.add_argument("--factor")
        p.add_argument("--points", type=int)
        p.add_argument("--seed", type=int)
        p.add_argument("--jet-order", type=int, dest="jet_order")
        p.add_argument("--tol", action="append", default=None,
                       metavar="CHECK=VALUE",
                       help="tolerance override, repeatable")
        p.add_argument("--quad-radial", type=int, dest="quad_radial")
        p.add_argument("--quad-angle", type=int, dest="quad_angle")
        p.add_argument("--mc-count", type=int, dest="mc_count")
        p.add_argument("--basis-degree", type=int, dest="basis_degree")
        p.add_argument("--law-factors", type=int, dest="law_factors")
        p.add_argument("--starts", type=int, dest="opt_starts")
        p.add_argument("--max-iter", type=int, dest="opt_max_iter")
        p.add_argument("--workers", type=int)
        p.add_argument("--out", help="output path (verify/optimize) or "
                                     "path prefix (report)")

    pv = sub.add_parser("verify", help="run a check suite")
    add_common(pv)
    pv.add_argument("--suite", choices=SUITES, default="all")
    pv.add_argument("--format", choices=("json", "csv-summary"),
                    default="json")

    po = sub.add_parser("optimize", help="minimize the quotient and fit "
                                         "the terminal profile")
    add_common(po)

    pr = sub.add_parser("report", help="run a suite and write JSON, CSV "
                                       "and figures")
    add_common(pr)
    pr.add_argument("--suite", choices=SUITES, default="all")
    return parser


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig()
    if args.config:
        try:
            with open(args.config) as fh:
                data = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}")
        except json.JSONDecodeError as exc:
            raise ConfigError(f"malformed config file: {exc}")
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a JSON object")
        cfg = config_from_dict(data)
    overrides = {}
    for name in ("model", "m", "factor", "points", "seed", "jet_order",
                 "quad_radial", "quad_angle", "mc_count", "basis_degree",
                 "law_factors", "opt_starts", "opt_max_iter", "workers"):
        val = getattr(args, name, None)
        if val is not None:
            overrides[name] = val
    if getattr(args, "tol", None):
        tol = dict(cfg.tol)
        for item in args.tol:
            key, eq, val = item.partition("=")
            if not eq:
                raise ConfigError(f"--tol expects CHECK=VALUE, got {item!r}")
            try:
                tol[key] = float(val)
            except ValueError:
                raise ConfigError(f"--tol value {val!r} is not a number")
        overrides["tol"] = tol
    cfg = replace(cfg, **overrides)
    cfg.validate()
    return cfg


def _write_or_print(text: str, path: Optional[str]) -> None:
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _render_figures(report: VerificationReport, prefix: str) -> List[str]:
    """Residual overview (and descent curve when present) as PNG files."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    import numpy as np

    paths = []
    checks = [c for c in report.checks if c.verdict != "skipped-informational"]
    if checks:
        floor = 1e-18
        names = [c.id for c in checks]
        res = [max(c.max_residual, floor) for c in checks]
        tols = [max(c.tolerance, floor) for c in checks]
        fig, ax = plt.subplots(figsize=(10, 0.3 * len(names) + 1.5))
        y = np.arange(len(names))
        ax.barh(y, res, color=["tab:green" if c.verdict == "pass"
                               else "tab:red" for c in checks])
        ax.scatter(tols, y, marker="|", s=120, color="black",
                   label="tolerance")
        ax.set_yticks(y, names, fontsize=7)
        ax.set_xscale("log")
        ax.set_xlabel("max residual")
        ax.invert_yaxis()
        ax.legend(loc="lower right", fontsize=7)
        fig.tight_layout()
        path = prefix + "-residuals.png"
        fig.savefig(path, dpi=120, metadata={"Date": None})
        plt.close(fig)
        paths.append(path)

    trace = report.meta.get("extras", {}).get("minimizer_trace")
    if trace:
        sharp = report.meta.get("extras", {}).get("sharp_constant")
        fig, ax = plt.subplots(figsize=(6, 4))
        ax.plot(range(len(trace)), trace, marker=".", lw=1)
        if sharp:
            ax.axhline(sharp, color="gray", ls="--", lw=1)
        ax.set_xlabel("iteration")
        ax.set_ylabel("quotient")
        fig.tight_layout()
        path = prefix + "-descent.png"
        fig.savefig(path, dpi=120, metadata={"Date": None})
        plt.close(fig)
        paths.append(path)
    return paths


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _config_from_args(args)
        if args.command == "verify":
            report = run_check_suite(cfg, args.suite)
            _write_or_print(emit_report(report, None, args.format), args.out)
            return 0 if report.verdict == "pass" else 1
        if args.command == "optimize":
            summary = run_optimize(cfg)
            _write_or_print(_dump_json(summary) + "\n", args.out)
            return 0 if summary["success"] else 1
        if args.command == "report":
            report = run_check_suite(cfg, args.suite)
            prefix = args.out or "crgeom-report"
            emit_report(report, prefix + ".json", "json")
            emit_report(report, prefix + ".csv", "csv-summary")
            figures = _render_figures(report, prefix)
            sys.stdout.write(_dump_json({
                "verdict": report.verdict,
                "json": prefix + ".json",
                "csv": prefix + ".csv",
                "figures": figures,
            }) + "\n")
            return 0 if report.verdict == "pass" else 1
        raise ConfigError(f"unknown command {args.command!r}")
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
