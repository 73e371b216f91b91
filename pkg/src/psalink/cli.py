"""Command-line entry point: ``psalink <subcommand> [options]``.

On failure the last stderr line is a JSON object
``{"error": <category>, "message": ...}`` and the exit code identifies the
category (see :mod:`psalink.errors`).
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from dataclasses import replace

from . import __version__
from .config import load_config
from .errors import AcceptanceError, ConfigurationError, FittingError, PsaLinkError, UsageError
from .harness import (
    DEFAULT_SIGNAL_VALUES,
    FIGURES,
    PsaState,
    SweepAxis,
    SweepSpec,
    emit_outputs,
    run_figure,
    run_rf_power_sweep,
    run_signal_power_sweep,
    run_theta_scan,
)

log = logging.getLogger("psalink")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: {message}")


def _common(p: argparse.ArgumentParser, suppress: bool) -> None:
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    p.add_argument("--config", default=d(None), help="TOML config (defaults fill missing keys)")
    p.add_argument("--out", default=d("out"), help="output directory (default: ./out)")
    p.add_argument("--steps", type=int, default=d(None), metavar="N",
                   help="fixed number of z-steps (disables auto-convergence)")
    p.add_argument("--converge", type=float, default=d(None), metavar="DB",
                   help="auto-converge the step count to this gain tolerance in dB")
    p.add_argument("--jobs", type=int, default=d(1), metavar="N", help="parallel sweep points")
    p.add_argument("-v", "--verbose", action="count", default=d(0))


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="psalink", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"psalink {__version__}")
    _common(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("rf-sweep", help="fundamental/IMD3 RF powers vs input RF power")
    _common(p, suppress=True)
    p.add_argument("--signal-power", type=float, help="combined signal+idler input power (dBm)")

    p = sub.add_parser("signal-sweep", help="tone powers and gains vs input signal power")
    _common(p, suppress=True)
    p.add_argument("--rf-power", type=float, help="per-tone input RF power (dBm)")

    p = sub.add_parser("theta-scan", help="signal gain vs relative phase Theta")
    _common(p, suppress=True)
    p.add_argument("--points", type=int, default=16, help="number of Theta values over [0, 2pi)")

    p = sub.add_parser("validate", help="run the acceptance criteria")
    _common(p, suppress=True)
    p.add_argument("--only", type=int, nargs="+", metavar="K", help="criterion numbers to run")

    p = sub.add_parser("fig", help="named figure recipe")
    _common(p, suppress=True)
    p.add_argument("name", choices=sorted(FIGURES))
    return parser


def _config(args, name: str):
    cfg = load_config(args.config, name=name)
    if args.steps is not None and args.converge is not None:
        raise ConfigurationError("--steps and --converge are mutually exclusive")
    if args.steps is not None:
        if args.steps < 1:
            raise ConfigurationError("--steps must be >= 1")
        cfg = cfg.with_(steps=replace(cfg.steps, n_steps=args.steps), auto_steps=False)
    if args.converge is not None:
        cfg = cfg.with_(steps=replace(cfg.steps, convergence_db=args.converge), auto_steps=True)
    if args.jobs < 1:
        raise ConfigurationError("--jobs must be >= 1")
    return cfg


def _sfdr_summary(result, cfg) -> dict:
    out = {}
    for state in ("off", "on"):
        try:
            out[f"sfdr_{state}"] = result.sfdr(state, cfg.detector.rf_load).as_dict()
        except (FittingError, ConfigurationError) as exc:
            out[f"sfdr_{state}"] = {"error": exc.category, "message": str(exc)}
    return out


def _print_paths(paths) -> None:
    for kind, path in paths.items():
        print(f"{kind}: {path}")


def cmd_rf_sweep(args) -> int:
    cfg = _config(args, "rf_sweep")
    if args.signal_power is not None:
        cfg = cfg.with_(plan=cfg.plan.with_(combined_signal_idler_power_dbm=args.signal_power))
    if cfg.sweep.axis is not SweepAxis.INPUT_RF_POWER:
        cfg = cfg.with_(sweep=SweepSpec(SweepAxis.INPUT_RF_POWER, tuple(range(-10, 26)), cfg.sweep.psa_state))
    result = run_rf_power_sweep(cfg, jobs=args.jobs)
    extra = _sfdr_summary(result, cfg) if cfg.sweep.psa_state is PsaState.BOTH else None
    _print_paths(emit_outputs(result, cfg, args.out, extra=extra))
    return 0


def cmd_signal_sweep(args) -> int:
    cfg = _config(args, "signal_sweep")
    if args.rf_power is not None:
        cfg = cfg.with_(plan=cfg.plan.with_(modulator=cfg.plan.modulator.with_rf_power(args.rf_power)))
    if cfg.sweep.axis is not SweepAxis.INPUT_SIGNAL_POWER:
        cfg = cfg.with_(sweep=SweepSpec(SweepAxis.INPUT_SIGNAL_POWER, DEFAULT_SIGNAL_VALUES, cfg.sweep.psa_state))
    result = run_signal_power_sweep(cfg, jobs=args.jobs)
    _print_paths(emit_outputs(result, cfg, args.out))
    return 0


def cmd_theta_scan(args) -> int:
    cfg = _config(args, "theta_scan")
    if cfg.sweep.axis is SweepAxis.THETA:
        thetas = cfg.sweep.values
    else:
        if args.points < 3:
            raise ConfigurationError("--points must be >= 3")
        thetas = [2 * math.pi * k / args.points for k in range(args.points)]
    result = run_theta_scan(cfg, thetas, jobs=args.jobs)
    _print_paths(emit_outputs(result, cfg, args.out))
    print(f"theta_lock_rad: {result.theta_lock:.6f}  theta_analytic_rad: {result.theta_analytic:.6f}")
    return 0


def cmd_validate(args) -> int:
    from .acceptance import AcceptanceRun

    cfg = _config(args, "validate")
    run = AcceptanceRun(cfg, jobs=args.jobs, n_steps=None if cfg.auto_steps else cfg.steps.n_steps)
    results = run.run(args.only, on_result=lambda r: print(r.line(), flush=True))
    failed = [r.number for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} criteria passed")
    if failed:
        raise AcceptanceError(f"criteria failed: {failed}")
    return 0


def cmd_fig(args) -> int:
    cfg = _config(args, args.name)
    for label, paths in run_figure(args.name, cfg, args.out, jobs=args.jobs).items():
        print(f"[{label}]")
        _print_paths(paths)
    return 0


COMMANDS = {
    "rf-sweep": cmd_rf_sweep,
    "signal-sweep": cmd_signal_sweep,
    "theta-scan": cmd_theta_scan,
    "validate": cmd_validate,
    "fig": cmd_fig,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        level = logging.WARNING - 10 * min(args.verbose, 2)
        logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
        return COMMANDS[args.command](args)
    except PsaLinkError as exc:
        print(json.dumps({"error": exc.category, "message": str(exc)}), file=sys.stderr)
        return exc.exit_code
    except KeyboardInterrupt:
        print(json.dumps({"error": "interrupted", "message": "interrupted"}), file=sys.stderr)
        return 130


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
