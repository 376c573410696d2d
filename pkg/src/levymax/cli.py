"""Command-line entry point.

Every command writes ``report.json`` and ``run_meta.json`` (plus CSV samples
for some commands) into ``--out``. Outputs are assembled in memory and only
written once the command has finished, so a failing run leaves no files.

Exit codes: 0 when every check passes, 1 when any check fails, 2 on a
configuration error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

from . import __version__, lindley
from .errors import ConfigError, LevyMaxError
from .inspection import InspectionParams, sample_inspected_walks
from .models import Side, model_from_config
from .paths import sample_continuous_pairs
from .rng import RngStream
from .stats import TestReport
from .transforms import (
    frullani_check,
    joint_lst_continuous,
    joint_lst_inspected,
    moments_continuous,
    moments_from_lst,
    moments_inspected,
    printed_cross_moment_sp,
)
from .verify import ACCEPTANCE, Scenario, calibration_report, run_acceptance, run_scenarios

__all__ = ["RunConfig", "run", "main", "build_parser"]

COMMANDS = ("simulate", "verify", "moments", "lindley", "transforms", "calibrate")

# option name -> default, per command; config files may set exactly these keys
OPTIONS: dict[str, dict[str, Any]] = {
    "simulate": {"model": "sp_cl", "beta": 1.0, "omega": 1.0, "n": 10_000, "what": "both", "cells": 256},
    "verify": {"suite": None, "only": None, "scenarios": None},
    "moments": {"model": "sp_cl", "side": None, "beta": 1.0, "omega": 1.0},
    "lindley": {"x": None, "x_prime": None, "flags": None},
    "transforms": {"model": "sp_cl", "side": None, "beta": 1.0, "omega": 1.0, "alpha": 0.5, "gamma": 0.5},
    "calibrate": {"replications": 200, "tests": None},
}
COMMON = {"seed": 42, "threads": 1, "out": "."}


@dataclass
class RunConfig:
    command: str
    options: dict[str, Any] = field(default_factory=dict)
    output_dir: Path = Path(".")
    seed: int = 42
    threads: int = 1

    def hash(self) -> str:
        """Digest of everything that affects results (threads and paths excluded)."""
        payload = json.dumps({"command": self.command, "seed": self.seed, "options": self.options},
                             sort_keys=True, default=str)
        return hashlib.sha256(payload.encode()).hexdigest()


@dataclass
class Outputs:
    report: Any
    csv_files: dict[str, tuple[list[str], list[Sequence[Any]]]] = field(default_factory=dict)
    passed: bool = True


def _fmt(v: Any) -> str:
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def _csv_text(header: list[str], rows: list[Sequence[Any]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _dump(obj: Any) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n"


def _side(model, side: str | None) -> Side:
    if side is not None:
        try:
            return Side(side)
        except ValueError:
            raise ConfigError(f"side must be SP or SN, got {side!r}") from None
    # Brownian models are both; the SN route is the one with closed-form marginals
    return Side.SN if model.spectrally_negative else Side.SP


def _floats(text: Any, name: str) -> list[float] | None:
    if text is None:
        return None
    try:
        if isinstance(text, str):
            return [float(t) for t in text.split(",") if t.strip()]
        return [float(t) for t in text]
    except (TypeError, ValueError):
        raise ConfigError(f"{name} must be a comma-separated list of numbers") from None


def _reports_payload(cfg: RunConfig, reports: list[TestReport]) -> dict[str, Any]:
    return {
        "command": cfg.command,
        "seed": cfg.seed,
        "all_passed": all(r.passed for r in reports),
        "reports": [r.to_dict() for r in reports],
    }


# ---------------------------------------------------------------- commands


def _simulate(cfg: RunConfig) -> Outputs:
    o = cfg.options
    model = model_from_config(o["model"])
    params = InspectionParams(float(o["beta"]), float(o["omega"]))
    n = int(o["n"])
    if n < 1:
        raise ConfigError("n must be positive")
    what = o["what"]
    if what not in ("both", "continuous", "inspected"):
        raise ConfigError("what must be one of both, continuous, inspected")
    files: dict[str, tuple[list[str], list[Sequence[Any]]]] = {}
    summary: dict[str, Any] = {}
    if what in ("both", "continuous"):
        batch = sample_continuous_pairs(model, params.beta, n, RngStream(cfg.seed, 0), int(o["cells"]), cfg.threads)
        files["samples_continuous.csv"] = (
            ["max", "argmax_time", "terminal", "horizon"],
            list(zip(batch.max_value, batch.argmax_time, batch.terminal_value, batch.horizon)),
        )
        summary["continuous"] = {"mean_max": float(batch.max_value.mean()), "mean_argmax": float(batch.argmax_time.mean())}
    if what in ("both", "inspected"):
        walks = sample_inspected_walks(model, params, n, RngStream(cfg.seed, 1), threads=cfg.threads)
        files["samples_inspected.csv"] = (
            ["count", "max", "argmax_index", "argmax_epoch", "terminal", "final_epoch"],
            list(zip(walks.count, walks.max_value, walks.argmax_index, walks.argmax_epoch, walks.terminal, walks.final_epoch)),
        )
        summary["inspected"] = {"mean_max": float(walks.max_value.mean()), "mean_argmax": float(walks.argmax_epoch.mean()),
                                "mean_count": float(walks.count.mean())}
    report = {"command": "simulate", "seed": cfg.seed, "model": model.to_dict(), "beta": params.beta,
              "omega": params.omega, "n": n, "summary": summary}
    return Outputs(report, files)


def _verify(cfg: RunConfig) -> Outputs:
    o = cfg.options
    if o["scenarios"]:
        items = []
        for entry in o["scenarios"]:
            if not isinstance(entry, Mapping) or "check" not in entry:
                raise ConfigError("each scenario needs a 'check' field")
            seed = entry.get("seed", cfg.seed)
            items.append((str(entry["check"]), Scenario.from_dict(entry, seed=seed)))
        reports = run_scenarios(items, cfg.threads)
    elif o["suite"] == "acceptance":
        only = o["only"]
        if isinstance(only, str):
            only = [s for s in only.split(",") if s]
        reports = run_acceptance(cfg.seed, cfg.threads, only)
    else:
        raise ConfigError("verify needs --suite acceptance or a config with scenarios")
    payload = _reports_payload(cfg, reports)
    return Outputs(payload, passed=payload["all_passed"])


def _moments(cfg: RunConfig) -> Outputs:
    o = cfg.options
    model = model_from_config(o["model"])
    side = _side(model, o["side"])
    beta, omega = float(o["beta"]), float(o["omega"])
    report: dict[str, Any] = {
        "command": "moments",
        "seed": cfg.seed,
        "model": model.to_dict(),
        "side": side.value,
        "beta": beta,
        "omega": omega,
        "moments": moments_inspected(model, side, beta, omega).to_dict(),
        "continuous": moments_continuous(model, side, beta).to_dict(),
        "finite_difference": moments_from_lst(model, side, beta, omega).to_dict(),
    }
    if side is Side.SP:
        report["cross_moment_as_printed"] = printed_cross_moment_sp(model, beta, omega)
    return Outputs(report)


def _lindley(cfg: RunConfig) -> Outputs:
    o = cfg.options
    x = _floats(o["x"], "x")
    if not x:
        raise ConfigError("lindley needs a nonempty --x sequence")
    xp = _floats(o["x_prime"], "x_prime")
    flags = _floats(o["flags"], "flags")
    w = lindley.lindley_run(x)
    closed = [lindley.lindley_closed_form(x, k) for k in range(1, len(x) + 1)]
    header = ["n", "x", "w", "closed_form"]
    cols: list[list[Any]] = [list(range(1, len(x) + 1)), x, w, closed]
    report: dict[str, Any] = {"command": "lindley", "seed": cfg.seed, "w": w, "closed_form": closed,
                              "identity_holds": w == closed}
    if flags is not None:
        killed = lindley.killed_lindley_run(x, [int(f) for f in flags])
        header.append("killed_w")
        cols.append(killed)
        report["killed"] = killed
    if xp is not None:
        states = lindley.two_dim_run(x, xp)
        m, k, mp = lindley.two_dim_closed_form(x, xp, len(x))
        header += ["x_prime", "w2", "w2_prime"]
        cols += [xp, [s.w for s in states], [s.w_prime for s in states]]
        report["two_dim"] = {"states": [[s.w, s.w_prime] for s in states], "max": m, "last_argmax": k,
                             "second_at_argmax": mp}
    return Outputs(report, {"samples_lindley.csv": (header, list(zip(*cols)))}, passed=report["identity_holds"])


def _transforms(cfg: RunConfig) -> Outputs:
    o = cfg.options
    model = model_from_config(o["model"])
    side = _side(model, o["side"])
    beta, omega = float(o["beta"]), float(o["omega"])
    alpha, gamma = float(o["alpha"]), float(o["gamma"])
    inspected = joint_lst_inspected(model, side, beta, omega, alpha, gamma)
    cont = joint_lst_continuous(model, side, beta, alpha, gamma)
    cont_far = joint_lst_continuous(model, side, beta + omega, alpha, gamma)
    frullani = frullani_check(beta, omega)
    report = {
        "command": "transforms",
        "seed": cfg.seed,
        "model": model.to_dict(),
        "side": side.value,
        "beta": beta,
        "omega": omega,
        "alpha": alpha,
        "gamma": gamma,
        "lst_inspected": inspected,
        "lst_continuous": cont,
        "lst_continuous_far": cont_far,
        "factorization_relative_error": abs(cont - cont_far * inspected) / abs(cont),
        "frullani": {"quadrature": frullani.quadrature, "closed_form": frullani.closed_form},
    }
    ok = report["factorization_relative_error"] <= 1e-10 and frullani.difference <= 1e-8
    return Outputs(report, passed=ok)


def _calibrate(cfg: RunConfig) -> Outputs:
    o = cfg.options
    tests = o["tests"]
    if isinstance(tests, str):
        tests = [t for t in tests.split(",") if t]
    reps = int(o["replications"])
    if reps < 1:
        raise ConfigError("replications must be positive")
    try:
        report = calibration_report(cfg.seed, reps, tests)
    except KeyError as exc:
        raise ConfigError(f"unknown calibration test {exc}") from None
    payload = _reports_payload(cfg, [report])
    return Outputs(payload, passed=payload["all_passed"])


HANDLERS = {
    "simulate": _simulate,
    "verify": _verify,
    "moments": _moments,
    "lindley": _lindley,
    "transforms": _transforms,
    "calibrate": _calibrate,
}


def run(config: RunConfig) -> int:
    """Execute one command and write its outputs; returns the exit code."""
    try:
        if config.command not in HANDLERS:
            raise ConfigError(f"unknown command {config.command!r}")
        if config.threads < 1:
            raise ConfigError("threads must be at least 1")
        outputs = HANDLERS[config.command](config)
    except (LevyMaxError, ValueError, TypeError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    meta = {
        "version": __version__,
        "command": config.command,
        "seed": config.seed,
        "threads": config.threads,
        "config_hash": config.hash(),
    }
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name, (header, rows) in outputs.csv_files.items():
        (out / name).write_text(_csv_text(header, rows))
    (out / "report.json").write_text(_dump(outputs.report))
    (out / "run_meta.json").write_text(_dump(meta))
    if isinstance(outputs.report, dict) and "reports" in outputs.report:
        for r in outputs.report["reports"]:
            print(f"{'PASS' if r['passed'] else 'FAIL'}  {r['test_name']}")
    else:
        print(_dump(outputs.report), end="")
    return 0 if outputs.passed else 1


# ---------------------------------------------------------------- argument parsing


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file; flags given on the command line take precedence")
    common.add_argument("--seed", type=int, help="unsigned 64-bit seed (default 42)")
    common.add_argument("--threads", type=int, help="worker threads (default 1); results do not depend on it")
    common.add_argument("--out", help="output directory (default .)")

    parser = argparse.ArgumentParser(prog="levymax", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"levymax {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common], help="sample continuous and inspected extrema to CSV")
    p.add_argument("--model", help="preset name (sp_cl, sn_cl, sn_bm, bm0)")
    p.add_argument("--beta", type=float)
    p.add_argument("--omega", type=float)
    p.add_argument("--n", type=int)
    p.add_argument("--what", choices=["both", "continuous", "inspected"])
    p.add_argument("--cells", type=int, help="grid cells per Brownian path")

    p = sub.add_parser("verify", parents=[common], help="run verification scenarios")
    p.add_argument("--suite", choices=["acceptance"])
    p.add_argument("--only", help=f"comma-separated subset of: {','.join(sorted(ACCEPTANCE))}")

    for name, help_ in (("moments", "closed-form moments of (max, last argmax)"),
                        ("transforms", "joint transforms, factorization and Frullani check")):
        p = sub.add_parser(name, parents=[common], help=help_)
        p.add_argument("--model")
        p.add_argument("--side", choices=["SP", "SN"], help="default: SN when the model has no upward jumps")
        p.add_argument("--beta", type=float)
        p.add_argument("--omega", type=float)
        if name == "transforms":
            p.add_argument("--alpha", type=float)
            p.add_argument("--gamma", type=float)

    p = sub.add_parser("lindley", parents=[common], help="run Lindley recursions on a sequence")
    p.add_argument("--x", help="comma-separated increments")
    p.add_argument("--x-prime", dest="x_prime", help="comma-separated nonnegative second coordinates")
    p.add_argument("--flags", help="comma-separated 0/1 survival flags")

    p = sub.add_parser("calibrate", parents=[common], help="null rejection rates of the statistical tests")
    p.add_argument("--replications", type=int)
    p.add_argument("--tests", help="comma-separated subset of calibration tests")
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    """Merge defaults, the optional config file and explicit flags (in that order)."""
    command = args.command
    file_cfg: dict[str, Any] = {}
    if args.config:
        try:
            file_cfg = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(file_cfg, dict):
            raise ConfigError("config must be a JSON object")
        if file_cfg.get("command", command) != command:
            raise ConfigError(f"config is for command {file_cfg['command']!r}, not {command!r}")
        file_cfg = {k: v for k, v in file_cfg.items() if k != "command"}
        allowed = set(OPTIONS[command]) | set(COMMON)
        unknown = sorted(set(file_cfg) - allowed)
        if unknown:
            raise ConfigError(f"unknown config keys for {command}: {unknown}")
    merged = {**COMMON, **OPTIONS[command], **file_cfg}
    for key in list(OPTIONS[command]) + list(COMMON):
        val = getattr(args, key, None)
        if val is not None:
            merged[key] = val
    try:
        seed = int(merged.pop("seed"))
        threads = int(merged.pop("threads"))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"seed and threads must be integers: {exc}") from exc
    if not 0 <= seed < 2**64:
        raise ConfigError("seed must be an unsigned 64-bit integer")
    out = Path(str(merged.pop("out")))
    return RunConfig(command, merged, out, seed, threads)


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = config_from_args(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
