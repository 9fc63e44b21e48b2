"""Command-line entry point.

    dephwork run|sweep|check --config PATH [--output-dir DIR] [--bins WIDTH]

Exit codes: 0 success, 2 invalid configuration or model, 3 an invariant check
failed. ``DEPHWORK_WORKERS`` sets the number of sweep workers (default: all
cores).
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from .config import ConfigError, Scenario, load_toml, sweep_points, validate
from .dynamics import StepSizeError
from .models import BudgetError, DephasingModel
from .operators import NonHermitianError
from .runner import RunResult, build_model, check_scenario, run_scenario
from .strong_coupling import NumericalBreakdown
from .work import InvariantViolation

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_CHECK_FAILED = 3

WORKERS_ENV = "DEPHWORK_WORKERS"


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _workers() -> int:
    val = os.environ.get(WORKERS_ENV)
    if val is None:
        return os.cpu_count() or 1
    try:
        n = int(val)
    except ValueError:
        raise ConfigError(WORKERS_ENV, f"expected an integer, got {val!r}") from None
    return max(1, n)


def _prepare(raw: dict) -> tuple[Scenario, DephasingModel]:
    """Validate a raw config and build its model; every failure is a ConfigError."""
    sc = validate(raw)
    try:
        model = build_model(sc)
    except NonHermitianError as exc:
        raise ConfigError("model", f"Hermiticity violated: {exc}") from exc
    except (BudgetError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError("model", str(exc)) from exc
    return sc, model


def write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n")


def write_outputs(result: RunResult, sc: Scenario, out_dir: Path, bins: float | None) -> list[Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    h = sc.digest
    written = []
    p = out_dir / f"report_{h}.json"
    write_json(p, result.report)
    written.append(p)
    if result.distribution is not None:
        p = out_dir / f"distribution_{h}.csv"
        with p.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["w", "probability"])
            for x, q in zip(result.distribution.values, result.distribution.probs):
                w.writerow([_fmt(x), _fmt(q)])
        written.append(p)
        if bins is not None:
            edges, mass = result.distribution.histogram(bins)
            p = out_dir / f"histogram_{h}.csv"
            with p.open("w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["w_left", "w_right", "probability"])
                for e, q in zip(edges, mass):
                    w.writerow([_fmt(e), _fmt(e + bins), _fmt(q)])
            written.append(p)
    if result.decoherence is not None:
        p = out_dir / f"decoherence_{h}.csv"
        d_s = result.report["dimensions"]["system"]
        header = ["t"] + [f"Gamma_{n}_{m}" for n in range(d_s) for m in range(n + 1, d_s)]
        with p.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in result.decoherence:
                w.writerow([_fmt(x) for x in row])
        written.append(p)
    return written


def _summary(result: RunResult) -> str:
    th = result.report["thermo"]
    lines = [
        f"<w>                 = {th['mean_work']:.12g}",
        f"<exp(-beta w)>      = {th['exp_beta_work']:.12g}",
        f"dF                  = {th['delta_F']:.12g}",
        f"intermediate bound  = {th['intermediate_bound']:.12g}",
        f"<w_irr>             = {th['irreversible_work']:.12g}",
    ]
    if "closed_form_mean_work" in th:
        lines.append(f"closed-form <w>     = {th['closed_form_mean_work']:.12g}")
    lines += [c.line() for c in result.checks]
    return "\n".join(lines)


def cmd_run(args) -> int:
    sc, model = _prepare(load_toml(args.config))
    t0 = time.perf_counter()
    result = run_scenario(sc, model)
    elapsed = time.perf_counter() - t0
    files = write_outputs(result, sc, Path(args.output_dir), args.bins)
    print(_summary(result))
    for f in files:
        print(f"wrote {f}")
    print(f"wall time {elapsed:.3f} s")
    return EXIT_OK if result.passed else EXIT_CHECK_FAILED


def cmd_sweep(args) -> int:
    base = validate(load_toml(args.config))
    if base.sweep is None:
        raise ConfigError("sweep", "config has no [sweep] section")
    # fail fast: every point must validate before anything runs
    prepared = [_prepare(raw) for raw in sweep_points(base)]
    out_dir = Path(args.output_dir)
    t0 = time.perf_counter()
    with ThreadPoolExecutor(max_workers=_workers()) as pool:
        results = list(pool.map(lambda p: run_scenario(*p), prepared))
    elapsed = time.perf_counter() - t0

    rows = []
    for value, (sc, _), res in zip(base.sweep["values"], prepared, results):
        write_outputs(res, sc, out_dir, args.bins)
        th = res.report["thermo"]
        jz = res.report["jarzynski"]
        jres = max([jz["global_residual"]] + jz["block_residuals"]) if isinstance(jz, dict) else float("nan")
        rows.append([value, th["mean_work"], th["intermediate_bound"], th["gap_work_bound"], jres])
        status = "PASS" if res.passed else "FAIL"
        print(f"{status}  {base.sweep['parameter']}={value}  <w>={th['mean_work']:.12g}  "
              f"gap={th['gap_work_bound']:.6e}  jarzynski_residual={jres:.3e}")
    table = out_dir / f"sweep_{base.digest}.csv"
    with table.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["value", "mean_work", "bound", "gap", "jarzynski_residual"])
        for r in rows:
            w.writerow([r[0]] + [_fmt(x) for x in r[1:]])
    print(f"wrote {table}")
    print(f"wall time {elapsed:.3f} s")
    return EXIT_OK if all(r.passed for r in results) else EXIT_CHECK_FAILED


def cmd_check(args) -> int:
    sc, model = _prepare(load_toml(args.config))
    checks = check_scenario(sc, model)
    for c in checks:
        print(c.line())
    return EXIT_OK if all(c.passed for c in checks) else EXIT_CHECK_FAILED


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dephwork",
                                description="Work statistics of pure-dephasing quenches.")
    sub = p.add_subparsers(dest="command", required=True)
    for name, helptext in [("run", "run one scenario"),
                           ("sweep", "run a parameter sweep"),
                           ("check", "run the invariant suite on a small model")]:
        s = sub.add_parser(name, help=helptext)
        s.add_argument("--config", required=True, help="scenario TOML file")
        s.add_argument("--output-dir", default=".", help="directory for output files")
        s.add_argument("--bins", type=float, default=None,
                       help="also write a histogram with this bin width")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.bins is not None and args.bins <= 0:
        print("error: --bins must be positive", file=sys.stderr)
        return EXIT_INVALID
    handler = {"run": cmd_run, "sweep": cmd_sweep, "check": cmd_check}[args.command]
    try:
        return handler(args)
    except ConfigError as exc:
        print(f"error: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (InvariantViolation, StepSizeError, NumericalBreakdown) as exc:
        print(f"error: check failed: {exc}", file=sys.stderr)
        return EXIT_CHECK_FAILED


if __name__ == "__main__":
    sys.exit(main())
