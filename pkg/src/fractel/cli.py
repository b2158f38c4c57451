"""Command-line entry point ``fractel``.

::

    fractel scenarios
    fractel run caputo-reference --out-dir out
    fractel run my.cfg --no-svg
    fractel compare caputo-reference riemann-liouville

Exit status is 0 on success, 1 for configuration errors and 2 when an
asserted invariant fails or the integration blows up.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from fractel.config import BUILTINS, DESCRIPTIONS, ConfigError, resolve
from fractel.experiment import COLUMNS, RunResult, run_scenario
from fractel.telegraph import SimulationError

log = logging.getLogger("fractel")

EXIT_OK, EXIT_CONFIG, EXIT_INVARIANT = 0, 1, 2


def worker_count(default: int = 2) -> int:
    """Worker cap from ``FRACTEL_THREADS`` (at least 1)."""
    raw = os.environ.get("FRACTEL_THREADS")
    if raw is None:
        return max(1, min(default, os.cpu_count() or 1))
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"FRACTEL_THREADS must be an integer, got {raw!r}") from None
    if n < 1:
        raise ConfigError(f"FRACTEL_THREADS must be at least 1, got {n}")
    return n


# {{{ output


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def write_csv(path: Path, columns: dict[str, np.ndarray]) -> None:
    names = list(columns)
    rows = zip(*(columns[n] for n in names))
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(names)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _report_lines(result: RunResult) -> list[str]:
    cfg, chain, stat = result.config, result.chain, result.stationary
    lines = [f"scenario {cfg.name}", "", "configuration:"]
    lines += ["  " + s for s in cfg.serialize().splitlines()]
    lines += [
        "",
        f"time step {result.trajectory.dt:.6g}, {len(result.trajectory)} records",
        f"stationary solve: value {stat.value:.12g}, |grad| {stat.el_residual:.3g}, "
        f"{stat.iterations} iterations",
        "",
        "constants (surrogated: " + ", ".join(chain.surrogated) + " -> C_hat):",
    ]
    lines += ["  " + n for n in chain.notes]
    lines += ["", "checks:"]
    for c in result.checks:
        kind = "asserted" if c.asserted else "reported"
        lines.append(f"  {'PASS' if c.passed else 'FAIL'} [{kind}] {c.name}: {c.detail}")
    return lines


def _report_json(result: RunResult) -> dict:
    chain = result.chain
    return {
        "scenario": result.config.name,
        "config": result.config.serialize(),
        "dt": result.trajectory.dt,
        "records": len(result.trajectory),
        "stationary": {
            "value": result.stationary.value,
            "el_residual": result.stationary.el_residual,
            "iterations": result.stationary.iterations,
            "converged": result.stationary.converged,
        },
        "constants": {
            k: getattr(chain, k)
            for k in ("C_hat", "theta0", "theta1", "theta2", "C_tilde", "C4", "Theta", "Theta_proof")
        },
        "surrogated": list(chain.surrogated),
        "fitted_exponent": result.report.fitted_exponent,
        "bound_exponent": result.report.bound_exponent,
        "checks": [
            {"name": c.name, "passed": c.passed, "asserted": c.asserted, "detail": c.detail}
            for c in result.checks
        ],
        "ok": result.ok,
    }


def write_outputs(result: RunResult, out_dir: Path, stem: str, svg: bool) -> list[Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = [out_dir / f"{stem}.csv", out_dir / f"{stem}_report.txt", out_dir / f"{stem}_report.json"]
    write_csv(paths[0], result.columns())
    paths[1].write_text("\n".join(_report_lines(result)) + "\n")
    paths[2].write_text(json.dumps(_report_json(result), indent=2, allow_nan=True) + "\n")
    if svg:
        from fractel import plots

        cols = {result.config.name: result.columns()}
        paths.append(out_dir / f"{stem}_decay.svg")
        plots.decay_plot(paths[-1], cols, result.config.t_min)
        paths.append(out_dir / f"{stem}_energy.svg")
        plots.energy_plot(paths[-1], cols)
    return paths


def difference_columns(a: RunResult, b: RunResult) -> tuple[dict[str, np.ndarray], float]:
    """Columns of ``a - b`` on the records of ``a`` and the space-time relative L2 difference.

    ``b`` is linearly interpolated in time when the record times differ;
    entries that agree exactly (including infinite bounds at t=0) give 0.
    """
    ta, tb = a.trajectory.times, b.trajectory.times
    ca, cb = a.columns(), b.columns()
    ua, ub = a.nodal_states(), b.nodal_states()
    if ua.shape[1] != ub.shape[1]:
        raise ConfigError("compared scenarios must use the same grid size N")
    keep = ta <= tb[-1] + 1e-12
    t = ta[keep]
    same_times = ta.shape == tb.shape and np.array_equal(ta, tb)

    def at_a(values):
        values = np.asarray(values)
        if same_times:
            return values[keep]
        if values.ndim == 1:
            return np.interp(t, tb, values)
        return np.stack([np.interp(t, tb, values[:, j]) for j in range(values.shape[1])], axis=1)

    out = {"t": t}
    for name in COLUMNS[1:]:
        x, y = ca[name][keep], at_a(cb[name])
        with np.errstate(invalid="ignore"):
            out[name] = np.where(x == y, 0.0, x - y)
    ref = at_a(ub)
    du = ua[keep] - ref
    w = a.setup.grid.weights
    err_sq, ref_sq = (du**2) @ w, (ref**2) @ w
    out["u_l2_diff"] = np.sqrt(err_sq)
    if t.size > 1:
        num, den = np.trapezoid(err_sq, t), np.trapezoid(ref_sq, t)
    else:
        num, den = float(err_sq.sum()), float(ref_sq.sum())
    rel = float(np.sqrt(num / den)) if den > 0 else (0.0 if num == 0 else float("inf"))
    return out, rel


# }}}


# {{{ commands


def _run_one(spec: str):
    cfg = resolve(spec)
    return run_scenario(cfg)


def cmd_scenarios(args) -> int:
    for name in BUILTINS:
        print(f"{name:20s} {DESCRIPTIONS[name]}")
    return EXIT_OK


def _summary(result: RunResult, quiet: bool) -> None:
    if quiet:
        return
    for c in result.checks:
        print(f"{result.config.name}: {'PASS' if c.passed else 'FAIL'} {c.name}: {c.detail}")


def cmd_run(args) -> int:
    result = _run_one(args.config)
    paths = write_outputs(result, Path(args.out_dir), result.config.name, not args.no_svg)
    _summary(result, args.quiet)
    if not args.quiet:
        for p in paths:
            print(f"wrote {p}")
    return EXIT_OK if result.ok else EXIT_INVARIANT


def cmd_compare(args) -> int:
    with ThreadPoolExecutor(max_workers=min(2, worker_count())) as pool:
        a, b = pool.map(_run_one, [args.config_a, args.config_b])
    out = Path(args.out_dir)
    stem = f"{a.config.name}-vs-{b.config.name}"
    paths = write_outputs(a, out, f"{stem}_a", svg=False)
    paths += write_outputs(b, out, f"{stem}_b", svg=False)
    diff, rel = difference_columns(a, b)
    paths.append(out / f"{stem}_diff.csv")
    write_csv(paths[-1], diff)
    if not args.no_svg:
        from fractel import plots

        cols = {f"a ({a.config.name})": a.columns(), f"b ({b.config.name})": b.columns()}
        paths.append(out / f"{stem}_decay.svg")
        plots.decay_plot(paths[-1], cols, a.config.t_min)
        paths.append(out / f"{stem}_energy.svg")
        plots.energy_plot(paths[-1], cols)
    line = f"relative space-time L2 difference of u: {rel:.6g}"
    (out / f"{stem}_report.txt").write_text(line + "\n")
    paths.append(out / f"{stem}_report.txt")
    _summary(a, args.quiet)
    _summary(b, args.quiet)
    if not args.quiet:
        print(line)
        for p in paths:
            print(f"wrote {p}")
    return EXIT_OK if a.ok and b.ok else EXIT_INVARIANT


# }}}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fractel",
        description="Fractional telegraph equation experiments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out-dir", default="fractel-out", help="output directory")
        p.add_argument("--no-svg", action="store_true", help="skip the SVG plots")
        p.add_argument("--quiet", action="store_true", help="only print errors")

    p = sub.add_parser("run", help="run one scenario (config file or builtin name)")
    p.add_argument("config")
    common(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("compare", help="run two scenarios and difference them")
    p.add_argument("config_a")
    p.add_argument("config_b")
    common(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("scenarios", help="list builtin scenarios")
    p.set_defaults(func=cmd_scenarios)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    quiet = getattr(args, "quiet", False)
    logging.basicConfig(
        level=logging.WARNING if quiet else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        worker_count()
        return args.func(args)
    except ConfigError as exc:
        print(f"fractel: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SimulationError as exc:
        print(f"fractel: simulation failed: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
