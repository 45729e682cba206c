"""Command-line entry point: ``qmarket run|one-step|oracle|analyze``.

Exit codes: 0 success, 1 config error, 2 health-check abort, 3 internal
consistency error.
"""

from __future__ import annotations

import argparse
import logging
import sys
import warnings
from pathlib import Path

from . import kernels, metrics, scenario
from .errors import ConfigError, ConsistencyError, HealthCheckError
from .market_model import LindbladCoefficients, make_price_observable

log = logging.getLogger("qmarket")

EXIT_OK, EXIT_CONFIG, EXIT_HEALTH, EXIT_INTERNAL = 0, 1, 2, 3


def _load(path, seed):
    cfg = scenario.load_config(path)
    return scenario.with_overrides(cfg, seed=seed)


def cmd_run(args) -> int:
    cfg = _load(args.config, args.seed)
    if args.output:
        cfg = scenario.with_overrides(cfg, output_path=args.output)
    records, summary, final = scenario.run_scenario(cfg)
    text = scenario.csv_text(records)
    if cfg.output_path:
        out = Path(cfg.output_path)
        if not out.is_absolute():
            out = Path(args.config).resolve().parent / out if args.output is None else out
        scenario.atomic_write(out, text)
        dump = out.with_suffix(".final.txt")
        scenario.atomic_write(dump, scenario.format_matrix(final))
        summary.csv_path, summary.final_state_path = str(out), str(dump)
    else:
        sys.stdout.write(text)
    log.info("backend=%s steps=%d wall=%s", kernels.backend_name(), summary.total_steps,
             ",".join(f"{w:.2f}s" for w in summary.segment_wall_times))
    log.info("max trace error %.3e; min eigenvalue %s; positivity dips %d",
             summary.max_trace_error, summary.min_eigenvalue, summary.positivity_dips)
    if summary.d2_peak_step is not None:
        log.info("d2 peak %.6g at step %d", summary.d2_peak_value, summary.d2_peak_step)
    if summary.csv_path:
        log.info("wrote %s and %s", summary.csv_path, summary.final_state_path)
    return EXIT_OK


def cmd_one_step(args) -> int:
    cfg = _load(args.config, args.seed)
    rho = scenario.one_step_report(cfg)
    text = scenario.format_matrix(rho)
    if args.output:
        scenario.atomic_write(args.output, text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_oracle(args) -> int:
    coeffs = LindbladCoefficients.from_rates(args.sigma, args.nu, args.nu)
    dts = [float(s) for s in args.dts.split(",") if s.strip()]
    rows = scenario.oracle_check(args.n, coeffs, args.t, dts, boundary_mode=args.boundary_mode)
    print(f"{'dt':>12} {'steps':>8} {'max_error':>14} {'ratio':>8} {'order':>7}")
    for r in rows:
        ratio = f"{r.ratio:8.4f}" if r.ratio is not None else f"{'-':>8}"
        order = f"{r.order:7.4f}" if r.order is not None else f"{'-':>7}"
        print(f"{r.dt:12.6g} {r.steps:8d} {r.max_error:14.6e} {ratio} {order}")
    return EXIT_OK


def cmd_analyze(args) -> int:
    rho = scenario.parse_matrix(Path(args.dump).read_text(encoding="utf-8"))
    n = rho.shape[0]
    x = make_price_observable(n, args.x_min, args.x_max)
    rec = metrics.compute_metrics(rho, x.values)
    for name, value in zip(rec.header()[2:], rec.as_row()[2:]):
        print(f"{name} = {value}")
    try:
        p_var = metrics.precision_variance_metric(rho, x)
    except ArithmeticError as exc:
        p_var = f"undefined ({exc})"
    print(f"p_var = {p_var}")
    sig = metrics.orbit_signature(rho)
    print("orbit_sums = " + ", ".join(f"{z.real:.6g}{z.imag:+.6g}j" for z in sig.sums[:5]))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qmarket", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a scenario and write the metrics CSV")
    r.add_argument("config")
    r.add_argument("--seed", type=int)
    r.add_argument("-o", "--output", help="CSV path (overrides output_path)")
    r.set_defaults(func=cmd_run)

    o = sub.add_parser("one-step", help="dump the density matrix after a single step")
    o.add_argument("config")
    o.add_argument("--seed", type=int)
    o.add_argument("-o", "--output")
    o.set_defaults(func=cmd_one_step)

    c = sub.add_parser("oracle", help="Euler vs exact propagator convergence table")
    c.add_argument("--n", type=int, default=5)
    c.add_argument("--t", type=float, default=1.0)
    c.add_argument("--dts", default="0.01,0.005,0.0025,0.00125")
    c.add_argument("--sigma", type=float, default=0.4)
    c.add_argument("--nu", type=float, default=0.2)
    c.add_argument("--boundary-mode", default="hard-wall", choices=["hard-wall", "periodic"])
    c.set_defaults(func=cmd_oracle)

    a = sub.add_parser("analyze", help="recompute all metrics on a matrix dump")
    a.add_argument("dump")
    a.add_argument("--x-min", type=float, default=-1.0)
    a.add_argument("--x-max", type=float, default=1.0)
    a.set_defaults(func=cmd_analyze)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    previous = warnings.showwarning

    def show(message, category, filename, lineno, file=None, line=None):
        log.warning("%s: %s", category.__name__, message)

    warnings.showwarning = show
    try:
        return args.func(args)
    except (ConfigError, FileNotFoundError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except HealthCheckError as exc:
        print(f"health check failed: {exc}", file=sys.stderr)
        return EXIT_HEALTH
    except ConsistencyError as exc:
        print(f"internal consistency error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    finally:
        warnings.showwarning = previous


if __name__ == "__main__":
    sys.exit(main())
