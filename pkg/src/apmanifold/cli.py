"""Command-line front end for the benchmark harness.

Subcommands:

* ``run``      execute one experiment config
* ``sweep``    execute a config with metric/kappa lists overridden from flags
* ``spectrum`` Hessian-spectrum diagnostics over a condition-number sweep
* ``plot``     re-emit plot data and script from stored traces

Exit codes: 0 on success, 2 on a configuration error, 3 when at least one
sweep cell failed.
"""

import argparse
import csv
import math
import os
import sys

from .exceptions import ConfigError
from .geometry import MetricSpec
from .harness import (
    OUT_ENV_VAR,
    CellResult,
    ExperimentConfig,
    SummaryRow,
    emit_plots,
    emit_tables,
    read_trace_csv,
    run_experiment,
    spectrum_sweep,
    spectrum_table,
    write_spectrum_csv,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CELL_FAILED = 3


def _add_common(parser):
    parser.add_argument("--config", help="YAML experiment config")
    parser.add_argument("--out", help=f"output directory (default ${OUT_ENV_VAR} or .)")
    parser.add_argument("--seed", type=int, help="replace the seed list")
    parser.add_argument("--workers", type=int, help="concurrent sweep cells")
    parser.add_argument("--grad-tol", type=float, help="stopping gradient norm")
    parser.add_argument("--max-iters", type=int, help="iteration budget")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="ap-manifold",
        description="SPD-manifold optimization benchmarks for the alpha metric family",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one experiment config")
    _add_common(p_run)

    p_sweep = sub.add_parser("sweep", help="run a config with flag-driven cross product")
    _add_common(p_sweep)
    p_sweep.add_argument("--kappa", type=float, action="append", default=[])
    p_sweep.add_argument("--alpha", type=float, action="append", default=[])
    p_sweep.add_argument("--ai", action="store_true", help="include the affine-invariant baseline")

    p_spec = sub.add_parser("spectrum", help="Hessian spectrum diagnostics")
    p_spec.add_argument("--n", type=int, default=10)
    p_spec.add_argument("--kappa", type=float, action="append", default=[])
    p_spec.add_argument("--alpha", type=float, action="append", default=[])
    p_spec.add_argument("--ai", action="store_true")
    p_spec.add_argument("--seed", type=int, default=0)
    p_spec.add_argument("--out", help="also write spectrum.csv here")

    p_plot = sub.add_parser("plot", help="re-emit plots from stored traces")
    p_plot.add_argument("--traces", required=True, help="directory with summary.csv and trace files")
    p_plot.add_argument("--out", help="output directory (default: the traces directory)")

    return parser


def _load_config(args, overrides=None):
    if not args.config:
        raise ConfigError("--config is required")
    cfg = ExperimentConfig.from_yaml(args.config)
    if overrides:
        for key, value in overrides.items():
            setattr(cfg, key, value)
    if args.out:
        cfg.out_dir = args.out
    if args.seed is not None:
        cfg.seeds = [args.seed]
    if args.workers is not None:
        cfg.workers = args.workers
    if args.grad_tol is not None:
        cfg.grad_tol = args.grad_tol
    if args.max_iters is not None:
        cfg.max_iters = args.max_iters
    cfg.__post_init__()  # re-validate after overrides
    return cfg


def _execute(cfg):
    cells = run_experiment(cfg)
    print(emit_tables([c.row for c in cells]))
    failed = [c for c in cells if c.error]
    for cell in failed:
        print(f"cell failed: {cell.row.metric} kappa={cell.row.kappa:g} "
              f"seed={cell.row.seed}: {cell.error}", file=sys.stderr)
    return EXIT_CELL_FAILED if failed else EXIT_OK


def _cmd_run(args):
    return _execute(_load_config(args))


def _cmd_sweep(args):
    overrides = {}
    metrics = [MetricSpec.from_alpha(a) for a in args.alpha]
    if args.ai:
        metrics.append(MetricSpec.affine_invariant())
    if metrics:
        overrides["metrics"] = metrics
    if args.kappa:
        overrides["kappas"] = args.kappa
    return _execute(_load_config(args, overrides))


def _cmd_spectrum(args):
    kappas = args.kappa or [1e1, 1e2, 1e3, 1e4]
    metrics = [MetricSpec.from_alpha(a) for a in (args.alpha or [0.0, 0.5, 1.0, 1.5])]
    if args.ai:
        metrics.append(MetricSpec.affine_invariant())
    reports, slopes = spectrum_sweep(args.n, kappas, metrics, seed=args.seed)
    print(spectrum_table(reports, slopes))
    out = args.out or os.environ.get(OUT_ENV_VAR, "")
    if out:
        os.makedirs(out, exist_ok=True)
        write_spectrum_csv(reports, os.path.join(out, "spectrum.csv"))
    return EXIT_OK


def _cmd_plot(args):
    summary = os.path.join(args.traces, "summary.csv")
    if not os.path.exists(summary):
        raise ConfigError(f"no summary.csv in {args.traces}")
    cells = []
    with open(summary, newline="") as fh:
        for rec in csv.DictReader(fh):
            row = SummaryRow(
                problem=rec["problem"],
                optimizer=rec["optimizer"],
                metric=rec["metric"],
                alpha=float(rec["alpha"]) if rec["alpha"] else math.nan,
                kappa=float(rec["kappa"]),
                n=int(rec["n"]),
                seed=int(rec["seed"]),
                iters=int(rec["iters"]),
                converged=rec["converged"] == "True",
                final_grad=float(rec["final_grad"]) if rec["final_grad"] else math.nan,
                final_dist=float(rec["final_dist"]) if rec["final_dist"] else math.nan,
                total_s=float(rec["total_s"]) if rec["total_s"] else math.nan,
            )
            label = row.metric.replace(" ", "").replace("(", "_").replace(")", "")
            label = label.replace("=", "")
            name = (f"trace_{row.problem}_{row.optimizer}_{label}"
                    f"_k{row.kappa:g}_s{row.seed}.csv")
            path = os.path.join(args.traces, name)
            if not os.path.exists(path):
                print(f"skipping {name}: trace file missing", file=sys.stderr)
                continue
            cells.append(CellResult(row=row, trace=read_trace_csv(path), trace_path=path))
    script = emit_plots(cells, args.out or args.traces)
    print(f"wrote {script}")
    return EXIT_OK


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "run": _cmd_run,
        "sweep": _cmd_sweep,
        "spectrum": _cmd_spectrum,
        "plot": _cmd_plot,
    }
    try:
        return handlers[args.command](args)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
