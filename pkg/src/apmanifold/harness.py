"""Benchmark harness: sweeps, trace persistence, tables and plot emission.

An experiment is a cross product of metrics, target condition numbers and
seeds over one problem/optimizer pair. Every cell generates its instance
from the seed, runs the solver from the identity, and writes a
per-iteration trace CSV; a summary CSV and a text table are assembled once
all cells finish. Cells are independent: a solver failure is recorded in
its row and never aborts the sweep.

All non-timing outputs are deterministic in (config, seeds): float columns
are serialized with shortest round-trip representation, so repeated runs
produce byte-identical trace files apart from the wall-time column.
"""

import csv
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import yaml

from .exceptions import ConfigError, StepFailure
from .geometry import MetricSpec
from .hessian import euclidean_hessian_matrix, fit_loglog_slope, spectrum_report
from .linalg import eig_sym
from .optimize import ArmijoStep, FixedStep, RsdConfig, RtrConfig, rsd_solve, rtr_solve
from .problems import make_instances

PROBLEMS = ("wls", "trace", "sylvester")
OPTIMIZERS = ("rsd", "rtr")

# Iteration budgets of the benchmark protocol.
DEFAULT_BUDGETS = {
    ("wls", "rsd"): 200,
    ("wls", "rtr"): 200,
    ("trace", "rsd"): 800,
    ("trace", "rtr"): 400,
    ("sylvester", "rsd"): 20000,
    ("sylvester", "rtr"): 100,
}

# Spectrum recipe of the target per problem/optimizer pair.
DEFAULT_STYLES = {
    ("wls", "rsd"): "decay",
    ("wls", "rtr"): "centered",
    ("trace", "rsd"): "decay",
    ("trace", "rtr"): "centered",
    ("sylvester", "rsd"): "decay",
    ("sylvester", "rtr"): "centered",
}

DEFAULT_N = {
    ("wls", "rsd"): 50,
    ("wls", "rtr"): 50,
    ("trace", "rsd"): 30,
    ("trace", "rtr"): 30,
    ("sylvester", "rsd"): 50,
    ("sylvester", "rtr"): 60,
}

DEFAULT_AUX = {
    ("wls", "rtr"): {"s": 1.0},
    ("trace", "rtr"): {"s": 1.0},
    ("sylvester", "rsd"): {"kappa_a": 1e4, "kappa_b": 1e4},
    ("sylvester", "rtr"): {"kappa_a": 30.0, "kappa_b": 20.0, "s": 1.5},
}

TRACE_COLUMNS = ["iter", "cost", "egrad_norm", "dist_pstar", "wall_ms"]
SUMMARY_COLUMNS = [
    "problem",
    "optimizer",
    "metric",
    "alpha",
    "kappa",
    "n",
    "seed",
    "iters",
    "converged",
    "final_grad",
    "final_dist",
    "total_s",
]

OUT_ENV_VAR = "AP_MANIFOLD_OUT"


def parse_metric(token):
    """Metric from a config token: ``"AI"`` or an alpha value."""
    if isinstance(token, str) and token.strip().upper() == "AI":
        return MetricSpec.affine_invariant()
    try:
        return MetricSpec.from_alpha(float(token))
    except (TypeError, ValueError) as err:
        raise ConfigError(f"cannot parse metric {token!r}") from err


@dataclass
class ExperimentConfig:
    """Declarative description of one sweep.

    Unset fields fall back to the benchmark protocol defaults for the
    problem/optimizer pair (dimension, iteration budget, target-spectrum
    style, problem-specific generator knobs).
    """

    problem: str
    optimizer: str
    metrics: list
    kappas: list
    seeds: list = field(default_factory=lambda: [0])
    n: int = 0
    max_iters: int = 0
    grad_tol: float = 1e-6
    style: str = ""
    aux: dict = field(default_factory=dict)
    step: dict = field(default_factory=dict)  # rsd: {"rule": "armijo"|"fixed", ...}
    rtr: dict = field(default_factory=dict)  # RtrConfig field overrides
    out_dir: str = ""
    workers: int = 1
    record_every: int = 1

    def __post_init__(self):
        if self.problem not in PROBLEMS:
            raise ConfigError(f"unknown problem {self.problem!r}")
        if self.optimizer not in OPTIMIZERS:
            raise ConfigError(f"unknown optimizer {self.optimizer!r}")
        self.metrics = [
            m if isinstance(m, MetricSpec) else parse_metric(m) for m in self.metrics
        ]
        if not self.metrics:
            raise ConfigError("at least one metric is required")
        self.kappas = [float(k) for k in self.kappas]
        if not self.kappas or any(k < 1.0 for k in self.kappas):
            raise ConfigError("at least one kappa >= 1 is required")
        if not self.seeds:
            raise ConfigError("at least one seed is required")
        self.seeds = [int(s) for s in self.seeds]
        key = (self.problem, self.optimizer)
        self.n = int(self.n) or DEFAULT_N[key]
        self.max_iters = int(self.max_iters) or DEFAULT_BUDGETS[key]
        if self.max_iters < 1:
            raise ConfigError("max_iters must be positive")
        if self.grad_tol <= 0.0:
            raise ConfigError("grad_tol must be positive")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        self.style = self.style or DEFAULT_STYLES[key]
        self.aux = {**DEFAULT_AUX.get(key, {}), **self.aux}

    @classmethod
    def from_dict(cls, data):
        data = dict(data)
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        missing = {"problem", "optimizer", "metrics", "kappas"} - set(data)
        if missing:
            raise ConfigError(f"missing config keys: {sorted(missing)}")
        try:
            return cls(**data)
        except (TypeError, ValueError) as err:
            raise ConfigError(str(err)) from err

    @classmethod
    def from_yaml(cls, path):
        try:
            with open(path) as fh:
                data = yaml.safe_load(fh)
        except (OSError, yaml.YAMLError) as err:
            raise ConfigError(f"cannot read config {path}: {err}") from err
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a mapping")
        return cls.from_dict(data)

    def solver_config(self):
        if self.optimizer == "rsd":
            rule = ArmijoStep()
            if self.step:
                kind = self.step.get("rule", "armijo")
                if kind == "fixed":
                    rule = FixedStep(eta=float(self.step["eta"]))
                elif kind == "armijo":
                    keys = ("initial", "shrink", "c1", "max_backtracks")
                    rule = ArmijoStep(
                        **{k: self.step[k] for k in keys if k in self.step}
                    )
                else:
                    raise ConfigError(f"unknown step rule {kind!r}")
            return RsdConfig(
                step_rule=rule,
                max_iters=self.max_iters,
                grad_tol=self.grad_tol,
                record_every=self.record_every,
            )
        try:
            return RtrConfig(
                max_iters=self.max_iters,
                grad_tol=self.grad_tol,
                record_every=self.record_every,
                **self.rtr,
            )
        except (TypeError, ValueError) as err:
            raise ConfigError(f"bad rtr overrides: {err}") from err


@dataclass
class SummaryRow:
    problem: str
    optimizer: str
    metric: str
    alpha: float
    kappa: float
    n: int
    seed: int
    iters: int
    converged: bool
    final_grad: float
    final_dist: float
    total_s: float

    def as_list(self):
        return [getattr(self, c) for c in SUMMARY_COLUMNS]


@dataclass
class CellResult:
    row: SummaryRow
    trace: object
    trace_path: str
    error: str = ""


def _fmt(value):
    if isinstance(value, float):
        if math.isnan(value):
            return ""
        return repr(value)
    return str(value)


def _cell_name(cfg, metric, kappa, seed):
    label = metric.label.replace(" ", "").replace("(", "_").replace(")", "")
    label = label.replace("=", "")
    return f"trace_{cfg.problem}_{cfg.optimizer}_{label}_k{kappa:g}_s{seed}.csv"


def write_trace_csv(trace, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRACE_COLUMNS)
        for i in range(len(trace.iteration)):
            writer.writerow(
                [
                    int(trace.iteration[i]),
                    _fmt(float(trace.cost[i])),
                    _fmt(float(trace.egrad_norm[i])),
                    _fmt(float(trace.dist_pstar[i])),
                    _fmt(float(trace.wall_ms[i])),
                ]
            )


def read_trace_csv(path):
    """Trace CSV back into arrays (empty cells become NaN)."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        rows = list(reader)
    out = {}
    for col in TRACE_COLUMNS:
        out[col] = np.array(
            [float(r[col]) if r[col] != "" else math.nan for r in rows]
        )
    return out


def _run_cell(cfg, metric, kappa, seed):
    inst = make_instances(
        cfg.problem, cfg.n, kappa, seed, style=cfg.style, **cfg.aux
    )
    p0 = eig_sym(np.eye(cfg.n))
    solver = rsd_solve if cfg.optimizer == "rsd" else rtr_solve
    error = ""
    try:
        trace = solver(
            inst.problem, metric, p0, cfg.solver_config(), p_star=inst.p_star
        )
    except StepFailure as err:
        trace = err.trace
        error = str(err)
    row = SummaryRow(
        problem=cfg.problem,
        optimizer=cfg.optimizer,
        metric=metric.label,
        alpha=metric.alpha if metric.is_alpha else math.nan,
        kappa=kappa,
        n=cfg.n,
        seed=seed,
        iters=trace.iters,
        converged=trace.converged,
        final_grad=float(trace.egrad_norm[-1]),
        final_dist=float(trace.dist_pstar[-1]),
        total_s=trace.total_ms / 1000.0,
    )
    return CellResult(row=row, trace=trace, trace_path="", error=error)


def run_experiment(cfg):
    """Execute a sweep; returns the cell results in deterministic order.

    Writes one trace CSV per cell plus ``summary.csv`` and ``table.txt``
    into the output directory (created if needed). Cells may run
    concurrently up to ``cfg.workers``; results are ordered by the
    (metric, kappa, seed) grid regardless of completion order.
    """
    out_dir = cfg.out_dir or os.environ.get(OUT_ENV_VAR, "") or "."
    os.makedirs(out_dir, exist_ok=True)
    grid = [
        (metric, kappa, seed)
        for kappa in cfg.kappas
        for metric in cfg.metrics
        for seed in cfg.seeds
    ]
    if cfg.workers == 1:
        cells = [_run_cell(cfg, *g) for g in grid]
    else:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            cells = list(pool.map(lambda g: _run_cell(cfg, *g), grid))
    for cell, (metric, kappa, seed) in zip(cells, grid):
        cell.trace_path = os.path.join(out_dir, _cell_name(cfg, metric, kappa, seed))
        write_trace_csv(cell.trace, cell.trace_path)
    rows = [c.row for c in cells]
    write_summary_csv(rows, os.path.join(out_dir, "summary.csv"))
    with open(os.path.join(out_dir, "table.txt"), "w") as fh:
        fh.write(emit_tables(rows))
    return cells


def write_summary_csv(rows, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SUMMARY_COLUMNS)
        for row in rows:
            writer.writerow([_fmt(v) for v in row.as_list()])


def emit_tables(rows):
    """Text table of summary rows with per-block best markers.

    Rows are grouped by (optimizer, kappa); within each block the minimum
    iteration count and the minimum runtime are marked, all ties included.
    """
    blocks = {}
    for row in rows:
        blocks.setdefault((row.optimizer, row.kappa), []).append(row)
    lines = []
    header = (
        f"{'metric':<16} {'kappa':>10} {'iters':>7} {'time_s':>9} "
        f"{'converged':>9} {'final_grad':>12} {'final_dist':>12} {'best':>10}"
    )
    for (optimizer, kappa), block in sorted(blocks.items()):
        lines.append(f"== {optimizer.upper()}  kappa={kappa:g} ==")
        lines.append(header)
        best_iter = min(r.iters for r in block)
        best_time = min(r.total_s for r in block)
        for row in block:
            marks = []
            if row.iters == best_iter:
                marks.append("iter")
            if row.total_s == best_time:
                marks.append("time")
            dist = "" if math.isnan(row.final_dist) else f"{row.final_dist:.3e}"
            lines.append(
                f"{row.metric:<16} {row.kappa:>10g} {row.iters:>7d} "
                f"{row.total_s:>9.3f} {str(row.converged):>9} "
                f"{row.final_grad:>12.3e} {dist:>12} {','.join(marks):>10}"
            )
        lines.append("")
    return "\n".join(lines)


PLOT_AXES = {
    "dist": ("dist_pstar", "Frobenius distance to optimum"),
    "grad": ("egrad_norm", "Euclidean gradient norm"),
    "cost": ("cost", "cost"),
}


def emit_plots(cells, out_dir, axes=("dist", "grad", "cost")):
    """Write per-metric data series and a standalone matplotlib script.

    One panel per (optimizer, kappa) and axis kind, y on a log scale.
    Series whose data is absent (no optimum supplied, so no distances) are
    skipped with a warning comment in the script header. Returns the
    script path.
    """
    os.makedirs(out_dir, exist_ok=True)
    manifest = {}
    warnings = []
    for axis in axes:
        column, _ = PLOT_AXES[axis]
        panels = {}
        for cell in cells:
            row = cell.row
            values = _trace_column(cell, column)
            iters = _trace_column(cell, "iter")
            name = (
                f"plotdata_{axis}_{row.optimizer}_k{row.kappa:g}_"
                f"{row.metric.replace(' ', '').replace('(', '_').replace(')', '').replace('=', '')}"
                f"_s{row.seed}.csv"
            )
            if not np.any(np.isfinite(values)):
                warnings.append(
                    f"{axis} panel {row.optimizer} kappa={row.kappa:g}: "
                    f"series {row.metric!r} skipped (no data)"
                )
                continue
            with open(os.path.join(out_dir, name), "w", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(["iter", column])
                for i, v in zip(iters, values):
                    if math.isfinite(v):
                        writer.writerow([int(i), _fmt(float(v))])
            key = f"{row.optimizer} kappa={row.kappa:g}"
            panels.setdefault(key, []).append((row.metric, name))
        manifest[axis] = panels
    script_path = os.path.join(out_dir, "plot_convergence.py")
    with open(script_path, "w") as fh:
        fh.write(_plot_script(manifest, warnings))
    return script_path


def _trace_column(cell, column):
    trace = cell.trace
    if isinstance(trace, dict):
        return np.asarray(trace[column], dtype=float)
    mapping = {
        "iter": trace.iteration,
        "cost": trace.cost,
        "egrad_norm": trace.egrad_norm,
        "dist_pstar": trace.dist_pstar,
    }
    return np.asarray(mapping[column], dtype=float)


def _plot_script(manifest, warnings):
    lines = [
        "#!/usr/bin/env python3",
        '"""Render convergence panels from the data files next to this script."""',
    ]
    lines += [f"# warning: {w}" for w in warnings]
    lines += [
        "import csv",
        "import os",
        "",
        "import matplotlib",
        'matplotlib.use("Agg")',
        "import matplotlib.pyplot as plt",
        "",
        f"MANIFEST = {manifest!r}",
        f"YLABELS = {dict((k, v[1]) for k, v in PLOT_AXES.items())!r}",
        "HERE = os.path.dirname(os.path.abspath(__file__))",
        "",
        "",
        "def load(name):",
        "    with open(os.path.join(HERE, name), newline='') as fh:",
        "        rows = list(csv.reader(fh))[1:]",
        "    xs = [int(r[0]) for r in rows]",
        "    ys = [float(r[1]) for r in rows]",
        "    return xs, ys",
        "",
        "",
        "for axis, panels in MANIFEST.items():",
        "    if not panels:",
        "        continue",
        "    fig, axs = plt.subplots(1, len(panels),",
        "                            figsize=(5.5 * len(panels), 4.2), squeeze=False)",
        "    for ax, (title, series) in zip(axs[0], sorted(panels.items())):",
        "        for label, fname in series:",
        "            xs, ys = load(fname)",
        "            ax.semilogy(xs, ys, label=label)",
        "        ax.set_title(title)",
        "        ax.set_xlabel('iteration')",
        "        ax.set_ylabel(YLABELS[axis])",
        "        ax.legend(fontsize=7)",
        "    fig.tight_layout()",
        "    out = os.path.join(HERE, f'convergence_{axis}.png')",
        "    fig.savefig(out, dpi=150)",
        "    print('wrote', out)",
    ]
    return "\n".join(lines) + "\n"


def spectrum_sweep(n, kappas, metrics, grad_tol=1e-6, seed=0):
    """Hessian spectrum diagnostics over a condition-number sweep.

    Uses the all-ones weighted-least-squares instance, whose Euclidean
    Hessian is the identity, so the Riemannian Hessian spectrum isolates
    the metric conditioning. Returns per-metric report lists and the
    fitted log-log slope of the Hessian condition number against the
    target condition number (expected: ``2 |alpha - 1|``).
    """
    reports = {m.label: [] for m in metrics}
    for kappa in kappas:
        inst = make_instances("wls", n, float(kappa), seed, style="decay")
        ehess = euclidean_hessian_matrix(inst.problem, inst.p_star)
        for metric in metrics:
            rep = spectrum_report(
                inst.problem,
                inst.p_star,
                metric,
                eta=0.0,
                report_grad_tol=grad_tol,
                ehess_matrix=ehess,
            )
            rep = _with_reference_eta(rep)
            reports[metric.label].append(rep)
    slopes = {}
    for metric in metrics:
        reps = reports[metric.label]
        slopes[metric.label] = fit_loglog_slope(
            [r.kappa_p for r in reps], [r.kappa_hess for r in reps]
        )
    return reports, slopes


def _with_reference_eta(rep):
    from dataclasses import replace

    eta = 1.0 / rep.lambda_max
    return replace(
        rep,
        eta=eta,
        rho_star=max(abs(1.0 - eta * rep.lambda_min), abs(1.0 - eta * rep.lambda_max)),
    )


def spectrum_table(reports, slopes):
    lines = [
        f"{'metric':<16} {'kappa_p':>10} {'lam_min':>12} {'lam_max':>12} "
        f"{'kappa_hess':>12} {'rho(1/L)':>10}"
    ]
    for label, reps in reports.items():
        for r in reps:
            lines.append(
                f"{label:<16} {r.kappa_p:>10.3g} {r.lambda_min:>12.5g} "
                f"{r.lambda_max:>12.5g} {r.kappa_hess:>12.5g} {r.rho_star:>10.6f}"
            )
        lines.append(f"{'':<16} fitted slope of log kappa_hess: {slopes[label]:.4f}")
        lines.append("")
    return "\n".join(lines)


def write_spectrum_csv(reports, path):
    rows = [r.to_dict() for reps in reports.values() for r in reps]
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _fmt(v) if isinstance(v, float) else v for k, v in row.items()})
