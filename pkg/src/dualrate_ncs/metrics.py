"""Cost indexes over completed traces: accumulated error, overshoot, and the
normalized improvement percentages, plus the plant-perturbation sweep."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace

import numpy as np

from .engine import SimTrace, ScenarioConfig, network, run


class GridMismatchError(ValueError):
    pass


def _pair(trace, nominal):
    y = np.asarray(trace, dtype=float)
    y_nom = np.asarray(nominal, dtype=float)
    if y.shape != y_nom.shape:
        raise GridMismatchError(f"sample grids differ: {y.shape} vs {y_nom.shape}")
    return y, y_nom


def accumulated_error(trace, nominal) -> float:
    """Sum of absolute deviations from the nominal samples."""
    y, y_nom = _pair(trace, nominal)
    return float(np.sum(np.abs(y - y_nom)))


def overshoot(trace, nominal) -> float:
    """Largest mismatch between the extremes of the trace and of the nominal.

    Multi-axis inputs (axes, n) take the worst axis.
    """
    y, y_nom = _pair(trace, nominal)
    if y.size == 0:
        raise GridMismatchError("empty window")
    y2, n2 = np.atleast_2d(y), np.atleast_2d(y_nom)
    hi = np.abs(y2.max(axis=1) - n2.max(axis=1))
    lo = np.abs(y2.min(axis=1) - n2.min(axis=1))
    return float(np.max(np.maximum(hi, lo)))


def j_improvement(value: float, worst: float) -> float:
    """Percentage improvement relative to ``worst``: 0 at the worst case, 100 at zero.

    A zero ``worst`` means nothing deviated; zero values then score 100
    (callers flag the report as degenerate).
    """
    if worst < 0 or value < 0:
        raise ValueError("indexes are built from non-negative quantities")
    if worst == 0:
        if value != 0:
            raise ValueError("value exceeds a zero worst case")
        return 100.0
    return 100.0 - 100.0 * (value / worst)


def window_samples(trace: SimTrace, start: float | None = None) -> np.ndarray:
    """Output samples inside the metric window, shape (axes, n).

    Sensor-period samples by default, every basic tick when the config asks
    for the ``tick`` grid.
    """
    cfg = trace.config
    start = cfg.window_start_value if start is None else start
    stride = cfg.ticks_per_period if cfg.metric_grid == "sensor" else 1
    keep = trace.time[::stride] >= start - 1e-9
    return trace.output[:, ::stride][:, keep]


@dataclass
class IndexRow:
    E: float
    O: float
    J_E: float
    J_O: float


@dataclass
class IndexReport:
    """Per-trace E, O and their normalized indexes against ``worst``."""

    rows: dict
    worst: str
    degenerate: bool = False

    def as_dict(self, prefix: str = "") -> dict:
        out = {}
        for name, row in self.rows.items():
            for key in ("E", "O", "J_E", "J_O"):
                out[f"{prefix}{name}.{key}"] = getattr(row, key)
        out[f"{prefix}degenerate"] = int(self.degenerate)
        return out


def index_report(samples: dict, reference: np.ndarray, worst: str) -> IndexReport:
    """E/O for every member of ``samples`` against ``reference``, normalized by ``worst``."""
    if worst not in samples:
        raise KeyError(f"worst-case member {worst!r} missing")
    E = {k: accumulated_error(v, reference) for k, v in samples.items()}
    O = {k: overshoot(v, reference) for k, v in samples.items()}
    e_w, o_w = E[worst], O[worst]
    degenerate = e_w == 0 or o_w == 0
    rows = {}
    for k in samples:
        rows[k] = IndexRow(E[k], O[k],
                           j_improvement(E[k], e_w) if e_w > 0 else _degenerate_j(E[k]),
                           j_improvement(O[k], o_w) if o_w > 0 else _degenerate_j(O[k]))
    return IndexReport(rows, worst, degenerate)


def _degenerate_j(value: float) -> float:
    return 100.0 if value == 0 else float("nan")


def comparison_report(traces: dict, worst: str = "dd_np") -> IndexReport:
    """Index table for variants run against one channel realization."""
    if "nominal" not in traces:
        raise KeyError("comparison needs the nominal trace")
    samples = {k: window_samples(t) for k, t in traces.items()}
    return index_report(samples, samples["nominal"], worst)


# -- robustness sweep --------------------------------------------------------

@dataclass
class GridReport:
    q_values: tuple
    r_values: tuple
    E: np.ndarray  # (len(q), len(r))
    O: np.ndarray
    J3: np.ndarray
    J4: np.ndarray
    seed: int
    degenerate: bool = False


def robustness_grid(base: ScenarioConfig, q_values, r_values, variant: str = "di_p",
                    seed: int | None = None) -> GridReport:
    """Run ``variant`` on every perturbed plant (q, r) with the unperturbed model.

    All cells share the channel realization of ``seed``; errors are measured
    against the unperturbed cell and normalized by the (max q, max r) cell.
    """
    q_values, r_values = tuple(q_values), tuple(r_values)
    if not q_values or not r_values:
        raise ValueError("empty grid")
    if 0 not in q_values or 0 not in r_values:
        raise ValueError("the grid must contain the unperturbed cell (0, 0)")
    cfg = replace(base.with_variant(variant), seed=base.seed if seed is None else seed)
    channels = [network.realize(cfg.seed, cfg.n_periods, cfg.delay_model(),
                                cfg.dropout_model(), a) for a in range(cfg.reference.axes)]
    samples = {}
    for q in q_values:
        for r in r_values:
            trace = run(replace(cfg, q_pct=float(q), r_pct=float(r)), channels)
            samples[(q, r)] = window_samples(trace)
    worst = (max(q_values), max(r_values))
    rep = index_report(samples, samples[(0, 0)], worst)
    shape = (len(q_values), len(r_values))
    grid = {key: np.empty(shape) for key in ("E", "O", "J_E", "J_O")}
    for i, q in enumerate(q_values):
        for j, r in enumerate(r_values):
            row = rep.rows[(q, r)]
            for key in grid:
                grid[key][i, j] = getattr(row, key)
    return GridReport(q_values, r_values, grid["E"], grid["O"], grid["J_E"], grid["J_O"],
                      cfg.seed, rep.degenerate)


# -- export ------------------------------------------------------------------

def _f(v) -> str:
    return f"{float(v):.17g}"


def write_comparison_table(report: IndexReport, path, mean_over=None) -> None:
    """One row per trace: E, J1, O, J2 (the layout of the comparison tables).

    ``mean_over`` optionally adds per-row spread columns from several reports.
    """
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        head = ["trace", "E", "J1_pct", "O", "J2_pct"]
        if mean_over:
            head += ["E_std", "J1_std", "O_std", "J2_std", "n_seeds"]
        w.writerow(head)
        for name, row in report.rows.items():
            line = [name, _f(row.E), _f(row.J_E), _f(row.O), _f(row.J_O)]
            if mean_over:
                stack = np.array([[r.rows[name].E, r.rows[name].J_E, r.rows[name].O,
                                   r.rows[name].J_O] for r in mean_over])
                line += [_f(v) for v in stack.std(axis=0)] + [str(len(mean_over))]
            w.writerow(line)


def mean_report(reports: list) -> IndexReport:
    names = list(reports[0].rows)
    rows = {}
    for n in names:
        stack = np.array([[r.rows[n].E, r.rows[n].O, r.rows[n].J_E, r.rows[n].J_O]
                          for r in reports])
        rows[n] = IndexRow(*stack.mean(axis=0))
    return IndexReport(rows, reports[0].worst, any(r.degenerate for r in reports))


def write_grid_table(grids: list, value: str, index: str, path) -> None:
    """Sweep table: one row per (q, r) cell with the seed mean and spread of
    ``value`` (E or O) and of its index (J3 or J4)."""
    g0 = grids[0]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["q_pct", "r_pct", f"{value}_mean", f"{value}_std",
                    f"{index}_mean_pct", f"{index}_std_pct", "n_seeds"])
        vals = np.array([getattr(g, value) for g in grids])
        js = np.array([getattr(g, index) for g in grids])
        for i, q in enumerate(g0.q_values):
            for j, r in enumerate(g0.r_values):
                w.writerow([_f(q), _f(r), _f(vals[:, i, j].mean()), _f(vals[:, i, j].std()),
                            _f(js[:, i, j].mean()), _f(js[:, i, j].std()), str(len(grids))])


def write_summary(values: dict, path) -> None:
    """Flat ``key=value`` lines, sorted by key."""
    with open(path, "w") as fh:
        for key in sorted(values):
            v = values[key]
            fh.write(f"{key}={_f(v) if isinstance(v, (float, np.floating)) else v}\n")


def read_summary(path) -> dict:
    out = {}
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                key, _, v = line.partition("=")
                out[key] = v
    return out
