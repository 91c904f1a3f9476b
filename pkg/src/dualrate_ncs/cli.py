"""Command-line front end.

Verbs::

    dualrate-ncs validate --scenario paper_sec4
    dualrate-ncs run      --scenario paper_sec4 --seed 1 [--variant di_p,dd_p] [--out DIR]
    dualrate-ncs compare  --scenario paper_sec4 --seeds 1-10 [--out DIR]
    dualrate-ncs sweep    --scenario robustness --seeds 1,2 --grid "q=0,20,30;r=0,8,12"
    dualrate-ncs plotdata DIR/trace_*.csv --out DIR

``--scenario`` takes a path or the name of a bundled scenario. Without
``--out`` results go under ``$DUALRATE_NCS_OUT`` (default ``./dualrate_runs``).
Every output directory gets a ``manifest.json`` listing each emitted file with
its sha256, the resolved config hash and the seeds; ``run --manifest FILE``
replays a previous run after checking the hash.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import json
import os
import sys
import typing
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__, core, metrics
from .engine import (AXIS_NAMES, VARIANTS, ConfigError, ScenarioConfig, read_trace_csv,
                     run_comparison, write_events_csv, write_trace_csv)
from .reference import ReferenceSpec

OUT_ENV = "DUALRATE_NCS_OUT"
DEFAULT_ROOT = "dualrate_runs"
SCENARIO_DIR = Path(__file__).parent / "scenarios"
DEFAULT_GRID = ((0.0, 20.0, 30.0), (0.0, 8.0, 12.0))
COMPARISON_ORDER = ("nominal", "dd_np", "dd_p", "di_p")


class ScenarioError(ValueError):
    pass


# -- scenario files ----------------------------------------------------------

def _field_types(cls) -> dict:
    hints = typing.get_type_hints(cls)
    return {f.name: hints[f.name] for f in dataclasses.fields(cls)}


def _convert(raw: str, typ, key: str):
    text = raw.strip()
    if typing.get_origin(typ) is typing.Union:  # Optional[x]
        if text.lower() in ("", "none", "default"):
            return None
        typ = next(a for a in typing.get_args(typ) if a is not type(None))
    try:
        if typ is bool:
            low = text.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        if typ is int:
            return int(text)
        if typ is float:
            return float(text)
        return text
    except ValueError:
        raise ScenarioError(f"{key}: cannot read {raw!r} as {typ.__name__}") from None


def parse_scenario(text: str, source: str = "<string>") -> ScenarioConfig:
    """Build a config from ``key = value`` lines (``#`` starts a comment).

    Keys are config field names; reference-signal keys carry a ``reference.``
    prefix. Unset keys keep their defaults.
    """
    top = _field_types(ScenarioConfig)
    top.pop("reference")
    ref_types = _field_types(ReferenceSpec)
    values, ref_values = {}, {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ScenarioError(f"{source}:{lineno}: expected key=value")
        key, _, raw = (s.strip() for s in line.partition("="))
        if key.startswith("reference."):
            name = key[len("reference."):]
            if name not in ref_types:
                raise ScenarioError(f"{source}:{lineno}: unknown key {key!r}")
            ref_values[name] = _convert(raw, ref_types[name], key)
        elif key in top:
            values[key] = _convert(raw, top[key], key)
        else:
            raise ScenarioError(f"{source}:{lineno}: unknown key {key!r}")
    try:
        return ScenarioConfig(reference=ReferenceSpec(**ref_values), **values)
    except ValueError as exc:
        raise ScenarioError(f"{source}: {exc}") from None


def resolve_scenario(name_or_path: str) -> Path:
    path = Path(name_or_path)
    if path.is_file():
        return path
    bundled = SCENARIO_DIR / f"{name_or_path}.scenario"
    if bundled.is_file():
        return bundled
    raise ScenarioError(f"no scenario file or bundled scenario named {name_or_path!r}")


def load_scenario(name_or_path: str) -> tuple[Path, ScenarioConfig]:
    path = resolve_scenario(name_or_path)
    return path, parse_scenario(path.read_text(), str(path))


def bundled_scenarios() -> list[str]:
    return sorted(p.stem for p in SCENARIO_DIR.glob("*.scenario"))


def resolved_lines(cfg: ScenarioConfig) -> list[str]:
    """Canonical ``key=value`` form of every field (seed excluded)."""
    lines = []
    for f in dataclasses.fields(cfg):
        if f.name in ("seed", "reference"):
            continue
        lines.append(f"{f.name}={getattr(cfg, f.name)!r}")
    for f in dataclasses.fields(cfg.reference):
        lines.append(f"reference.{f.name}={getattr(cfg.reference, f.name)!r}")
    return sorted(lines)


def config_hash(cfg: ScenarioConfig) -> str:
    return hashlib.sha256("\n".join(resolved_lines(cfg)).encode()).hexdigest()


# -- manifest ----------------------------------------------------------------

@dataclass
class RunManifest:
    command: str
    scenario: str
    config_hash: str
    seeds: list
    out_dir: str
    argv: list = field(default_factory=list)
    variants: list = field(default_factory=list)
    files: dict = field(default_factory=dict)  # relative path -> sha256
    version: str = __version__

    def add(self, path: Path) -> None:
        rel = path.relative_to(self.out_dir).as_posix()
        self.files[rel] = hashlib.sha256(path.read_bytes()).hexdigest()

    def write(self) -> Path:
        path = Path(self.out_dir) / "manifest.json"
        path.write_text(json.dumps(dataclasses.asdict(self), indent=2, sort_keys=True) + "\n")
        return path

    @classmethod
    def read(cls, path) -> RunManifest:
        data = json.loads(Path(path).read_text())
        return cls(**data)


def output_dir(explicit, verb: str, scenario: Path, seeds) -> Path:
    if explicit:
        return Path(explicit)
    root = Path(os.environ.get(OUT_ENV) or DEFAULT_ROOT)
    tag = f"seed{seeds[0]}" if len(seeds) == 1 else f"seeds{seeds[0]}-{seeds[-1]}"
    return root / f"{verb}-{scenario.stem}-{tag}"


# -- argument helpers ----------------------------------------------------------

def parse_seeds(text: str) -> list[int]:
    """``"1-10"``, ``"1,4,7"`` or a mix such as ``"1-3,9"``."""
    seeds = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part:
            lo, hi = (int(v) for v in part.split("-", 1))
            if hi < lo:
                raise argparse.ArgumentTypeError(f"empty seed range {part!r}")
            seeds.extend(range(lo, hi + 1))
        else:
            seeds.append(int(part))
    if not seeds or min(seeds) < 0:
        raise argparse.ArgumentTypeError("seeds must be a non-empty list of non-negative integers")
    return seeds


def parse_grid(text: str) -> tuple[tuple, tuple]:
    """``"q=0,20,30;r=0,8,12"`` -> ((0, 20, 30), (0, 8, 12))."""
    axes = {}
    for part in text.split(";"):
        if not part.strip():
            continue
        key, _, vals = part.partition("=")
        key = key.strip().lower()
        if key not in ("q", "r"):
            raise argparse.ArgumentTypeError(f"grid axis must be q or r, got {key!r}")
        try:
            axes[key] = tuple(float(v) for v in vals.split(",") if v.strip())
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad grid values {vals!r}") from None
    q = axes.get("q", (0.0,))
    r = axes.get("r", (0.0,))
    if not q or not r:
        raise argparse.ArgumentTypeError("empty grid axis")
    return q, r


def parse_variants(text) -> tuple:
    if not text:
        return COMPARISON_ORDER
    names = [v.strip() for v in text.split(",") if v.strip()]
    for v in names:
        if v not in VARIANTS:
            raise argparse.ArgumentTypeError(
                f"unknown variant {v!r} (choose from {', '.join(VARIANTS)})")
    return tuple(n for n in COMPARISON_ORDER if n == "nominal" or n in names)


def _worst_member(report_samples: dict) -> str:
    if "dd_np" in report_samples:
        return "dd_np"
    errs = {k: metrics.accumulated_error(v, report_samples["nominal"])
            for k, v in report_samples.items()}
    return max(errs, key=errs.get)


def _report(traces: dict) -> metrics.IndexReport:
    samples = {k: metrics.window_samples(t) for k, t in traces.items()}
    return metrics.index_report(samples, samples["nominal"], _worst_member(samples))


def _channel_summary(trace) -> dict:
    ev = trace.events
    drops_lr = sum(not e.delivered_lr for e in ev)
    drops_rl = sum(not e.delivered_rl for e in ev)
    return {"periods": len(ev), "drops_lr": drops_lr, "drops_rl": drops_rl,
            "forced_deliveries": sum(e.forced_lr + e.forced_rl for e in ev)}


# -- verbs -------------------------------------------------------------------

def cmd_validate(args) -> int:
    path, cfg = load_scenario(args.scenario)
    cfg.validate()
    print(f"scenario={path}")
    for line in resolved_lines(cfg):
        print(line)
    print(f"seed={cfg.seed}")
    print(f"config_hash={config_hash(cfg)}")
    print("valid")
    return 0


def cmd_run(args) -> int:
    if args.manifest:
        man = RunManifest.read(args.manifest)
        path, cfg = load_scenario(man.scenario)
        if config_hash(cfg) != man.config_hash:
            raise ScenarioError(f"{man.scenario}: config hash differs from {args.manifest}")
        seeds = man.seeds
        variants = tuple(man.variants) or parse_variants(args.variant)
    else:
        path, cfg = load_scenario(args.scenario)
        seeds = [args.seed if args.seed is not None else cfg.seed]
        variants = parse_variants(args.variant)
    cfg = replace(cfg, seed=seeds[0])
    cfg.validate()
    out = output_dir(args.out, "run", path, seeds)
    out.mkdir(parents=True, exist_ok=True)
    man = RunManifest("run", str(path), config_hash(cfg), seeds, str(out), list(args.argv),
                      list(variants))

    traces = run_comparison(cfg, variants)
    for name, trace in traces.items():
        for stem, writer in (("trace", write_trace_csv), ("events", write_events_csv)):
            p = out / f"{stem}_{name}.csv"
            writer(trace, p)
            man.add(p)
    report = _report(traces)
    table = out / "table_indexes.csv"
    metrics.write_comparison_table(report, table)
    man.add(table)
    summary = {"scenario": path.stem, "seed": cfg.seed, "config_hash": man.config_hash,
               "backend": core.BACKEND, "worst": report.worst}
    summary.update(report.as_dict())
    summary.update({f"channel.{k}": v for k, v in _channel_summary(
        traces[variants[-1]]).items()})
    sfile = out / "summary.txt"
    metrics.write_summary(summary, sfile)
    man.add(sfile)
    man.write()
    _print_report(report)
    print(f"wrote {len(man.files)} files to {out}")
    return 0


def _seed_report(cfg: ScenarioConfig, seed: int, variants) -> metrics.IndexReport:
    return _report(run_comparison(replace(cfg, seed=seed), variants))


def _map(fn, items, jobs: int):
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(fn, *zip(*items)))
    return [fn(*it) for it in items]


def cmd_compare(args) -> int:
    path, cfg = load_scenario(args.scenario)
    cfg.validate()
    seeds = args.seeds or [cfg.seed]
    variants = parse_variants(args.variant)
    out = output_dir(args.out, "compare", path, seeds)
    out.mkdir(parents=True, exist_ok=True)
    man = RunManifest("compare", str(path), config_hash(cfg), seeds, str(out), list(args.argv))
    reports = _map(_seed_report, [(cfg, s, variants) for s in seeds], args.jobs)

    per_seed = out / "per_seed.csv"
    with open(per_seed, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["seed", "trace", "E", "J1_pct", "O", "J2_pct"])
        for s, rep in zip(seeds, reports):
            for name, row in rep.rows.items():
                w.writerow([s, name] + [f"{v:.17g}" for v in (row.E, row.J_E, row.O, row.J_O)])
    man.add(per_seed)
    mean = metrics.mean_report(reports)
    table = out / "table_indexes.csv"
    metrics.write_comparison_table(mean, table, mean_over=reports)
    man.add(table)
    summary = {"scenario": path.stem, "seeds": ",".join(map(str, seeds)),
               "config_hash": man.config_hash, "worst": mean.worst}
    summary.update(mean.as_dict("mean."))
    if {"di_p", "dd_p", "dd_np"} <= set(variants):
        ordered = [r.rows["di_p"].E < r.rows["dd_p"].E < r.rows["dd_np"].E for r in reports]
        summary["ordering_holds_all_seeds"] = int(all(ordered))
        summary["ordering_holds_count"] = sum(ordered)
    sfile = out / "summary.txt"
    metrics.write_summary(summary, sfile)
    man.add(sfile)
    man.write()
    _print_report(mean, f"mean over {len(seeds)} seeds")
    print(f"wrote {len(man.files)} files to {out}")
    return 0


def _seed_grid(cfg, q, r, seed):
    return metrics.robustness_grid(cfg, q, r, seed=seed)


def cmd_sweep(args) -> int:
    path, cfg = load_scenario(args.scenario)
    cfg.validate()
    seeds = args.seeds or [cfg.seed]
    q, r = args.grid or DEFAULT_GRID
    out = output_dir(args.out, "sweep", path, seeds)
    out.mkdir(parents=True, exist_ok=True)
    man = RunManifest("sweep", str(path), config_hash(cfg), seeds, str(out), list(args.argv))
    grids = _map(_seed_grid, [(cfg, q, r, s) for s in seeds], args.jobs)

    for name, value, index in (("table_error.csv", "E", "J3"),
                               ("table_overshoot.csv", "O", "J4")):
        p = out / name
        metrics.write_grid_table(grids, value, index, p)
        man.add(p)
    per_seed = out / "per_seed.csv"
    with open(per_seed, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["seed", "q_pct", "r_pct", "E", "J3_pct", "O", "J4_pct"])
        for g in grids:
            for i, qv in enumerate(g.q_values):
                for j, rv in enumerate(g.r_values):
                    w.writerow([g.seed, qv, rv] + [f"{m[i, j]:.17g}"
                                                   for m in (g.E, g.J3, g.O, g.J4)])
    man.add(per_seed)
    degenerate = any(g.degenerate for g in grids)
    summary = {"scenario": path.stem, "seeds": ",".join(map(str, seeds)),
               "config_hash": man.config_hash, "degenerate": int(degenerate),
               "q_values": ",".join(f"{v:g}" for v in q),
               "r_values": ",".join(f"{v:g}" for v in r)}
    for key in ("J3", "J4"):
        stack = np.array([getattr(g, key) for g in grids])
        summary[f"{key}_monotone_all_seeds"] = int(all(
            (np.diff(m, axis=0) <= 0).all() and (np.diff(m, axis=1) <= 0).all() for m in stack))
        mean = stack.mean(axis=0)
        for i, qv in enumerate(q):
            for j, rv in enumerate(r):
                summary[f"mean.{key}.q{qv:g}.r{rv:g}"] = float(mean[i, j])
    sfile = out / "summary.txt"
    metrics.write_summary(summary, sfile)
    man.add(sfile)
    man.write()
    if degenerate:
        print("warning: degenerate grid (worst cell equals the unperturbed one); "
              "indexes reported as 100", file=sys.stderr)
    print(f"J3 (seed mean), rows q={list(q)}, columns r={list(r)}")
    print(np.array2string(np.mean([g.J3 for g in grids], axis=0), precision=2))
    print(f"wrote {len(man.files)} files to {out}")
    return 0


def _label(path: Path) -> str:
    stem = path.stem
    return stem[len("trace_"):] if stem.startswith("trace_") else stem


def cmd_plotdata(args) -> int:
    files = [Path(p) for p in args.traces]
    # read and check everything before writing anything
    traces = {}
    for p in files:
        label = _label(p)
        if label in traces:
            raise ScenarioError(f"duplicate trace label {label!r}")
        traces[label] = read_trace_csv(p)
    times = [t["time"] for t in traces.values()]
    if any(len(t) != len(times[0]) or not np.array_equal(t, times[0]) for t in times):
        raise ScenarioError("traces do not share a time grid")
    stride = args.stride
    if stride < 1:
        raise ScenarioError("stride must be >= 1")
    axes = [a for a in AXIS_NAMES if f"output_{a}" in next(iter(traces.values()))]

    out = Path(args.out) if args.out else Path(os.environ.get(OUT_ENV) or DEFAULT_ROOT) / "plotdata"
    out.mkdir(parents=True, exist_ok=True)
    first = next(iter(traces.values()))
    man = RunManifest("plotdata", "", "", [], str(out), list(args.argv))
    idx = np.arange(0, len(times[0]), stride)
    for a in axes:
        p = out / f"overlay_{a}.csv"
        with open(p, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["time", "reference"] + list(traces))
            for n in idx:
                w.writerow([f"{first['time'][n]:.17g}", f"{first[f'reference_{a}'][n]:.17g}"]
                           + [f"{t[f'output_{a}'][n]:.17g}" for t in traces.values()])
        man.add(p)
    for label, src in zip(traces, files):
        ev = src.with_name(src.name.replace("trace_", "events_", 1))
        if ev.is_file() and ev != src:
            p = out / f"dropouts_{label}.csv"
            _dropout_markers(ev, traces[label], p)
            man.add(p)
        if len(axes) == 2:
            p = out / f"xy_{label}.csv"
            with open(p, "w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["time", "x", "y", "reference_x", "reference_y"])
                t = traces[label]
                for n in idx:
                    w.writerow([f"{t[c][n]:.17g}" for c in
                                ("time", "output_x", "output_y", "reference_x", "reference_y")])
            man.add(p)
    man.write()
    print(f"wrote {len(man.files)} files to {out}")
    return 0


def _dropout_markers(events_path: Path, trace: dict, path: Path) -> None:
    """One row per lost packet, placed on the output at the period start."""
    with open(events_path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    time = trace["time"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["axis", "time", "output", "link"])
        for row in rows:
            for link, key in (("local_to_remote", "delivered_lr"),
                              ("remote_to_local", "delivered_rl")):
                if row[key] == "0":
                    t = float(row["time"])
                    n = int(np.argmin(np.abs(time - t)))
                    w.writerow([row["axis"], row["time"],
                                f"{trace['output_' + row['axis']][n]:.17g}", link])


# -- entry point ---------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dualrate-ncs",
                                 description="Networked dual-rate PID simulator")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="verb", required=True)

    def scenario(p, required=True):
        p.add_argument("--scenario", required=required,
                       help=f"scenario file or bundled name ({', '.join(bundled_scenarios())})")

    p = sub.add_parser("validate", help="check a scenario and print its resolved config")
    scenario(p)
    p.set_defaults(fn=cmd_validate)

    p = sub.add_parser("run", help="one seed, all variants on a shared channel")
    scenario(p, required=False)
    p.add_argument("--seed", type=int)
    p.add_argument("--variant", help="comma-separated subset of " + ",".join(VARIANTS))
    p.add_argument("--manifest", help="replay the run described by a manifest.json")
    p.add_argument("--out")
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("compare", help="index tables over several seeds")
    scenario(p)
    p.add_argument("--seeds", type=parse_seeds)
    p.add_argument("--variant")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_compare)

    p = sub.add_parser("sweep", help="plant-perturbation grid for the predictive controller")
    scenario(p)
    p.add_argument("--seeds", type=parse_seeds)
    p.add_argument("--grid", type=parse_grid, help='e.g. "q=0,20,30;r=0,8,12"')
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_sweep)

    p = sub.add_parser("plotdata", help="plot-ready CSVs from trace files")
    p.add_argument("traces", nargs="+")
    p.add_argument("--stride", type=int, default=5, help="keep every n-th tick")
    p.add_argument("--out")
    p.set_defaults(fn=cmd_plotdata)
    return ap


def _print_report(report: metrics.IndexReport, title: str = "") -> None:
    if title:
        print(title)
    print(f"{'trace':<10}{'E':>14}{'J1 %':>10}{'O':>12}{'J2 %':>10}")
    for name, row in report.rows.items():
        print(f"{name:<10}{row.E:>14.6g}{row.J_E:>10.2f}{row.O:>12.4g}{row.J_O:>10.2f}")
    if report.degenerate:
        print("(degenerate: the worst-case trace equals the nominal one)")


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    args.argv = argv
    if args.verb == "run" and not (args.scenario or args.manifest):
        parser.error("run needs --scenario or --manifest")
    try:
        return args.fn(args)
    except (ScenarioError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
