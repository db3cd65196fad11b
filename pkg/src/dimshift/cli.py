"""Command-line entry point.

``dimshift run`` executes the simulation grid described by a config file
(plus flag overrides) and writes per-cell learning-curve CSVs, a metrics
summary CSV, and a JSON manifest. ``dimshift metrics`` tabulates a results
directory.

Config files are plain text, one ``key = value`` per line, ``#`` comments.
Dotted keys address parameter blocks (``task.p_high = 0.75``,
``wibl.tau_w = 5.0``); ``models``, ``shifts``, and ``feedback`` take
comma-separated lists. Unknown keys are rejected. The environment variable
``DIMSHIFT_SEED`` overrides ``master_seed``; explicit ``--seed`` wins over
both.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import os
import sys
import time
from pathlib import Path

from dimshift import __version__
from dimshift.env import ConfigError, TaskConfig
from dimshift.harness import (
    MODEL_NAMES,
    ConditionResult,
    RunConfig,
    run_grid,
)
from dimshift.model_frl import FrlConfig
from dimshift.model_ibl import IblConfig

CURVE_HEADER = [
    "condition",
    "model",
    "shift",
    "feedback",
    "trial",
    "mean_correct",
    "sd_correct",
    "n_agents",
]
SUMMARY_HEADER = ["model", "shift", "feedback", "jumpstart", "pre_asymptote", "final_asymptote"]

# task shift/feedback kinds are grid axes, not config-file knobs
_TASK_KEYS = {
    f.name for f in dataclasses.fields(TaskConfig) if f.name not in ("shift_kind", "feedback_kind")
}
_FRL_KEYS = {f.name for f in dataclasses.fields(FrlConfig)}
_IBL_KEYS = {f.name for f in dataclasses.fields(IblConfig)}
_LIST_KEYS = {"models", "shifts", "feedback"}
_SCALAR_KEYS = {"master_seed", "n_agents"}


def parse_config_file(path: Path) -> dict[str, str]:
    entries: dict[str, str] = {}
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key in entries:
            raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
        entries[key] = value
    return entries


def _convert(key: str, value: str, target_type) -> object:
    try:
        if target_type is bool:
            if value.lower() in ("true", "1", "yes"):
                return True
            if value.lower() in ("false", "0", "no"):
                return False
            raise ValueError(value)
        if target_type is int:
            return int(value)
        if target_type is float:
            return float(value)
        if target_type == "optional_float":
            return None if value.lower() == "none" else float(value)
        return value
    except ValueError:
        raise ConfigError(f"config key {key!r}: cannot parse {value!r}") from None


def _field_type(dc_type, name: str):
    f = {f.name: f for f in dataclasses.fields(dc_type)}[name]
    if f.type in ("float | None", "int | None"):
        return "optional_float"
    return {"int": int, "float": float, "bool": bool, "str": str}.get(f.type, str)


def build_run_config(entries: dict[str, str]) -> RunConfig:
    blocks: dict[str, dict[str, object]] = {"task": {}, "frl": {}, "wrl": {}, "ibl": {}, "wibl": {}}
    top: dict[str, object] = {}
    for key, value in entries.items():
        if key in _LIST_KEYS:
            top[key] = tuple(v.strip() for v in value.split(",") if v.strip())
        elif key in _SCALAR_KEYS:
            top[key] = _convert(key, value, int)
        elif "." in key:
            block, _, name = key.partition(".")
            if block == "task" and name in _TASK_KEYS:
                blocks["task"][name] = _convert(key, value, _field_type(TaskConfig, name))
            elif block in ("frl", "wrl") and name in _FRL_KEYS:
                blocks[block][name] = _convert(key, value, _field_type(FrlConfig, name))
            elif block in ("ibl", "wibl") and name in _IBL_KEYS:
                blocks[block][name] = _convert(key, value, _field_type(IblConfig, name))
            else:
                raise ConfigError(f"unknown config key {key!r}")
        else:
            raise ConfigError(f"unknown config key {key!r}")
    blocks["frl"].setdefault("weights_enabled", False)
    blocks["wrl"].setdefault("weights_enabled", True)
    blocks["ibl"].setdefault("weights_enabled", False)
    blocks["wibl"].setdefault("weights_enabled", True)
    return RunConfig(
        task=TaskConfig(**blocks["task"]),
        frl=FrlConfig(**blocks["frl"]),
        wrl=FrlConfig(**blocks["wrl"]),
        ibl=IblConfig(**blocks["ibl"]),
        wibl=IblConfig(**blocks["wibl"]),
        **top,
    )


def _fmt(x: float) -> str:
    return repr(float(x))


def curve_filename(result: ConditionResult) -> str:
    s = result.spec
    return f"curve_{s.model}_{s.shift_kind}_{s.feedback_kind}.csv"


def write_results(results: list[ConditionResult], out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    for res in results:
        s = res.spec
        with open(out_dir / curve_filename(res), "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(CURVE_HEADER)
            for t, (m, sd) in enumerate(zip(res.mean_correct, res.sd_correct), start=1):
                w.writerow(
                    [s.condition_id, s.model, s.shift_kind, s.feedback_kind, t, _fmt(m), _fmt(sd), s.n_agents]
                )
    with open(out_dir / "summary.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(SUMMARY_HEADER)
        for res in results:
            s = res.spec
            w.writerow(
                [
                    s.model,
                    s.shift_kind,
                    s.feedback_kind,
                    _fmt(res.jumpstart),
                    _fmt(res.pre_shift_asymptote),
                    _fmt(res.final_asymptote),
                ]
            )


def write_manifest(config: RunConfig, out_dir: Path, wall_time_s: float, n_cells: int) -> None:
    manifest = {
        "version": __version__,
        "master_seed": config.master_seed,
        "n_agents": config.n_agents,
        "n_cells": n_cells,
        "wall_time_s": wall_time_s,
        "config": dataclasses.asdict(config),
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def cmd_run(args: argparse.Namespace) -> int:
    entries = parse_config_file(Path(args.config)) if args.config else {}
    config = build_run_config(entries)
    updates: dict[str, object] = {}
    if "DIMSHIFT_SEED" in os.environ:
        updates["master_seed"] = int(os.environ["DIMSHIFT_SEED"])
    if args.models:
        updates["models"] = tuple(args.models)
    if args.shifts:
        updates["shifts"] = tuple(args.shifts)
    if args.feedback:
        updates["feedback"] = tuple(args.feedback)
    if args.agents is not None:
        updates["n_agents"] = args.agents
    if args.seed is not None:
        updates["master_seed"] = args.seed
    if updates:
        config = dataclasses.replace(config, **updates)
    out_dir = Path(args.out)
    start = time.perf_counter()
    results = run_grid(config, workers=args.workers)
    wall = time.perf_counter() - start
    write_results(results, out_dir)
    write_manifest(config, out_dir, wall, len(results))
    print(f"wrote {len(results)} condition cells to {out_dir} in {wall:.1f}s")
    return 0


def read_summary(results_dir: Path) -> list[dict[str, object]]:
    path = results_dir / "summary.csv"
    if not path.is_file():
        raise ConfigError(f"no summary.csv in {results_dir}")
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != SUMMARY_HEADER:
            raise ConfigError(f"unexpected summary header {reader.fieldnames}")
        rows = list(reader)
    for row in rows:
        for k in ("jumpstart", "pre_asymptote", "final_asymptote"):
            row[k] = float(row[k])
    return rows


def metrics_rows(summary: list[dict[str, object]]) -> list[dict[str, object]]:
    by_cell = {(r["model"], r["shift"], r["feedback"]): r for r in summary}
    models = [m for m in MODEL_NAMES if any(k[0] == m for k in by_cell)]
    feedbacks = sorted({k[2] for k in by_cell}, key=["immediate", "delayed", "counterfactual"].index)
    out = []
    for model in models:
        for fb in feedbacks:
            intra = by_cell.get((model, "intra", fb))
            extra = by_cell.get((model, "extra", fb))
            if intra is None or extra is None:
                continue
            out.append(
                {
                    "model": model,
                    "feedback": fb,
                    "jumpstart_id": intra["jumpstart"],
                    "jumpstart_ed": extra["jumpstart"],
                    "jumpstart_diff": intra["jumpstart"] - extra["jumpstart"],
                    "pre_asymptote_id": intra["pre_asymptote"],
                    "pre_asymptote_ed": extra["pre_asymptote"],
                    "final_asymptote_id": intra["final_asymptote"],
                    "final_asymptote_ed": extra["final_asymptote"],
                }
            )
    return out


def cmd_metrics(args: argparse.Namespace) -> int:
    results_dir = Path(args.results_dir)
    if not results_dir.is_dir():
        print(f"error: no such results directory: {results_dir}", file=sys.stderr)
        return 2
    rows = metrics_rows(read_summary(results_dir))
    if args.format == "json":
        print(json.dumps(rows, indent=2))
        return 0
    cols = list(rows[0].keys()) if rows else []
    widths = {c: max(len(c), 8) for c in cols}
    print("  ".join(c.ljust(widths[c]) for c in cols))
    for row in rows:
        cells = [
            (f"{v:.4f}" if isinstance(v, float) else str(v)).ljust(widths[c])
            for c, v in row.items()
        ]
        print("  ".join(cells))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dimshift", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run the simulation grid and write CSVs")
    run_p.add_argument("--config", help="path to a key = value config file")
    run_p.add_argument("--models", nargs="+", choices=MODEL_NAMES)
    run_p.add_argument("--shifts", nargs="+", choices=["intra", "extra"])
    run_p.add_argument("--feedback", nargs="+", choices=["immediate", "delayed", "counterfactual"])
    run_p.add_argument("--agents", type=int)
    run_p.add_argument("--seed", type=int)
    run_p.add_argument("--workers", type=int, default=None, help="parallel condition workers")
    run_p.add_argument("--out", required=True, help="output directory")
    run_p.set_defaults(func=cmd_run)

    met_p = sub.add_parser("metrics", help="summarize a results directory")
    met_p.add_argument("results_dir")
    met_p.add_argument("--format", choices=["table", "json"], default="table")
    met_p.set_defaults(func=cmd_metrics)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
