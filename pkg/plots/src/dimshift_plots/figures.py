"""Figure construction from dimshift result CSVs.

Consumes only the public CSV schema (curve_*.csv and summary.csv), never
modifying the inputs. All styling is fixed so identical inputs render
byte-identical figure files.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

CURVE_COLUMNS = (
    "condition",
    "model",
    "shift",
    "feedback",
    "trial",
    "mean_correct",
    "sd_correct",
    "n_agents",
)
SUMMARY_COLUMNS = (
    "model",
    "shift",
    "feedback",
    "jumpstart",
    "pre_asymptote",
    "final_asymptote",
)

MODEL_ORDER = ("frl", "wrl", "ibl", "wibl")
SHIFT_ORDER = ("intra", "extra")
FEEDBACK_ORDER = ("immediate", "delayed", "counterfactual")

MODEL_COLORS = {
    "frl": "#1f77b4",
    "wrl": "#ff7f0e",
    "ibl": "#2ca02c",
    "wibl": "#d62728",
}
MODEL_LABELS = {"frl": "FRL", "wrl": "WRL", "ibl": "IBL", "wibl": "WIBL"}

BAND_ALPHA = 0.15
FIG_DPI = 150


class InputError(ValueError):
    """Raised when the input directory or CSV schema is malformed."""


@dataclass(frozen=True)
class FigureSpec:
    """Where to read curve/summary CSVs and where to write figures."""

    in_dir: Path
    out_dir: Path
    shift_trial: int = 50
    curves_name: str = "curves.png"
    jumpstart_name: str = "jumpstart.png"


@dataclass
class Curve:
    model: str
    shift: str
    feedback: str
    trial: np.ndarray
    mean_correct: np.ndarray
    sd_correct: np.ndarray
    n_agents: int = 0


def _check_columns(header: list[str], expected: tuple[str, ...], path: Path) -> None:
    missing = [c for c in expected if c not in header]
    if missing:
        raise InputError(f"{path.name}: missing column {missing[0]!r}")


def load_curves(in_dir: Path) -> list[Curve]:
    """Read every curve_*.csv in ``in_dir`` into per-condition curves."""
    in_dir = Path(in_dir)
    paths = sorted(in_dir.glob("curve_*.csv"))
    if not paths:
        raise InputError(f"no curve_*.csv files in {in_dir}")
    curves = []
    for path in paths:
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            _check_columns(reader.fieldnames or [], CURVE_COLUMNS, path)
            rows = list(reader)
        if not rows:
            raise InputError(f"{path.name}: no data rows")
        curves.append(
            Curve(
                model=rows[0]["model"],
                shift=rows[0]["shift"],
                feedback=rows[0]["feedback"],
                trial=np.array([int(r["trial"]) for r in rows]),
                mean_correct=np.array([float(r["mean_correct"]) for r in rows]),
                sd_correct=np.array([float(r["sd_correct"]) for r in rows]),
                n_agents=int(rows[0]["n_agents"]),
            )
        )
    return curves


def load_summary(in_dir: Path) -> list[dict]:
    path = Path(in_dir) / "summary.csv"
    if not path.is_file():
        raise InputError(f"no summary.csv in {in_dir}")
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        _check_columns(reader.fieldnames or [], SUMMARY_COLUMNS, path)
        rows = []
        for r in reader:
            rows.append(
                {
                    "model": r["model"],
                    "shift": r["shift"],
                    "feedback": r["feedback"],
                    "jumpstart": float(r["jumpstart"]),
                    "pre_asymptote": float(r["pre_asymptote"]),
                    "final_asymptote": float(r["final_asymptote"]),
                }
            )
    return rows


def _ordered(values, order):
    present = set(values)
    return [v for v in order if v in present] + sorted(present - set(order))


def build_curves_figure(curves: list[Curve], shift_trial: int):
    """Panel grid: feedback regimes as columns, shift kinds as rows."""
    feedbacks = _ordered((c.feedback for c in curves), FEEDBACK_ORDER)
    shifts = _ordered((c.shift for c in curves), SHIFT_ORDER)
    fig, axes = plt.subplots(
        len(shifts),
        len(feedbacks),
        figsize=(4.0 * len(feedbacks), 3.0 * len(shifts)),
        sharex=True,
        sharey=True,
        squeeze=False,
    )
    by_cell: dict[tuple[str, str], list[Curve]] = {}
    for c in curves:
        by_cell.setdefault((c.shift, c.feedback), []).append(c)
    for i, shift in enumerate(shifts):
        for j, feedback in enumerate(feedbacks):
            ax = axes[i][j]
            for c in sorted(
                by_cell.get((shift, feedback), []),
                key=lambda c: MODEL_ORDER.index(c.model) if c.model in MODEL_ORDER else 99,
            ):
                color = MODEL_COLORS.get(c.model, "#7f7f7f")
                ax.plot(
                    c.trial,
                    c.mean_correct,
                    color=color,
                    label=MODEL_LABELS.get(c.model, c.model),
                    linewidth=1.5,
                )
                ax.fill_between(
                    c.trial,
                    c.mean_correct - c.sd_correct,
                    c.mean_correct + c.sd_correct,
                    color=color,
                    alpha=BAND_ALPHA,
                    linewidth=0,
                )
            ax.axvline(shift_trial + 0.5, color="black", linestyle="--", linewidth=1.0)
            ax.set_title(f"{feedback}, {shift}-dimensional shift", fontsize=10)
            ax.set_ylim(0.0, 1.05)
            if i == len(shifts) - 1:
                ax.set_xlabel("trial")
            if j == 0:
                ax.set_ylabel("p(correct)")
    handles, labels = axes[0][0].get_legend_handles_labels()
    if handles:
        fig.legend(handles, labels, loc="lower center", ncol=len(handles), frameon=False)
    fig.tight_layout(rect=(0, 0.06, 1, 1))
    return fig


def build_jumpstart_figure(summary: list[dict]):
    """Grouped bars of jumpstart(intra) - jumpstart(extra) per model per regime."""
    jump = {(r["model"], r["shift"], r["feedback"]): r["jumpstart"] for r in summary}
    models = _ordered((r["model"] for r in summary), MODEL_ORDER)
    feedbacks = _ordered((r["feedback"] for r in summary), FEEDBACK_ORDER)
    diffs = np.full((len(models), len(feedbacks)), np.nan)
    for mi, m in enumerate(models):
        for fi, f in enumerate(feedbacks):
            if (m, "intra", f) in jump and (m, "extra", f) in jump:
                diffs[mi, fi] = jump[(m, "intra", f)] - jump[(m, "extra", f)]
    if np.isnan(diffs).all():
        raise InputError("summary.csv has no model with both intra and extra rows")
    fig, ax = plt.subplots(figsize=(1.6 * len(feedbacks) * len(models) / 4 + 3, 3.5))
    width = 0.8 / len(models)
    x = np.arange(len(feedbacks))
    for mi, m in enumerate(models):
        ax.bar(
            x + (mi - (len(models) - 1) / 2) * width,
            diffs[mi],
            width,
            color=MODEL_COLORS.get(m, "#7f7f7f"),
            label=MODEL_LABELS.get(m, m),
        )
    ax.axhline(0.0, color="black", linewidth=0.8)
    ax.set_xticks(x)
    ax.set_xticklabels(feedbacks)
    ax.set_ylabel("jumpstart(ID) - jumpstart(ED)")
    ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    return fig


def _save(fig, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=FIG_DPI)
    plt.close(fig)
    return path


def plot_curves(spec: FigureSpec) -> Path:
    fig = build_curves_figure(load_curves(spec.in_dir), spec.shift_trial)
    return _save(fig, Path(spec.out_dir) / spec.curves_name)


def plot_jumpstart(spec: FigureSpec) -> Path:
    fig = build_jumpstart_figure(load_summary(spec.in_dir))
    return _save(fig, Path(spec.out_dir) / spec.jumpstart_name)
