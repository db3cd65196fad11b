"""Renders learning-curve panels and jumpstart bar charts from dimshift CSV output."""

from dimshift_plots.figures import (
    FigureSpec,
    InputError,
    load_curves,
    load_summary,
    plot_curves,
    plot_jumpstart,
)

__all__ = [
    "FigureSpec",
    "InputError",
    "load_curves",
    "load_summary",
    "plot_curves",
    "plot_jumpstart",
]

__version__ = "0.1.0"
