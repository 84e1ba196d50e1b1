"""Offline figure emission for blimp-invert CSV artifacts.

This package consumes the run harness's documented CSV schemas (training
logs, rollout traces, grid matrices) and renders publication-style PNG
and SVG figures. It never imports the simulator or trainer; files are
the only interface.
"""

from .figspec import FigureSpec, FigureSpecError, load_figure_spec
from .render import render
from .schema import SchemaError
from .smoothing import moving_average

__version__ = "0.1.0"

__all__ = [
    "FigureSpec",
    "FigureSpecError",
    "SchemaError",
    "load_figure_spec",
    "moving_average",
    "render",
    "__version__",
]
