"""Figure rendering: documented CSVs in, deterministic PNG + SVG out."""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg", force=True)

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .figspec import FigureSpec
from .schema import COLUMNS_BY_KIND, SchemaError, read_table
from .smoothing import moving_average

# Fixed style seed: keeps SVG element ids stable so identical inputs
# produce byte-identical output files.
_HASH_SALT = "blimp-plots"
_FIGSIZE = (6.4, 4.0)
_DPI = 150


def render(spec: FigureSpec) -> list[Path]:
    """Renders one figure spec; returns the written image paths."""
    tables = [read_table(p, COLUMNS_BY_KIND[spec.kind]) for p in spec.inputs]
    plt.rcParams["svg.hashsalt"] = _HASH_SALT
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    try:
        if spec.kind == "reward-curve":
            _reward_curve(ax, spec, tables)
        elif spec.kind == "roll-trace":
            _roll_trace(ax, spec, tables)
        else:
            _grid_heatmap(fig, ax, spec, tables)
        fig.tight_layout()
        spec.out.parent.mkdir(parents=True, exist_ok=True)
        png = spec.out.with_suffix(".png")
        svg = spec.out.with_suffix(".svg")
        fig.savefig(png, dpi=_DPI)
        fig.savefig(svg, metadata={"Date": None})
        return [png, svg]
    finally:
        plt.close(fig)


def _reward_curve(ax, spec: FigureSpec, tables: list[dict]) -> None:
    for i, cols in enumerate(tables):
        episodes = cols["episode"]
        rewards = cols["reward"]
        smoothed = moving_average(rewards, spec.window)
        (line,) = ax.plot(
            episodes, smoothed, linewidth=1.8, label=spec.label_for(i)
        )
        ax.plot(
            episodes, rewards, linewidth=0.6, alpha=0.3, color=line.get_color()
        )
    ax.set_xlabel("episode")
    ax.set_ylabel(f"episode return ({spec.window}-episode moving average)")
    ax.grid(True, alpha=0.3)
    ax.legend(loc="upper left")


def _roll_trace(ax, spec: FigureSpec, tables: list[dict]) -> None:
    for i, cols in enumerate(tables):
        ax.plot(
            cols["t"],
            [abs(v) for v in cols["phi"]],
            linewidth=1.2,
            label=spec.label_for(i),
        )
    ax.axhline(
        math.pi, color="black", linestyle="--", linewidth=0.9, label="target"
    )
    ax.set_xlabel("time [s]")
    ax.set_ylabel("|roll angle| [rad]")
    ax.set_ylim(0.0, math.pi + 0.4)
    ax.grid(True, alpha=0.3)
    ax.legend(loc="lower right")


def _grid_heatmap(fig, ax, spec: FigureSpec, tables: list[dict]) -> None:
    if len(tables) != 1:
        raise SchemaError(
            f"{spec.out}: grid-heatmap takes exactly one input CSV, "
            f"got {len(spec.inputs)}"
        )
    cols = tables[0]
    cells = sorted(
        {(m, l, g) for m, l, g in zip(cols["m_w"], cols["lam"], cols["g_m"])}
    )
    controllers = sorted(set(cols["controller"]))
    grid = [[float("nan")] * len(cells) for _ in controllers]
    for i in range(len(cols["m_w"])):
        cell = (cols["m_w"][i], cols["lam"][i], cols["g_m"][i])
        row = controllers.index(cols["controller"][i])
        grid[row][cells.index(cell)] = cols["success"][i]
    image = ax.imshow(
        grid, cmap="RdYlGn", vmin=0.0, vmax=1.0, aspect="auto"
    )
    ax.set_xticks(range(len(cells)))
    ax.set_xticklabels(
        [f"{m * 1000:g}g\n{l:g}\n{g:g}" for m, l, g in cells], fontsize=7
    )
    ax.set_yticks(range(len(controllers)))
    ax.set_yticklabels(controllers)
    ax.set_xlabel("cell (extra weight / weight split / motor gain)")
    fig.colorbar(image, ax=ax, label="majority success", shrink=0.8)
