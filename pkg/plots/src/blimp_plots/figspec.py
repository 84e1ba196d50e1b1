"""Figure specification: what to read, which figure kind, where to write."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import yaml

KINDS = ("reward-curve", "roll-trace", "grid-heatmap")


class FigureSpecError(ValueError):
    """Raised when a figure spec is malformed or references missing inputs."""


@dataclass(frozen=True)
class FigureSpec:
    """One figure: input CSVs, kind, smoothing window, output stem.

    The output stem names the image pair; render() writes <out>.png and
    <out>.svg. The smoothing window applies to reward curves only and
    must be odd (window 1 disables smoothing).
    """

    inputs: tuple[Path, ...]
    kind: str
    out: Path
    window: int = 19
    labels: tuple[str, ...] = field(default=())

    def __post_init__(self) -> None:
        object.__setattr__(self, "inputs", tuple(Path(p) for p in self.inputs))
        object.__setattr__(self, "out", _strip_image_suffix(Path(self.out)))
        if self.kind not in KINDS:
            raise FigureSpecError(
                f"unknown figure kind {self.kind!r}; expected one of {KINDS}"
            )
        if not self.inputs:
            raise FigureSpecError("figure spec needs at least one input CSV")
        if self.window < 1 or self.window % 2 == 0:
            raise FigureSpecError(
                f"smoothing window must be odd and >= 1, got {self.window}"
            )
        if self.labels and len(self.labels) != len(self.inputs):
            raise FigureSpecError(
                f"{len(self.labels)} labels for {len(self.inputs)} inputs"
            )
        missing = [str(p) for p in self.inputs if not p.is_file()]
        if missing:
            raise FigureSpecError(f"input CSVs not found: {', '.join(missing)}")

    def label_for(self, index: int) -> str:
        if self.labels:
            return self.labels[index]
        return self.inputs[index].stem


def _strip_image_suffix(path: Path) -> Path:
    if path.suffix.lower() in (".png", ".svg"):
        return path.with_suffix("")
    return path


def load_figure_spec(path: str | Path) -> FigureSpec:
    """Reads a YAML figure spec; relative paths resolve against the file."""
    path = Path(path)
    try:
        doc = yaml.safe_load(path.read_text())
    except FileNotFoundError:
        raise FigureSpecError(f"figure spec not found: {path}")
    except yaml.YAMLError as err:
        raise FigureSpecError(f"figure spec {path} is not valid YAML: {err}")
    if not isinstance(doc, dict):
        raise FigureSpecError(f"figure spec {path} must be a YAML mapping")
    known = {"inputs", "kind", "out", "window", "labels"}
    unknown = sorted(set(doc) - known)
    if unknown:
        raise FigureSpecError(
            f"figure spec {path}: unknown keys: {', '.join(unknown)}"
        )
    for key in ("inputs", "kind", "out"):
        if key not in doc:
            raise FigureSpecError(f"figure spec {path}: missing key {key!r}")
    inputs = doc["inputs"]
    if isinstance(inputs, (str, Path)):
        inputs = [inputs]
    if not isinstance(inputs, list):
        raise FigureSpecError(f"figure spec {path}: inputs must be a list")
    base = path.parent
    labels = doc.get("labels", ())
    if isinstance(labels, str):
        labels = [labels]
    return FigureSpec(
        inputs=tuple(_resolve(base, p) for p in inputs),
        kind=str(doc["kind"]),
        out=_resolve(base, doc["out"]),
        window=int(doc.get("window", 19)),
        labels=tuple(str(s) for s in labels),
    )


def _resolve(base: Path, p) -> Path:
    p = Path(p)
    return p if p.is_absolute() else base / p
