"""File emission: CSV with round-trip floats, JSON, SVG phase portraits, run manifests."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .model import ModelParams

# line styles per shock class: solid 2-Lax, dashed 1-Lax, dash-dot over-compressive
CLASS_STYLE = {
    "Lax2": "",
    "Lax1": "6,4",
    "OverCompressive": "8,3,2,3",
    "Inadmissible": "1,3",
}
CLASS_COLOR = {
    "Lax2": "#1f4e9c",
    "Lax1": "#b8421c",
    "OverCompressive": "#2b7a2b",
    "Inadmissible": "#888888",
}


def _plain(obj):
    """Convert numpy scalars/arrays and tuples for ``json``."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def dumps(obj) -> str:
    return json.dumps(_plain(obj), indent=2, sort_keys=True, allow_nan=True) + "\n"


def write_json(path: str | Path, obj) -> Path:
    path = Path(path)
    path.write_text(dumps(obj), encoding="utf-8")
    return path


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path: str | Path, header: list[str], rows) -> Path:
    """CSV with a header line; floats printed in shortest round-trip form."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_cell(v) for v in row])
    return path


def read_csv(path: str | Path) -> tuple[list[str], list[list[str]]]:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


# ----------------------------------------------------------------------- SVG

class PhasePlot:
    """SVG drawing of the unit box with the phase triangle; ``phi_1`` right, ``phi_2`` up."""

    def __init__(self, size: int = 480, margin: int = 40, window=(0.0, 1.0, 0.0, 1.0), title: str = ""):
        self.size = size
        self.margin = margin
        self.window = window
        self.title = title
        self.items: list[str] = []

    def xy(self, s) -> tuple[float, float]:
        x0, x1, y0, y1 = self.window
        w = self.size - 2 * self.margin
        px = self.margin + (float(s[0]) - x0) / (x1 - x0) * w
        py = self.size - self.margin - (float(s[1]) - y0) / (y1 - y0) * w
        return round(px, 3), round(py, 3)

    def polyline(self, pts, color: str = "#000000", dash: str = "", width: float = 1.5):
        pts = [self.xy(q) for q in pts]
        if len(pts) < 2:
            return
        coords = " ".join(f"{a},{b}" for a, b in pts)
        extra = f' stroke-dasharray="{dash}"' if dash else ""
        self.items.append(f'<polyline points="{coords}" fill="none" stroke="{color}" '
                          f'stroke-width="{width}"{extra}/>')

    def point(self, s, color: str = "#000000", r: float = 3.0, label: str = ""):
        x, y = self.xy(s)
        self.items.append(f'<circle cx="{x}" cy="{y}" r="{r}" fill="{color}"/>')
        if label:
            self.items.append(f'<text x="{x + 4}" y="{y - 4}" font-size="11">{label}</text>')

    def cells(self, pts, dx: float, dy: float, color: str = "#cccccc"):
        """Filled rectangles centred at ``pts`` (for sign maps)."""
        x0, x1, y0, y1 = self.window
        w = (self.size - 2 * self.margin)
        pw = dx / (x1 - x0) * w
        ph = dy / (y1 - y0) * w
        for q in pts:
            x, y = self.xy(q)
            self.items.append(f'<rect x="{round(x - pw / 2, 3)}" y="{round(y - ph / 2, 3)}" '
                              f'width="{round(pw, 3)}" height="{round(ph, 3)}" fill="{color}"/>')

    def shock_segments(self, pts, classes):
        """Draw a sampled locus, switching style whenever the shock class changes."""
        start = 0
        for k in range(1, len(pts) + 1):
            if k == len(pts) or classes[k] != classes[start]:
                lo = start - 1 if k == len(pts) and k - start == 1 and start else start
                seg = pts[lo:min(k + 1, len(pts))]
                c = classes[start]
                self.polyline(seg, CLASS_COLOR.get(c, "#000000"), CLASS_STYLE.get(c, ""))
                start = k

    def render(self) -> str:
        s = self.size
        frame = [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (0.0, 0.0)]
        tri = " ".join(f"{a},{b}" for a, b in (self.xy(q) for q in frame))
        head = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{s}" height="{s}" viewBox="0 0 {s} {s}">',
                f'<rect x="0" y="0" width="{s}" height="{s}" fill="#ffffff"/>']
        if self.title:
            head.append(f'<text x="{self.margin}" y="{self.margin / 2}" font-size="13">{self.title}</text>')
        body = self.items + [f'<polyline points="{tri}" fill="none" stroke="#000000" stroke-width="1"/>']
        x, y = self.xy((1.0, 0.0))
        body.append(f'<text x="{x - 20}" y="{y + 18}" font-size="12">phi_1</text>')
        x, y = self.xy((0.0, 1.0))
        body.append(f'<text x="{x - 34}" y="{y + 4}" font-size="12">phi_2</text>')
        return "\n".join(head + body + ["</svg>"]) + "\n"

    def write(self, path: str | Path) -> Path:
        path = Path(path)
        path.write_text(self.render(), encoding="utf-8")
        return path


# ------------------------------------------------------------------- manifest

@dataclass
class RunManifest:
    command: str
    params: ModelParams
    options: dict = field(default_factory=dict)
    outputs: list[str] = field(default_factory=list)
    derived: dict = field(default_factory=dict)
    version: str = __version__
    results: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "command": self.command,
            "params": self.params.to_dict(),
            "options": dict(self.options),
            "outputs": list(self.outputs),
            "derived": dict(self.derived),
            "version": self.version,
            "results": dict(self.results),
        }

    def write(self, path: str | Path) -> Path:
        return write_json(path, self.to_dict())

    @classmethod
    def read(cls, path: str | Path) -> "RunManifest":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(data["command"], ModelParams.from_dict(data["params"]), data.get("options", {}),
                   data.get("outputs", []), data.get("derived", {}), data.get("version", ""),
                   data.get("results", {}))
