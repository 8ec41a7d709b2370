"""Plain-text file formats: tracks, scenes, reports, and a three-view drawing.

Every file starts with a ``# invsfm <kind> <version>`` line.  Floats are
written with 17 significant digits so a write/read round trip is lossless.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import FormatError
from .groups import Variant
from .synth import Scene, PictureTracks

FORMAT_VERSION = "1"


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def _magic(kind):
    return f"# invsfm {kind} {FORMAT_VERSION}"


def _read_lines(path, kind):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc}") from exc
    lines = text.splitlines()
    if not lines or lines[0].strip() != _magic(kind):
        raise FormatError(f"{path}: expected first line {_magic(kind)!r}")
    return lines[1:]


def _float(s, where):
    try:
        v = float(s)
    except ValueError:
        raise FormatError(f"{where}: not a number: {s!r}") from None
    if not np.isfinite(v):
        raise FormatError(f"{where}: non-finite value")
    return v


def _int(s, where):
    try:
        return int(s)
    except ValueError:
        raise FormatError(f"{where}: not an integer: {s!r}") from None


# tracks

def write_tracks(path, tracks: PictureTracks):
    lines = [_magic("tracks"),
             f"# variant: {tracks.variant.value}",
             f"# n: {tracks.n}",
             f"# t: {tracks.t}",
             "# focals: " + ",".join(fmt(f) for f in tracks.focals),
             "# bounds: " + ",".join(fmt(b) for b in tracks.bounds),
             "# columns: tau,point_id,u,v"]
    for tau in range(tracks.t):
        for i, pid in enumerate(tracks.ids):
            u, v = tracks.uv[tau, i]
            lines.append(f"{tau + 1},{pid},{fmt(u)},{fmt(v)}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_tracks(path) -> PictureTracks:
    header, rows = {}, []
    for k, line in enumerate(_read_lines(path, "tracks"), start=2):
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            key, sep, value = line[1:].partition(":")
            if sep:
                header[key.strip()] = value.strip()
            continue
        parts = line.split(",")
        where = f"{path}:{k}"
        if len(parts) != 4:
            raise FormatError(f"{where}: expected tau,point_id,u,v")
        rows.append((_int(parts[0], where), _int(parts[1], where),
                     _float(parts[2], where), _float(parts[3], where)))

    for key in ("variant", "n", "t"):
        if key not in header:
            raise FormatError(f"{path}: missing header field {key!r}")
    try:
        variant = Variant.parse(header["variant"])
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from None
    n, t = _int(header["n"], path), _int(header["t"], path)
    if n < 1 or t < 1:
        raise FormatError(f"{path}: n and t must be positive")
    focals = (np.array([_float(f, path) for f in header["focals"].split(",")])
              if "focals" in header else np.ones(t))
    if len(focals) != t or np.any(focals <= 0):
        raise FormatError(f"{path}: need {t} positive focal lengths")
    bounds = (tuple(_float(b, path) for b in header["bounds"].split(","))
              if "bounds" in header else None)
    if bounds is not None and len(bounds) != 4:
        raise FormatError(f"{path}: bounds need four values")

    uv = np.full((t, n, 2), np.nan)
    for tau, pid, u, v in rows:
        if not 1 <= tau <= t:
            raise FormatError(f"{path}: picture index {tau} outside 1..{t}")
        if not 1 <= pid <= n:
            raise FormatError(f"{path}: point id {pid} outside 1..{n}")
        if not np.isnan(uv[tau - 1, pid - 1, 0]):
            raise FormatError(f"{path}: duplicate observation of point {pid} in picture {tau}")
        uv[tau - 1, pid - 1] = u, v
    if np.isnan(uv).any():
        tau, pid = np.argwhere(np.isnan(uv[..., 0]))[0] + 1
        raise FormatError(f"{path}: point {pid} missing from picture {tau}")
    kwargs = {} if bounds is None else {"bounds": bounds}
    return PictureTracks(uv, tuple(range(1, n + 1)), focals, variant=variant, **kwargs)


# scenes

def write_scene(path, scene: Scene):
    lines = [_magic("scene"), "# columns: point_id,x,y,z"]
    for pid, p in zip(scene.ids, scene.points):
        lines.append(",".join([str(pid)] + [fmt(c) for c in p]))
    Path(path).write_text("\n".join(lines) + "\n")


def read_scene(path) -> Scene:
    ids, pts = [], []
    for k, line in enumerate(_read_lines(path, "scene"), start=2):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split(",")
        where = f"{path}:{k}"
        if len(parts) != 4:
            raise FormatError(f"{where}: expected point_id,x,y,z")
        ids.append(_int(parts[0], where))
        pts.append([_float(c, where) for c in parts[1:]])
    if not pts:
        raise FormatError(f"{path}: no points")
    if len(set(ids)) != len(ids):
        raise FormatError(f"{path}: duplicate point ids")
    return Scene(np.array(pts), tuple(ids))


# reports

@dataclass
class Report:
    """Key-value fields followed by named CSV tables."""

    kind: str = "report"
    values: dict = field(default_factory=dict)
    tables: dict = field(default_factory=dict)

    def add_table(self, name, columns, rows):
        self.tables[name] = (list(columns), [list(r) for r in rows])

    def table_array(self, name, columns=None) -> np.ndarray:
        cols, rows = self.tables[name]
        idx = [cols.index(c) for c in columns] if columns else range(len(cols))
        return np.array([[float(r[i]) for i in idx] for r in rows])

    def to_text(self) -> str:
        out = [_magic("report"), f"kind = {self.kind}"]
        for key, value in self.values.items():
            if isinstance(value, (float, np.floating)) and not np.isfinite(value):
                raise FormatError(f"report field {key!r} is not finite")
            out.append(f"{key} = {fmt(value)}")
        for name, (cols, rows) in self.tables.items():
            buf = io.StringIO()
            writer = csv.writer(buf, lineterminator="\n")
            writer.writerow(cols)
            writer.writerows([[fmt(c) for c in r] for r in rows])
            out += ["", f"[{name}]", buf.getvalue().rstrip("\n")]
        return "\n".join(out) + "\n"

    def write(self, path):
        Path(path).write_text(self.to_text())

    @classmethod
    def from_text(cls, text: str, source="report") -> "Report":
        lines = text.splitlines()
        if not lines or lines[0].strip() != _magic("report"):
            raise FormatError(f"{source}: expected first line {_magic('report')!r}")
        rep = cls()
        k = 1
        while k < len(lines) and not lines[k].startswith("["):
            key, sep, value = lines[k].partition(" = ")
            if sep:
                if key == "kind":
                    rep.kind = value
                else:
                    rep.values[key] = value
            k += 1
        while k < len(lines):
            line = lines[k]
            if line.startswith("[") and line.endswith("]"):
                block = []
                k += 1
                while k < len(lines) and lines[k].strip():
                    block.append(lines[k])
                    k += 1
                rows = list(csv.reader(block))
                if not rows:
                    raise FormatError(f"{source}: table {line} has no header")
                rep.tables[line[1:-1]] = (rows[0], rows[1:])
            else:
                k += 1
        return rep

    @classmethod
    def read(cls, path) -> "Report":
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise FormatError(f"cannot read {path}: {exc}") from exc
        return cls.from_text(text, str(path))


# drawing

def draw_three_views(points, path, cameras=None, title=""):
    """Front, top and side orthographic views of a point cloud as SVG."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    views = [("front (x-z)", 0, 2), ("top (x-y)", 0, 1), ("side (y-z)", 1, 2)]
    with matplotlib.rc_context({"svg.hashsalt": "invsfm", "svg.fonttype": "none"}):
        fig, axes = plt.subplots(1, 3, figsize=(12, 4))
        for ax, (name, i, j) in zip(axes, views):
            ax.scatter(points[:, i], points[:, j], s=12, color="k")
            if cameras is not None and len(cameras):
                cams = np.asarray(cameras, dtype=np.float64).reshape(-1, 3)
                ax.plot(cams[:, i], cams[:, j], "^-", color="tab:red", ms=5, lw=0.8)
            ax.set_title(name)
            ax.set_aspect("equal", adjustable="datalim")
        if title:
            fig.suptitle(title)
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
