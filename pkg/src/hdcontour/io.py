"""
CSV and JSON readers/writers, plus a minimal SVG plot writer.

Numbers are written in Python's shortest round-trip representation so that
output files are byte-stable.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import math
from datetime import datetime
from pathlib import Path

import numpy as np

from . import __version__
from .core import Dataset, DensityGrid, GridAxis, HdContourError

log = logging.getLogger(__name__)

TOOL = "hdcontour"


class IoError(HdContourError, OSError):
    pass


class SchemaError(HdContourError, ValueError):
    pass


class RangeError(HdContourError, ValueError):
    pass


def fmt(x) -> str:
    """Shortest decimal string that round-trips to the same double."""
    return repr(float(x))


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def _parse_time(text):
    text = text.strip()
    if not text:
        return None
    if text.endswith("Z"):
        text = text[:-1] + "+00:00"
    return datetime.fromisoformat(text)


def load_csv(path, columns=None, state_duration_hours: float = 1.0, skip_invalid: bool = False) -> Dataset:
    """
    Read a headered CSV of ``time`` (optional), ``hs_m`` and ``v_ms`` columns.

    ``columns`` maps ``time``/``hs``/``v`` to the header names in the file
    (a :class:`~hdcontour.config.ColumnMap` or a dict). Invalid rows are
    reported with their line numbers; unless ``skip_invalid`` any invalid row
    aborts the load.

    Raises
    ------
    IoError
        File missing or unreadable.
    SchemaError
        Required column absent, or a row that does not parse.
    RangeError
        Negative wave height or wind speed.
    """
    if columns is None:
        names = {"time": "time", "hs": "hs_m", "v": "v_ms"}
    elif isinstance(columns, dict):
        names = {"time": "time", "hs": "hs_m", "v": "v_ms", **columns}
    else:
        names = {"time": columns.time, "hs": columns.hs, "v": columns.v}
    path = Path(path)
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise IoError(f"cannot open {path}: {exc}") from exc

    hs, v, times, rejected = [], [], [], []
    with fh:
        # comment lines starting with '#' are skipped; line numbers refer to the file
        reader = _numbered_csv(_strip_comments(fh))
        try:
            header_line, header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path} is empty") from None
        header = [h.strip() for h in header]
        for key in ("hs", "v"):
            if names[key] not in header:
                raise SchemaError(f"{path}: missing column {names[key]!r} (found {header})")
        i_hs, i_v = header.index(names["hs"]), header.index(names["v"])
        i_t = header.index(names["time"]) if names["time"] in header else None
        kinds = {}
        for lineno, row in reader:
            if not row or all(not c.strip() for c in row):
                continue
            try:
                if len(row) != len(header):
                    raise SchemaError(f"expected {len(header)} fields, got {len(row)}")
                h = float(row[i_hs])
                w = float(row[i_v])
                if not (math.isfinite(h) and math.isfinite(w)):
                    raise SchemaError("non-finite value")
                if h < 0 or w < 0:
                    raise RangeError(f"negative value (hs={h}, v={w})")
                t = _parse_time(row[i_t]) if i_t is not None else None
            except (ValueError, SchemaError, RangeError) as exc:
                kind = RangeError if isinstance(exc, RangeError) else SchemaError
                kinds[lineno] = kind
                rejected.append((lineno, str(exc)))
                continue
            hs.append(h)
            v.append(w)
            times.append(t)

    if rejected:
        summary = "; ".join(f"line {ln}: {msg}" for ln, msg in rejected[:20])
        if len(rejected) > 20:
            summary += f"; ... ({len(rejected)} rejected rows in total)"
        if not skip_invalid:
            kind = RangeError if all(k is RangeError for k in kinds.values()) else SchemaError
            raise kind(f"{path}: {len(rejected)} invalid row(s): {summary}")
        log.warning("%s: skipped %d invalid row(s): %s", path, len(rejected), summary)
    if len(hs) < 2:
        raise SchemaError(f"{path}: need at least 2 valid rows, got {len(hs)}")
    has_times = i_t is not None and any(t is not None for t in times)
    return Dataset(hs, v, state_duration_hours, times if has_times else None, rejected=rejected)


def _strip_comments(lines):
    for lineno, line in enumerate(lines, start=1):
        if line.lstrip().startswith("#"):
            continue
        yield lineno, line


def _numbered_csv(pairs):
    for lineno, line in pairs:
        for row in csv.reader([line]):
            yield lineno, row


def _header_lines(meta: dict) -> list:
    return [f"# {k}={v}" for k, v in meta.items()]


def write_csv(dataset: Dataset, path, meta: dict = None) -> None:
    """Write a dataset in the input schema."""
    path = Path(path)
    with open(path, "w", newline="") as fh:
        for line in _header_lines(meta or {}):
            fh.write(line + "\n")
        w = csv.writer(fh, lineterminator="\n")
        if dataset.times is not None:
            w.writerow(["time", "hs_m", "v_ms"])
            for t, h, v in zip(dataset.times, dataset.hs, dataset.v):
                w.writerow([t.isoformat() if t is not None else "", fmt(h), fmt(v)])
        else:
            w.writerow(["hs_m", "v_ms"])
            for h, v in zip(dataset.hs, dataset.v):
                w.writerow([fmt(h), fmt(v)])


def write_contour_csv(result, path, meta: dict) -> None:
    """Contour vertices, one row per vertex; threshold and mass in the header."""
    meta = dict(meta)
    meta.update({
        "f_m": fmt(result.threshold),
        "alpha": fmt(result.alpha.alpha),
        "enclosed_mass": fmt(result.enclosed_mass),
        "boundary_loops": ",".join(str(i) for i, b in enumerate(result.contour.boundary) if b) or "none",
    })
    with open(path, "w", newline="") as fh:
        for line in _header_lines(meta):
            fh.write(line + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["loop_id", "vertex_id", "hs_m", "v_ms"])
        for li, loop in enumerate(result.contour.loops):
            for vi, (h, v) in enumerate(loop):
                w.writerow([li, vi, fmt(h), fmt(v)])


def read_contour_csv(path) -> tuple:
    """Return ``(meta, loops)`` from a contour CSV."""
    meta, rows = _read_with_meta(path)
    loops = {}
    for r in rows:
        loops.setdefault(int(r["loop_id"]), []).append((float(r["hs_m"]), float(r["v_ms"])))
    return meta, [np.array(loops[k]) for k in sorted(loops)]


def write_design_csv(conditions, path, meta: dict) -> None:
    with open(path, "w", newline="") as fh:
        for line in _header_lines(meta):
            fh.write(line + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["label", "hs_m", "v_ms"])
        for c in conditions:
            w.writerow([c.label, fmt(c.hs), fmt(c.v)])


def write_density_csv(grid: DensityGrid, path, meta: dict) -> None:
    meta = dict(meta)
    meta.update({
        "hs_axis": f"{fmt(grid.hs_axis.origin)},{fmt(grid.hs_axis.step)},{grid.hs_axis.count}",
        "v_axis": f"{fmt(grid.v_axis.origin)},{fmt(grid.v_axis.step)},{grid.v_axis.count}",
    })
    x, y = grid.hs_axis.coords, grid.v_axis.coords
    with open(path, "w", newline="") as fh:
        for line in _header_lines(meta):
            fh.write(line + "\n")
        fh.write("i,j,hs_m,v_ms,f\n")
        for i in range(grid.hs_axis.count):
            xi = fmt(x[i])
            row = grid.values[i]
            fh.write("".join(f"{i},{j},{xi},{fmt(y[j])},{fmt(row[j])}\n" for j in range(grid.v_axis.count)))


def read_density_csv(path) -> DensityGrid:
    meta, rows = _read_with_meta(path)
    try:
        o, s, c = meta["hs_axis"].split(",")
        hs_axis = GridAxis(float(o), float(s), int(c))
        o, s, c = meta["v_axis"].split(",")
        v_axis = GridAxis(float(o), float(s), int(c))
    except (KeyError, ValueError) as exc:
        raise SchemaError(f"{path}: missing or malformed axis metadata") from exc
    values = np.zeros((hs_axis.count, v_axis.count))
    for r in rows:
        values[int(r["i"]), int(r["j"])] = float(r["f"])
    return DensityGrid(hs_axis, v_axis, values)


def _read_with_meta(path):
    meta = {}
    body = []
    try:
        with open(path, newline="") as fh:
            for line in fh:
                if line.startswith("#"):
                    k, _, v = line[1:].strip().partition("=")
                    meta[k.strip()] = v.strip()
                else:
                    body.append(line)
    except OSError as exc:
        raise IoError(f"cannot open {path}: {exc}") from exc
    return meta, list(csv.DictReader(body))


def write_json(obj, path) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n")


def _json_default(o):
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"cannot serialize {type(o).__name__}")


def standard_meta(config_digest: str, input_digest: str, **extra) -> dict:
    meta = {"tool": f"{TOOL} {__version__}", "config_sha256": config_digest, "input_sha256": input_digest}
    meta.update({k: v for k, v in extra.items()})
    return meta


# ---------------------------------------------------------------------------
# SVG

_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def write_svg(path, dataset: Dataset, contours, title: str = "", max_points: int = 20000,
              width: int = 640, height: int = 480) -> None:
    """
    Scatter of the data with contour loops drawn on top.

    ``contours`` is a list of ``(label, Contour)``. Loops of labels containing
    "cma" are dashed.
    """
    margin = 50
    pts_all = [dataset.hs, dataset.v]
    xs = [np.asarray(pts_all[0])]
    ys = [np.asarray(pts_all[1])]
    for _, c in contours:
        if not c.is_empty:
            vv = c.vertices()
            xs.append(vv[:, 0])
            ys.append(vv[:, 1])
    xmax = max(float(a.max()) for a in xs) * 1.05
    ymax = max(float(a.max()) for a in ys) * 1.05

    def px(x):
        return margin + x / xmax * (width - 2 * margin)

    def py(y):
        return height - margin - y / ymax * (height - 2 * margin)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<path d="M{margin} {height - margin}H{width - margin}M{margin} {height - margin}V{margin}" '
        'stroke="black" fill="none"/>',
        f'<text x="{width / 2}" y="{height - 12}" text-anchor="middle" font-size="12">'
        "significant wave height (m)</text>",
        f'<text x="14" y="{height / 2}" text-anchor="middle" font-size="12" '
        f'transform="rotate(-90 14 {height / 2})">wind speed (m/s)</text>',
    ]
    if title:
        out.append(f'<text x="{width / 2}" y="20" text-anchor="middle" font-size="14">{title}</text>')
    for tick in _ticks(xmax):
        out.append(f'<text x="{px(tick):.1f}" y="{height - margin + 15}" text-anchor="middle" '
                   f'font-size="10">{tick:g}</text>')
    for tick in _ticks(ymax):
        out.append(f'<text x="{margin - 6}" y="{py(tick) + 3:.1f}" text-anchor="end" '
                   f'font-size="10">{tick:g}</text>')

    n = dataset.n
    idx = np.arange(n) if n <= max_points else np.linspace(0, n - 1, max_points).astype(int)
    dots = "".join(f"M{px(dataset.hs[i]):.1f} {py(dataset.v[i]):.1f}h1v1h-1z" for i in idx)
    out.append(f'<path d="{dots}" fill="#999999" stroke="#999999" stroke-width="0.5"/>')

    for k, (label, c) in enumerate(contours):
        color = _COLORS[k % len(_COLORS)]
        dash = ' stroke-dasharray="6 3"' if "cma" in label else ""
        for loop in c.loops:
            d = "M" + "L".join(f"{px(x):.2f} {py(y):.2f}" for x, y in loop) + "Z"
            out.append(f'<path d="{d}" fill="none" stroke="{color}" stroke-width="1.5"{dash}/>')
        out.append(f'<text x="{width - margin}" y="{margin + 14 * k}" text-anchor="end" font-size="11" '
                   f'fill="{color}">{label}</text>')
    out.append("</svg>")
    Path(path).write_text("\n".join(out) + "\n")


def _ticks(vmax):
    raw = vmax / 5
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=mag)
    return [i * step for i in range(int(vmax / step) + 1)]
