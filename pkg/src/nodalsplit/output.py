"""Deterministic file writers: CSV, JSON, SVG and the binary field dump."""
from __future__ import annotations

import json
import math
import struct
from pathlib import Path

import numpy as np

MAGIC = b"NSPL"
DUMP_VERSION = 1
_HEADER = struct.Struct("<4sIIIIId")  # magic, version, nx, ny, k, reserved, eta: 32 bytes
assert _HEADER.size == 32


def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return f"{x:.12g}"
    return str(x)


def write_csv(path, columns, rows, config_hash: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [f"# config_hash={config_hash}", ",".join(columns)]
    for row in rows:
        vals = [row.get(c) for c in columns] if isinstance(row, dict) else list(row)
        lines.append(",".join(fmt(v) for v in vals))
    path.write_text("\n".join(lines) + "\n")
    return path


def read_csv(path) -> tuple:
    lines = [l for l in Path(path).read_text().splitlines() if not l.startswith("#")]
    cols = lines[0].split(",")
    return cols, [dict(zip(cols, l.split(","))) for l in lines[1:]]


def _round(obj):
    if isinstance(obj, dict):
        return {str(k): _round(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if not math.isfinite(x) else float(f"{x:.12g}")
    if isinstance(obj, np.ndarray):
        return _round(obj.tolist())
    return obj


def write_json(path, obj: dict, config_hash: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    body = {"config_hash": config_hash, **_round(obj)}
    # NaN is not JSON; write null instead
    text = json.dumps(body, sort_keys=True, indent=2, allow_nan=True)
    text = text.replace("NaN", "null").replace("-Infinity", "null").replace("Infinity", "null")
    path.write_text(text + "\n")
    return path


def dump_field(path, field: np.ndarray, k: int, eta: float) -> Path:
    """Row-major float64 samples after a 32-byte header; field shape is (ny + 1, nx + 1)."""
    field = np.ascontiguousarray(field, dtype="<f8")
    ny, nx = field.shape[0] - 1, field.shape[1] - 1
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, DUMP_VERSION, nx, ny, k, 0, float(eta)))
        fh.write(field.tobytes())
    return path


def load_field(path) -> tuple:
    raw = Path(path).read_bytes()
    magic, version, nx, ny, k, _, eta = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise ValueError(f"{path}: not a field dump (magic {magic!r})")
    if version != DUMP_VERSION:
        raise ValueError(f"{path}: unsupported dump version {version}")
    data = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size)
    if data.size != (nx + 1) * (ny + 1):
        raise ValueError(f"{path}: expected {(nx + 1) * (ny + 1)} samples, found {data.size}")
    return data.reshape(ny + 1, nx + 1).copy(), {"nx": nx, "ny": ny, "k": k, "eta": eta}


# --- SVG ---------------------------------------------------------------------

def _pts(points, tx, ty) -> str:
    return " ".join(f"{tx(x):.3f},{ty(y):.3f}" for x, y in points)


def write_svg(path, outline, curves, config_hash: str, title: str = "", overlay=None,
              width: float = 720.0, margin: float = 20.0) -> Path:
    """Domain outline and nodal polylines, physical coordinates, y up.

    overlay is an optional list of extra polylines (e.g. a fitted hyperbola) drawn dashed.
    """
    outline = np.asarray(outline, dtype=float)
    x0, x1 = float(outline[:, 0].min()), float(outline[:, 0].max())
    y0, y1 = float(outline[:, 1].min()), float(outline[:, 1].max())
    s = (width - 2 * margin) / max(x1 - x0, 1e-12)
    height = (y1 - y0) * s + 2 * margin
    tx = lambda x: margin + (x - x0) * s
    ty = lambda y: height - margin - (y - y0) * s
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f"<!-- config_hash={config_hash} -->",
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0f}" height="{height:.0f}" '
        f'viewBox="0 0 {width:.0f} {height:.0f}">',
    ]
    if title:
        out.append(f"<title>{title}</title>")
    out.append(f'<polygon points="{_pts(outline, tx, ty)}" fill="none" stroke="black" stroke-width="1.5"/>')
    for c in curves:
        p = np.asarray(getattr(c, "points", c))
        tag = "polygon" if getattr(c, "closed", False) else "polyline"
        out.append(f'<{tag} points="{_pts(p, tx, ty)}" fill="none" stroke="#c0392b" stroke-width="1.2"/>')
    for c in overlay or ():
        out.append(f'<polyline points="{_pts(np.asarray(c), tx, ty)}" fill="none" stroke="#2471a3" '
                   f'stroke-width="0.8" stroke-dasharray="4,3"/>')
    out.append("</svg>")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(out) + "\n")
    return path


def domain_outline(N: float, left_x=None, samples: int = 200) -> np.ndarray:
    """Closed outline of {left_x(y) <= x <= N}, counter-clockwise from the origin."""
    ys = np.linspace(0.0, 1.0, samples)
    left = np.zeros_like(ys) if left_x is None else np.asarray(left_x(ys), dtype=float)
    bottom = [(left[0], 0.0), (N, 0.0)]
    right = [(N, 1.0)]
    left_side = list(zip(left[::-1], ys[::-1]))
    return np.array(bottom + right + left_side)
