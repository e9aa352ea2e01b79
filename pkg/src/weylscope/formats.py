"""
File formats: model definitions, coupling matrices, region requests, SVG.

Complex numbers are written as ``[re, im]`` pairs.  Every JSON document we
emit carries ``"schema_version"``; readers accept a missing version or one
with the same major number and reject anything else.
"""

from __future__ import annotations

import json
import math
from typing import Iterable

import numpy as np

from .models import Edge, MetricGraph, PointLattice, ScalarProfile

SCHEMA_VERSION = "1.0"


class FormatError(ValueError):
    pass


def check_schema(obj: dict):
    ver = obj.get("schema_version")
    if ver is None:
        return
    major = str(ver).split(".")[0]
    if major != SCHEMA_VERSION.split(".")[0]:
        raise FormatError(f"unsupported schema_version {ver!r} (expected {SCHEMA_VERSION})")


def _strict_keys(obj: dict, allowed: Iterable[str], where: str, required: Iterable[str] = ()):
    if not isinstance(obj, dict):
        raise FormatError(f"{where}: expected an object")
    extra = set(obj) - set(allowed) - {"schema_version"}
    if extra:
        raise FormatError(f"{where}: unknown keys {sorted(extra)}")
    missing = set(required) - set(obj)
    if missing:
        raise FormatError(f"{where}: missing keys {sorted(missing)}")


def _number(x, where):
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise FormatError(f"{where}: expected a number, got {x!r}")
    return float(x)


def model_from_json(obj: dict):
    """Build a model from its JSON definition (strict: unknown keys are errors)."""
    if not isinstance(obj, dict) or "kind" not in obj:
        raise FormatError("model: missing 'kind'")
    check_schema(obj)
    kind = obj["kind"]
    try:
        if kind == "graph":
            _strict_keys(obj, ("kind", "vertices", "edges"), "graph", ("vertices", "edges"))
            edges = []
            for i, e in enumerate(obj["edges"]):
                _strict_keys(e, ("from", "to", "length"), f"edge {i}", ("from", "to"))
                if e["to"] == "inf":
                    if e.get("length", "inf") != "inf":
                        raise FormatError(f"edge {i}: infinite edges need length 'inf'")
                    edges.append(Edge(e["from"]))
                else:
                    if "length" not in e or e["length"] == "inf":
                        raise FormatError(f"edge {i}: finite edge needs a numeric length")
                    edges.append(Edge(e["from"], e["to"], _number(e["length"], f"edge {i} length")))
            return MetricGraph(tuple(obj["vertices"]), tuple(edges))
        if kind == "lattice":
            _strict_keys(obj, ("kind", "points", "d", "window"), "lattice", ("points", "d"))
            window = obj.get("window", "exact")
            if window == "exact":
                tail = None
            else:
                _strict_keys(window, ("tail_tol",), "lattice window", ("tail_tol",))
                tail = _number(window["tail_tol"], "tail_tol")
            pts = [_number(x, "lattice point") for x in obj["points"]]
            return PointLattice(tuple(pts), _number(obj["d"], "d"), tail)
        if kind == "profile":
            _strict_keys(obj, ("kind", "profile"), "profile", ("profile",))
            spec = obj["profile"]
            if spec in ("half_space", "hyperplane_delta"):
                return ScalarProfile(spec)
            if isinstance(spec, dict) and set(spec) == {"star"}:
                n = spec["star"]
                if isinstance(n, bool) or not isinstance(n, int):
                    raise FormatError("star edge count must be an integer")
                return ScalarProfile("star", edges=n)
            if isinstance(spec, dict) and set(spec) == {"kac"}:
                return ScalarProfile("kac", alpha=_number(spec["kac"], "kac alpha"))
            raise FormatError(f"unknown profile {spec!r}")
    except FormatError:
        raise
    except (ValueError, TypeError) as exc:
        raise FormatError(str(exc)) from exc
    raise FormatError(f"unknown model kind {kind!r}")


def matrix_from_json(obj) -> np.ndarray:
    """Dense complex matrix from ``[[[re, im], ...], ...]``."""
    if isinstance(obj, dict):
        check_schema(obj)
        _strict_keys(obj, ("matrix",), "B", ("matrix",))
        obj = obj["matrix"]
    try:
        arr = np.array(obj, dtype=float)
    except (ValueError, TypeError) as exc:
        raise FormatError(f"B: malformed matrix ({exc})") from exc
    if arr.ndim != 3 or arr.shape[2] != 2 or arr.shape[0] != arr.shape[1]:
        raise FormatError(f"B: expected an m x m array of [re, im] pairs, got shape {arr.shape}")
    return arr[..., 0] + 1j * arr[..., 1]


def matrix_to_json(m) -> list:
    m = np.atleast_2d(np.asarray(m, dtype=complex))
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def complex_pair(z) -> list:
    z = complex(z)
    return [z.real, z.imag]


def load_json(path):
    with open(path) as fh:
        return json.load(fh)


def dump_json(obj, fh=None) -> str:
    text = json.dumps(obj, indent=2, allow_nan=True) + "\n"
    if fh is not None:
        fh.write(text)
    return text


def with_schema(obj: dict) -> dict:
    return {"schema_version": SCHEMA_VERSION, **obj}


# --------------------------------------------------------------------------
# SVG

_COLOURS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf")


def regions_svg(regions, viewport, width: int = 800, rel_step: float = 1e-3) -> str:
    """SVG drawing of region boundaries in a y-up mathematical frame."""
    xmin, xmax, ymin, ymax = (float(v) for v in viewport)
    if not (xmax > xmin and ymax > ymin):
        raise ValueError("viewport must be (xmin, xmax, ymin, ymax) with positive extent")
    height = max(1, int(round(width * (ymax - ymin) / (xmax - xmin))))
    sx, sy = width / (xmax - xmin), height / (ymax - ymin)

    def tx(z):
        return (z.real - xmin) * sx, (ymax - z.imag) * sy

    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f"<!-- coordinate transform (y axis up): x_svg = (Re z - {xmin!r}) * {sx!r}; "
        f"y_svg = ({ymax!r} - Im z) * {sy!r} -->",
    ]
    if xmin <= 0 <= xmax:
        x0, _ = tx(0j)
        lines.append(f'<line x1="{x0:.3f}" y1="0" x2="{x0:.3f}" y2="{height}" stroke="#999" stroke-width="0.5"/>')
    if ymin <= 0 <= ymax:
        _, y0 = tx(0j)
        lines.append(f'<line x1="0" y1="{y0:.3f}" x2="{width}" y2="{y0:.3f}" stroke="#999" stroke-width="0.5"/>')
    for i, reg in enumerate(regions):
        colour = _COLOURS[i % len(_COLOURS)]
        for poly in reg.boundary(viewport, rel_step):
            if len(poly) < 2:
                continue
            pts = [tx(z) for z in poly]
            d = "M " + " L ".join(f"{x:.3f},{y:.3f}" for x, y in pts)
            lines.append(f'<path class="{reg.tag}" d="{d}" fill="none" stroke="{colour}" stroke-width="1"/>')
    lines.append("</svg>")
    return "\n".join(lines) + "\n"
