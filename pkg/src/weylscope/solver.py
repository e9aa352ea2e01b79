"""
Eigenvalues of ``A_[B]`` as zeros of ``D(lam) = det(I - B M(lam))``.

Zeros are isolated with the argument principle on a quadtree of boxes and
then polished with Newton's method (central-difference derivative).
"""

from __future__ import annotations

import logging
import math
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from .core import (
    BoundaryOperator,
    BudgetExhausted,
    SingularityError,
    WeylscopeError,
    analyze_boundary_operator,
    as_complex,
    spectral_norm,
    sqrt_upper,
)
from .models import PointLattice

log = logging.getLogger(__name__)

CUT_MARGIN = 1e-4
SINGULAR_MARGIN = 1e-6
CONTOUR_ZERO = 1e-12
# Split positions tried in order; off-centre so that zeros on symmetry
# lines (e.g. the real axis) do not land on a box edge.
SPLIT_FRACTIONS = (0.4967, 0.5213, 0.4731, 0.5389, 0.4512)


class ContourError(WeylscopeError, ArithmeticError):
    """The argument principle cannot be applied on this contour."""


def _as_boundary_operator(b) -> BoundaryOperator:
    return b if isinstance(b, BoundaryOperator) else analyze_boundary_operator(b)


def _segment_half_line_distance(p: complex, q: complex, a: float) -> float:
    """Distance between segment ``[p, q]`` and the half-line ``[a, inf)``."""
    if (p.imag <= 0 <= q.imag or q.imag <= 0 <= p.imag):
        if q.imag != p.imag:
            x = p.real + (q.real - p.real) * (-p.imag) / (q.imag - p.imag)
            if x >= a:
                return 0.0
        elif max(p.real, q.real) >= a:
            return 0.0

    def pt_dist(z):
        return abs(z.imag) if z.real >= a else abs(z - a)

    d = min(pt_dist(p), pt_dist(q))
    seg = q - p
    if seg != 0:
        t = min(max(((a - p) * seg.conjugate()).real / abs(seg) ** 2, 0.0), 1.0)
        d = min(d, abs(p + t * seg - a))
    return d


def _segment_point_distance(p: complex, q: complex, z: float) -> float:
    seg = q - p
    if seg == 0:
        return abs(p - z)
    t = min(max(((z - p) * seg.conjugate()).real / abs(seg) ** 2, 0.0), 1.0)
    return abs(p + t * seg - z)


class SecularFunction:
    """``lam -> det(I - B M(lam))`` for one model and one coupling matrix.

    Values are cached; the cache is guarded by a lock so the function can be
    shared by worker threads.
    """

    def __init__(self, model, b, cache_size: int = 1_000_000):
        self.model = model
        self.b = _as_boundary_operator(b)
        if not getattr(model, "has_matrix", False):
            raise ValueError(f"model {model!r} only provides a norm profile; no secular function")
        if self.b.dim != model.boundary_dim:
            raise ValueError(f"B has dimension {self.b.dim}, model boundary space has {model.boundary_dim}")
        self._cache = {}
        self._cache_size = cache_size
        self._lock = threading.Lock()

    @property
    def cut_start(self) -> Optional[float]:
        return self.model.spectrum_bottom if self.model.has_branch_cut else None

    def singular_points(self, upto: float):
        if hasattr(self.model, "dirichlet_points"):
            return self.model.dirichlet_points(upto)
        return np.empty(0)

    def batch(self, lams):
        lams = np.atleast_1d(np.asarray(lams, dtype=complex))
        out = np.empty(lams.size, dtype=complex)
        todo = []
        with self._lock:
            for i, lam in enumerate(lams):
                v = self._cache.get(lam)
                if v is None:
                    todo.append(i)
                else:
                    out[i] = v
        if todo:
            idx = np.array(todo)
            vals = self.model.secular_batch(self.b.matrix, lams[idx])
            out[idx] = vals
            with self._lock:
                if len(self._cache) > self._cache_size:
                    self._cache.clear()
                self._cache.update(zip(lams[idx].tolist(), vals.tolist()))
        return out

    def __call__(self, lam) -> complex:
        return complex(self.batch(np.array([as_complex(lam)]))[0])

    def check_polyline(self, verts: Sequence[complex], closed: bool = True):
        verts = [complex(v) for v in verts]
        segs = list(zip(verts, verts[1:] + verts[:1] if closed else verts[1:]))
        cut = self.cut_start
        if cut is not None:
            for p, q in segs:
                if _segment_half_line_distance(p, q, cut) <= 1e-14 * (1 + abs(cut)):
                    raise ContourError(f"contour touches the cut [{cut:g}, inf)")
        reach = max(abs(v) for v in verts)
        sing = self.singular_points(2 * reach + 10)
        for s in sing:
            for p, q in segs:
                if _segment_point_distance(p, q, s) < SINGULAR_MARGIN:
                    raise ContourError(f"contour passes within {SINGULAR_MARGIN} of the singular point {s:g}")


def secular_eval(model, b, lam) -> complex:
    return SecularFunction(model, b)(lam)


def _graded_segment(p: complex, q: complex, bottom: float, n0: int, frac: float):
    """Sample points on ``[p, q)`` with spacing at most ``frac`` times the
    distance to ``[bottom, inf)``, where all poles and branch points of
    ``D`` live; this prevents aliasing of loops that pass between samples."""
    length = abs(q - p)
    if length == 0:
        return np.array([p])
    hmax = length / n0
    hmin = length * 1e-3
    ts = [0.0]
    t = 0.0
    while True:
        z = p + t * (q - p)
        h = min(hmax, max(hmin, frac * _segment_half_line_distance(z, z, bottom)))
        t += h / length
        if t >= 1.0:
            break
        ts.append(t)
    return p + (q - p) * np.array(ts)


def _winding(sec: SecularFunction, verts, n0=16, max_dphase=math.pi / 4, budget=200_000,
             frac=0.1) -> int:
    verts = [complex(v) for v in verts]
    sec.check_polyline(verts)
    ring = verts + verts[:1]
    bottom = sec.model.spectrum_bottom
    pts = np.concatenate([_graded_segment(p, q, bottom, n0, frac) for p, q in zip(ring[:-1], ring[1:])]
                         + [np.array([ring[0]])])
    vals = sec.batch(pts)
    while True:
        if np.any(np.abs(vals) < CONTOUR_ZERO):
            raise ContourError("D vanishes (numerically) on the contour")
        ratio = vals[1:] / vals[:-1]
        bad = (np.abs(np.angle(ratio)) >= max_dphase) | (np.abs(np.log(np.abs(ratio))) > 1.0)
        if not bad.any():
            break
        idx = np.nonzero(bad)[0]
        gaps = np.abs(pts[idx + 1] - pts[idx])
        if gaps.min() < 1e-15 * (1 + np.abs(pts[idx]).max()) or pts.size > budget:
            raise ContourError("phase tracking failed: refinement budget exhausted")
        mids = 0.5 * (pts[idx] + pts[idx + 1])
        mvals = sec.batch(mids)
        pts = np.insert(pts, idx + 1, mids)
        vals = np.insert(vals, idx + 1, mvals)
    total = float(np.sum(np.angle(vals[1:] / vals[:-1]))) / (2 * math.pi)
    w = int(round(total))
    if abs(total - w) > 0.05:
        raise ContourError(f"non-integer winding {total:.4f}")
    return w


def winding_count(model, b, contour, **kw) -> int:
    """Zeros minus poles of ``D`` enclosed by a closed polyline."""
    return _winding(SecularFunction(model, b), contour, **kw)


# --------------------------------------------------------------------------
# reports

@dataclass
class Eigenvalue:
    lam: complex
    multiplicity: int
    residual: float

    def to_json(self) -> dict:
        return {"re": self.lam.real, "im": self.lam.imag, "mult": self.multiplicity, "residual": self.residual}


@dataclass
class SpectrumReport:
    eigenvalues: List[Eigenvalue] = field(default_factory=list)
    contours: List[tuple] = field(default_factory=list)
    verdicts: List[dict] = field(default_factory=list)
    warnings: List[str] = field(default_factory=list)
    seed: Optional[int] = None
    boxes_processed: int = 0

    @property
    def values(self) -> np.ndarray:
        return np.array([e.lam for e in self.eigenvalues], dtype=complex)

    def to_json(self) -> dict:
        out = {
            "eigenvalues": [e.to_json() for e in self.eigenvalues],
            "contours": [list(c) for c in self.contours],
            "verdicts": list(self.verdicts),
            "warnings": list(self.warnings),
        }
        if self.seed is not None:
            out["seed"] = self.seed
        return out


# --------------------------------------------------------------------------
# box search

@dataclass
class _Box:
    x0: float
    x1: float
    y0: float
    y1: float

    @property
    def corners(self):
        return [complex(self.x0, self.y0), complex(self.x1, self.y0),
                complex(self.x1, self.y1), complex(self.x0, self.y1)]

    @property
    def center(self) -> complex:
        return complex(0.5 * (self.x0 + self.x1), 0.5 * (self.y0 + self.y1))

    @property
    def diam(self) -> float:
        return math.hypot(self.x1 - self.x0, self.y1 - self.y0)

    def contains(self, z: complex, slack: float = 0.0) -> bool:
        return (self.x0 - slack <= z.real <= self.x1 + slack) and (self.y0 - slack <= z.imag <= self.y1 + slack)

    def split(self, fx: float, fy: float):
        xm = self.x0 + fx * (self.x1 - self.x0)
        ym = self.y0 + fy * (self.y1 - self.y0)
        return [_Box(self.x0, xm, self.y0, ym), _Box(xm, self.x1, self.y0, ym),
                _Box(self.x0, xm, ym, self.y1), _Box(xm, self.x1, ym, self.y1)]

    def as_tuple(self):
        return (self.x0, self.x1, self.y0, self.y1)


def _clip_rect(rect: _Box, cut: Optional[float], margin: float) -> List[_Box]:
    """Cover ``rect`` minus a ``margin``-neighbourhood of ``[cut, inf)`` by boxes."""
    if cut is None:
        return [rect]
    xc = cut - margin
    if rect.x1 <= xc or rect.y0 >= margin or rect.y1 <= -margin:
        return [rect]
    pieces = []
    if rect.x0 < xc:
        pieces.append(_Box(rect.x0, xc, rect.y0, rect.y1))
    xs = max(rect.x0, xc)
    if rect.y1 > margin:
        pieces.append(_Box(xs, rect.x1, max(rect.y0, margin), rect.y1))
    if rect.y0 < -margin:
        pieces.append(_Box(xs, rect.x1, rect.y0, min(rect.y1, -margin)))
    return pieces


def _parse_rect(rect) -> _Box:
    if isinstance(rect, _Box):
        return rect
    a, b = (as_complex(z) for z in rect)
    x0, x1 = sorted((a.real, b.real))
    y0, y1 = sorted((a.imag, b.imag))
    if x0 == x1 or y0 == y1:
        raise ValueError("rectangle has zero area")
    return _Box(x0, x1, y0, y1)


def _newton(sec: SecularFunction, z0: complex, mult: int, maxiter=60):
    z = z0
    cut = sec.cut_start
    dz = math.inf
    for _ in range(maxiter):
        h = 1e-6 * (1 + abs(z))
        if cut is not None:
            h = min(h, 0.5 * _segment_half_line_distance(z, z, cut))
        f0, fp, fm = sec.batch(np.array([z, z + h, z - h]))
        if f0 == 0:
            return z, True
        deriv = (fp - fm) / (2 * h)
        if deriv == 0 or not np.isfinite(deriv):
            # secant fallback on derivative underflow
            deriv = (fp - f0) / h
            if deriv == 0:
                return z, False
        step = mult * f0 / deriv
        z_new = z - step
        if cut is not None and _segment_half_line_distance(z_new, z_new, cut) == 0:
            return z, False
        dz_new = abs(step)
        z = complex(z_new)
        if dz_new <= 4e-16 * (1 + abs(z)):
            return z, True
        if dz_new >= dz and dz_new <= 1e-10 * (1 + abs(z)):
            # stagnation at roundoff level
            return z, True
        dz = dz_new
    return z, dz <= 1e-10 * (1 + abs(z))


def find_eigenvalues(model, b, rect, tol: float = 1e-10, margin: float = CUT_MARGIN,
                     max_boxes: int = 50_000, threads: int = 1, seed: Optional[int] = None) -> SpectrumReport:
    """Locate the zeros of ``det(I - B M(lam))`` inside a rectangle.

    ``rect`` is a pair of opposite corners.  Parts of the rectangle within
    ``margin`` of the essential spectrum ``[spectrum_bottom, inf)`` are cut
    away.  Boxes are quadrisected while their winding number is positive;
    once a box has winding one and is small relative to its position a
    Newton step sequence is started from its centre and accepted if it
    converges inside the box.  Boxes shrinking below ``10 * tol`` are polished
    unconditionally.
    """
    sec = SecularFunction(model, b)
    bop = sec.b
    report = SpectrumReport(seed=seed)
    root = _parse_rect(rect)
    pieces = _clip_rect(root, model.spectrum_bottom, margin)
    report.contours = [p.as_tuple() for p in pieces]

    def winding_of(box):
        return _winding(sec, box.corners)

    def initial(piece):
        for k in range(6):
            try:
                return piece, winding_of(piece)
            except ContourError:
                grow = 1e-7 * (k + 1) * max(1.0, piece.diam)
                piece = _Box(piece.x0 - grow, piece.x1 + grow, piece.y0 - grow, piece.y1 + grow)
                if model.has_branch_cut:
                    piece = _clip_rect(piece, model.spectrum_bottom, margin)[0]
        raise ContourError("could not place a contour around the search rectangle")

    found: List[Eigenvalue] = []
    queue = []
    for piece in pieces:
        piece, w = initial(piece)
        queue.append((piece, w))

    def handle(item):
        """Returns (children, eigenvalue or None, warnings)."""
        box, w = item
        msgs = []
        if w == 0:
            return [], None, msgs
        small = box.diam < 10 * tol
        if w < 0:
            msgs.append(f"negative winding {w} in box {box.as_tuple()}: pole of D (Dirichlet/Kirchhoff point)")
            if small:
                return [], None, msgs
        if w > 0 and (small or (w == 1 and box.diam < 0.25 * (1 + abs(box.center)))):
            z, ok = _newton(sec, box.center, w)
            inside = box.contains(z, slack=1e-9 * (1 + abs(z)))
            if (ok and inside) or small:
                res = abs(sec(z))
                if not ok:
                    msgs.append(f"Newton did not converge near {z}")
                if not inside:
                    msgs.append(f"Newton left the isolating box near {box.center}")
                return [], Eigenvalue(complex(z), w, float(res)), msgs
        for fx, fy in zip(SPLIT_FRACTIONS, SPLIT_FRACTIONS[::-1]):
            kids = box.split(fx, fy)
            try:
                ws = [winding_of(k) for k in kids]
            except ContourError:
                continue
            if sum(ws) != w:
                msgs.append(f"winding not additive in box {box.as_tuple()} ({w} vs {sum(ws)}); retrying split")
                continue
            return list(zip(kids, ws)), None, msgs
        msgs.append(f"could not subdivide box {box.as_tuple()} consistently")
        z, ok = _newton(sec, box.center, max(w, 1))
        return [], Eigenvalue(complex(z), w, float(abs(sec(z)))), msgs

    pool = ThreadPoolExecutor(max_workers=threads) if threads > 1 else None
    try:
        while queue:
            report.boxes_processed += len(queue)
            if report.boxes_processed > max_boxes:
                raise BudgetExhausted(f"box budget {max_boxes} exhausted")
            results = list(pool.map(handle, queue)) if pool else [handle(q) for q in queue]
            queue = []
            for kids, eig, msgs in results:
                queue.extend(kids)
                report.warnings.extend(msgs)
                if eig is not None:
                    found.append(eig)
    finally:
        if pool:
            pool.shutdown()

    found.sort(key=lambda e: (round(e.lam.real, 12), round(e.lam.imag, 12)))
    for e in found:
        dup = next((f for f in report.eigenvalues if abs(f.lam - e.lam) <= 10 * tol * (1 + abs(e.lam))), None)
        if dup is not None:
            report.warnings.append(f"merged duplicate eigenvalue near {e.lam}")
            continue
        bound = 1e-9 * (1 + bop.norm * model.norm(e.lam))
        if e.residual >= bound:
            report.warnings.append(f"residual {e.residual:.2e} at {e.lam} exceeds {bound:.2e}")
        report.eigenvalues.append(e)
    sing = sec.singular_points(max(abs(root.x0), abs(root.x1)) + 1)
    for s in sing:
        if root.contains(complex(s)) and any(abs(e.lam - s) < 1e-6 for e in report.eigenvalues):
            report.warnings.append(f"indeterminate at Dirichlet point {s:g}")
    return report


# --------------------------------------------------------------------------
# resolvent and verification

def free_green(lam, x, y) -> complex:
    k = sqrt_upper(lam)
    return 1j / (2 * k) * np.exp(1j * k * np.abs(np.subtract(x, y)))


def krein_resolvent_kernel(p: PointLattice, b, lam, x: float, y: float) -> complex:
    """Integral kernel of ``(A_[B] - lam)^{-1}`` for point interactions on the line."""
    lam = as_complex(lam)
    bop = _as_boundary_operator(b)
    m = p.weyl_matrix(lam)
    a = np.eye(p.boundary_dim) - bop.matrix @ m
    if np.linalg.cond(a) > 1e14:
        raise SingularityError(f"I - B M(lam) is singular: lam={lam} is an eigenvalue")
    core = np.linalg.solve(a, bop.matrix)
    pts = np.asarray(p.points)
    left = free_green(lam, x, pts)
    right = free_green(lam, pts, y)
    return complex(free_green(lam, x, y) + left @ core @ right)


@dataclass
class ContainmentResult:
    rows: List[dict]
    passed: bool

    def to_json(self) -> list:
        return list(self.rows)


def verify_containment(report: SpectrumReport, regions, rtol: float = 1e-8) -> ContainmentResult:
    """Check every eigenvalue against every region.

    Enclosures must contain the eigenvalues; exclusion regions (the
    resolvent-free half-line) must not.  A negative ``margin`` beyond
    ``rtol * (1 + |lam|)`` is a violation.
    """
    rows = []
    passed = True
    for i, e in enumerate(report.eigenvalues):
        tol = rtol * (1 + abs(e.lam))
        for reg in regions:
            margin = float(reg.verdict_margin(e.lam, tol))
            ok = margin >= -tol
            member = (not ok) if reg.exclusion else ok
            rows.append({"eigenvalue": i, "region": reg.tag, "member": bool(member),
                         "margin": margin, "ok": bool(ok)})
            passed &= ok
    report.verdicts = rows
    return ContainmentResult(rows, passed)
