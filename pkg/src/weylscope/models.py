"""
Concrete boundary-triple models and their Weyl functions.

Three families are provided:

* :class:`MetricGraph` -- Kirchhoff Laplacian on a metric graph with vertex
  values/normal derivatives as boundary data; ``M(lam)`` is ``|V| x |V|``.
* :class:`PointLattice` -- free Laplacian on the line with point interactions
  on a discrete set; ``M(lam)`` is built from the free Green function.
* :class:`ScalarProfile` -- scalar models known in closed form (half-space
  Robin and hyperplane delta norms, star graph, Kac-measure Stieltjes
  transform).

All models share a small duck-typed interface used by the solver and the
enclosure code: ``boundary_dim``, ``spectrum_bottom``, ``has_branch_cut``,
``has_matrix``, ``weyl``, ``weyl_batch``, ``norm``, ``secular_batch`` and
``singular_points``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np
from scipy import integrate

from .core import (
    OnCutError,
    SingularityError,
    BudgetExhausted,
    WeylSample,
    as_complex,
    spectral_norm,
    sqrt_upper,
)

DIRICHLET_TOL = 1e-12
MAX_COND = 1e12
KAC_START = math.e

INF = math.inf


# --------------------------------------------------------------------------
# helpers

def _check_off_cut(lams, start=0.0):
    lams = np.atleast_1d(np.asarray(lams, dtype=complex))
    bad = (lams.imag == 0.0) & (lams.real >= start)
    if np.any(bad):
        raise OnCutError(f"lambda={lams[bad][0]} lies on the cut [{start:g}, inf)")
    return lams


def _cot_csc(z):
    """``cot z`` and ``1/sin z`` without overflow for large ``|Im z|``."""
    z = np.asarray(z, dtype=complex)
    flip = z.imag < 0
    w = np.where(flip, -z, z)
    q = np.exp(2j * w)
    den = q - 1.0
    sin_abs = np.abs(den) * np.exp(np.minimum(w.imag, 600.0)) / 2
    if np.any(sin_abs < DIRICHLET_TOL):
        raise SingularityError("Dirichlet singularity: sin(sqrt(lam) L) = 0, M(lam) undefined here")
    cot = 1j * (q + 1.0) / den
    csc = 2j * np.exp(1j * w) / den
    return np.where(flip, -cot, cot), np.where(flip, -csc, csc)


def _k_cot_csc(k, length):
    """``k cot(kL)`` and ``k / sin(kL)`` including the removable point ``k = 0``."""
    z = k * length
    small = np.abs(z) < 1e-4
    zs = np.where(small, 1.0, z)
    cot, csc = _cot_csc(zs)
    z2 = z * z
    kc = np.where(small, (1 - z2 / 3 - z2 * z2 / 45) / length, k * cot)
    kcs = np.where(small, (1 + z2 / 6 + 7 * z2 * z2 / 360) / length, k * csc)
    return kc, kcs


class _ModelMixin:
    has_matrix = True

    def weyl(self, lam) -> WeylSample:
        lam = as_complex(lam)
        if not self.has_matrix:
            return WeylSample(lam, None, self.norm(lam))
        m = self.weyl_batch(np.array([lam]))[0]
        return WeylSample(lam, m, spectral_norm(m))

    def weyl_matrix(self, lam):
        return self.weyl_batch(np.array([as_complex(lam)]))[0]

    def norm(self, lam) -> float:
        return spectral_norm(self.weyl_matrix(lam))

    def norms(self, lams):
        ms = self.weyl_batch(lams)
        return np.linalg.svd(ms, compute_uv=False)[:, 0]

    def secular_batch(self, bmat, lams):
        """``det(I - B M(lam))`` for an array of spectral parameters."""
        ms = self.weyl_batch(lams)
        eye = np.eye(self.boundary_dim)
        return np.linalg.det(eye[None] - np.asarray(bmat) @ ms)

    def singular_points(self):
        return np.empty(0)


# --------------------------------------------------------------------------
# metric graphs

@dataclass(frozen=True)
class Edge:
    origin: object
    terminus: object = None  # None marks an infinite edge
    length: float = INF

    @property
    def infinite(self) -> bool:
        return self.terminus is None


@dataclass(frozen=True)
class MetricGraph(_ModelMixin):
    vertices: tuple
    edges: tuple

    kind = "graph"

    def __post_init__(self):
        verts = tuple(self.vertices)
        object.__setattr__(self, "vertices", verts)
        object.__setattr__(self, "edges", tuple(self.edges))
        if len(set(verts)) != len(verts):
            raise ValueError("duplicate vertex ids")
        index = {v: i for i, v in enumerate(verts)}
        for e in self.edges:
            if e.origin not in index:
                raise ValueError(f"edge origin {e.origin!r} is not a vertex")
            if e.infinite:
                if e.length != INF:
                    raise ValueError("infinite edges must have infinite length")
                continue
            if e.terminus not in index:
                raise ValueError(f"edge terminus {e.terminus!r} is not a vertex")
            if e.terminus == e.origin:
                raise ValueError("loops are not allowed")
            if not (0 < e.length < INF):
                raise ValueError("finite edge lengths must be positive and finite")
        deg = self.degrees
        if np.any(deg < 1):
            missing = [v for v, d in zip(verts, deg) if d < 1]
            raise ValueError(f"vertices without edges: {missing}")

    @property
    def boundary_dim(self) -> int:
        return len(self.vertices)

    @property
    def degrees(self):
        index = {v: i for i, v in enumerate(self.vertices)}
        deg = np.zeros(len(self.vertices), dtype=int)
        for e in self.edges:
            deg[index[e.origin]] += 1
            if not e.infinite:
                deg[index[e.terminus]] += 1
        return deg

    @property
    def is_compact(self) -> bool:
        return not any(e.infinite for e in self.edges)

    @property
    def has_branch_cut(self) -> bool:
        # For compact graphs M is meromorphic in the whole plane.
        return not self.is_compact

    spectrum_bottom = 0.0

    def _index(self):
        return {v: i for i, v in enumerate(self.vertices)}

    def weyl_inverse_batch(self, lams):
        lams = np.atleast_1d(np.asarray(lams, dtype=complex))
        if self.has_branch_cut:
            _check_off_cut(lams)
        k = sqrt_upper(lams)
        n, m = lams.size, self.boundary_dim
        out = np.zeros((n, m, m), dtype=complex)
        index = self._index()
        for e in self.edges:
            j = index[e.origin]
            if e.infinite:
                out[:, j, j] += -1j * k
                continue
            l = index[e.terminus]
            kc, kcs = _k_cot_csc(k, e.length)
            out[:, j, j] += kc
            out[:, l, l] += kc
            out[:, j, l] -= kcs
            out[:, l, j] -= kcs
        return out

    def weyl_batch(self, lams):
        inv = self.weyl_inverse_batch(lams)
        cond = np.linalg.cond(inv)
        if np.any(~np.isfinite(cond) | (cond > MAX_COND)):
            raise SingularityError("M(lam)^-1 is singular: lam is (close to) a Kirchhoff eigenvalue")
        return np.linalg.inv(inv)

    def secular_batch(self, bmat, lams):
        # det(I - B M) = det(M^-1 - B) / det(M^-1); avoids inverting near poles of M.
        inv = self.weyl_inverse_batch(lams)
        return np.linalg.det(inv - np.asarray(bmat)[None]) / np.linalg.det(inv)

    def dirichlet_points(self, upto: float):
        """Dirichlet eigenvalues ``(n pi / L)^2 <= upto`` of the finite edges."""
        pts = set()
        for e in self.edges:
            if e.infinite:
                continue
            nmax = int(math.floor(math.sqrt(max(upto, 0.0)) * e.length / math.pi))
            pts.update((q * math.pi / e.length) ** 2 for q in range(1, nmax + 1))
        return np.array(sorted(pts))

    def singular_points(self, upto: float = 1e4):
        return self.dirichlet_points(upto)

    def to_json(self) -> dict:
        edges = []
        for e in self.edges:
            if e.infinite:
                edges.append({"from": e.origin, "to": "inf", "length": "inf"})
            else:
                edges.append({"from": e.origin, "to": e.terminus, "length": e.length})
        return {"kind": "graph", "vertices": list(self.vertices), "edges": edges}


def graph_weyl_inverse(g: MetricGraph, lam):
    """``M(lam)^{-1}`` assembled edge by edge."""
    return g.weyl_inverse_batch(np.array([as_complex(lam)]))[0]


def graph_weyl(g: MetricGraph, lam) -> WeylSample:
    return g.weyl(lam)


def star_graph(n_edges: int) -> MetricGraph:
    return MetricGraph(("v",), tuple(Edge("v") for _ in range(n_edges)))


def random_compact_graph(rng, max_vertices=8, lengths=(0.3, 3.0)) -> MetricGraph:
    """Connected loop-free random graph: a random spanning tree plus extra edges."""
    n = int(rng.integers(2, max_vertices + 1))
    edges = []
    for v in range(1, n):
        edges.append((int(rng.integers(0, v)), v))
    for _ in range(int(rng.integers(0, n))):
        a, b = rng.choice(n, size=2, replace=False)
        edges.append((int(a), int(b)))
    ls = rng.uniform(*lengths, size=len(edges))
    return MetricGraph(tuple(range(n)), tuple(Edge(a, b, float(l)) for (a, b), l in zip(edges, ls)))


# --------------------------------------------------------------------------
# point interactions on the line

@dataclass(frozen=True)
class PointLattice(_ModelMixin):
    """Window of an interaction set ``X`` on the real line.

    ``tail_tol=None`` means the points are the whole (finite) set.  Otherwise
    the points are a window of an infinite set; when they are equally spaced
    the window is extended periodically so that the neglected part of the
    Schur series stays below ``tail_tol``.
    """

    points: tuple
    d: Optional[float] = None
    tail_tol: Optional[float] = None

    kind = "lattice"
    has_branch_cut = True
    spectrum_bottom = 0.0

    def __post_init__(self):
        pts = tuple(float(x) for x in self.points)
        if not pts:
            raise ValueError("lattice needs at least one point")
        object.__setattr__(self, "points", pts)
        gaps = np.diff(pts)
        if np.any(gaps <= 0):
            raise ValueError("points must be strictly increasing")
        d = self.d
        if d is None:
            d = float(gaps.min()) if gaps.size else 1.0
        if not d > 0:
            raise ValueError("spacing d must be positive")
        if gaps.size and gaps.min() < d - 1e-12:
            raise ValueError(f"gap {gaps.min()} is smaller than the declared spacing d={d}")
        object.__setattr__(self, "d", float(d))
        if self.tail_tol is not None and not self.tail_tol > 0:
            raise ValueError("tail_tol must be positive")

    @property
    def boundary_dim(self) -> int:
        return len(self.points)

    @property
    def is_periodic(self) -> bool:
        gaps = np.diff(self.points)
        return gaps.size > 0 and bool(np.allclose(gaps, gaps[0], rtol=1e-12, atol=0))

    def tail_terms(self, lams) -> int:
        """Number of extra lattice points per side needed for ``tail_tol``."""
        if self.tail_tol is None:
            return 0
        s = float(np.min(sqrt_upper(np.atleast_1d(lams)).imag))
        if s <= 0:
            raise OnCutError("Im sqrt(lam) = 0: the lattice Weyl function is undefined")
        q = math.exp(-s * self.d)
        if q == 0.0:
            return 0
        # sum_{k > N} q^k = q^(N+1) / (1 - q) < tail_tol
        need = math.log(self.tail_tol * (1 - q)) / math.log(q) - 1
        return max(0, int(math.ceil(need)))

    def window(self, lams) -> tuple:
        n = self.tail_terms(lams)
        if n == 0 or not self.is_periodic:
            return self.points
        step = self.points[1] - self.points[0]
        left = [self.points[0] - step * i for i in range(n, 0, -1)]
        right = [self.points[-1] + step * i for i in range(1, n + 1)]
        return tuple(left) + self.points + tuple(right)

    def weyl_batch(self, lams):
        lams = _check_off_cut(lams)
        k = sqrt_upper(lams)
        pts = np.asarray(self.points)
        dist = np.abs(pts[:, None] - pts[None, :])
        return (1j / (2 * k))[:, None, None] * np.exp(1j * k[:, None, None] * dist[None])

    def norms(self, lams):
        lams = np.atleast_1d(np.asarray(lams, dtype=complex))
        if self.tail_tol is None or not self.is_periodic:
            return super().norms(lams)
        out = np.empty(lams.size)
        for i, lam in enumerate(lams):
            out[i] = self.norm(lam)
        return out

    def norm(self, lam) -> float:
        lam = as_complex(lam)
        pts = self.window([lam])
        if pts is self.points:
            return spectral_norm(self.weyl_matrix(lam))
        ext = PointLattice(pts, self.d)
        return spectral_norm(ext.weyl_matrix(lam))

    def to_json(self) -> dict:
        window = "exact" if self.tail_tol is None else {"tail_tol": self.tail_tol}
        return {"kind": "lattice", "points": list(self.points), "d": self.d, "window": window}


def lattice_weyl(p: PointLattice, lam) -> WeylSample:
    lam = as_complex(lam)
    pts = p.window([lam])
    q = p if pts is p.points else PointLattice(pts, p.d)
    m = q.weyl_matrix(lam)
    return WeylSample(lam, m, spectral_norm(m))


def lattice_gamma_apply(p: PointLattice, xi, x: float, lam) -> complex:
    """Value at ``x`` of the solution ``gamma(lam) xi``."""
    lam = complex(_check_off_cut([lam])[0])
    xi = np.asarray(xi, dtype=complex)
    if xi.shape != (p.boundary_dim,):
        raise ValueError(f"xi must have length {p.boundary_dim}")
    k = sqrt_upper(lam)
    pts = np.asarray(p.points)
    return complex(-1j / (2 * k) * np.sum(np.exp(1j * k * np.abs(pts - x)) * xi))


def schur_bound_line(d: float, lam) -> float:
    """Schur-test bound for the lattice Weyl function norm."""
    lam = complex(_check_off_cut([lam])[0])
    s = sqrt_upper(lam).imag
    return 1.0 / (math.tanh(d / 2 * s) * 2 * math.sqrt(abs(lam)))


def j0_sector_constant(d: float, w0: float, nu: float) -> float:
    """Lower bound of ``(d/2) Im sqrt(lam)`` over the exterior sector ``U_{w0,nu}``."""
    return d / 2 * math.sqrt(abs(w0) * math.sin(nu)) * math.sin(nu / 2)


# --------------------------------------------------------------------------
# closed-form scalar profiles

PROFILE_KINDS = ("half_space", "hyperplane_delta", "star", "kac")


@dataclass(frozen=True)
class ScalarProfile(_ModelMixin):
    profile: str
    edges: Optional[int] = None
    alpha: Optional[float] = None

    kind = "profile"
    has_branch_cut = True
    boundary_dim = 1

    def __post_init__(self):
        if self.profile not in PROFILE_KINDS:
            raise ValueError(f"unknown profile {self.profile!r}")
        if self.profile == "star":
            if not isinstance(self.edges, (int, np.integer)) or isinstance(self.edges, bool) or self.edges < 1:
                raise ValueError("star profile needs a positive integer edge count")
        if self.profile == "kac":
            if self.alpha is None or not 0 < self.alpha <= 0.5:
                raise ValueError("kac profile needs alpha in (0, 1/2]")

    @property
    def has_matrix(self) -> bool:
        return self.profile in ("star", "kac")

    @property
    def spectrum_bottom(self) -> float:
        return KAC_START if self.profile == "kac" else 0.0

    def weyl_batch(self, lams):
        lams = _check_off_cut(lams, self.spectrum_bottom)
        if self.profile == "star":
            vals = 1j / (self.edges * sqrt_upper(lams))
        elif self.profile == "kac":
            vals = np.array([kac_weyl_eval(self.alpha, lam) for lam in lams])
        else:
            raise ValueError(f"profile {self.profile!r} provides only a norm, not a matrix")
        return vals.reshape(-1, 1, 1)

    def norm(self, lam) -> float:
        return scalar_profile_norm(self, lam)

    def norms(self, lams):
        return np.array([scalar_profile_norm(self, lam) for lam in np.atleast_1d(lams)])

    def secular_batch(self, bmat, lams):
        b = complex(np.asarray(bmat).reshape(-1)[0])
        return 1.0 - b * self.weyl_batch(lams)[:, 0, 0]

    def to_json(self) -> dict:
        if self.profile == "star":
            spec = {"star": self.edges}
        elif self.profile == "kac":
            spec = {"kac": self.alpha}
        else:
            spec = self.profile
        return {"kind": "profile", "profile": spec}


def _dist_half_line(lam: complex, start: float = 0.0) -> float:
    if lam.real >= start:
        return abs(lam.imag)
    return abs(lam - start)


def scalar_profile_norm(s: ScalarProfile, lam) -> float:
    lam = complex(_check_off_cut([lam], s.spectrum_bottom)[0])
    if s.profile == "half_space":
        return 1.0 / math.sqrt(_dist_half_line(lam))
    if s.profile == "hyperplane_delta":
        return 1.0 / (2 * math.sqrt(_dist_half_line(lam)))
    if s.profile == "star":
        return 1.0 / (s.edges * math.sqrt(abs(lam)))
    return abs(kac_weyl_eval(s.alpha, lam))


def kac_weyl_eval(alpha: float, lam, rtol: float = 1e-10) -> complex:
    """Stieltjes transform of ``t^(2 alpha - 1) (ln t)^-2 dt`` on ``[e, inf)``.

    With ``u = 1 / ln t`` the integral becomes the proper integral
    ``int_0^1 exp((2 alpha - 1)/u) / (1 - lam exp(-1/u)) du`` with a bounded
    integrand, so no tail truncation is needed.
    """
    if not 0 < alpha <= 0.5:
        raise ValueError("alpha must lie in (0, 1/2]")
    lam = complex(_check_off_cut([lam], KAC_START)[0])
    expo = 2 * alpha - 1

    def f(u):
        if u <= 0.0:
            return 1.0 + 0j if expo == 0 else 0j
        return math.exp(expo / u) / (1.0 - lam * math.exp(-1.0 / u))

    # The integrand switches from ~exp(expo/u) to ~-exp(2 alpha/u)/lam near
    # u = 1/ln|lam|; tell the integrator where.
    pts = None
    if abs(lam) > KAC_START:
        pts = [1.0 / math.log(abs(lam))]
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val, _err = integrate.quad(f, 0.0, 1.0, points=pts, epsabs=0.0, epsrel=rtol,
                                       limit=500, complex_func=True)
        except integrate.IntegrationWarning as exc:
            raise BudgetExhausted(f"Kac quadrature did not converge at lam={lam}: {exc}") from exc
    return complex(val)


WeylModel = Union[MetricGraph, PointLattice, ScalarProfile]
