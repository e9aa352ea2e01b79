"""
Spectral enclosure regions for extensions ``A_[B]`` and the decay constants
that feed them.

Regions are small frozen dataclasses sharing one protocol:

``margin(z)``
    signed slack; ``>= 0`` means ``z`` belongs to the closed region.
``verdict_margin(z, tol)``
    slack used for containment checks.  Enclosures equal ``margin``;
    the resolvent-free half-line is an *exclusion* region and reports a
    negative value only when ``z`` falls inside it.
``boundary(viewport)``
    polylines (complex arrays) tracing the region boundary.
``to_json()``
    ``{"tag": ..., "params": {...}}``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from .core import (
    BoundaryOperator,
    HypothesisError,
    SectorSpec,
    kappa_eta,
)

log = logging.getLogger(__name__)

BETA_MIN = 1e-2
ZERO_B_RTOL = 1e-12


# --------------------------------------------------------------------------
# decay estimates

@dataclass(frozen=True)
class DecayEstimate:
    """Bound ``|M(lam)| <= C / (mu - lam)^beta`` for ``lam < mu``."""

    C: float
    beta: float
    mu: float
    source: str = "closed-form"
    sample_count: int = 0
    max_residual: float = 0.0
    degenerate: bool = False

    def __post_init__(self):
        if not (self.C > 0 and math.isfinite(self.C)):
            raise ValueError(f"C must be positive and finite, got {self.C}")
        if not 0 < self.beta <= 1:
            raise ValueError(f"beta must lie in (0, 1], got {self.beta}")

    def bound(self, lam: float) -> float:
        return self.C / (self.mu - lam) ** self.beta

    def to_json(self) -> dict:
        out = {"C": self.C, "beta": self.beta, "mu": self.mu, "source": self.source}
        if self.source == "fitted":
            out.update(sample_count=self.sample_count, max_residual=self.max_residual,
                       degenerate=self.degenerate)
        return out


def fit_decay(samples, mu: float, monotone: bool = False) -> DecayEstimate:
    """Fit ``(C, beta)`` to ``(lam, |M(lam)|)`` samples on ``lam < mu``.

    Least squares on the log-log data gives ``beta`` (clipped to
    ``[BETA_MIN, 1]``) and a first ``C``; ``C`` is then raised until the bound
    majorizes every sample.  With ``monotone=True`` the samples are assumed
    to come from a norm that increases with ``lam`` (true for Weyl functions
    below the spectrum), and ``C`` is raised further so that the bound also
    holds between consecutive samples.
    """
    data = sorted((float(np.real(l)), float(n)) for l, n in samples)
    if len(data) < 8:
        raise ValueError("fit_decay needs at least 8 samples")
    lam = np.array([p[0] for p in data])
    nrm = np.array([p[1] for p in data])
    if np.any(lam >= mu):
        raise ValueError("all samples must satisfy lam < mu")
    if np.any(nrm <= 0):
        raise ValueError("sample norms must be positive")
    t = mu - lam
    if math.log10(t.max() / t.min()) < 3 - 1e-9:
        raise ValueError("samples must span at least 3 decades of mu - lam")
    x, y = np.log(t), np.log(nrm)
    slope, intercept = np.polyfit(x, y, 1)
    degenerate = -slope < BETA_MIN
    beta = float(np.clip(-slope, BETA_MIN, 1.0))
    # refit the intercept with beta fixed, then majorize
    logc = max(float(np.mean(y + beta * x)), float(np.max(y + beta * x)))
    if monotone:
        # lam sorted ascending: on [lam_i, lam_{i+1}] the norm is at most nrm_{i+1}
        logc = max(logc, float(np.max(np.log(nrm[1:]) + beta * x[:-1])))
    C = math.exp(logc)
    resid = float(np.max(logc - beta * x - y))
    return DecayEstimate(C=C, beta=beta, mu=float(mu), source="fitted",
                         sample_count=len(data), max_residual=resid, degenerate=bool(degenerate))


def sample_model_decay(model, mu: float, t_min=1e-1, t_max=1e4, n=41) -> DecayEstimate:
    """Sample ``|M(mu - t)|`` geometrically in ``t`` and fit a decay bound.

    The fit is made monotone and, when ``mu`` itself lies below the spectrum,
    ``|M(mu)|`` is folded in so the bound also covers ``(mu - t_min, mu)``.
    """
    t = np.geomspace(t_min, t_max, n)
    lams = mu - t
    norms = model.norms(lams + 0j)
    est = fit_decay(list(zip(lams, norms)), mu, monotone=True)
    if mu < model.spectrum_bottom:
        top = float(model.norms(np.array([mu + 0j]))[0])
        c_top = top * t_min ** est.beta
        if c_top > est.C:
            est = DecayEstimate(C=c_top, beta=est.beta, mu=est.mu, source="fitted",
                                sample_count=est.sample_count,
                                max_residual=est.max_residual + math.log(c_top / est.C),
                                degenerate=est.degenerate)
    return est


def closed_form_decay(model, mu: Optional[float] = None) -> Optional[DecayEstimate]:
    """Decay constants known in closed form, or ``None`` if the model has none."""
    kind = getattr(model, "kind", None)
    if kind == "profile":
        if model.profile == "half_space":
            return DecayEstimate(C=1.0, beta=0.5, mu=0.0)
        if model.profile == "hyperplane_delta":
            return DecayEstimate(C=0.5, beta=0.5, mu=0.0)
        if model.profile == "star":
            return DecayEstimate(C=1.0 / model.edges, beta=0.5, mu=0.0)
        return None
    if kind == "lattice":
        mu = -1.0 if mu is None else float(mu)
        if mu >= 0:
            raise ValueError("the lattice bound needs mu < 0")
        c = 1.0 / (2 * math.tanh(model.d / 2 * math.sqrt(-mu)))
        return DecayEstimate(C=c, beta=0.5, mu=mu)
    return None


# --------------------------------------------------------------------------
# regions

def _re_im(z):
    z = np.asarray(z, dtype=complex)
    return z.real, z.imag


def _graph_boundary(apex_re, width_fn, viewport, rel_step):
    """Boundary of ``{Re z >= apex_re, |Im z| <= width_fn(Re z)}``."""
    xmin, xmax, ymin, ymax = viewport
    if apex_re > xmax:
        return []
    n = int(round(1 / rel_step)) + 1
    x = np.linspace(max(apex_re, xmin), xmax, n)
    if apex_re >= xmin:
        x[0] = apex_re
    w = np.asarray(width_fn(x), dtype=float)
    span = ymax - ymin
    w = np.clip(w, 0.0, max(abs(ymin), abs(ymax)) + span)
    upper = x + 1j * w
    lower = x - 1j * w
    return [np.concatenate([upper[::-1], lower[1:]])]


class _Region:
    tag: str = ""
    exclusion = False

    @property
    def params(self) -> dict:
        return {k: v for k, v in asdict(self).items()}

    def to_json(self) -> dict:
        return {"tag": self.tag, "params": self.params}

    def contains(self, z, tol: float = 0.0) -> bool:
        return bool(self.margin(z) >= -tol)

    def verdict_margin(self, z, tol: float = 0.0) -> float:
        return float(self.margin(z))


@dataclass(frozen=True)
class SectorRegion(_Region):
    eta: float
    kappa: float
    tag = "sector"

    def margin(self, z):
        x, y = _re_im(z)
        dx = x - self.eta
        return np.minimum(dx, self.kappa * dx - np.abs(y))

    def boundary(self, viewport, rel_step=1e-3):
        return _graph_boundary(self.eta, lambda x: self.kappa * (x - self.eta), viewport, rel_step)


@dataclass(frozen=True)
class ParabolaA(_Region):
    mu: float
    C: float
    beta: float
    b: float
    im_norm: float
    xi: float
    tag = "parabola_a"

    @property
    def apex(self) -> float:
        return self.mu - (self.C * self.b) ** (1 / self.beta)

    @property
    def K(self) -> float:
        return 2 * self.C * self.im_norm / (1 - self.C * self.b / (self.mu - self.xi) ** self.beta)

    def width(self, x):
        return self.K * np.maximum(np.asarray(x) - self.xi, 0.0) ** (1 - self.beta)

    def margin(self, z):
        x, y = _re_im(z)
        return np.minimum(x - self.apex, self.width(x) - np.abs(y))

    def boundary(self, viewport, rel_step=1e-3):
        return _graph_boundary(self.apex, self.width, viewport, rel_step)


def k_prime_beta(C: float, beta: float, im_norm: float) -> float:
    if beta == 1:
        return C * im_norm
    return C * im_norm / (beta ** beta * (1 - beta) ** (1 - beta))


@dataclass(frozen=True)
class ParabolaB(_Region):
    mu: float
    C: float
    beta: float
    im_norm: float
    tag = "parabola_b"

    @property
    def K(self) -> float:
        return k_prime_beta(self.C, self.beta, self.im_norm)

    def width(self, x):
        # numpy gives 0.0**0.0 == 1.0, the convention needed at the apex for beta = 1
        return self.K * np.power(np.maximum(np.asarray(x, dtype=float) - self.mu, 0.0), 1 - self.beta)

    def margin(self, z):
        x, y = _re_im(z)
        return np.minimum(x - self.mu, self.width(x) - np.abs(y))

    def boundary(self, viewport, rel_step=1e-3):
        return _graph_boundary(self.mu, self.width, viewport, rel_step)


@dataclass(frozen=True)
class ParabolaC(_Region):
    mu: float
    C: float
    beta: float
    b: float
    im_norm: float
    tag = "parabola_c"

    def width(self, x):
        s = np.maximum(np.asarray(x, dtype=float) - self.mu, 0.0)
        return 2 * self.C * self.im_norm * s / (s ** self.beta - self.C * self.b)

    def margin(self, z):
        x, y = _re_im(z)
        return np.minimum(x - self.mu, self.width(x) - np.abs(y))

    def boundary(self, viewport, rel_step=1e-3):
        return _graph_boundary(self.mu, self.width, viewport, rel_step)


@dataclass(frozen=True)
class LeftResolventFree(_Region):
    """The half-line ``(-inf, threshold)`` contained in the resolvent set."""

    threshold: float
    closed_form: Optional[float] = None
    tag = "left_resolvent_free"
    exclusion = True

    def margin(self, z):
        x, y = _re_im(z)
        return np.minimum(self.threshold - x, -np.abs(y))

    def verdict_margin(self, z, tol: float = 0.0) -> float:
        z = complex(z)
        if abs(z.imag) > tol:
            return abs(z.imag)
        return z.real - self.threshold

    def boundary(self, viewport, rel_step=1e-3):
        xmin = viewport[0]
        if self.threshold <= xmin:
            return []
        return [np.array([xmin + 0j, complex(self.threshold)])]


def _dist_to_half_line(z, start):
    x, y = _re_im(z)
    return np.where(x >= start, np.abs(y), np.hypot(x - start, y))


@dataclass(frozen=True)
class DistDisk(_Region):
    """``dist(z, [spectrum_bottom, inf)) <= (C |B|)^(1/beta)``."""

    beta: float
    C: float
    B_norm: float
    spectrum_bottom: float = 0.0
    tag = "dist_disk"

    @property
    def radius(self) -> float:
        return (self.C * self.B_norm) ** (1 / self.beta)

    def margin(self, z):
        return self.radius - _dist_to_half_line(z, self.spectrum_bottom)

    def boundary(self, viewport, rel_step=1e-3):
        r, a = self.radius, self.spectrum_bottom
        xmax = viewport[1]
        n = int(round(1 / rel_step)) + 1
        arc = a + r * np.exp(1j * np.linspace(np.pi / 2, 3 * np.pi / 2, n))
        right = max(xmax, a)
        bottom = np.linspace(a, right, n) - 1j * r
        top = np.linspace(right, a, n) + 1j * r
        return [np.concatenate([top, arc[1:], bottom[1:]])]


@dataclass(frozen=True)
class PointDisk(_Region):
    mu: float
    radius: float
    tag = "point_disk"

    def margin(self, z):
        return self.radius - np.abs(np.asarray(z, dtype=complex) - self.mu)

    def boundary(self, viewport, rel_step=1e-3):
        n = int(round(1 / rel_step)) + 1
        return [self.mu + self.radius * np.exp(1j * np.linspace(0, 2 * np.pi, n))]


DIM_CLASSES = ("n=2", "n>=3")


def _implicit_boundary(margin, viewport, rel_step):
    import contourpy

    xmin, xmax, ymin, ymax = viewport
    n = int(round(1 / rel_step)) + 1
    xs, ys = np.linspace(xmin, xmax, n), np.linspace(ymin, ymax, n)
    zz = xs[None, :] + 1j * ys[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        vals = np.nan_to_num(margin(zz), nan=-1.0, posinf=1e300, neginf=-1e300)
    gen = contourpy.contour_generator(xs, ys, vals)
    return [seg[:, 0] + 1j * seg[:, 1] for seg in gen.lines(0.0)]


@dataclass(frozen=True)
class LogRegionV(_Region):
    c: float
    dim_class: str
    tag = "log_region_V"

    def margin(self, z):
        a = np.abs(np.asarray(z, dtype=complex))
        base = self.c * (2 + a) ** -0.25
        with np.errstate(divide="ignore"):
            if self.dim_class == "n=2":
                return np.where(a > 0, base * np.log(2 + 1 / a), -np.inf) - 1
        return base * np.log(2 + a) - 1

    def boundary(self, viewport, rel_step=1e-3):
        return _implicit_boundary(self.margin, viewport, rel_step)


@dataclass(frozen=True)
class LogRegionW(_Region):
    c: float
    dim_class: str
    tag = "log_region_W"

    def margin(self, z):
        z = np.asarray(z, dtype=complex)
        im_root = np.sqrt(z).imag
        base = self.c * (2 + im_root ** 2) ** -0.5
        if self.dim_class == "n=2":
            a = np.abs(z)
            with np.errstate(divide="ignore"):
                return np.where(a > 0, base * np.log(2 + 1 / a), -np.inf) - 1
        return base - 1

    def boundary(self, viewport, rel_step=1e-3):
        return _implicit_boundary(self.margin, viewport, rel_step)


REGION_TYPES = {cls.tag: cls for cls in (SectorRegion, ParabolaA, ParabolaB, ParabolaC,
                                         LeftResolventFree, DistDisk, PointDisk,
                                         LogRegionV, LogRegionW)}


def region_from_json(obj: dict):
    if set(obj) != {"tag", "params"}:
        raise ValueError(f"region object needs exactly 'tag' and 'params', got {sorted(obj)}")
    try:
        cls = REGION_TYPES[obj["tag"]]
    except KeyError:
        raise ValueError(f"unknown region tag {obj['tag']!r}") from None
    return cls(**obj["params"])


# --------------------------------------------------------------------------
# constructions

def sector_enclosure(m_eta, eta: float, b: BoundaryOperator) -> SectorRegion:
    return SectorRegion(eta=float(eta), kappa=kappa_eta(m_eta, b))


def _b_sign(b: BoundaryOperator) -> int:
    if abs(b.semibound_b) <= ZERO_B_RTOL * max(b.norm, 1.0):
        return 0
    return 1 if b.semibound_b > 0 else -1


def parabola_enclosure(d: DecayEstimate, b: BoundaryOperator, xi: Optional[float] = None):
    """Parabola-type enclosure; the case is chosen by the sign of ``b``."""
    sign = _b_sign(b)
    if sign > 0:
        apex = d.mu - (d.C * b.semibound_b) ** (1 / d.beta)
        if xi is None:
            raise HypothesisError("case b > 0 needs a parameter xi < mu - (C b)^(1/beta)")
        if not xi < apex:
            raise HypothesisError(f"xi={xi} must be below mu - (C b)^(1/beta) = {apex}")
        return ParabolaA(mu=d.mu, C=d.C, beta=d.beta, b=b.semibound_b, im_norm=b.im_norm, xi=float(xi))
    if sign == 0:
        return ParabolaB(mu=d.mu, C=d.C, beta=d.beta, im_norm=b.im_norm)
    return ParabolaC(mu=d.mu, C=d.C, beta=d.beta, b=b.semibound_b, im_norm=b.im_norm)


def default_xi(d: DecayEstimate, b: BoundaryOperator) -> float:
    """``xi`` with ``(mu - xi)^beta = 2 C b``, giving ``K_xi = 4 C |Im B|``."""
    return d.mu - (2 * d.C * b.semibound_b) ** (1 / d.beta)


def left_resolvent_free(model, b: BoundaryOperator, d: Optional[DecayEstimate]) -> LeftResolventFree:
    """Real half-line free of spectrum.

    ``b <= 0`` gives everything below the spectrum of ``A_0``.  For ``b > 0``
    the decay bound gives ``mu - (C b)^(1/beta)``; when the model can evaluate
    norms below its spectrum, the exact crossing ``b |M(lam)| = 1`` is found
    by bisection (the norm increases with ``lam`` there).
    """
    bottom = model.spectrum_bottom if model is not None else (d.mu if d is not None else 0.0)
    bval = b.semibound_b
    if _b_sign(b) <= 0:
        return LeftResolventFree(threshold=float(bottom))
    closed = None
    if d is not None:
        closed = d.mu - (d.C * bval) ** (1 / d.beta)
    if model is None:
        if closed is None:
            raise ValueError("need a model or a decay estimate")
        return LeftResolventFree(threshold=closed, closed_form=closed)

    def excess(lam):
        return bval * float(model.norms(np.array([lam + 0j]))[0]) - 1.0

    hi = bottom - 1e-9 * (1 + abs(bottom))
    if excess(hi) < 0:
        return LeftResolventFree(threshold=float(bottom), closed_form=closed)
    lo = closed if closed is not None and closed < hi else bottom - 1.0
    for _ in range(200):
        if excess(lo) < 0:
            break
        lo = bottom - 2 * (bottom - lo)
    else:
        raise HypothesisError("could not bracket b |M(lam)| = 1 below the spectrum")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if excess(mid) < 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-14 * (1 + abs(lo)):
            break
    thr = lo
    if closed is not None and closed > thr:
        log.warning("closed-form threshold %g exceeds the evaluated crossing %g; "
                    "the decay bound does not hold for this model", closed, thr)
    return LeftResolventFree(threshold=float(thr), closed_form=closed)


def dist_enclosure(d: DecayEstimate, b_norm: float, mode: str = "dist-to-spectrum",
                   spectrum_bottom: float = 0.0):
    if mode == "dist-to-spectrum":
        return DistDisk(beta=d.beta, C=d.C, B_norm=float(b_norm), spectrum_bottom=float(spectrum_bottom))
    if mode == "dist-to-point":
        return PointDisk(mu=d.mu, radius=(d.C * b_norm) ** (1 / d.beta))
    raise ValueError(f"unknown mode {mode!r}")


def delta_log_regions(c1_alpha: float, c2_alpha: float, dim_class: str):
    if dim_class not in DIM_CLASSES:
        raise ValueError(f"dim_class must be one of {DIM_CLASSES}")
    if not (c1_alpha > 0 and c2_alpha > 0):
        raise ValueError("log-region constants must be positive")
    return LogRegionV(c=float(c1_alpha), dim_class=dim_class), LogRegionW(c=float(c2_alpha), dim_class=dim_class)


def sector_sweep_bound(model, spec: SectorSpec, grid, b_norm: float) -> float:
    """Empirical radius beyond which ``|B| |M(r e^{i psi})| < 1`` on all rays.

    ``grid`` is ``(psis, radii)``; rays start at the origin and samples outside
    ``spec`` are skipped.  On each ray the last failing sample and the next
    passing one bracket the crossing, which is then bisected.
    """
    psis, radii = grid
    radii = np.sort(np.asarray(radii, dtype=float))
    if b_norm == 0:
        return 0.0
    R = 0.0
    skipped = 0
    for psi in np.atleast_1d(psis):
        pts = radii * np.exp(1j * psi)
        inside = np.array([spec.contains(p) for p in pts])
        skipped += int((~inside).sum())
        r_in = radii[inside]
        if r_in.size == 0:
            continue
        vals = b_norm * model.norms(r_in * np.exp(1j * psi)) - 1.0
        fail = np.nonzero(vals >= 0)[0]
        if fail.size == 0:
            continue
        last = fail[-1]
        if last == r_in.size - 1:
            log.warning("sector sweep: |B||M| >= 1 at the largest radius %g on ray psi=%g", r_in[-1], psi)
            return math.inf
        lo, hi = r_in[last], r_in[last + 1]
        f = lambda r: b_norm * float(model.norms(np.array([r * np.exp(1j * psi)]))[0]) - 1.0
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if f(mid) >= 0:
                lo = mid
            else:
                hi = mid
            if hi - lo <= 1e-13 * hi:
                break
        R = max(R, hi)
    if skipped:
        log.info("sector sweep: %d grid samples outside the sector were skipped", skipped)
    return R
