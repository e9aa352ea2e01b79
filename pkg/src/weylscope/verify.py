"""
Property suites run by ``weylscope verify``.

Each suite returns a :class:`SuiteResult` whose ``worst_margin`` is the
smallest slack seen against its threshold (negative means failure).  When no
model is given the suites run on a fixed, seeded corpus.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .core import analyze_boundary_operator, spectral_norm, sqrt_upper
from .enclosures import DecayEstimate, closed_form_decay, dist_enclosure
from .models import (
    Edge,
    MetricGraph,
    PointLattice,
    ScalarProfile,
    random_compact_graph,
    schur_bound_line,
    star_graph,
)
from .solver import find_eigenvalues, verify_containment

SUITES = ("symmetry", "herglotz", "schur", "decay", "containment", "duality", "identity")


@dataclass
class SuiteResult:
    name: str
    passed: bool
    worst_margin: float
    detail: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"suite": self.name, "passed": bool(self.passed), "worst_margin": float(self.worst_margin),
                **self.detail}


def matrix_corpus(rng, n_graphs=3):
    models = [PointLattice(tuple(float(x) for x in range(11)), 1.0),
              MetricGraph(("a", "b"), (Edge("a", "b", 1.3), Edge("a"), Edge("b"), Edge("b"))),
              star_graph(3)]
    models += [random_compact_graph(rng) for _ in range(n_graphs)]
    return models


def random_upper(rng, n, re=(-20, 20), im=(0.05, 20)):
    return rng.uniform(*re, n) + 1j * rng.uniform(*im, n)


def suite_symmetry(models, rng, n=1000, rtol=1e-10):
    worst = math.inf
    for m in models:
        lam = random_upper(rng, n)
        lam = np.where(rng.random(n) < 0.5, lam, lam.conj())
        a, b = m.weyl_batch(lam), m.weyl_batch(lam.conj())
        err = np.linalg.norm(b - np.conj(np.swapaxes(a, 1, 2)), ord=2, axis=(1, 2))
        scale = np.linalg.norm(a, ord=2, axis=(1, 2))
        worst = min(worst, float(np.min(rtol - err / scale)))
    return SuiteResult("symmetry", worst >= 0, worst)


def suite_herglotz(models, rng, n=1000, rtol=1e-10):
    worst = math.inf
    for m in models:
        lam = random_upper(rng, n)
        ms = m.weyl_batch(lam)
        im = (ms - np.conj(np.swapaxes(ms, 1, 2))) / 2j
        lo = np.linalg.eigvalsh(im)[:, 0]
        scale = np.linalg.norm(ms, ord=2, axis=(1, 2))
        worst = min(worst, float(np.min(lo / scale + rtol)))
    return SuiteResult("herglotz", worst >= 0, worst)


def suite_schur(lattice, rng, n=1000, atol=1e-10):
    lam = rng.uniform(-50, 50, n) + 1j * rng.uniform(0.1, 50, n)
    norms = lattice.norms(lam)
    bounds = np.array([schur_bound_line(lattice.d, l) for l in lam])
    worst = float(np.min(bounds + atol - norms))
    return SuiteResult("schur", worst >= 0, worst)


def exterior_sector_samples(w0, nu, r_lo, r_hi, n_r=60, n_phi=41):
    """Points of ``U_{w0,nu}`` with modulus in ``[r_lo, r_hi]``."""
    out = []
    for r in np.geomspace(r_lo, r_hi, n_r):
        for phi in np.linspace(nu, 2 * np.pi - nu, n_phi):
            # points w0 + s e^{i phi} with |w0 + s e^{i phi}| = r
            c = np.exp(1j * phi)
            # |w0 + s c|^2 = r^2  ->  s^2 + 2 s w0 Re c + w0^2 - r^2 = 0
            bq = w0 * c.real
            disc = bq * bq - (w0 * w0 - r * r)
            if disc < 0:
                continue
            s = -bq + math.sqrt(disc)
            if s > 0:
                out.append(w0 + s * c)
    return np.array(out)


def graph_decay_ratio(g, w0=-1.0, nu=np.pi / 2):
    lo = exterior_sector_samples(w0, nu, 10, 100)
    hi = exterior_sector_samples(w0, nu, 1e3, 1e4)
    s_lo = float(np.max(np.sqrt(np.abs(lo)) * g.norms(lo)))
    s_hi = float(np.max(np.sqrt(np.abs(hi)) * g.norms(hi)))
    return s_lo, s_hi


def suite_decay(graphs, threshold=0.10):
    worst = math.inf
    sups = []
    for g in graphs:
        s_lo, s_hi = graph_decay_ratio(g)
        sups.append((s_lo, s_hi))
        worst = min(worst, threshold - (s_hi / s_lo - 1))
    return SuiteResult("decay", bool(worst > 0 and all(map(np.isfinite, np.ravel(sups)))), worst)


def star_sharpness(edges=3, coupling=3 + 3j):
    model = ScalarProfile("star", edges=edges)
    bop = analyze_boundary_operator([[coupling]])
    expected = -coupling ** 2 / edges ** 2
    rect = (expected - 1 - 1j, expected + 1 + 1j)
    report = find_eigenvalues(model, bop, rect, tol=1e-12)
    disk = dist_enclosure(closed_form_decay(model), bop.norm)
    res = verify_containment(report, [disk])
    return report, disk, res


def suite_containment():
    report, disk, res = star_sharpness()
    if len(report.eigenvalues) != 1:
        return SuiteResult("containment", False, -math.inf, {"eigenvalues": len(report.eigenvalues)})
    margin = res.rows[0]["margin"]
    worst = 1e-9 - abs(margin)
    return SuiteResult("containment", worst >= 0 and res.passed, worst, {"boundary_margin": margin})


def pair_conjugates(a, b):
    """Largest distance in the best matching of ``a`` with ``conj(b)``."""
    a, b = np.asarray(a), np.conj(np.asarray(b))
    if a.size != b.size:
        return math.inf
    if a.size == 0:
        return 0.0
    cost = np.abs(a[:, None] - b[None, :])
    r, c = linear_sum_assignment(cost)
    return float(cost[r, c].max())


def suite_duality(rng, cases=5, atol=1e-8):
    worst = math.inf
    for _ in range(cases):
        g = random_compact_graph(rng)
        n = g.boundary_dim
        b = rng.normal(size=(n, n)) * 2 + 1j * rng.normal(size=(n, n))
        rect = (-50 - 20j, -1e-3 + 20j)
        e1 = find_eigenvalues(g, b, rect).values
        e2 = find_eigenvalues(g, b.conj().T, rect).values
        worst = min(worst, atol - pair_conjugates(e1, e2))
    return SuiteResult("duality", worst >= 0, worst)


def difference_identity_error(lam, mu):
    p = PointLattice((0.0,))
    kl, km = sqrt_upper(lam), sqrt_upper(mu)
    lhs = p.weyl_matrix(lam)[0, 0] - p.weyl_matrix(mu)[0, 0]
    rhs = 1j * (km - kl) / (2 * kl * km)
    return abs(lhs - rhs)


def suite_identity(rng, n=1000, atol=1e-12):
    lam = rng.uniform(-20, 20, n) + 1j * rng.uniform(-20, 20, n)
    mu = rng.uniform(-20, 20, n) + 1j * rng.uniform(-20, 20, n)
    err = max(difference_identity_error(l, m) for l, m in zip(lam, mu))
    return SuiteResult("identity", err < atol, atol - err)


def run_suites(names, seed=0, model=None):
    rng = np.random.default_rng(seed)
    unknown = [s for s in names if s not in SUITES]
    if unknown:
        raise ValueError(f"unknown suites {unknown}; choose from {SUITES}")
    results = []
    for name in names:
        if name in ("symmetry", "herglotz"):
            models = [model] if model is not None and model.has_matrix else matrix_corpus(rng)
            fn = suite_symmetry if name == "symmetry" else suite_herglotz
            results.append(fn(models, rng))
        elif name == "schur":
            lat = model if isinstance(model, PointLattice) else PointLattice(tuple(float(x) for x in range(-25, 26)), 1.0)
            results.append(suite_schur(lat, rng))
        elif name == "decay":
            graphs = [model] if isinstance(model, MetricGraph) and model.is_compact else \
                [random_compact_graph(rng) for _ in range(5)]
            results.append(suite_decay(graphs))
        elif name == "containment":
            results.append(suite_containment())
        elif name == "duality":
            results.append(suite_duality(rng))
        elif name == "identity":
            results.append(suite_identity(rng))
    return results
