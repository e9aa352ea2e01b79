import math

import numpy as np
import pytest

from _oracles import robin_interval_eigenvalue
from weylscope.core import analyze_boundary_operator
from weylscope.enclosures import closed_form_decay, dist_enclosure
from weylscope.models import Edge, MetricGraph, PointLattice, ScalarProfile, random_compact_graph, star_graph
from weylscope.solver import (
    ContourError,
    find_eigenvalues,
    free_green,
    krein_resolvent_kernel,
    secular_eval,
    verify_containment,
    winding_count,
)


def circle(center, radius, n=64):
    return [center + radius * np.exp(2j * np.pi * k / n) for k in range(n)]


def test_secular_zero_coupling():
    assert secular_eval(star_graph(3), [[0]], -2 + 1j) == pytest.approx(1.0)


def test_secular_star_root():
    assert abs(secular_eval(ScalarProfile("star", edges=3), [[3 + 3j]], -2j)) < 1e-14


def test_winding_counts():
    star = ScalarProfile("star", edges=3)
    assert winding_count(star, [[3 + 3j]], circle(-2j, 1)) == 1
    assert winding_count(star, [[0]], circle(-2j, 1)) == 0


def test_contour_touching_cut_rejected():
    with pytest.raises(ContourError):
        winding_count(ScalarProfile("star", edges=3), [[1]], circle(1.0, 0.5))


def test_single_delta():
    rep = find_eigenvalues(PointLattice((0.0,)), [[2.0]], (-3 - 1j, -0.2 + 1j))
    assert len(rep.eigenvalues) == 1 and rep.values[0] == pytest.approx(-1.0, abs=1e-10)


def test_no_eigenvalues_for_zero_coupling():
    rep = find_eigenvalues(star_graph(3), [[0]], (-10 - 10j, 10 + 10j))
    assert rep.eigenvalues == []


def test_robin_interval_matches_transcendental_oracle():
    g = MetricGraph(("a", "b"), (Edge("a", "b", 1.0),))
    rep = find_eigenvalues(g, np.diag([1.0, 2.0]), (-30 - 1j, -1e-3 + 1j))
    assert len(rep.eigenvalues) == 1
    assert rep.values[0].real == pytest.approx(robin_interval_eigenvalue(1.0, 2.0, 1.0), abs=1e-9)


def test_two_deltas_multiplicity_and_symmetry():
    rep = find_eigenvalues(PointLattice((0.0, 1.0)), np.diag([3.0, 3.0]), (-10 - 1j, -1e-3 + 1j))
    k = rep.values
    assert len(k) == 2 and np.all(np.abs(k.imag) < 1e-10)
    # even/odd states satisfy 2 kappa = alpha (1 +- e^{-kappa d})
    for lam in k:
        kappa = math.sqrt(-lam.real)
        assert min(abs(2 * kappa - 3 * (1 + math.exp(-kappa))), abs(2 * kappa - 3 * (1 - math.exp(-kappa)))) < 1e-9


def test_hermitian_lattice_spectrum_is_real():
    rng = np.random.default_rng(0)
    x = rng.normal(size=(4, 4))
    rep = find_eigenvalues(PointLattice((0.0, 1.0, 2.0, 3.0)), x + x.T + 2 * np.eye(4), (-40 - 5j, -1e-3 + 5j))
    assert len(rep.values) and np.all(np.abs(rep.values.imag) < 1e-8)


def test_deterministic_across_threads():
    g = random_compact_graph(np.random.default_rng(11))
    rng = np.random.default_rng(12)
    b = rng.normal(size=(g.boundary_dim,) * 2) * 2 + 1j * rng.normal(size=(g.boundary_dim,) * 2)
    r1 = find_eigenvalues(g, b, (-50 - 20j, -1e-3 + 20j), threads=1)
    r4 = find_eigenvalues(g, b, (-50 - 20j, -1e-3 + 20j), threads=4)
    assert r1.to_json() == r4.to_json()


def test_star_containment_on_boundary():
    star = ScalarProfile("star", edges=3)
    b = analyze_boundary_operator([[3 + 3j]])
    rep = find_eigenvalues(star, b, (-1 - 3j, 1 - 1j))
    res = verify_containment(rep, [dist_enclosure(closed_form_decay(star), b.norm)])
    assert res.passed and abs(res.rows[0]["margin"]) < 1e-9


def test_krein_kernel():
    p = PointLattice((0.0,))
    assert krein_resolvent_kernel(p, [[0]], -1, 0.3, -0.2) == pytest.approx(free_green(-1, 0.3, -0.2))
    near = [abs(krein_resolvent_kernel(p, [[2.0]], -1 - eps, 0.0, 0.0)) for eps in (1e-2, 1e-3)]
    assert near[1] / near[0] == pytest.approx(10, rel=0.05)
