import math

import numpy as np
import pytest

from weylscope.core import HypothesisError, SectorSpec, analyze_boundary_operator
from weylscope.enclosures import (
    DecayEstimate,
    DistDisk,
    LeftResolventFree,
    ParabolaA,
    ParabolaB,
    ParabolaC,
    PointDisk,
    closed_form_decay,
    default_xi,
    delta_log_regions,
    dist_enclosure,
    fit_decay,
    k_prime_beta,
    left_resolvent_free,
    parabola_enclosure,
    region_from_json,
    sample_model_decay,
    sector_enclosure,
    sector_sweep_bound,
)
from weylscope.models import PointLattice, ScalarProfile, random_compact_graph, schur_bound_line, star_graph


def op(m):
    return analyze_boundary_operator(np.atleast_2d(m))


def test_sector_zero_operator_is_half_line():
    reg = sector_enclosure(np.eye(2) / 2, -1.0, op(np.zeros((2, 2))))
    assert reg.kappa == 0
    assert reg.contains(-1.0) and reg.contains(5.0) and not reg.contains(5 + 1e-3j)


def test_sector_membership():
    reg = sector_enclosure(np.eye(2) / 2, 0.0, op([[1j, 0], [0, 0]]))
    assert reg.kappa == pytest.approx(0.5)
    assert reg.contains(2 + 1j) and not reg.contains(2 + 1.01j) and not reg.contains(-0.1)


def test_k_prime_beta_examples():
    assert k_prime_beta(1.0, 0.5, 3.0) == pytest.approx(6.0)
    assert k_prime_beta(1.0, 1.0, 3.0) == pytest.approx(3.0)


def test_parabola_case_selection():
    d = DecayEstimate(1.0, 0.5, 0.0, "closed-form")
    assert isinstance(parabola_enclosure(d, op([[1j]])), ParabolaB)
    assert isinstance(parabola_enclosure(d, op([[-1 + 1j]])), ParabolaC)
    with pytest.raises(HypothesisError):
        parabola_enclosure(d, op([[1 + 1j]]))
    with pytest.raises(HypothesisError):
        parabola_enclosure(d, op([[1 + 1j]]), xi=-0.5)


def test_parabola_a_figure_parameters():
    d = DecayEstimate(1.0, 0.5, 0.0, "closed-form")
    reg = parabola_enclosure(d, op([[1 + 1j]]), xi=-5.0)
    assert isinstance(reg, ParabolaA)
    assert reg.apex == pytest.approx(-1.0)
    assert reg.K == pytest.approx(2 * 1.0 / (1 - 1 / math.sqrt(5)))
    assert not reg.contains(-1.01) and reg.contains(-0.99)


def test_parabola_b_beta_one_at_mu():
    reg = ParabolaB(mu=0.0, C=1.0, beta=1.0, im_norm=2.0)
    assert reg.contains(0 + 2j) and not reg.contains(0 + 2.01j)


def test_parabola_b_hyperplane():
    d = closed_form_decay(ScalarProfile("hyperplane_delta"))
    reg = parabola_enclosure(d, op([[1j]]))
    assert reg.K == pytest.approx(1.0)


def test_default_xi_gives_fixed_width():
    d = DecayEstimate(1.0, 0.5, 0.0, "closed-form")
    b = op([[1 + 2j]])
    reg = parabola_enclosure(d, b, default_xi(d, b))
    assert reg.K == pytest.approx(4 * d.C * b.im_norm)


def test_left_resolvent_free_thresholds():
    d = DecayEstimate(1.0, 0.5, 0.0, "closed-form")
    assert left_resolvent_free(None, op([[-1.0]]), d).threshold == 0.0
    assert left_resolvent_free(None, op([[1.0]]), d).threshold == pytest.approx(-1.0)
    half = ScalarProfile("half_space")
    reg = left_resolvent_free(half, op([[2.0]]), closed_form_decay(half))
    assert reg.threshold == pytest.approx(-4.0, rel=1e-10)


def test_left_resolvent_free_graph_uses_true_crossing():
    g = random_compact_graph(np.random.default_rng(3))
    b = op(np.eye(g.boundary_dim) * 3.0)
    reg = left_resolvent_free(g, b, sample_model_decay(g, -1.0))
    assert 3.0 * g.norm(reg.threshold) == pytest.approx(1.0, abs=1e-9)
    assert reg.closed_form <= reg.threshold


def test_dist_disk_examples():
    assert dist_enclosure(DecayEstimate(1, 0.5, 0, "closed-form"), 2.0).radius == pytest.approx(4.0)
    hyp = dist_enclosure(closed_form_decay(ScalarProfile("hyperplane_delta")), 2.0)
    assert hyp.radius == pytest.approx(1.0)
    assert dist_enclosure(DecayEstimate(1, 0.5, 0, "closed-form"), 0.0).radius == 0.0
    pd = dist_enclosure(DecayEstimate(1, 0.5, -1, "closed-form"), 1.0, mode="dist-to-point")
    assert isinstance(pd, PointDisk) and pd.contains(-1.5) and not pd.contains(0.5)


def test_dist_disk_uses_distance_to_half_line():
    disk = DistDisk(beta=0.5, C=1.0, B_norm=1.0, spectrum_bottom=0.0)
    assert disk.contains(100 + 0.99j) and not disk.contains(100 + 1.01j) and not disk.contains(-1.01)


def test_log_regions():
    v, w = delta_log_regions(0.5, math.sqrt(2), "n>=3")
    assert not any(v.contains(z) for z in (0, -3, 10j, 100))
    assert w.contains(0) and not w.contains(-0.5)
    c1 = 1 / (2 ** -0.25 * math.log(2))
    v0, _ = delta_log_regions(c1 * 1.001, 1, "n>=3")
    assert v0.contains(0)
    v2, w2 = delta_log_regions(1.0, 1.0, "n=2")
    assert v2.contains(1e-6) and not v2.contains(0)
    with pytest.raises(ValueError):
        delta_log_regions(1, 1, "n=4")


def test_closed_form_decay_values():
    assert closed_form_decay(ScalarProfile("half_space")).C == 1.0
    lat = closed_form_decay(PointLattice((0.0, 1.0), 1.0))
    assert (lat.C, lat.beta, lat.mu) == (pytest.approx(1 / math.tanh(0.5) / 2), 0.5, -1.0)
    assert closed_form_decay(star_graph(3)) is None


def test_fit_decay_recovers_hyperplane():
    t = np.geomspace(0.1, 1e4, 41)
    samples = [(-x, 1 / (2 * math.sqrt(x))) for x in t]
    d = fit_decay(samples, 0.0)
    assert d.beta == pytest.approx(0.5, rel=0.01) and d.C == pytest.approx(0.5, rel=0.01)
    assert all(n <= d.bound(l) * (1 + 1e-6) for l, n in samples)


def test_fit_decay_needs_enough_samples():
    with pytest.raises(ValueError):
        fit_decay([(-1.0, 1.0), (-2.0, 0.5)], 0.0)


def test_fitted_graph_decay_majorizes_samples():
    g = random_compact_graph(np.random.default_rng(5))
    d = sample_model_decay(g, -1.0)
    lam = -1.0 - np.geomspace(1e-3, 1e4, 200)
    assert np.all(g.norms(lam) <= np.array([d.bound(l) for l in lam]) * (1 + 1e-6))


def test_sweep_bound_examples():
    spec = SectorSpec("upper", 0, math.pi / 3)
    grid = (np.linspace(math.pi / 2 - 1.0, math.pi / 2 + 1.0, 7), np.geomspace(0.01, 1e3, 200))
    assert sector_sweep_bound(ScalarProfile("star", edges=2), spec, grid, 0.0) == 0.0
    r = sector_sweep_bound(ScalarProfile("star", edges=2), spec, grid, 4.0)
    assert r == pytest.approx(4.0, rel=1e-8)
    lat = PointLattice(tuple(float(x) for x in range(11)), 1.0)
    r_lat = sector_sweep_bound(lat, spec, grid, 1.0)
    psis = grid[0][(grid[0] >= math.pi / 6) & (grid[0] <= 5 * math.pi / 6)]
    assert all(schur_bound_line(1.0, 1.0001 * r_lat * np.exp(1j * p)) >= lat.norm(r_lat * 1.0001 * np.exp(1j * p))
               for p in psis)


def test_region_json_round_trip():
    regs = [ParabolaC(mu=0, C=1, beta=0.5, b=-1, im_norm=1), LeftResolventFree(threshold=-2.0),
            DistDisk(beta=0.5, C=1, B_norm=2, spectrum_bottom=0)]
    for reg in regs:
        assert region_from_json(reg.to_json()) == reg


def test_region_boundaries_are_finite():
    for reg in (ParabolaB(mu=0, C=1, beta=0.5, im_norm=1), *delta_log_regions(3, 2, "n>=3")):
        for poly in reg.boundary((-10, 10, -10, 10), 1e-2):
            assert np.all(np.isfinite(poly))
