import math

import numpy as np
import pytest

from _oracles import kac_reference
from weylscope.core import OnCutError, SingularityError
from weylscope.models import (
    Edge,
    MetricGraph,
    PointLattice,
    ScalarProfile,
    graph_weyl,
    graph_weyl_inverse,
    j0_sector_constant,
    kac_weyl_eval,
    lattice_gamma_apply,
    lattice_weyl,
    random_compact_graph,
    scalar_profile_norm,
    schur_bound_line,
    star_graph,
)


def segment():
    return MetricGraph(("a", "b"), (Edge("a", "b", 1.0),))


def test_graph_inverse_single_edge():
    got = graph_weyl_inverse(segment(), -1)
    c, s = 1 / math.tanh(1), 1 / math.sinh(1)
    assert np.allclose(got, [[c, -s], [-s, c]], atol=1e-14)


def test_graph_weyl_is_inverse():
    g = segment()
    m = graph_weyl(g, -1).matrix
    assert np.allclose(m @ graph_weyl_inverse(g, -1), np.eye(2), atol=1e-13)
    assert np.allclose(np.sort(np.linalg.eigvalsh(m)), [math.tanh(0.5), 1 / math.tanh(0.5)])


def test_single_infinite_edge():
    g = MetricGraph(("v",), (Edge("v"),))
    assert graph_weyl_inverse(g, -1)[0, 0] == pytest.approx(1.0)


def test_star_graph_weyl():
    for n in (1, 3, 5):
        lam = 2 + 3j
        assert graph_weyl(star_graph(n), lam).matrix[0, 0] == pytest.approx(1j / (n * np.sqrt(lam)))


def test_graph_validation():
    with pytest.raises(ValueError):
        MetricGraph(("a",), (Edge("a", "a", 1.0),))
    with pytest.raises(ValueError):
        MetricGraph(("a", "b"), (Edge("a", "b", -1.0),))
    with pytest.raises(ValueError):
        MetricGraph(("a", "b", "c"), (Edge("a", "b", 1.0),))


def test_graph_cut_and_dirichlet_pole():
    g = MetricGraph(("a", "b"), (Edge("a", "b", 1.0), Edge("a")))
    with pytest.raises(OnCutError):
        g.weyl(4.0)
    with pytest.raises(SingularityError):
        segment().weyl(math.pi ** 2)


def test_compact_graph_has_no_cut():
    assert not segment().has_branch_cut
    assert segment().weyl(2.0).norm > 0


def test_graph_decay_along_negative_axis():
    g = random_compact_graph(np.random.default_rng(1))
    lam = -np.geomspace(1e2, 1e6, 9)
    scaled = np.sqrt(-lam) * g.norms(lam)
    assert np.all(np.isfinite(scaled)) and scaled.max() / scaled.min() < 1.5


def test_random_graph_constraints():
    rng = np.random.default_rng(2)
    for _ in range(20):
        g = random_compact_graph(rng)
        assert 2 <= g.boundary_dim <= 8 and g.is_compact
        assert all(0.3 <= e.length <= 3.0 for e in g.edges)


def test_lattice_single_point():
    assert lattice_weyl(PointLattice((0.0,)), -1).matrix[0, 0] == pytest.approx(0.5)


def test_lattice_two_points():
    m = lattice_weyl(PointLattice((0.0, 1.0)), -1).matrix
    e = math.exp(-1) / 2
    assert np.allclose(m, [[0.5, e], [e, 0.5]])


def test_lattice_rejects_cut():
    with pytest.raises(OnCutError):
        PointLattice((0.0,)).weyl(3.0)


def test_lattice_validation():
    with pytest.raises(ValueError):
        PointLattice((1.0, 0.0))
    with pytest.raises(ValueError):
        PointLattice((0.0, 0.5, 1.0), d=1.0)


def test_gamma_field():
    p = PointLattice((0.0,))
    assert lattice_gamma_apply(p, [1.0], 0.0, -1) == pytest.approx(-0.5)
    assert lattice_gamma_apply(p, [0.0], 0.3, -1) == 0


def test_schur_bound_examples():
    assert schur_bound_line(1, -1) == pytest.approx(1 / math.tanh(0.5) / 2)
    assert schur_bound_line(1, -1) == pytest.approx(1.08198, abs=1e-5)
    assert schur_bound_line(1, -4) == pytest.approx(1 / math.tanh(1) / 4)


def test_j0_examples():
    assert j0_sector_constant(1, -1, math.pi / 2) == pytest.approx(math.sqrt(2) / 4)
    assert j0_sector_constant(2, -4, math.pi / 3) == pytest.approx(
        math.sqrt(4 * math.sin(math.pi / 3)) * math.sin(math.pi / 6))


def test_truncated_lattice_tail_does_not_exceed_schur_bound():
    p = PointLattice(tuple(float(x) for x in range(5)), 1.0, tail_tol=1e-10)
    lam = np.array([-1 + 0.5j, -30 + 2j, 10 + 1j])
    assert np.all(p.norms(lam) <= [schur_bound_line(1.0, l) + 1e-10 for l in lam])


def test_scalar_profile_norms():
    assert scalar_profile_norm(ScalarProfile("half_space"), -4) == pytest.approx(0.5)
    assert scalar_profile_norm(ScalarProfile("hyperplane_delta"), -1) == pytest.approx(0.5)
    assert scalar_profile_norm(ScalarProfile("star", edges=3), -9) == pytest.approx(1 / 9)


def test_kac_closed_form_case():
    assert kac_weyl_eval(0.5, 0) == pytest.approx(1.0, rel=1e-10)


@pytest.mark.parametrize("alpha,lam", [(0.125, -1e4), (0.375, -1e8), (0.25, -30.0), (0.4, 1.0)])
def test_kac_against_mpmath(alpha, lam):
    assert kac_weyl_eval(alpha, lam) == pytest.approx(kac_reference(alpha, lam), rel=1e-9)


def test_kac_below_support_only():
    with pytest.raises(OnCutError):
        kac_weyl_eval(0.25, 5.0)
    assert abs(kac_weyl_eval(0.25, 5.0 + 1j).imag) > 0
