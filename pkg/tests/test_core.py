import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from weylscope.core import (
    HypothesisError,
    SectorSpec,
    analyze_boundary_operator,
    kappa_eta,
    mbdd_bound,
    psd_sqrt,
    ray_sector_bound,
    spectral_norm,
    sqrt_upper,
)

finite = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)


def test_sqrt_of_minus_one_is_i():
    assert sqrt_upper(-1) == 1j


def test_sqrt_on_positive_axis_is_nonnegative():
    assert sqrt_upper(4.0) == 2.0
    assert sqrt_upper(complex(4.0, -0.0)) == 2.0


def test_sqrt_lower_half_plane():
    assert sqrt_upper(-2j) == pytest.approx(-1 + 1j)


@given(finite, finite)
def test_sqrt_branch_properties(x, y):
    z = complex(x, y)
    w = sqrt_upper(z)
    assert w.imag >= 0
    assert abs(w * w - z) <= 1e-12 * max(1.0, abs(z))


def test_sqrt_array_matches_scalar():
    z = np.array([-1, 4, -2j, 3 + 4j, complex(-5, -0.0)])
    got = sqrt_upper(z)
    assert np.allclose(got, [sqrt_upper(complex(v)) for v in z])
    assert np.all(got.imag >= 0)


def test_zero_operator():
    b = analyze_boundary_operator(np.zeros((2, 2)))
    assert b.semibound_b == 0 and b.im_norm == 0 and b.hermitian_flag


def test_diag_operator_flags():
    # Im B = diag(2, 0) is positive semidefinite, so B is dissipative
    b = analyze_boundary_operator(np.diag([1 + 2j, -3]))
    assert b.semibound_b == pytest.approx(1)
    assert b.im_norm == pytest.approx(2)
    assert b.dissipative_flag and not b.accumulative_flag and not b.hermitian_flag


def test_nilpotent_operator():
    b = analyze_boundary_operator([[0, 1], [0, 0]])
    assert b.semibound_b == pytest.approx(0.5)
    assert b.im_norm == pytest.approx(0.5)


def test_adjoint_swaps_flags():
    b = analyze_boundary_operator([[1j]])
    assert b.dissipative_flag and b.adjoint().accumulative_flag


def test_non_square_rejected():
    with pytest.raises(ValueError):
        analyze_boundary_operator(np.zeros((2, 3)))


def test_kappa_zero_operator():
    b = analyze_boundary_operator(np.zeros((2, 2)))
    assert kappa_eta(np.eye(2) / 2, b) == 0.0


def test_kappa_imaginary_entry():
    b = analyze_boundary_operator([[1j, 0], [0, 0]])
    assert kappa_eta(np.eye(2) / 2, b) == pytest.approx(0.5)


def test_kappa_hermitian_is_zero():
    b = analyze_boundary_operator([[0.5, 0.2], [0.2, -1]])
    assert kappa_eta(np.eye(2) / 2, b) == pytest.approx(0, abs=1e-15)


def test_kappa_hypothesis_violation():
    b = analyze_boundary_operator([[4.0]])
    with pytest.raises(HypothesisError):
        kappa_eta([[0.5]], b)


def test_psd_sqrt_rejects_indefinite():
    with pytest.raises(HypothesisError):
        psd_sqrt(np.diag([1.0, -1.0]))


@settings(max_examples=40)
@given(st.integers(0, 2 ** 32 - 1))
def test_kappa_unitary_invariance(seed):
    rng = np.random.default_rng(seed)
    n = 3
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    m = a @ a.conj().T / (4 * n) + 0.1 * np.eye(n)
    x = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    bmat = x - (np.linalg.eigvalsh((x + x.conj().T) / 2).max() + 0.1) * np.eye(n)
    q, _ = np.linalg.qr(rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)))
    k1 = kappa_eta(m, analyze_boundary_operator(bmat))
    k2 = kappa_eta(q @ m @ q.conj().T, analyze_boundary_operator(q @ bmat @ q.conj().T))
    assert k1 == pytest.approx(k2, rel=1e-8, abs=1e-12)


def test_mbdd_bound_examples():
    assert mbdd_bound(1.0, 1j, 2j) == pytest.approx(3.0)
    assert mbdd_bound(2.0, 1 + 1j, 1j) == pytest.approx(4 + 2 * math.sqrt(5))
    assert mbdd_bound(1.5, 2 + 3j, 2 + 3j) == 1.5
    with pytest.raises(ValueError):
        mbdd_bound(1.0, 1.0, 1j)


def test_ray_sector_bound_examples():
    assert ray_sector_bound(0.7, 0.7) == 1.0
    assert ray_sector_bound(-math.pi / 3, math.pi / 3) == pytest.approx(3.0)
    s8 = math.sin(math.pi / 8)
    expected = 1 + 2 * s8 / (math.sqrt(2) / 2) + 4 * s8 * math.sin(3 * math.pi / 8) / (math.sqrt(2) / 2)
    assert ray_sector_bound(math.pi / 2, math.pi / 4) == pytest.approx(expected)
    assert expected == pytest.approx(4.0824, abs=1e-4)


def test_spectral_norm_large_matrix_power_iteration():
    rng = np.random.default_rng(0)
    a = rng.normal(size=(600, 600))
    assert spectral_norm(a) == pytest.approx(np.linalg.norm(a, 2), rel=1e-6)


def test_sector_spec_membership():
    up = SectorSpec("upper", 0, math.pi / 4)
    assert up.contains(1j) and up.contains(1 + 1j) and not up.contains(1 + 0.5j)
    assert SectorSpec("conjugate", 0, math.pi / 4).contains(-1j)
    ext = SectorSpec("exterior", -1, math.pi / 2)
    assert ext.contains(-5 + 1j) and not ext.contains(3j)
    with pytest.raises(ValueError):
        SectorSpec("exterior", 1j, 1.0)
