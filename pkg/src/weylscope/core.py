"""
Complex-analytic and linear-algebra primitives shared by all models.

Everything here is a pure function of its inputs.  Complex spectral
parameters are plain Python/numpy ``complex`` values; the square root used
throughout is the branch with non-negative imaginary part.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

# Dense SVD below this size, power iteration above.
SVD_MAX_DIM = 512
HERMITIAN_RTOL = 1e-10
PSD_RTOL = 1e-12


class WeylscopeError(Exception):
    """Base class for all errors raised by the toolkit."""


class OnCutError(WeylscopeError, ValueError):
    """The spectral parameter lies on the branch cut of the model."""


class SingularityError(WeylscopeError, ArithmeticError):
    """A model object is undefined (pole, Dirichlet point, singular matrix)."""


class HypothesisError(WeylscopeError, ValueError):
    """A theorem hypothesis needed to build an enclosure does not hold."""


class BudgetExhausted(WeylscopeError, RuntimeError):
    """A numerical procedure ran out of its iteration/refinement budget."""


def as_complex(lam) -> complex:
    z = complex(lam)
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise ValueError(f"non-finite spectral parameter {lam!r}")
    return z


def sqrt_upper(lam):
    """Square root with ``Im >= 0``.

    Off ``[0, inf)`` the result has strictly positive imaginary part.  On the
    half-line the boundary value from the upper half-plane (the non-negative
    real root) is returned.  Accepts scalars or arrays.
    """
    if np.ndim(lam) == 0:
        z = as_complex(lam)
        if z.imag == 0.0:
            # -0.0 imaginary parts would otherwise select the lower lip.
            z = complex(z.real, 0.0)
        r = cmath.sqrt(z)
        return -r if r.imag < 0 else r
    z = np.asarray(lam, dtype=complex)
    if not np.all(np.isfinite(z)):
        raise ValueError("non-finite spectral parameter")
    z = np.where(z.imag == 0.0, z.real + 0j, z)
    r = np.sqrt(z)
    return np.where(r.imag < 0, -r, r)


def spectral_norm(a) -> float:
    """Largest singular value of a dense matrix."""
    a = np.atleast_2d(np.asarray(a))
    if a.size == 0:
        return 0.0
    if max(a.shape) <= SVD_MAX_DIM:
        return float(np.linalg.svd(a, compute_uv=False)[0])
    return _power_norm(a)


def _power_norm(a, tol=1e-10, maxiter=10_000) -> float:
    rng = np.random.default_rng(0)
    v = rng.standard_normal(a.shape[1]) + 0j
    v /= np.linalg.norm(v)
    est = 0.0
    for _ in range(maxiter):
        w = a.conj().T @ (a @ v)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        v = w / nw
        new = math.sqrt(nw)
        if abs(new - est) <= tol * new:
            return new
        est = new
    raise BudgetExhausted("power iteration for the spectral norm did not converge")


def hermitian_part(a):
    a = np.asarray(a, dtype=complex)
    return (a + a.conj().T) / 2


def imaginary_part(a):
    """``(A - A*) / 2i``, the Hermitian 'imaginary part' of a matrix."""
    a = np.asarray(a, dtype=complex)
    return (a - a.conj().T) / 2j


def is_hermitian(a, rtol=HERMITIAN_RTOL) -> bool:
    a = np.asarray(a, dtype=complex)
    scale = spectral_norm(a)
    return spectral_norm(a - a.conj().T) <= rtol * max(scale, np.finfo(float).tiny)


@dataclass(frozen=True)
class BoundaryOperator:
    """A coupling matrix ``B`` together with the quantities the enclosures need.

    ``semibound_b`` is the smallest ``b`` with ``Re(Bx, x) <= b|x|^2`` and
    ``im_norm`` is the norm of ``Im B = (B - B*)/2i``.
    """

    matrix: np.ndarray
    semibound_b: float
    im_norm: float
    norm: float
    hermitian_flag: bool
    dissipative_flag: bool
    accumulative_flag: bool

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def adjoint(self) -> "BoundaryOperator":
        return analyze_boundary_operator(self.matrix.conj().T)


def analyze_boundary_operator(matrix) -> BoundaryOperator:
    b = np.array(matrix, dtype=complex)
    if b.ndim == 0:
        b = b.reshape(1, 1)
    if b.ndim != 2 or b.shape[0] != b.shape[1]:
        raise ValueError(f"boundary operator must be square, got shape {b.shape}")
    nrm = spectral_norm(b)
    re_eigs = np.linalg.eigvalsh(hermitian_part(b))
    im_eigs = np.linalg.eigvalsh(imaginary_part(b))
    atol = HERMITIAN_RTOL * max(nrm, np.finfo(float).tiny)
    im_norm = float(np.max(np.abs(im_eigs)))
    dissipative = bool(im_eigs.min() >= -atol)
    accumulative = bool(im_eigs.max() <= atol)
    b.setflags(write=False)
    return BoundaryOperator(
        matrix=b,
        semibound_b=float(re_eigs.max()),
        im_norm=im_norm,
        norm=nrm,
        hermitian_flag=dissipative and accumulative,
        dissipative_flag=dissipative,
        accumulative_flag=accumulative,
    )


def psd_sqrt(m):
    """Hermitian PSD square root via the spectral theorem.

    Eigenvalues above ``-1e-12*|M|`` are clamped to zero; anything more
    negative means the matrix is not PSD (typically ``eta`` was not chosen
    below the spectrum of the reference operator).
    """
    m = np.atleast_2d(np.asarray(m, dtype=complex))
    scale = spectral_norm(m)
    if spectral_norm(m - m.conj().T) > HERMITIAN_RTOL * max(scale, np.finfo(float).tiny):
        raise HypothesisError("matrix is not Hermitian")
    w, v = np.linalg.eigh(hermitian_part(m))
    if w.min() < -PSD_RTOL * scale:
        raise HypothesisError(
            f"not PSD (min eigenvalue {w.min():.3e}): eta is not below min sigma(A0) for this model"
        )
    w = np.clip(w, 0.0, None)
    return (v * np.sqrt(w)) @ v.conj().T


def kappa_eta(m_eta, b: BoundaryOperator) -> float:
    """Opening slope of the sector enclosing the numerical range."""
    m_eta = np.atleast_2d(np.asarray(m_eta, dtype=complex))
    if m_eta.shape != b.matrix.shape:
        raise ValueError(f"dimension mismatch: M(eta) {m_eta.shape} vs B {b.matrix.shape}")
    denom = 1.0 - b.semibound_b * spectral_norm(m_eta)
    if denom <= 0.0:
        raise HypothesisError("sector hypothesis (ii) violated: b*|M(eta)| >= 1")
    root = psd_sqrt(m_eta)
    inner = root @ b.matrix @ root
    return spectral_norm(imaginary_part(inner)) / denom


def mbdd_bound(norm_m_mu: float, lam, mu) -> float:
    """Upper bound for ``|M(lam)|`` in terms of ``|M(mu)|``; both off the real axis."""
    lam, mu = as_complex(lam), as_complex(mu)
    if lam.imag == 0.0 or mu.imag == 0.0:
        raise ValueError("mbdd_bound needs non-real lambda and mu")
    dist = abs(lam - mu)
    factor = 1.0 + dist / abs(mu.imag) + dist * abs(lam - mu.conjugate()) / (abs(lam.imag) * abs(mu.imag))
    return factor * norm_m_mu


def ray_sector_bound(psi: float, phi: float) -> float:
    """Factor relating ``|M(r e^{i psi})|`` to ``|M(r e^{i phi})|``, uniform in ``r``."""
    sp, sf = math.sin(psi), math.sin(phi)
    if sp == 0.0 or sf == 0.0:
        raise ValueError("ray angles must be off the real axis")
    dm = abs(math.sin((psi - phi) / 2))
    dp = abs(math.sin((psi + phi) / 2))
    return 1.0 + 2 * dm / abs(sf) + 4 * dm * dp / (abs(sp) * abs(sf))


@dataclass(frozen=True)
class WeylSample:
    lam: complex
    matrix: Optional[np.ndarray]
    norm: float


@dataclass(frozen=True)
class SectorSpec:
    """Closed sector in the complex plane.

    kind ``"upper"``: apex ``z0`` with ``Im z0 >= 0``, arguments in
    ``[pi/2 - theta, pi/2 + theta]``; ``"conjugate"``: its mirror image;
    ``"exterior"``: real apex ``w0``, arguments in ``[nu, 2 pi - nu]``.
    """

    kind: str
    apex: complex
    angle: float

    def __post_init__(self):
        apex = as_complex(self.apex)
        object.__setattr__(self, "apex", apex)
        if self.kind in ("upper", "conjugate"):
            if not 0.0 < self.angle < math.pi / 2:
                raise ValueError("sector half-angle must lie in (0, pi/2)")
            if apex.imag < 0:
                raise ValueError("upper sector needs Im(apex) >= 0")
        elif self.kind == "exterior":
            if apex.imag != 0.0:
                raise ValueError("exterior sector needs a real apex")
            if not 0.0 < self.angle < math.pi:
                raise ValueError("exterior sector opening nu must lie in (0, pi)")
        else:
            raise ValueError(f"unknown sector kind {self.kind!r}")

    def contains(self, z, atol: float = 1e-12) -> bool:
        z = as_complex(z)
        if self.kind == "conjugate":
            z = z.conjugate()
        w = z - self.apex
        if abs(w) <= atol:
            return True
        arg = math.atan2(w.imag, w.real) % (2 * math.pi)
        if self.kind == "exterior":
            return self.angle - atol <= arg <= 2 * math.pi - self.angle + atol
        return math.pi / 2 - self.angle - atol <= arg <= math.pi / 2 + self.angle + atol
