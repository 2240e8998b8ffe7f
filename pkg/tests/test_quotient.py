import math

import numpy as np
import pytest
from scipy import integrate, special

from poincare_kernel.errors import PreconditionError
from poincare_kernel.quadrature import octagon_rule, torus_rule
from poincare_kernel.quotient import (
    ArrayFamily,
    PoincareFamily,
    ThetaFamily,
    build_basis,
    gram_matrix,
    orthonormalize,
    quotient_kernel,
    theta_section,
    theta_tail_bound,
)
from poincare_kernel.summation import poincare_basis_section

# theta_0(0) at level 1, tau = i: pi^{1/4} / Gamma(3/4), checked against a
# 25-term math.fsum of exp(-pi n^2)
THETA_00 = 1.086434811213308
# integral of exp(-pi (x^2 + y^2)) over the unit square, scipy dblquad
CONST_GRAM = 0.2439427011198273


def test_theta_value():
    brute = math.fsum(math.exp(-math.pi * n * n) for n in range(-12, 13))
    assert brute == pytest.approx(THETA_00, abs=1e-15)
    assert math.pi**0.25 / special.gamma(0.75) == pytest.approx(THETA_00, abs=1e-15)
    assert theta_section(0, 0j, 1) == pytest.approx(THETA_00, abs=1e-14)


@pytest.mark.parametrize("N,j", [(1, 0), (3, 1), (5, 4)])
def test_theta_quasi_periodicity(N, j):
    tau = 0.2 + 1.1j
    z = np.array([0.1 + 0.2j, -0.3 + 0.05j])
    th = theta_section(j, z, N, tau)
    assert np.allclose(theta_section(j, z + 1, N, tau), th, rtol=1e-12)
    shifted = np.exp(-1j * math.pi * N * tau - 2j * math.pi * N * z) * th
    assert np.allclose(theta_section(j, z + tau, N, tau), shifted, rtol=1e-11)


def test_fock_gauge_matches_automorphy(flat):
    N, z = 3, 0.3 + 0.2j
    for m, n in ((1, 0), (0, 1), (2, -1)):
        lam = m + n * flat.tau
        f = theta_section(1, z, N, flat.tau, "fock")
        g = theta_section(1, z + lam, N, flat.tau, "fock")
        J = np.exp(flat.log_automorphy(m, n, z, N))
        assert g == pytest.approx(J * f, rel=1e-11)


def test_theta_tail_tiny():
    assert theta_tail_bound(1) < 1e-15


def test_theta_bad_index():
    with pytest.raises(PreconditionError):
        theta_section(3, 0j, 3)
    with pytest.raises(PreconditionError):
        theta_section(0, 0j, 2, frame="nope")


def test_constant_section_gram():
    val, _ = integrate.dblquad(lambda y, x: math.exp(-math.pi * (x * x + y * y)), 0, 1, 0, 1, epsabs=1e-14)
    assert val == pytest.approx(CONST_GRAM, abs=1e-13)
    fam = ArrayFamily(lambda z: np.exp(-math.pi * np.abs(z) ** 2 / 2)[None], 1, 1)
    G = gram_matrix(fam, torus_rule(1j, 32)).matrix
    assert G[0, 0].real == pytest.approx(CONST_GRAM, abs=1e-13)


@pytest.mark.parametrize("N", [1, 2, 3, 5])
def test_theta_gram_is_scaled_identity(theta_bases, N):
    # x-integration kills cross terms; the diagonal is the Gaussian integral 1/sqrt(2N)
    G = theta_bases[N].gram
    assert np.allclose(G, np.eye(N) / math.sqrt(2 * N), atol=1e-12)
    assert theta_bases[N].rank == N
    assert theta_bases[N].gram_error < 1e-12 and not theta_bases[N].gram_flagged


def test_orthonormalize_identity():
    C, r = orthonormalize(np.eye(4))
    assert r == 4 and np.allclose(C @ C.conj().T, np.eye(4))


def test_orthonormalize_detects_rank(rng):
    A = rng.standard_normal((3, 6)) + 1j * rng.standard_normal((3, 6))
    G = A.conj().T @ A
    for method in ("eigh", "cholesky"):
        C, r = orthonormalize(G, method)
        assert r == 3
        assert np.allclose(C @ G @ C.conj().T, np.eye(3), atol=1e-10)
    with pytest.raises(PreconditionError):
        orthonormalize(G, "qr")


def test_empty_family():
    fam = ArrayFamily(lambda z: np.zeros((0, len(z))), 0, 1)
    b = build_basis(fam, torus_rule(1j, 8))
    assert b.rank == 0 and b.coefficients.shape == (0, 0)


def test_duplicated_family_same_kernel(flat):
    quad = torus_rule(1j, 32)
    fam = ThetaFamily(flat, 3)
    dup = ArrayFamily(lambda z: np.concatenate([fam.evaluate(z), 2j * fam.evaluate(z)]), 6, 3)
    dup.space = flat
    a, b = build_basis(fam, quad), build_basis(dup, quad)
    assert b.rank == 3
    z, w = 0.2 + 0.3j, 0.7 + 0.1j
    assert quotient_kernel(z, w, b).unit == pytest.approx(quotient_kernel(z, w, a).unit, rel=1e-10)


@pytest.mark.parametrize("N", [1, 3, 5])
def test_kernel_trace_is_dimension(theta_bases, N):
    q = torus_rule(1j, 40)
    B = quotient_kernel(q.nodes, q.nodes, theta_bases[N])
    assert np.sum(q.weights * B.pointwise_norm) == pytest.approx(N, rel=1e-12)


def test_cholesky_and_eigh_agree(flat):
    quad = torus_rule(1j, 32)
    a = build_basis(ThetaFamily(flat, 3), quad, method="eigh")
    b = build_basis(ThetaFamily(flat, 3), quad, method="cholesky")
    z, w = 0.4 + 0.1j, 0.15 + 0.6j
    assert quotient_kernel(z, w, a).unit == pytest.approx(quotient_kernel(z, w, b).unit, rel=1e-10)


def test_quotient_kernel_is_periodic(theta_bases, flat):
    B = theta_bases[2]
    z, w = 0.3 + 0.2j, 0.6 + 0.4j
    a = quotient_kernel(z, w, B)
    b = quotient_kernel(z + 1 + 2j, w - 1j, B)
    assert b.pointwise_norm == pytest.approx(a.pointwise_norm, rel=1e-11)


def test_poincare_family_matches_direct_series(disc):
    fam = PoincareFamily(disc, 3, J=4, radius=6.0)
    z = 0.12 - 0.07j
    vals = fam.evaluate([z])[:, 0]
    for j in range(5):
        direct, _ = poincare_basis_section(disc, j, z, 3, 6.0)
        assert vals[j] == pytest.approx(direct, rel=1e-10, abs=1e-14)


def test_poincare_family_reduces_points(disc):
    fam = PoincareFamily(disc, 3, J=2, radius=6.0)
    g = disc.generator("b2")
    z = 0.1 + 0.1j
    gz = complex(g.apply(z))
    phase = np.exp(1j * disc.log_automorphy(g.a, g.b, z, 3).imag)
    assert np.allclose(fam.evaluate([gz])[:, 0], phase * fam.evaluate([z])[:, 0], atol=1e-8)


def test_poincare_family_radius_cap(disc):
    fam = PoincareFamily(disc, 2, tolerance=1e-8, max_radius=11.2)
    assert fam.radius == 11.2
    with pytest.raises(PreconditionError):
        PoincareFamily(disc, 1)


def test_disc_rank_weight_four(small_disc_basis):
    # holomorphic quartic differentials on genus 2: (2t - 1)(g - 1) = 7
    assert small_disc_basis.rank == 7
    q = octagon_rule(12)
    B = quotient_kernel(q.nodes, q.nodes, small_disc_basis)
    assert np.sum(q.weights * B.pointwise_norm) == pytest.approx(7, rel=1e-10)
