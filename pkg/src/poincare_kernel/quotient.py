"""Downstairs bases, Gram matrices and the basis-built quotient kernel.

Families of quotient sections are evaluated in the unit frame (frame value
times e^{-N phi/2}); Gram entries are then plain weighted sums over the
quadrature nodes.

* ``ThetaFamily``: theta functions with characteristics j/N on C/(Z + tau Z),
  written in the Fock gauge f_j(z) = exp(N pi z^2 / (2 Im tau)) theta_j(z), so
  that f_j(z + lambda) = J(lambda, z) f_j(z).
* ``PoincareFamily``: relative Poincare series of z^j (dz)^t on the genus-2
  surface, j = 0..J.  The family is redundant; orthonormalization detects the
  numerical rank.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg
from scipy.spatial import cKDTree

from .compensated import pairwise_sum
from .cover_kernels import KernelValue
from .errors import PreconditionError
from .geometry import FlatTorus, GenusTwoSurface, group_stats, hyperbolic_distance
from .quadrature import QuadratureSpec
from .summation import Envelope, certify_tail, minimal_radius

RANK_CUTOFF = 1e-10
THETA_TAIL = 1e-16


# ---------------------------------------------------------------------------
# theta functions


def _theta_exponents(j, z, N, tau):
    """Series exponents of theta_j at the points z (raw and unit-frame forms)."""
    tau = complex(tau)
    y = tau.imag
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    # unit-frame term modulus is exp(-pi N y (a + v/y)^2), a = n + j/N
    A = math.sqrt(math.log(2 / THETA_TAIL) / (math.pi * N * y)) + 1.0
    centre = -z.imag / y
    n_lo = math.floor(centre.min() - A - j / N)
    n_hi = math.ceil(centre.max() + A - j / N)
    a = np.arange(n_lo, n_hi + 1) + j / N
    raw = 1j * math.pi * N * tau * a[:, None] ** 2 + 2j * math.pi * N * a[:, None] * z[None]
    shift = N * math.pi * (z * z - np.abs(z) ** 2) / (2 * y)
    return raw, raw + shift[None], A


def theta_tail_bound(N, tau=1j) -> float:
    """Certified bound on the neglected unit-frame terms of each theta evaluation."""
    y = complex(tau).imag
    A = math.sqrt(math.log(2 / THETA_TAIL) / (math.pi * N * y)) + 1.0
    q = math.exp(-2 * math.pi * N * y * A)
    return 2 * math.exp(-math.pi * N * y * A * A) / (1 - q)


def theta_section(j: int, z, N: int, tau=1j, frame: str = "raw"):
    """Theta function with characteristic j/N of level N.

    ``frame="raw"``: sum_n exp(i pi N tau (n + j/N)^2 + 2 pi i N (n + j/N) z).
    ``frame="fock"``: the same times exp(N pi z^2 / (2 Im tau)).
    ``frame="unit"``: the Fock-gauge value times e^{-N pi |z|^2 / (2 Im tau)}.
    """
    if not 0 <= j < N:
        raise PreconditionError("characteristic index must satisfy 0 <= j < N")
    scalar = np.ndim(z) == 0
    raw, unit, _ = _theta_exponents(j, z, N, tau)
    if frame == "raw":
        out = pairwise_sum(np.exp(raw), axis=0)
    elif frame == "unit":
        out = pairwise_sum(np.exp(unit), axis=0)
    elif frame == "fock":
        y = complex(tau).imag
        zz = np.atleast_1d(np.asarray(z, dtype=complex))
        out = pairwise_sum(np.exp(unit), axis=0) * np.exp(N * math.pi * np.abs(zz) ** 2 / (2 * y))
    else:
        raise PreconditionError(f"unknown frame {frame!r}")
    return complex(out[0]) if scalar else out


class ThetaFamily:
    """The N theta functions of level N, in the Fock gauge."""

    def __init__(self, space: FlatTorus, N: int, reduce: bool = True):
        self.space = space
        self.N = int(N)
        self.reduce = reduce
        self.size = self.N

    def describe(self) -> dict:
        return {"family": "theta", "N": self.N, "tau": [self.space.tau.real, self.space.tau.imag]}

    def evaluate(self, z) -> np.ndarray:
        """Unit-frame values, shape (N, len(z))."""
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        phase = 1.0
        if self.reduce:
            zr, m, n = self.space.reduce(z)
            phase = np.exp(-1j * self.space.log_automorphy(m, n, z, self.N).imag)
            z = zr
        return np.stack([theta_section(j, z, self.N, self.space.tau, "unit") for j in range(self.N)]) * phase


class ArrayFamily:
    """A family given by an arbitrary vectorized unit-frame callable."""

    def __init__(self, fn, size: int, N: int, label: str = "callable"):
        self.fn = fn
        self.size = size
        self.N = N
        self.label = label

    def describe(self) -> dict:
        return {"family": self.label, "N": self.N, "size": self.size}

    def evaluate(self, z) -> np.ndarray:
        return np.atleast_2d(self.fn(np.atleast_1d(np.asarray(z, dtype=complex))))


# ---------------------------------------------------------------------------
# relative Poincare series on the genus-2 surface


class PoincareFamily:
    """Relative Poincare series P_j(z) = sum_gamma gamma'(z)^t (gamma z)^j, j = 0..J.

    At a point z of the octagon the sum runs over {gamma : d(gamma z, 0) <= radius},
    found with a KD-tree on the orbit points gamma^{-1} 0 drawn from one ball
    enumeration.  The per-point truncation is certified by the monomial
    envelope 4^t e^{-t d}.  Without an explicit ``radius`` the smallest radius
    meeting ``tolerance`` is used, capped at ``max_radius``.

    Truncation errors of size eps leave spurious Gram eigenvalues of order
    eps^2, so the family tolerance has to sit well below sqrt(RANK_CUTOFF)
    for the numerical rank to be meaningful.
    """

    def __init__(self, space: GenusTwoSurface, t: int, J: int | None = None, radius: float | None = None,
                 tolerance: float = 1e-8, stats=None, max_radius: float | None = None):
        if t < 2:
            raise PreconditionError("monomial Poincare series diverge for t < 2")
        self.space = space
        self.t = int(t)
        self.N = self.t
        self.J = int(J if J is not None else max(8, 4 * t))
        self.size = self.J + 1
        self.stats = stats or group_stats(space)
        self.envelope = Envelope("exponential", 4.0**t, float(t), note="monomial envelope")
        if radius is None:
            radius = minimal_radius(space, self.stats, t, tolerance, envelope=self.envelope)
            if max_radius is not None:
                radius = min(radius, max_radius)
        self.radius = float(radius)
        self.certificate = certify_tail(space, self.stats, t, self.radius, envelope=self.envelope)
        self.vertex_distance = float(hyperbolic_distance(0, space.vertices[0]))
        self._ball = None

    def describe(self) -> dict:
        return {"family": "poincare-monomials", "t": self.t, "J": self.J, "radius": self.radius}

    def _elements(self):
        if self._ball is None:
            R = self.radius + self.vertex_distance + 1e-6
            ball = self.space.enumerate(0j, R)
            inv_orbit = -ball.b / ball.a
            self._ball = (ball, cKDTree(np.c_[inv_orbit.real, inv_orbit.imag]))
        return self._ball

    def evaluate(self, z) -> np.ndarray:
        """Unit-frame values, shape (J+1, len(z))."""
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        out = np.empty((self.size, len(z)), dtype=complex)
        ball, tree = self._elements()
        r = math.tanh(self.radius / 2)
        for i, z0 in enumerate(z):
            zr, g = self.space.reduce_element(complex(z0))
            ph = 1.0 if g.is_identity else np.exp(-1j * self.space.log_automorphy(g.a, g.b, complex(z0), self.t).imag)
            den = 1 - r * r * abs(zr) ** 2
            c = zr * (1 - r * r) / den
            rad = r * (1 - abs(zr) ** 2) / den
            idx = np.sort(np.asarray(tree.query_ball_point([c.real, c.imag], rad * (1 + 1e-12) + 1e-15), dtype=np.int64))
            a, b = ball.a[idx], ball.b[idx]
            q = np.conj(b) * zr + np.conj(a)
            gz = (a * zr + b) / q
            keep = hyperbolic_distance(gz, 0) <= self.radius
            q, gz = q[keep], gz[keep]
            base = q ** (-2 * self.t) * (1 - abs(zr) ** 2) ** self.t
            powers = np.empty((self.size, len(gz)), dtype=complex)
            powers[0] = base
            for j in range(1, self.size):
                powers[j] = powers[j - 1] * gz
            out[:, i] = pairwise_sum(powers, axis=1) * ph
        return out


# ---------------------------------------------------------------------------
# Gram matrices and orthonormalization


@dataclass
class GramResult:
    matrix: np.ndarray
    error_estimate: float
    flagged: bool
    quad_label: str


def _gram_from_values(F, w):
    G = (F * w[None]) @ F.conj().T
    return 0.5 * (G + G.conj().T)


def gram_matrix(family, quad: QuadratureSpec, check: QuadratureSpec | None = None,
                values: np.ndarray | None = None) -> GramResult:
    """G_ab = sum_nodes w f_a conj(f_b) in the unit frame.

    When a second rule ``check`` is supplied its Gram matrix serves as the
    error estimate; the result is flagged if that exceeds 1e-6 ||G||.
    """
    if family.size == 0:
        return GramResult(np.zeros((0, 0), complex), 0.0, False, quad.label)
    F = values if values is not None else family.evaluate(quad.nodes)
    G = _gram_from_values(F, quad.weights)
    err = 0.0
    if check is not None:
        G2 = _gram_from_values(family.evaluate(check.nodes), check.weights)
        err = float(np.linalg.norm(G - G2, 2))
    flagged = err > 1e-6 * max(float(np.linalg.norm(G, 2)), 1e-300)
    return GramResult(G, err, flagged, quad.label)


def orthonormalize(G: np.ndarray, method: str = "eigh", rcond: float = RANK_CUTOFF):
    """Whitening coefficients C (d_N x d) with C G C^* = I, and the numerical rank d_N."""
    G = np.asarray(G, dtype=complex)
    d = G.shape[0]
    if d == 0:
        return np.zeros((0, 0), complex), 0
    G = 0.5 * (G + G.conj().T)
    if method == "eigh":
        lam, U = linalg.eigh(G)
        order = np.argsort(-lam, kind="stable")
        lam, U = lam[order], U[:, order]
        keep = lam > rcond * lam[0]
        C = (U[:, keep] / np.sqrt(lam[keep])[None]).conj().T
        return C, int(keep.sum())
    if method == "cholesky":
        tol = rcond * float(np.max(np.real(np.diag(G))))
        c, piv, rank, info = linalg.lapack.zpstrf(G, tol=tol, lower=1)
        if info < 0:
            raise PreconditionError("pivoted Cholesky failed")
        piv = piv - 1
        L = np.tril(c)[:rank, :rank]
        Linv = linalg.solve_triangular(L, np.eye(rank), lower=True)
        C = np.zeros((rank, d), dtype=complex)
        C[:, piv[:rank]] = Linv
        return C, int(rank)
    raise PreconditionError(f"unknown method {method!r}")


# ---------------------------------------------------------------------------
# section bases and the quotient kernel


@dataclass
class SectionBasis:
    family: object
    gram: np.ndarray
    coefficients: np.ndarray
    rank: int
    quadrature: QuadratureSpec
    gram_error: float = 0.0
    gram_flagged: bool = False
    method: str = "eigh"

    @property
    def N(self) -> int:
        return self.family.N

    @property
    def space(self):
        return self.family.space

    def unit_values(self, z) -> np.ndarray:
        """Orthonormal sections in the unit frame, shape (d_N, len(z))."""
        return self.coefficients @ self.family.evaluate(z)


def build_basis(family, quad: QuadratureSpec, method: str = "eigh", check: QuadratureSpec | None = None,
                rcond: float = RANK_CUTOFF) -> SectionBasis:
    gr = gram_matrix(family, quad, check=check)
    C, rank = orthonormalize(gr.matrix, method=method, rcond=rcond)
    return SectionBasis(family, gr.matrix, C, rank, quad, gr.error_estimate, gr.flagged, method)


def quotient_kernel(z, w, basis: SectionBasis) -> KernelValue:
    """B_N(z, conj w) = sum_k g_k(z) conj(g_k(w)) from an orthonormal basis.

    Points outside the fundamental domain are reduced into it, with the
    accumulated automorphy factor applied by the family.
    """
    scalar = np.ndim(z) == 0 and np.ndim(w) == 0
    gz = basis.unit_values(z)
    gw = basis.unit_values(w)
    unit = np.sum(gz * gw.conj(), axis=0)
    space = basis.space
    N = basis.N
    with np.errstate(over="ignore"):
        dens = unit * np.exp(0.5 * N * (space.phi(np.asarray(z)) + space.phi(np.asarray(w))))
    frame = "fock" if space.kind == "flat" else "disc-dz"
    if scalar:
        return KernelValue(complex(dens[0]), float(abs(unit[0])), complex(unit[0]), frame)
    return KernelValue(dens, np.abs(unit), unit, frame)
