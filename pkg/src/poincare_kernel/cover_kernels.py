"""Closed-form kernels on the universal covers.

Flat model: the Fock kernel (N / Im tau) exp(N pi z conj(w) / Im tau) for the
weight phi(z) = pi |z|^2 / Im tau, normalized to reproduce against Lebesgue
measure.  Disc model: 1/2 (1 - z conj(w))^{-2t} for weight-2t forms.

Every kernel is returned as a ``KernelValue`` carrying the frame-dependent
density, its frame-independent pointwise norm and the unit-frame value
density * e^{-N phi(z)/2} e^{-N phi(w)/2}, whose modulus is the pointwise norm.
Unit-frame values are computed from a single combined exponent so that they
stay finite even where the density itself overflows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, PreconditionError
from .geometry import FlatTorus, GenusTwoSurface


@dataclass(frozen=True)
class KernelValue:
    density: complex
    pointwise_norm: float
    unit: complex
    frame: str

    def conj(self) -> "KernelValue":
        return KernelValue(np.conj(self.density), self.pointwise_norm, np.conj(self.unit), self.frame)


@dataclass(frozen=True)
class LiftedPoint:
    """Point of the circle bundle: a cover point with a fibre angle in [0, 2 pi)."""

    base: complex
    theta: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "theta", float(self.theta) % (2 * math.pi))


def _disc_points(*zs):
    out = []
    for z in zs:
        z = np.asarray(z, dtype=complex)
        if np.any(np.abs(z) >= 1) or not np.all(np.isfinite(z)):
            raise DomainError("disc kernel needs |z| < 1")
        out.append(z if z.ndim else complex(z))
    return out


def log_fock(z, w, N, tau=1j):
    """(log density, log unit-frame value) of the Fock kernel."""
    y = complex(tau).imag
    z = np.asarray(z, dtype=complex)
    w = np.asarray(w, dtype=complex)
    ld = math.log(N / y) + N * math.pi * z * np.conj(w) / y
    lu = ld - N * math.pi * (np.abs(z) ** 2 + np.abs(w) ** 2) / (2 * y)
    return ld, lu


def log_disc(z, w, t):
    """(log density, log unit-frame value) of the disc kernel (principal branch)."""
    z = np.asarray(z, dtype=complex)
    w = np.asarray(w, dtype=complex)
    ld = math.log(0.5) - 2 * t * np.log(1 - z * np.conj(w))
    lu = ld + t * np.log1p(-np.abs(z) ** 2) + t * np.log1p(-np.abs(w) ** 2)
    return ld, lu


def _value(ld, lu, frame):
    unit = np.exp(lu)
    with np.errstate(over="ignore"):
        dens = np.exp(ld)
    if np.ndim(unit) == 0:
        return KernelValue(complex(dens), float(abs(unit)), complex(unit), frame)
    return KernelValue(dens, np.abs(unit), unit, frame)


def fock_kernel(z, w, N: int, tau=1j) -> KernelValue:
    """Fock kernel of weight N on C for the lattice Z + tau Z."""
    if N < 1:
        raise PreconditionError("N must be at least 1")
    return _value(*log_fock(z, w, N, tau), "fock")


def disc_kernel(z, w, t: int) -> KernelValue:
    """Kernel 1/2 (1 - z conj(w))^{-2t} for weight-2t forms on the disc."""
    if t < 2:
        raise PreconditionError("disc kernel series need t >= 2")
    z, w = _disc_points(z, w)
    return _value(*log_disc(z, w, t), "disc-dz")


def cover_kernel(space, z, w, N: int) -> KernelValue:
    if space.kind == "flat":
        return fock_kernel(z, w, N, space.tau)
    return disc_kernel(z, w, N)


def log_unit_kernel(space, z, w, N):
    """Log of the unit-frame cover kernel, vectorized."""
    if space.kind == "flat":
        return log_fock(z, w, N, space.tau)[1]
    return log_disc(z, w, N)[1]


def norm_at_distance(space, N, d):
    """Pointwise norm of the cover kernel as a function of distance alone."""
    d = np.asarray(d, dtype=float)
    if space.kind == "flat":
        y = space.im_tau
        return (N / y) * np.exp(-N * math.pi * d**2 / (2 * y))
    return 0.5 / np.cosh(d / 2) ** (2 * N)


def lift_kernel(space, p: LiftedPoint, q: LiftedPoint, N: int, kernel=None) -> complex:
    """Scalar circle-bundle kernel e^{iN(theta - theta')} * unit-frame kernel.

    ``kernel`` may be any callable (z, w) -> KernelValue in the same weight
    convention (for instance a quotient kernel); it defaults to the cover kernel.
    """
    kv = kernel(p.base, q.base) if kernel is not None else cover_kernel(space, p.base, q.base, N)
    return complex(kv.unit * np.exp(1j * N * (p.theta - q.theta)))


def agmon_bound(space, N: int, x, y, beta: float = 1.0) -> float:
    """e^{-beta sqrt(N) d(x, y)}; only asserted for d(x, y) >= 1."""
    d = float(space.distance(x, y))
    if d < 1.0:
        raise PreconditionError(f"Agmon bound requires d >= 1 (got d = {d:.6g})")
    return math.exp(-beta * math.sqrt(N) * d)


def agmon_excess(space, N: int, beta: float) -> float:
    """sup over d >= 1 of log(norm(d)) + beta sqrt(N) d; the envelope holds iff this is <= 0."""
    k = beta * math.sqrt(N)
    if space.kind == "flat":
        y = space.im_tau
        c = N * math.pi / (2 * y)
        d = max(1.0, k / (2 * c))
        return math.log(N / y) - c * d * d + k * d
    t = N
    if k >= t:
        return math.inf
    d = max(1.0, 2 * math.atanh(k / t))
    return math.log(0.5) - 2 * t * math.log(math.cosh(d / 2)) + k * d


def agmon_holds(space, N: int, beta: float) -> bool:
    return agmon_excess(space, N, beta) <= 0.0
