"""Certified truncated sums over the deck group.

The candidate quotient kernel is

    S(x, y) = sum_gamma J(gamma, x)^{-1} K(gamma x, y),

computed in the global cover frame, so that S(gamma x, y) = J(gamma, x) S(x, y).
Only elements with d(gamma x, y) <= R are summed.  The neglected tail is
bounded by a ``TruncationCertificate``: orbit points are at least the systole
apart, so disjoint balls of radius systole/2 around them turn the tail sum into
an integral of a decreasing envelope of the term size.

All values are also reported in the unit frame (multiplied by
e^{-N phi(x)/2} e^{-N phi(y)/2}), where magnitudes are frame independent.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np
from scipy import optimize, special

from .compensated import ordered_sum, pairwise_sum
from .cover_kernels import KernelValue, agmon_excess, log_unit_kernel
from .errors import PreconditionError
from .geometry import group_stats

GAUSSIAN_FLAT = "GaussianFlat"
AGMON_GEOMETRIC = "AgmonGeometric"


@dataclass(frozen=True)
class Envelope:
    """Decreasing bound on a term's pointwise norm in terms of its distance d to a centre.

    ``gaussian``: scale * exp(-rate d^2); ``exponential``: scale * exp(-rate d).
    The bound is asserted for d >= ``valid_from``.
    """

    kind: str
    scale: float
    rate: float
    valid_from: float = 0.0
    note: str = ""


@dataclass
class TruncationCertificate:
    radius: float
    elements_used: int
    tail_bound: float
    method: str
    valid: bool = True
    reason: str = ""
    tolerance: float | None = None
    tolerance_met: bool | None = None

    def to_dict(self) -> dict:
        d = asdict(self)
        if not math.isfinite(self.tail_bound):
            d["tail_bound"] = None
        return d


def kernel_envelope(space, N: int) -> Envelope:
    """Exact or provable envelope of the cover-kernel pointwise norm."""
    if space.kind == "flat":
        y = space.im_tau
        return Envelope("gaussian", N / y, N * math.pi / (2 * y), note="exact Gaussian profile")
    # 1/2 sech^{2t}(d/2) <= 2^{2t-1} e^{-t d}
    return Envelope("exponential", 2.0 ** (2 * N - 1), float(N), note="sech envelope")


def agmon_envelope(space, N: int, beta: float) -> Envelope:
    return Envelope("exponential", 1.0, beta * math.sqrt(N), valid_from=1.0, note=f"Agmon beta={beta:g}")


def _flat_tail(env: Envelope, R: float, rho: float) -> float:
    s0 = R - 2 * rho
    C, a = env.scale, env.rate
    if env.kind == "gaussian":
        return (2 * C / rho**2) * (math.exp(-a * s0 * s0) / (2 * a)
                                   + rho * math.sqrt(math.pi) / (2 * math.sqrt(a)) * special.erfc(math.sqrt(a) * s0))
    return (2 * C / rho**2) * math.exp(-a * s0) * ((s0 + rho) / a + 1 / a**2)


def _hyperbolic_tail(env: Envelope, R: float, pa: float, pb: float) -> float:
    if env.kind != "exponential":
        raise PreconditionError("hyperbolic tails need an exponential envelope")
    k = env.rate
    return env.scale * pa * k * math.exp(-(k - pb) * R) / (k - pb)


def certify_tail(space, stats, N: int, R: float, beta: float | None = None,
                 envelope: Envelope | None = None, elements_used: int = 0,
                 tolerance: float | None = None) -> TruncationCertificate:
    """Upper bound on the sum of all terms at distance > R.

    With ``beta`` the generic Agmon envelope e^{-beta sqrt(N) d} is used; it is
    only accepted when it actually dominates the kernel for d >= 1 and when
    beta sqrt(N) exceeds the growth rate of the group.  Otherwise the default
    provable envelope of the model is used (or ``envelope`` if given).
    """
    stats = stats or group_stats(space)
    if R < stats.systole:
        raise PreconditionError(f"radius {R:g} below the systole {stats.systole:g}")
    method = GAUSSIAN_FLAT if space.kind == "flat" else AGMON_GEOMETRIC
    cert = TruncationCertificate(float(R), int(elements_used), math.inf, method, True, "", tolerance, None)
    if envelope is None:
        if beta is not None:
            envelope = agmon_envelope(space, N, beta)
            cert.method = AGMON_GEOMETRIC
            if agmon_excess(space, N, beta) > 0:
                cert.valid = False
                cert.reason = (f"N below operational threshold: kernel exceeds e^(-{beta:g} sqrt(N) d) "
                               f"for some d >= 1 at N={N}")
        else:
            envelope = kernel_envelope(space, N)
    if R < envelope.valid_from:
        cert.valid = False
        cert.reason = cert.reason or f"envelope only asserted for d >= {envelope.valid_from:g}"
    if space.kind == "flat":
        tail = _flat_tail(envelope, R, stats.systole / 2)
    else:
        if envelope.kind == "exponential" and envelope.rate <= stats.packing_b:
            cert.valid = False
            cert.reason = cert.reason or (f"N below operational threshold: decay rate {envelope.rate:g} "
                                          f"does not exceed growth rate {stats.packing_b:g}")
            tail = math.inf
        else:
            tail = _hyperbolic_tail(envelope, R, stats.packing_a, stats.packing_b)
    cert.tail_bound = float(tail) if cert.valid else math.inf
    if tolerance is not None:
        cert.tolerance_met = bool(cert.valid and cert.tail_bound <= tolerance)
    return cert


def minimal_radius(space, stats, N: int, tolerance: float, beta: float | None = None,
                   envelope: Envelope | None = None) -> float:
    """Smallest R >= systole whose certificate meets ``tolerance``."""
    stats = stats or group_stats(space)
    lo = stats.systole

    def tail(R):
        return certify_tail(space, stats, N, R, beta=beta, envelope=envelope).tail_bound

    if not math.isfinite(tail(lo)):
        raise PreconditionError("certificate invalid at every radius")
    if tail(lo) <= tolerance:
        return lo
    hi = 2 * lo
    while tail(hi) > tolerance:
        hi *= 2
    return float(optimize.brentq(lambda r: math.log(tail(r)) - math.log(tolerance), lo, hi, xtol=1e-10)) + 1e-9


# ---------------------------------------------------------------------------
# kernel sums


def _twist_log(space, elems, x, N):
    if space.kind == "flat":
        return space.log_automorphy(elems.m, elems.n, x, N)
    return space.log_automorphy(elems.a, elems.b, x, N)


def gamma_sum_terms(space, x, y, N: int, R: float, cap=None):
    """Unit-frame summands of S(x, y) over {gamma : d(gamma x, y) <= R}."""
    kw = {} if cap is None else {"cap": cap}
    elems = space.enumerate_pair(x, y, R, **kw)
    gx = elems.apply(x)
    phix, phiy = space.phi(x), space.phi(y)
    if space.kind == "flat":
        from .cover_kernels import log_fock
        ld = log_fock(gx, y, N, space.tau)[0]
    else:
        from .cover_kernels import log_disc
        ld = log_disc(gx, y, N)[0]
    lt = ld - _twist_log(space, elems, x, N) - 0.5 * N * (phix + phiy)
    return np.exp(lt), elems


def gamma_sum_kernel(space, x, y, N: int, R: float, beta: float | None = None,
                     tolerance: float | None = None, stats=None, order: str = "descending"):
    """Truncated sum S(x, y) with its tail certificate.

    Returns ``(KernelValue, TruncationCertificate)``.  A certificate that misses
    ``tolerance`` is flagged (``tolerance_met = False``) rather than raised.
    """
    if space.kind == "hyperbolic" and N < 2:
        raise PreconditionError("disc series need t >= 2")
    if N < 1:
        raise PreconditionError("N must be at least 1")
    x = complex(space.validate(x))
    y = complex(space.validate(y))
    stats = stats or group_stats(space)
    terms, elems = gamma_sum_terms(space, x, y, N, R)
    unit = complex(ordered_sum(terms, descending=(order == "descending")))
    if R >= stats.systole:
        cert = certify_tail(space, stats, N, R, beta=beta, elements_used=len(terms), tolerance=tolerance)
    else:
        cert = TruncationCertificate(float(R), len(terms), math.inf,
                                     GAUSSIAN_FLAT if space.kind == "flat" else AGMON_GEOMETRIC,
                                     False, "radius below the systole: no tail bound", tolerance,
                                     None if tolerance is None else False)
    with np.errstate(over="ignore"):
        dens = unit * np.exp(0.5 * N * (space.phi(x) + space.phi(y)))
    frame = "fock" if space.kind == "flat" else "disc-dz"
    return KernelValue(complex(dens), abs(unit), unit, frame), cert


# ---------------------------------------------------------------------------
# Poincare map on sections


@dataclass(frozen=True)
class CoverSection:
    """A holomorphic section of the weight-N bundle on the cover.

    ``unit`` maps an array of cover points to frame values times e^{-N phi/2}.
    ``decay`` bounds |unit| by an envelope in the distance to ``center``; a
    section without it cannot be summed.
    """

    N: int
    unit: Callable[[np.ndarray], np.ndarray]
    decay: Envelope | None
    center: complex = 0j
    label: str = ""


def peak_section(space, w, N: int) -> CoverSection:
    """Cover peak section z -> K(z, w), expressed in the unit frame at w."""
    w = complex(space.validate(w))
    return CoverSection(N, lambda z: np.exp(log_unit_kernel(space, z, w, N)), kernel_envelope(space, N), w,
                        f"peak@{w}")


def monomial_section(j: int, t: int) -> CoverSection:
    """z^j (dz)^t on the disc; |z^j|(1-|z|^2)^t <= 4^t e^{-t d(0,z)}."""
    if t < 2:
        raise PreconditionError("monomial Poincare series diverge for t < 2")

    def unit(z):
        z = np.asarray(z, dtype=complex)
        return z**j * (1 - np.abs(z) ** 2) ** t

    return CoverSection(t, unit, Envelope("exponential", 4.0**t, float(t), note="monomial envelope"), 0j,
                        f"z^{j} dz^{t}")


def zero_section(space, N: int) -> CoverSection:
    return CoverSection(N, lambda z: np.zeros(np.shape(z), dtype=complex),
                        Envelope("exponential", 0.0, float(max(N, 2))), 0j, "zero")


def poincare_map(space, f: CoverSection, z, R: float, stats=None, tolerance: float | None = None):
    """Twisted sum P f(z) = sum_gamma J(gamma, z)^{-1} f(gamma z) over d(gamma z, centre) <= R.

    Returns ``(unit_value, certificate)``; the value is in the unit frame at z.
    Uses |J(gamma, z)| e^{-N phi(gamma z)/2} = e^{-N phi(z)/2}, so only the phase
    of J enters.
    """
    if f.decay is None:
        raise PreconditionError("section has no decay certificate; the Poincare series may diverge")
    N = f.N
    z = complex(space.validate(z))
    stats = stats or group_stats(space)
    elems = space.enumerate_pair(z, f.center, R)
    gz = elems.apply(z)
    phase = np.exp(-1j * _twist_log(space, elems, z, N).imag)
    terms = phase * f.unit(gz)
    value = complex(ordered_sum(terms))
    if R < stats.systole:
        cert = TruncationCertificate(float(R), len(terms), math.inf, AGMON_GEOMETRIC, False,
                                     "radius below the systole: no tail bound", tolerance,
                                     None if tolerance is None else False)
    else:
        cert = certify_tail(space, stats, N, R, envelope=f.decay, elements_used=len(terms), tolerance=tolerance)
    return value, cert


def poincare_basis_section(space, j: int, z, t: int, R: float, stats=None):
    """Relative Poincare series sum_gamma gamma'(z)^t (gamma z)^j, in the unit frame."""
    if space.kind != "hyperbolic":
        raise PreconditionError("monomial series are defined on the disc model")
    return poincare_map(space, monomial_section(j, t), z, R, stats=stats)


# ---------------------------------------------------------------------------
# JSON-lines records


def _c(z):
    return [float(np.real(z)), float(np.imag(z))]


@dataclass
class EvaluationRecord:
    x: complex
    y: complex
    N: int
    R: float
    value: complex
    certificate: TruncationCertificate

    def to_json(self) -> str:
        return json.dumps({"x": _c(self.x), "y": _c(self.y), "N": self.N, "R": self.R,
                           "value": _c(self.value), "certificate": self.certificate.to_dict()}, sort_keys=True)

    @classmethod
    def from_json(cls, line: str) -> "EvaluationRecord":
        d = json.loads(line)
        c = dict(d["certificate"])
        if c["tail_bound"] is None:
            c["tail_bound"] = math.inf
        return cls(complex(*d["x"]), complex(*d["y"]), d["N"], d["R"], complex(*d["value"]),
                   TruncationCertificate(**c))


def write_jsonl(path, records) -> None:
    with open(path, "w") as fh:
        for r in records:
            fh.write(r.to_json() + "\n")


def read_jsonl(path) -> list:
    with open(path) as fh:
        return [EvaluationRecord.from_json(line) for line in fh if line.strip()]


# ---------------------------------------------------------------------------
# kernel matrices on point sets


def _log_terms(space, u, v, x, y, N):
    """Log unit-frame summands for element arrays (u, v) = (m, n) or (a, b) at x against y."""
    from .cover_kernels import log_disc, log_fock

    if space.kind == "flat":
        gx = x + u + v * space.tau
        ld = log_fock(gx, y, N, space.tau)[0]
    else:
        gx = (u * x + v) / (np.conj(v) * x + np.conj(u))
        ld = log_disc(gx, y, N)[0]
    return ld - space.log_automorphy(u, v, x, N) - 0.5 * N * (space.phi(x) + space.phi(y))


def _euclidean_balls(space, Y, R):
    """Euclidean centres and radii of the metric balls B(y, R)."""
    if space.kind == "flat":
        return Y, np.full(len(Y), R)
    r = math.tanh(R / 2)
    den = 1 - r * r * np.abs(Y) ** 2
    return Y * (1 - r * r) / den, r * (1 - np.abs(Y) ** 2) / den


def gamma_sum_matrix(space, X, Y, N: int, R: float, stats=None):
    """Unit-frame S(x_i, y_j) for all pairs of two point sets.

    Flat model: every element of the ball |lambda| <= R + max|x| + max|y| is
    summed (a superset of each pair's R-ball, so the certificate still bounds
    what is left out).  Each summand factors as
    c_lambda A_lambda(x) B_lambda(y) E(x, y), so the sum is one matrix product.
    Disc model: per pair exactly the elements with d(gamma x, y) <= R, found with
    a KD-tree and combined like ``gamma_sum_kernel`` (decreasing modulus,
    compensated pairwise tree).  Returns (matrix, certificate).
    """
    X = np.atleast_1d(np.asarray(X, dtype=complex))
    Y = np.atleast_1d(np.asarray(Y, dtype=complex))
    stats = stats or group_stats(space)
    if space.kind == "flat":
        out, used = _flat_matrix(space, X, Y, N, R)
    else:
        out, used = _disc_matrix(space, X, Y, N, R)
    if R >= stats.systole:
        cert = certify_tail(space, stats, N, R, elements_used=used)
    else:
        cert = TruncationCertificate(float(R), used, math.inf, GAUSSIAN_FLAT if space.kind == "flat" else AGMON_GEOMETRIC,
                                     False, "radius below the systole: no tail bound")
    return out, cert


def _flat_matrix(space, X, Y, N, R):
    yim = space.im_tau
    k = N * math.pi / yim
    if R < group_stats(space).systole:
        ball = space.enumerate(0j, 0.0)
    else:
        ball = space.enumerate(0j, R + np.abs(X).max() + np.abs(Y).max())
    lam = ball.vectors
    c = np.full(len(lam), N / yim, dtype=complex)
    if space.semicharacter and N % 2:
        c = c * (1 - 2 * ((ball.m * ball.n) % 2))
    # split exp(-k |lambda|^2 / 2) evenly so neither factor overflows
    A = np.exp(k * (-X[:, None] * np.conj(lam)[None] - 0.25 * np.abs(lam)[None] ** 2))
    B = np.exp(k * (lam[None] * np.conj(Y)[:, None] - 0.25 * np.abs(lam)[None] ** 2))
    E = np.exp(k * (X[:, None] * np.conj(Y)[None] - 0.5 * np.abs(X)[:, None] ** 2 - 0.5 * np.abs(Y)[None] ** 2))
    return E * ((A * c[None]) @ B.T), len(lam)


def _disc_matrix(space, X, Y, N, R, chunk_entries=2_000_000):
    from scipy.spatial import cKDTree

    from .geometry import hyperbolic_distance
    reach = R + float(hyperbolic_distance(0, X).max() + hyperbolic_distance(0, Y).max())
    ball = space.enumerate(0j, reach)
    U, V = ball.a, ball.b
    centres, radii = _euclidean_balls(space, Y, R)
    query = np.c_[centres.real, centres.imag]
    rscaled = radii * (1 + 1e-12) + 1e-15
    out = np.empty((len(X), len(Y)), dtype=complex)
    used = 0
    for i, x in enumerate(X):
        orbit = (U * x + V) / (np.conj(V) * x + np.conj(U))
        tree = cKDTree(np.c_[orbit.real, orbit.imag])
        counts = tree.query_ball_point(query, rscaled, return_length=True)
        start = 0
        while start < len(Y):
            stop = start + 1
            width = counts[start]
            while stop < len(Y) and max(width, counts[stop]) * (stop + 1 - start) <= chunk_entries:
                width = max(width, counts[stop])
                stop += 1
            hits = tree.query_ball_point(query[start:stop], rscaled[start:stop], return_sorted=True)
            lens = np.array([len(h) for h in hits], dtype=np.int64)
            idx = np.concatenate([np.asarray(h, dtype=np.int64) for h in hits])
            rows = np.repeat(np.arange(stop - start), lens)
            cols = np.arange(len(idx)) - np.repeat(np.cumsum(lens) - lens, lens)
            yy = Y[start:stop][rows]
            d = hyperbolic_distance(orbit[idx], yy)
            vals = np.where(d <= R, np.exp(_log_terms(space, U[idx], V[idx], x, yy, N)), 0)
            used = max(used, int(np.max(np.bincount(rows, weights=(d <= R), minlength=stop - start))))
            T = np.zeros((stop - start, max(int(lens.max()), 1)), dtype=complex)
            T[rows, cols] = vals
            order = np.argsort(-np.abs(T), axis=1, kind="stable")
            out[i, start:stop] = pairwise_sum(np.take_along_axis(T, order, axis=1), axis=1)
            start = stop
    return out, used
