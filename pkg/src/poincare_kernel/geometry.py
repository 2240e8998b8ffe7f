"""Model covers, deck groups, enumeration by displacement and factors of automorphy.

Two homogeneous models are supported:

* ``FlatTorus``: the plane C covering C / (Z + tau Z).
* ``GenusTwoSurface``: the Poincare disc covering a compact genus-2 surface,
  uniformized by the regular octagon with vertex angle pi/4.

The disc metric is ds = 2|dz| / (1 - |z|^2) (curvature -1), so
d(0, r) = 2 artanh(r) and the octagon has area 4 pi.

Points are plain complex numbers (or numpy arrays of them).  Group elements come
in two flavours: ``LatticeTranslation`` and ``MobiusElement``.  Enumerations
return vectorized containers (``LatticeSet`` / ``MobiusSet``) sorted by
displacement so that every downstream sum runs in a deterministic order.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from typing import ClassVar

import numpy as np
from scipy import optimize

from .errors import DomainError, PreconditionError, ResourceError

ELEMENT_CAP = 1_000_000
WORD_CAP = 40
MATRIX_TOL = 1e-8

# Orbit points of 0 are at least the systole apart in the hyperboloid model, so
# grid cells of this size never merge two distinct elements.
_DEDUP_CELL = 0.5
_GEN_NAMES = ("a1", "b1", "a2", "b2", "a1^-1", "b1^-1", "a2^-1", "b2^-1")


# ---------------------------------------------------------------------------
# group elements


@dataclass(frozen=True)
class LatticeTranslation:
    """Translation z -> z + m + n tau."""

    m: int
    n: int
    tau: complex = 1j

    kind: ClassVar[str] = "flat"

    @property
    def vector(self) -> complex:
        return self.m + self.n * self.tau

    @property
    def is_identity(self) -> bool:
        return self.m == 0 and self.n == 0

    def apply(self, z):
        return np.asarray(z) + self.vector if np.ndim(z) else complex(z) + self.vector

    def compose(self, other: "LatticeTranslation") -> "LatticeTranslation":
        return LatticeTranslation(self.m + other.m, self.n + other.n, self.tau)

    def inverse(self) -> "LatticeTranslation":
        return LatticeTranslation(-self.m, -self.n, self.tau)

    def derivative(self, z):
        return np.ones_like(np.asarray(z, dtype=complex))


@dataclass(frozen=True)
class MobiusElement:
    """Element [[a, b], [conj(b), conj(a)]] of SU(1,1) with the word that produced it."""

    a: complex
    b: complex
    word: tuple = ()

    kind: ClassVar[str] = "hyperbolic"

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.a, self.b], [np.conj(self.b), np.conj(self.a)]])

    @property
    def is_identity(self) -> bool:
        return abs(self.b) < 1e-12 and abs(abs(self.a) - 1.0) < 1e-12 and abs(self.a.imag) < 1e-12

    @property
    def trace(self) -> float:
        return 2.0 * self.a.real

    def apply(self, z):
        z = _check_disc(z)
        return (self.a * z + self.b) / (np.conj(self.b) * z + np.conj(self.a))

    def derivative(self, z):
        z = _check_disc(z)
        return 1.0 / (np.conj(self.b) * z + np.conj(self.a)) ** 2

    def compose(self, other: "MobiusElement") -> "MobiusElement":
        a, b = _mul(self.a, self.b, other.a, other.b)
        return MobiusElement(complex(a), complex(b), self.word + other.word)

    def inverse(self) -> "MobiusElement":
        word = tuple((g + 4) % 8 for g in reversed(self.word))
        return MobiusElement(complex(np.conj(self.a)), complex(-self.b), word)

    def word_string(self) -> str:
        return " ".join(_GEN_NAMES[g] for g in self.word) or "e"

    def normalized(self) -> tuple[complex, complex]:
        """Representative of the PSU(1,1) class with a positive leading real part."""
        s = -1.0 if (self.a.real < 0 or (self.a.real == 0 and self.a.imag < 0)) else 1.0
        return s * self.a, s * self.b

    def same_element(self, other: "MobiusElement", tol: float = MATRIX_TOL) -> bool:
        a1, b1 = self.normalized()
        a2, b2 = other.normalized()
        return max(abs(a1 - a2), abs(b1 - b2)) < tol


def _mul(fa, fb, ga, gb):
    """Product of SU(1,1) matrices stored by their first rows."""
    return fa * ga + fb * np.conj(gb), fa * gb + fb * np.conj(ga)


def _check_disc(z):
    arr = np.asarray(z, dtype=complex)
    if np.any(np.abs(arr) >= 1.0) or not np.all(np.isfinite(arr)):
        raise DomainError("point on or outside the unit circle")
    return arr if arr.ndim else complex(arr)


# ---------------------------------------------------------------------------
# enumerated element containers


@dataclass
class LatticeSet:
    """Vectorized set of lattice translations with their displacement from a target."""

    m: np.ndarray
    n: np.ndarray
    tau: complex
    displacement: np.ndarray

    def __len__(self):
        return len(self.m)

    def __getitem__(self, i) -> LatticeTranslation:
        return LatticeTranslation(int(self.m[i]), int(self.n[i]), self.tau)

    @property
    def vectors(self) -> np.ndarray:
        return self.m + self.n * self.tau

    def apply(self, z) -> np.ndarray:
        return complex(z) + self.vectors

    def elements(self) -> list:
        return [self[i] for i in range(len(self))]


@dataclass
class MobiusSet:
    """Vectorized set of SU(1,1) elements.

    Words are stored as parent pointers: element i equals element ``parent[i]``
    right-multiplied by generator ``gen[i]``.
    """

    a: np.ndarray
    b: np.ndarray
    parent: np.ndarray
    gen: np.ndarray
    displacement: np.ndarray
    # element k of this set is left * (enumerated element) * right
    left: MobiusElement | None = None
    right: MobiusElement | None = None

    def __len__(self):
        return len(self.a)

    def word(self, i: int) -> tuple:
        w = []
        while self.parent[i] >= 0:
            w.append(int(self.gen[i]))
            i = int(self.parent[i])
        w = tuple(reversed(w))
        if self.left is not None:
            w = self.left.word + w
        if self.right is not None:
            w = w + self.right.word
        return w

    def __getitem__(self, i) -> MobiusElement:
        return MobiusElement(complex(self.a[i]), complex(self.b[i]), self.word(i))

    def apply(self, z) -> np.ndarray:
        z = _check_disc(z)
        return (self.a * z + self.b) / (np.conj(self.b) * z + np.conj(self.a))

    def elements(self) -> list:
        return [self[i] for i in range(len(self))]


def _sort_lattice(m, n, tau, disp) -> LatticeSet:
    order = np.lexsort((n, m, disp))
    return LatticeSet(m[order], n[order], tau, disp[order])


def _sort_mobius(a, b, parent, gen, disp) -> MobiusSet:
    x = 2.0 * a * b
    order = np.lexsort((x.imag, x.real, disp))
    inv = np.empty_like(order)
    inv[order] = np.arange(len(order))
    p = parent[order]
    p = np.where(p >= 0, inv[np.maximum(p, 0)], -1)
    return MobiusSet(a[order], b[order], p, gen[order], disp[order])


# ---------------------------------------------------------------------------
# flat model


@dataclass(frozen=True)
class FlatTorus:
    """The plane covering the torus C / (Z + tau Z) with weight phi(z) = pi |z|^2 / Im tau.

    ``semicharacter=False`` drops the (-1)^{mn} multiplier from the automorphy
    factor; it exists only to build deliberately falsified controls.
    """

    tau: complex = 1j
    semicharacter: bool = True

    kind: ClassVar[str] = "flat"

    def __post_init__(self):
        object.__setattr__(self, "tau", complex(self.tau))
        if not self.tau.imag > 0:
            raise PreconditionError("Im tau must be positive")

    @property
    def im_tau(self) -> float:
        return self.tau.imag

    @property
    def area(self) -> float:
        return self.tau.imag

    @property
    def vertices(self) -> np.ndarray:
        return np.array([0, 1, 1 + self.tau, self.tau], dtype=complex)

    @property
    def identity(self) -> LatticeTranslation:
        return LatticeTranslation(0, 0, self.tau)

    def validate(self, z):
        return np.asarray(z, dtype=complex) if np.ndim(z) else complex(z)

    def distance(self, x, y):
        return np.abs(np.asarray(x) - np.asarray(y))

    def phi(self, z):
        return math.pi * np.abs(z) ** 2 / self.im_tau

    def coordinates(self, z):
        """Real coordinates (s, t) with z = s + t tau."""
        z = np.asarray(z, dtype=complex)
        t = z.imag / self.im_tau
        return z.real - t * self.tau.real, t

    def contains(self, z, tol=1e-12):
        s, t = self.coordinates(z)
        return (s >= -tol) & (s < 1 + tol) & (t >= -tol) & (t < 1 + tol)

    def reduce(self, z):
        """Return (z', m, n) with z' = z + m + n tau in the period parallelogram."""
        s, t = self.coordinates(z)
        m = -np.floor(s).astype(np.int64)
        n = -np.floor(t).astype(np.int64)
        zr = np.asarray(z) + m + n * self.tau
        return zr, m, n

    def log_automorphy(self, m, n, z, N):
        """log J(lambda, z) for lambda = m + n tau (vectorized in m, n)."""
        lam = m + n * self.tau
        out = N * math.pi * (z * np.conj(lam) + 0.5 * np.abs(lam) ** 2) / self.im_tau
        if self.semicharacter and N % 2:
            out = out + 1j * math.pi * ((np.asarray(m) * np.asarray(n)) % 2)
        return out

    def _ball(self, c, radius, cap):
        """All lattice vectors lambda with |c + lambda| <= radius."""
        y = self.im_tau
        c = complex(c)
        n_lo = math.ceil((-radius - c.imag) / y - 1e-12)
        n_hi = math.floor((radius - c.imag) / y + 1e-12)
        ms, ns = [], []
        for n in range(n_lo, n_hi + 1):
            h = c.imag + n * y
            w = radius * radius - h * h
            if w < 0:
                continue
            w = math.sqrt(w)
            x0 = c.real + n * self.tau.real
            m = np.arange(math.ceil(-w - x0 - 1e-12), math.floor(w - x0 + 1e-12) + 1, dtype=np.int64)
            ms.append(m)
            ns.append(np.full(len(m), n, dtype=np.int64))
            if sum(len(v) for v in ms) > cap:
                raise ResourceError("lattice enumeration exceeded the element cap", sum(len(v) for v in ms))
        m = np.concatenate(ms) if ms else np.zeros(0, np.int64)
        n = np.concatenate(ns) if ns else np.zeros(0, np.int64)
        d = np.abs(c + m + n * self.tau)
        keep = d <= radius
        return m[keep], n[keep], d[keep]

    def enumerate(self, basepoint=0j, radius=0.0, cap=ELEMENT_CAP) -> LatticeSet:
        """Every lambda with d(x0, x0 + lambda) <= radius, sorted by displacement."""
        if radius < 0:
            raise PreconditionError("radius must be nonnegative")
        m, n, d = self._ball(0j, radius, cap)
        return _sort_lattice(m, n, self.tau, d)

    def enumerate_pair(self, x, y, radius, cap=ELEMENT_CAP) -> LatticeSet:
        """Every lambda with |x + lambda - y| <= radius, sorted by that distance."""
        m, n, d = self._ball(complex(x) - complex(y), radius, cap)
        return _sort_lattice(m, n, self.tau, d)

    def to_config(self) -> dict:
        cfg = {"kind": "flat", "tau_re": self.tau.real, "tau_im": self.tau.imag}
        if not self.semicharacter:
            cfg["semicharacter"] = False
        return cfg


# ---------------------------------------------------------------------------
# genus-2 model


def _rot(theta):
    return np.exp(0.5j * theta), 0j


def _trans(angle, length):
    return complex(math.cosh(length / 2)), complex(math.sinh(length / 2) * np.exp(1j * angle))


@functools.lru_cache(maxsize=1)
def octagon_data():
    """Vertices and side-pairing generators of the regular pi/4 octagon.

    Side k joins vertex k to vertex k+1.  The pairing of side i onto side j is a
    rotation carrying the midpoint direction of side i to the antipode of side j,
    followed by the translation of length ``ell`` towards side j, where ``ell``
    is the distance between the centres of adjacent tiles.  The four generators
    are chosen so that a1 b1 a1^-1 b1^-1 a2 b2 a2^-1 b2^-1 = 1.
    """
    rv = 2.0 ** -0.25
    vertices = rv * np.exp(1j * np.arange(8) * np.pi / 4)
    ell = 2.0 * math.acosh(1.0 + math.sqrt(2.0))
    alpha = lambda k: (k + 0.5) * np.pi / 4

    def pairing(i, j):
        return _mul(*_trans(alpha(j), ell), *_rot(alpha(j) + np.pi - alpha(i)))

    def inv(g):
        return np.conj(g[0]), -g[1]

    a1 = inv(pairing(0, 2))
    b1 = pairing(1, 3)
    a2 = inv(pairing(4, 6))
    b2 = pairing(5, 7)
    gens = [a1, b1, a2, b2, inv(a1), inv(b1), inv(a2), inv(b2)]
    ga = np.array([complex(g[0]) for g in gens])
    gb = np.array([complex(g[1]) for g in gens])
    return vertices, ga, gb, ell


def relator_residual() -> float:
    """Distance of a1 b1 a1^-1 b1^-1 a2 b2 a2^-1 b2^-1 from +-identity."""
    _, ga, gb, _ = octagon_data()
    a, b = 1 + 0j, 0j
    for k in (0, 1, 4, 5, 2, 3, 6, 7):
        a, b = _mul(a, b, ga[k], gb[k])
    return float(min(max(abs(a - 1), abs(b)), max(abs(a + 1), abs(b))))


def hyperbolic_distance(x, y):
    """Distance for ds = 2|dz|/(1-|z|^2)."""
    x = np.asarray(x, dtype=complex)
    y = np.asarray(y, dtype=complex)
    r = np.abs(x - y) / np.abs(1 - np.conj(x) * y)
    return 2.0 * np.arctanh(np.minimum(r, 1.0))


@dataclass(frozen=True)
class GenusTwoSurface:
    """Poincare disc covering the genus-2 surface of the regular octagon.

    The line bundle is the canonical bundle; the weight is
    phi(z) = -2 log(1 - |z|^2) so that e^{-t phi} = |dz^t|^2_h.
    """

    kind: ClassVar[str] = "hyperbolic"
    genus: ClassVar[int] = 2

    @property
    def vertices(self) -> np.ndarray:
        return octagon_data()[0]

    @property
    def area(self) -> float:
        return 4.0 * math.pi

    @property
    def identity(self) -> MobiusElement:
        return MobiusElement(1 + 0j, 0j, ())

    def generators(self) -> list[MobiusElement]:
        _, ga, gb, _ = octagon_data()
        return [MobiusElement(complex(ga[k]), complex(gb[k]), (k,)) for k in range(8)]

    def generator(self, name: str) -> MobiusElement:
        return self.generators()[_GEN_NAMES.index(name)]

    def validate(self, z):
        return _check_disc(z)

    def distance(self, x, y):
        _check_disc(x)
        _check_disc(y)
        return hyperbolic_distance(x, y)

    def phi(self, z):
        return -2.0 * np.log1p(-np.abs(z) ** 2)

    def contains(self, z, tol=1e-12):
        """Dirichlet-domain test: no neighbour tile centre is nearer than 0."""
        z = np.asarray(z, dtype=complex)
        _, ga, gb, _ = octagon_data()
        d0 = hyperbolic_distance(0, z)
        gz = (ga[:, None] * z.ravel()[None] + gb[:, None]) / (np.conj(gb)[:, None] * z.ravel()[None] + np.conj(ga)[:, None])
        dn = hyperbolic_distance(0, gz).min(axis=0).reshape(z.shape)
        return (np.abs(z) < 1) & (d0 <= dn + tol)

    def reduce_element(self, z) -> tuple[complex, MobiusElement]:
        """Return (z', g) with z' = g z in the closed octagon."""
        z = complex(_check_disc(z))
        _, ga, gb, _ = octagon_data()
        a, b, word = 1 + 0j, 0j, []
        for _ in range(10 * WORD_CAP):
            cand = (ga * z + gb) / (np.conj(gb) * z + np.conj(ga))
            dist = hyperbolic_distance(0, cand)
            k = int(np.argmin(dist))
            if dist[k] >= hyperbolic_distance(0, z) - 1e-13:
                break
            z = complex(cand[k])
            a, b = _mul(ga[k], gb[k], a, b)
            word.insert(0, k)
        else:
            raise ResourceError("domain reduction did not terminate", len(word))
        return z, MobiusElement(complex(a), complex(b), tuple(word))

    def reduce(self, z):
        return self.reduce_element(z)

    def log_automorphy(self, a, b, z, N):
        """log J(gamma, z) = 2N log(conj(b) z + conj(a)) (vectorized in a, b)."""
        return 2.0 * N * np.log(np.conj(b) * z + np.conj(a))

    def _bfs(self, target, radius, cap, word_cap):
        """Elements gamma with d(gamma 0, target) <= radius; ``target`` must lie in the octagon.

        The octagon is the Voronoi cell of 0 in the orbit, so a geodesic from the
        target to gamma 0 only crosses tiles whose centres are at least as close;
        hence exact pruning at ``radius`` loses nothing.
        """
        _, ga, gb, _ = octagon_data()
        target = complex(target)
        cell = _DEDUP_CELL
        seen1, seen2 = set(), set()

        def keys(a, b):
            x = 2.0 * a * b
            k1 = np.floor(x.real / cell).astype(np.int64) * (1 << 32) + np.floor(x.imag / cell).astype(np.int64)
            k2 = np.floor(x.real / cell + 0.5).astype(np.int64) * (1 << 32) + np.floor(x.imag / cell + 0.5).astype(np.int64)
            return k1.tolist(), k2.tolist()

        def admit(a, b):
            keep = []
            k1, k2 = keys(a, b)
            for i, (u, v) in enumerate(zip(k1, k2)):
                if u in seen1 or v in seen2:
                    continue
                seen1.add(u)
                seen2.add(v)
                keep.append(i)
            return np.asarray(keep, dtype=np.int64)

        A = [np.array([1 + 0j])]
        B = [np.array([0j])]
        P = [np.array([-1], dtype=np.int64)]
        G = [np.array([-1], dtype=np.int8)]
        D = [np.array([hyperbolic_distance(0, target)], dtype=float)]
        if D[0][0] > radius + 1e-9:
            return (np.zeros(0, complex),) * 2 + (np.zeros(0, np.int64), np.zeros(0, np.int8), np.zeros(0))
        admit(A[0], B[0])
        fa, fb, fidx = A[0], B[0], np.array([0])
        total = 1
        level = 0
        while len(fa):
            level += 1
            na = (fa[:, None] * ga[None] + fb[:, None] * np.conj(gb)[None]).ravel()
            nb = (fa[:, None] * gb[None] + fb[:, None] * np.conj(ga)[None]).ravel()
            par = np.repeat(fidx, 8)
            gen = np.tile(np.arange(8, dtype=np.int8), len(fa))
            orbit = nb / np.conj(na)
            d = hyperbolic_distance(orbit, target)
            m = d <= radius + 1e-9
            na, nb, par, gen, d = na[m], nb[m], par[m], gen[m], d[m]
            k = admit(na, nb)
            if len(k) == 0:
                break
            if level > word_cap:
                raise ResourceError("word length exceeded the cap", total)
            fa, fb = na[k], nb[k]
            fidx = np.arange(total, total + len(k))
            total += len(k)
            if total > cap:
                raise ResourceError("group enumeration exceeded the element cap", total)
            A.append(fa)
            B.append(fb)
            P.append(par[k])
            G.append(gen[k])
            D.append(d[k])
        return (np.concatenate(A), np.concatenate(B), np.concatenate(P), np.concatenate(G), np.concatenate(D))

    def enumerate(self, basepoint=0j, radius=0.0, cap=ELEMENT_CAP, word_cap=WORD_CAP) -> MobiusSet:
        """Every gamma with d(x0, gamma x0) <= radius, each exactly once, sorted by displacement."""
        if radius < 0:
            raise PreconditionError("radius must be nonnegative")
        x0 = complex(_check_disc(basepoint))
        if abs(x0) < 1e-15:
            return _sort_mobius(*self._bfs(0j, radius, cap, word_cap))
        s = self.enumerate_pair(x0, x0, radius, cap=cap, word_cap=word_cap)
        return s

    def enumerate_pair(self, x, y, radius, cap=ELEMENT_CAP, word_cap=WORD_CAP) -> MobiusSet:
        """Every gamma with d(gamma x, y) <= radius, sorted by that distance."""
        x = complex(_check_disc(x))
        y = complex(_check_disc(y))
        xr, e = self.reduce_element(x)
        yr, g = self.reduce_element(y)
        # d(gamma x, y) = d(g gamma e^-1 xr, yr); enumerate gamma' = g gamma e^-1
        a, b, par, gen, _ = self._bfs(yr, radius + float(hyperbolic_distance(0, xr)), cap, word_cap)
        orbit = (a * xr + b) / (np.conj(b) * xr + np.conj(a))
        d = hyperbolic_distance(orbit, yr)
        keep = d <= radius
        # renumber parents onto the kept subset (dropped ancestors keep their words via a full map)
        out = _sort_mobius(a, b, par, gen, np.where(keep, d, np.inf))
        n_keep = int(keep.sum())
        gi = g.inverse()
        left = None if g.is_identity else gi
        right = None if e.is_identity else e
        aa, bb = out.a[:n_keep], out.b[:n_keep]
        if left is not None:
            aa, bb = _mul(left.a, left.b, aa, bb)
        if right is not None:
            aa, bb = _mul(aa, bb, right.a, right.b)
        return MobiusSet(aa, bb, out.parent, out.gen, out.displacement[:n_keep], left, right)

    def to_config(self) -> dict:
        return {"kind": "hyperbolic", "surface": "genus2-octagon"}


# ---------------------------------------------------------------------------
# module-level operations


def space_from_config(cfg: dict):
    kind = cfg.get("kind", "flat")
    if kind == "flat":
        tau = complex(float(cfg.get("tau_re", 0.0)), float(cfg.get("tau_im", 1.0)))
        return FlatTorus(tau, bool(cfg.get("semicharacter", True)))
    if kind == "hyperbolic":
        return GenusTwoSurface()
    raise PreconditionError(f"unknown model kind {kind!r}")


def apply(g, z):
    """gamma . z for a single element."""
    return g.apply(z)


def distance(space, x, y):
    return space.distance(x, y)


def enumerate_elements(space, basepoint=0j, radius=0.0, cap=ELEMENT_CAP):
    """All gamma with d(x0, gamma x0) <= radius (see the model's ``enumerate``)."""
    return space.enumerate(basepoint, radius, cap=cap)


def automorphy_factor(space, g, z, N: int) -> complex:
    """J(gamma, z) for the weight-N bundle."""
    if isinstance(g, LatticeTranslation):
        return complex(np.exp(space.log_automorphy(g.m, g.n, complex(z), N)))
    return complex(np.exp(space.log_automorphy(g.a, g.b, complex(_check_disc(z)), N)))


@dataclass
class Displacement:
    value: float
    point: complex | None
    identity: bool = False


def translation_length(g: MobiusElement) -> float:
    """2 arccosh(|tr g| / 2) for hyperbolic elements (0 otherwise)."""
    return 2.0 * math.acosh(max(abs(g.trace) / 2.0, 1.0))


def displacement_min(space, g, method: str = "trace", grid: int = 60) -> Displacement:
    """Minimum of d(x, gx).

    Flat translations have constant displacement |lambda|.  For Mobius elements
    ``method="trace"`` uses the trace formula and reports the closest point of
    the axis to 0; ``method="grid"`` minimizes over the closed octagon by a polar
    grid followed by a bounded local refinement.
    """
    if g.is_identity:
        return Displacement(0.0, None, identity=True)
    if isinstance(g, LatticeTranslation):
        return Displacement(float(abs(g.vector)), 0j)
    if method == "trace":
        L = translation_length(g)
        fixed = _fixed_points(g)
        return Displacement(L, _axis_point_nearest_origin(*fixed) if fixed else None)
    if method != "grid":
        raise PreconditionError(f"unknown method {method!r}")
    verts = space.vertices
    rmax = abs(verts[0])
    r = np.tanh(np.linspace(0, 2 * math.atanh(rmax), grid) / 2)
    th = np.linspace(0, 2 * np.pi, 4 * grid, endpoint=False)
    z = (r[:, None] * np.exp(1j * th[None])).ravel()
    z = z[space.contains(z, tol=1e-9)]
    disp = hyperbolic_distance(z, g.apply(z))
    z0 = z[np.argmin(disp)]

    def f(p):
        w = complex(p[0], p[1])
        if abs(w) >= 1:
            return 1e6
        pen = 0.0 if space.contains(w, tol=0.0) else 1e3 * (1 + abs(w))
        return float(hyperbolic_distance(w, g.apply(w))) + pen

    res = optimize.minimize(f, [z0.real, z0.imag], method="Nelder-Mead",
                            options={"xatol": 1e-12, "fatol": 1e-14, "maxiter": 4000})
    best = complex(res.x[0], res.x[1])
    val = float(hyperbolic_distance(best, g.apply(best)))
    if val > disp.min():
        best, val = complex(z0), float(disp.min())
    return Displacement(val, best)


def _fixed_points(g: MobiusElement):
    # conj(b) z^2 + (conj(a) - a) z - b = 0
    c2, c1, c0 = np.conj(g.b), np.conj(g.a) - g.a, -g.b
    if abs(c2) < 1e-15:
        return None
    roots = np.roots([c2, c1, c0])
    return tuple(complex(r) for r in roots)


def _axis_point_nearest_origin(p, q):
    """Point of the geodesic with endpoints p, q (on the circle) nearest 0."""
    mid = (p + q) / 2
    if abs(mid) < 1e-14:
        return 0j
    # geodesic is a circle orthogonal to the unit circle centred at c
    c = mid / abs(mid) / math.cos(abs(np.angle(p / q)) / 2)
    rad = math.sqrt(abs(c) ** 2 - 1)
    return complex(c - rad * c / abs(c))


@dataclass
class GroupStats:
    """Systole and counting-function constants for one enumeration.

    ``growth_a, growth_b`` fit #{gamma : d(x0, gamma x0) <= r} <= a e^{b r} over
    the enumerated range.  ``packing_a, packing_b`` are the constants of a
    rigorous packing bound valid for every r, built from disjoint balls of
    radius systole/2 around the orbit points.
    """

    systole: float
    growth_a: float
    growth_b: float
    packing_a: float
    packing_b: float
    radius: float
    count: int


def packing_constants(space, systole: float) -> tuple[float, float]:
    rho = systole / 2.0
    if space.kind == "flat":
        # counts are bounded by (r + rho)^2 / rho^2; the certificate integrates this directly
        return 1.0 / rho**2, 0.0
    return math.exp(rho) / (2.0 * (math.cosh(rho) - 1.0)), 1.0


def systole(space, radius: float | None = None) -> float:
    """Shortest nonidentity translation length seen in an enumeration of given radius."""
    if space.kind == "flat":
        r = 2.0 * max(1.0, abs(space.tau))
        s = space.enumerate(0j, r)
        return float(s.displacement[1])
    radius = 6.0 if radius is None else radius
    s = space.enumerate(0j, radius)
    tr = 2.0 * np.abs(s.a[1:].real)
    return float(2.0 * np.arccosh(np.maximum(tr / 2.0, 1.0)).min())


@functools.lru_cache(maxsize=8)
def _cached_stats(space, radius):
    ell = systole(space, radius)
    s = space.enumerate(0j, radius)
    r = np.linspace(radius / 2, radius, 12)
    counts = np.searchsorted(s.displacement, r, side="right")
    b, _ = np.polyfit(r, np.log(counts), 1)
    b = max(float(b), 0.0)
    a = float(np.max(counts * np.exp(-b * r)))
    pa, pb = packing_constants(space, ell)
    return GroupStats(ell, a, b, pa, pb, float(radius), len(s))


def group_stats(space, radius: float = 8.0) -> GroupStats:
    return _cached_stats(space, float(radius))
