import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from poincare_kernel.errors import DomainError, PreconditionError, ResourceError
from poincare_kernel.geometry import (
    FlatTorus,
    LatticeTranslation,
    MobiusElement,
    apply,
    automorphy_factor,
    displacement_min,
    distance,
    enumerate_elements,
    group_stats,
    hyperbolic_distance,
    relator_residual,
    space_from_config,
    translation_length,
)


# ---------------------------------------------------------------- flat model

def test_translation_of_origin():
    assert apply(LatticeTranslation(1, 1, 1j), 0j) == 1 + 1j


def test_flat_distance():
    assert distance(FlatTorus(), 0j, 3 + 4j) == pytest.approx(5.0, abs=1e-15)


def _gauss_circle(R, tau=1j):
    # brute-force scan over a box that certainly contains the disc
    M = int(R / min(1.0, tau.imag)) + 2
    return sum(1 for m in range(-M, M + 1) for n in range(-M, M + 1) if abs(m + n * tau) <= R + 1e-12)


@pytest.mark.parametrize("R,count", [(0.0, 1), (1.0, 5), (2.5, 21), (5.0, 81)])
def test_flat_counts_match_brute_force(flat, R, count):
    assert _gauss_circle(R) == count
    assert len(flat.enumerate(0j, R)) == count


def test_flat_unit_ball_elements(flat):
    s = flat.enumerate(0j, 1.0)
    assert set(zip(s.m.tolist(), s.n.tolist())) == {(0, 0), (1, 0), (-1, 0), (0, 1), (0, -1)}


def test_flat_oblique_lattice_counts():
    tau = 0.3 + 1.2j
    F = FlatTorus(tau)
    for R in (0.5, 1.7, 3.3):
        assert len(F.enumerate(0.2 + 0.1j, R)) == _gauss_circle(R, tau)


def test_flat_displacement_and_systole(flat):
    assert displacement_min(flat, LatticeTranslation(1, 0)).value == 1.0
    assert group_stats(flat).systole == 1.0


def test_identity_displacement_flagged(flat, disc):
    assert displacement_min(flat, flat.identity).identity
    d = displacement_min(disc, disc.identity)
    assert d.value == 0.0 and d.identity


def test_flat_automorphy_value():
    # chi(1) = (-1)^{1*0} = 1, so J(1, 0) = e^{pi/2} at N = 1
    assert automorphy_factor(FlatTorus(), LatticeTranslation(1, 0), 0j, 1) == pytest.approx(math.exp(math.pi / 2))


def test_flat_semicharacter_sign():
    F = FlatTorus()
    # lambda = 1 + i has mn = 1, so odd N picks up a sign
    j1 = automorphy_factor(F, LatticeTranslation(1, 1), 0j, 1)
    assert j1 == pytest.approx(-math.exp(math.pi))
    j2 = automorphy_factor(F, LatticeTranslation(1, 1), 0j, 2)
    assert j2 == pytest.approx(math.exp(2 * math.pi))


def test_flat_rejects_bad_tau():
    with pytest.raises(PreconditionError):
        FlatTorus(1 - 1j)


def test_flat_reduce_and_contains(flat, rng):
    z = rng.uniform(-5, 5, 50) + 1j * rng.uniform(-5, 5, 50)
    zr, m, n = flat.reduce(z)
    assert np.all(flat.contains(zr))
    assert np.allclose(zr - m - n * flat.tau, z, atol=1e-13)


def test_flat_enumeration_monotone(flat):
    counts = [len(flat.enumerate(0j, R)) for R in np.linspace(0, 6, 13)]
    assert counts == sorted(counts)


def test_flat_element_cap(flat):
    with pytest.raises(ResourceError) as info:
        flat.enumerate(0j, 100.0, cap=1000)
    assert info.value.partial_count > 0


# ---------------------------------------------------------------- disc model

def test_disc_identity_action(disc):
    assert apply(disc.identity, 0.3 + 0.1j) == pytest.approx(0.3 + 0.1j)


def test_generator_action_matches_scalar_formula(disc):
    for name in ("a1", "b1", "a2", "b2"):
        g = disc.generator(name)
        a, b = complex(g.a), complex(g.b)
        for z in (0j, 0.2 - 0.1j):
            direct = (a * z + b) / (b.conjugate() * z + a.conjugate())
            assert abs(complex(g.apply(z)) - direct) < 1e-15


def test_disc_distance_values():
    assert hyperbolic_distance(0j, 0j) == 0.0
    # length of the radial segment [0, 0.5] under ds = 2|dz| / (1 - |z|^2)
    length, _ = integrate.quad(lambda r: 2 / (1 - r * r), 0, 0.5, epsabs=1e-13)
    assert hyperbolic_distance(0j, 0.5) == pytest.approx(length, abs=1e-12)
    assert hyperbolic_distance(0j, 0.5) == pytest.approx(1.0986122886681098, abs=1e-14)


def test_disc_domain_error(disc):
    with pytest.raises(DomainError):
        automorphy_factor(disc, disc.generator("a1"), 1.2j, 2)


def test_octagon_geometry(disc):
    assert np.all(np.abs(disc.vertices) < 1)
    assert disc.area == pytest.approx(4 * math.pi)
    assert relator_residual() < 1e-8


def test_su11_relations_on_ball(disc):
    s = disc.enumerate(0j, 8.0)
    assert np.max(np.abs(np.abs(s.a) ** 2 - np.abs(s.b) ** 2 - 1)) < 1e-12 * np.max(np.abs(s.a) ** 2)


def test_group_law_pointwise(disc, rng):
    s = disc.enumerate(0j, 6.0)
    for _ in range(50):
        g, h = s[int(rng.integers(len(s)))], s[int(rng.integers(len(s)))]
        z = complex(0.3 * rng.random() * np.exp(2j * np.pi * rng.random()))
        assert abs(complex(g.compose(h).apply(z)) - complex(g.apply(h.apply(z)))) < 1e-10


def test_enumeration_is_isometric(disc, rng):
    s = disc.enumerate(0j, 6.0)
    for _ in range(50):
        g = s[int(rng.integers(len(s)))]
        x, y = 0.4 * rng.random(2) * np.exp(2j * np.pi * rng.random(2))
        assert abs(hyperbolic_distance(g.apply(x), g.apply(y)) - hyperbolic_distance(x, y)) < 1e-10


def test_enumeration_exact_ball(disc):
    s = disc.enumerate(0j, 7.0)
    orbit = s.apply(0j)
    assert np.all(hyperbolic_distance(0j, orbit) <= 7.0 + 1e-12)
    assert np.all(np.diff(s.displacement) >= 0)
    # no two distinct elements act alike on three probe points
    probes = np.array([0j, 0.3, 0.2j])
    pts = np.stack([s.apply(p) for p in probes], axis=1)
    keys = np.round(np.concatenate([pts.real, pts.imag], axis=1) / 1e-8).astype(np.int64)
    assert len({tuple(k) for k in keys.tolist()}) == len(s)


def test_enumeration_nested_and_monotone(disc):
    small = disc.enumerate(0j, 5.0)
    big = disc.enumerate(0j, 7.0)
    key = lambda s: {(round(z.real, 9), round(z.imag, 9)) for z in s.apply(0.1 + 0.05j)}
    assert key(small) <= key(big)
    assert len(small) < len(big)


def test_enumeration_from_other_basepoint(disc):
    x0 = 0.3 - 0.2j
    s = disc.enumerate(x0, 6.0)
    full = disc.enumerate(0j, 6.0 + 2 * hyperbolic_distance(0, x0))
    d = hyperbolic_distance(x0, full.apply(x0))
    assert len(s) == int(np.sum(d <= 6.0))


def test_disc_enumeration_cap(disc):
    with pytest.raises(ResourceError):
        disc.enumerate(0j, 12.0, cap=2000)


def test_translation_length_trace_vs_grid(disc):
    g = disc.generator("a1")
    tr = displacement_min(disc, g, "trace")
    grid = displacement_min(disc, g, "grid")
    assert tr.value == pytest.approx(2 * math.acosh(abs(g.trace) / 2), abs=1e-14)
    assert abs(tr.value - grid.value) < 1e-6


def test_systole_stable_under_doubling(disc):
    from poincare_kernel.geometry import systole

    assert systole(disc, 6.0) == pytest.approx(systole(disc, 12.0), abs=1e-12)
    assert systole(disc, 6.0) > 0


def test_disc_automorphy_identity(disc):
    assert automorphy_factor(disc, disc.identity, 0.2 + 0.3j, 3) == pytest.approx(1.0)


@settings(max_examples=100, deadline=None)
@given(st.integers(-4, 4), st.integers(-4, 4), st.integers(-4, 4), st.integers(-4, 4),
       st.floats(-2, 2), st.floats(-2, 2), st.integers(1, 6))
def test_flat_cocycle(m1, n1, m2, n2, x, y, N):
    F = FlatTorus()
    g, h = LatticeTranslation(m1, n1), LatticeTranslation(m2, n2)
    z = complex(x, y)
    lhs = F.log_automorphy(g.compose(h).m, g.compose(h).n, z, N)
    rhs = F.log_automorphy(m1, n1, z + h.vector, N) + F.log_automorphy(m2, n2, z, N)
    assert abs(np.exp(rhs - lhs) - 1) < 1e-10


def test_disc_cocycle_random_triples(disc, rng):
    s = disc.enumerate(0j, 6.0)
    worst = 0.0
    for _ in range(100):
        g, h = s[int(rng.integers(len(s)))], s[int(rng.integers(len(s)))]
        z = complex(0.5 * rng.random() * np.exp(2j * np.pi * rng.random()))
        lhs = disc.log_automorphy(g.compose(h).a, g.compose(h).b, z, 3)
        rhs = disc.log_automorphy(g.a, g.b, complex(h.apply(z)), 3) + disc.log_automorphy(h.a, h.b, z, 3)
        worst = max(worst, abs(np.exp(rhs - lhs) - 1))
    assert worst < 1e-10


def test_mobius_inverse_and_normalized():
    g = MobiusElement(complex(math.cosh(0.7)), complex(math.sinh(0.7) * np.exp(0.3j)))
    e = g.compose(g.inverse())
    assert e.same_element(MobiusElement(1 + 0j, 0j))
    assert translation_length(g) == pytest.approx(1.4, abs=1e-12)


def test_space_config_roundtrip(disc):
    F = FlatTorus(0.2 + 1.1j, semicharacter=False)
    assert space_from_config(F.to_config()) == F
    assert space_from_config(disc.to_config()).kind == "hyperbolic"
    with pytest.raises(PreconditionError):
        space_from_config({"kind": "spherical"})


def test_enumerate_elements_wrapper(flat):
    assert len(enumerate_elements(flat, 0j, 1.0)) == 5
