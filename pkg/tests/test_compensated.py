import math

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from poincare_kernel.compensated import ordered_sum, pairwise_sum, two_sum


def test_two_sum_is_error_free():
    s, e = two_sum(1.0, 1e-17)
    assert s == 1.0 and e == 1e-17


def test_cancellation_within_an_ulp_of_fsum():
    x = np.array([1e16, 1.0, -1e16, 3.0, 1e-3] * 7)
    exact = math.fsum(x)
    assert abs(pairwise_sum(x) - exact) <= 2 * math.ulp(exact)
    # plain summation loses whole units here
    assert abs(float(np.sum(x)) - exact) > 0.5


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(-1e12, 1e12, allow_nan=False), min_size=1, max_size=300))
def test_pairwise_close_to_fsum(xs):
    exact = math.fsum(xs)
    scale = math.fsum(abs(v) for v in xs)
    assert abs(pairwise_sum(np.array(xs)) - exact) <= 4 * np.finfo(float).eps * scale + 1e-300


def test_complex_and_axis():
    rng = np.random.default_rng(0)
    z = rng.normal(size=(5, 40)) + 1j * rng.normal(size=(5, 40))
    got = pairwise_sum(z, axis=1)
    for row, g in zip(z, got):
        assert abs(g.real - math.fsum(row.real)) < 1e-14
        assert abs(g.imag - math.fsum(row.imag)) < 1e-14


def test_empty_sum_is_zero():
    assert pairwise_sum(np.array([], dtype=complex)) == 0


def test_order_changes_little():
    rng = np.random.default_rng(1)
    t = np.exp(-rng.uniform(0, 40, 500)) * np.exp(1j * rng.uniform(0, 6.3, 500))
    a, b = ordered_sum(t, True), ordered_sum(t, False)
    assert abs(a - b) < 10 * np.finfo(float).eps * len(t) * np.abs(t).max()
