import math

import numpy as np
import pytest

from poincare_kernel.geometry import FlatTorus, GenusTwoSurface
from poincare_kernel.quadrature import disc_rule, octagon_rule, rule_for, torus_rule


def test_torus_volume():
    assert torus_rule(1j, 16).volume == pytest.approx(1.0, abs=1e-14)
    assert torus_rule(0.3 + 1.7j, 8).volume == pytest.approx(1.7, abs=1e-14)


def test_octagon_volume_converges():
    # Gauss-Bonnet: area 4 pi for genus 2 at curvature -1
    errs = [abs(octagon_rule(n).volume - 4 * math.pi) for n in (8, 12, 16, 20, 32)]
    assert errs == sorted(errs, reverse=True)
    assert errs[3] < 1e-6
    assert errs[4] < 1e-10


def test_octagon_nodes_inside():
    S = GenusTwoSurface()
    q = octagon_rule(10)
    assert np.all(S.contains(q.nodes, tol=1e-9))


def test_octagon_integrates_smooth_function():
    f = lambda q: np.sum(q.weights * np.abs(q.nodes) ** 4)
    assert f(octagon_rule(20)) == pytest.approx(f(octagon_rule(40)), rel=1e-6)


def test_disc_rule_area():
    assert disc_rule(2.0, 1 + 1j, 20, 32).volume == pytest.approx(4 * math.pi)


def test_rule_for():
    assert rule_for(FlatTorus(), 8).label == "torus-gl8"
    assert rule_for(GenusTwoSurface(), 8).label.startswith("octagon")
