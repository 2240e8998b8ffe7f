"""Quadrature rules over the fundamental domains.

Weights include the model's volume element: Lebesgue dA on the flat torus and
4 dA / (1 - |z|^2)^2 on the disc, so that they sum to the area of the quotient.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import octagon_data


@dataclass
class QuadratureSpec:
    nodes: np.ndarray
    weights: np.ndarray
    label: str
    order: int
    error_estimate: float | None = None

    @property
    def volume(self) -> float:
        return float(self.weights.sum())

    def __len__(self):
        return len(self.nodes)

    def describe(self) -> dict:
        return {"label": self.label, "order": self.order, "nodes": len(self.nodes),
                "volume": self.volume, "error_estimate": self.error_estimate}


def _gl(n):
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


def torus_rule(tau=1j, n: int = 64) -> QuadratureSpec:
    """Tensor Gauss-Legendre rule on the period parallelogram {s + t tau : 0 <= s, t <= 1}."""
    tau = complex(tau)
    x, w = _gl(n)
    s = 0.5 * (x + 1)
    ws = 0.5 * w
    S, T = np.meshgrid(s, s, indexing="ij")
    W = np.outer(ws, ws) * tau.imag
    return QuadratureSpec((S + T * tau).ravel(), W.ravel(), f"torus-gl{n}", n)


def octagon_rule(n: int = 16, n_theta: int | None = None) -> QuadratureSpec:
    """Curved-sector rule on the regular octagon in hyperbolic polar coordinates.

    The octagon is split into 8 sectors by the rays to its vertices.  In sector
    k the boundary is the geodesic side k, at Euclidean radius
    rho(theta) = u - sqrt(u^2 - 1) with u = |c| cos(theta - alpha_k), where c is
    the centre of the circle carrying that side.  Each sector is integrated by a
    tensor Gauss-Legendre rule in (theta, h) with z = tanh(h/2) e^{i theta}
    and dV = sinh(h) dh dtheta.
    """
    n_theta = n_theta or n
    verts = octagon_data()[0]
    rv = abs(verts[0])
    cabs = (rv * rv + 1) / (2 * rv * math.cos(math.pi / 8))
    xt, wt = _gl(n_theta)
    xh, wh = _gl(n)
    nodes, weights = [], []
    for k in range(8):
        th0 = k * math.pi / 4
        alpha = th0 + math.pi / 8
        theta = th0 + (math.pi / 8) * (xt + 1)
        u = cabs * np.cos(theta - alpha)
        rho = u - np.sqrt(u * u - 1)
        H = 2 * np.arctanh(rho)
        h = 0.5 * H[:, None] * (xh[None] + 1)
        w = (math.pi / 8) * wt[:, None] * 0.5 * H[:, None] * wh[None] * np.sinh(h)
        nodes.append((np.tanh(h / 2) * np.exp(1j * theta)[:, None]).ravel())
        weights.append(w.ravel())
    return QuadratureSpec(np.concatenate(nodes), np.concatenate(weights), f"octagon-sector{n}x{n_theta}", n)


def disc_rule(radius: float, center=0j, n_r: int = 80, n_theta: int = 96) -> QuadratureSpec:
    """Polar rule on a Euclidean disc (Gauss-Legendre radially, trapezoid in angle)."""
    x, w = _gl(n_r)
    r = 0.5 * radius * (x + 1)
    wr = 0.5 * radius * w * r
    th = 2 * np.pi * np.arange(n_theta) / n_theta
    z = complex(center) + (r[:, None] * np.exp(1j * th[None])).ravel()
    W = (wr[:, None] * np.full(n_theta, 2 * np.pi / n_theta)[None]).ravel()
    return QuadratureSpec(z, W, f"disc-r{radius:g}", n_r)


def rule_for(space, n: int | None = None) -> QuadratureSpec:
    if space.kind == "flat":
        return torus_rule(space.tau, n or 64)
    return octagon_rule(n or 16)
