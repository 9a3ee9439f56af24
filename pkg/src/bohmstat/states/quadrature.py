"""Adaptive Gauss-Hermite quadrature for position moments."""

from functools import lru_cache

import numpy as np

from .hermite import hermite_functions


class QuadratureError(RuntimeError):
    """Gauss-Hermite order doubling failed to reach the requested tolerance."""

    def __init__(self, message, achieved):
        super().__init__(f"{message} (achieved relative change {achieved:.3e})")
        self.achieved = achieved


@lru_cache(maxsize=None)
def gauss_hermite_rule(order):
    """Nodes and *scaled* weights w_i exp(u_i^2) of the Hermite rule.

    The scaled weights are computed as 1 / (n h_{n-1}(u_i)^2) with normalized
    Hermite functions, which avoids the underflow/overflow of forming
    w_i and exp(u_i^2) separately at high order.
    """
    nodes, _ = np.polynomial.hermite.hermgauss(order)
    h = hermite_functions(order - 1, nodes)[-1]
    weights = 1.0 / (order * h * h)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def _tensor_rule(order, dim):
    nodes, weights = gauss_hermite_rule(order)
    if dim == 1:
        return nodes[:, None], weights
    grids = np.meshgrid(*([nodes] * dim), indexing="ij")
    wgrids = np.meshgrid(*([weights] * dim), indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=-1)
    w = np.prod(np.stack([g.ravel() for g in wgrids], axis=-1), axis=-1)
    return pts, w


def integrate(func, center, scale, order):
    """Integrate ``func`` over R^d with a fixed tensor Gauss-Hermite rule.

    ``func`` maps points of shape (m, d) to values of shape (m, k).
    """
    center = np.asarray(center, dtype=float)
    scale = np.asarray(scale, dtype=float)
    u, w = _tensor_rule(order, center.size)
    x = center + scale * u
    vals = np.asarray(func(x))
    return np.prod(scale) * np.tensordot(w, vals, axes=(0, 0))


def moment_integrals(density, center, scale, rtol=1e-9, start_order=16, max_order=None):
    """Adaptive quadrature of normalization, first and second moments.

    Doubles the per-axis order until two successive orders agree to ``rtol``
    (normalization relative, mean relative to the standard deviation,
    variance relative). Returns ``(norm, mean, variance)``.
    """
    center = np.asarray(center, dtype=float)
    dim = center.size
    if max_order is None:
        max_order = 512 if dim == 1 else 64

    def integrand(x):
        rho = density(x)
        return np.concatenate([rho[:, None], rho[:, None] * x, rho[:, None] * x * x], axis=1)

    def reduce(raw):
        norm = raw[0]
        mean = raw[1:1 + dim] / norm
        var = np.maximum(raw[1 + dim:] / norm - mean * mean, 0.0)
        return norm, mean, var

    order = start_order
    prev = reduce(integrate(integrand, center, scale, order))
    change = np.inf
    while order * 2 <= max_order:
        order *= 2
        cur = reduce(integrate(integrand, center, scale, order))
        std = np.sqrt(cur[2])
        change = max(
            abs(cur[0] - prev[0]) / abs(cur[0]),
            float(np.max(np.abs(cur[1] - prev[1]) / np.maximum(std, 1e-300))),
            float(np.max(np.abs(cur[2] - prev[2]) / np.maximum(cur[2], 1e-300))),
        )
        if change <= rtol:
            return cur
        prev = cur
    raise QuadratureError(f"moment quadrature not converged at order {order}", change)


def box_mass(density, lo, hi, order=64):
    """Probability mass inside an axis-aligned box by tensor Gauss-Legendre."""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    nodes, weights = np.polynomial.legendre.leggauss(order)
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    axes = [mid[k] + half[k] * nodes for k in range(lo.size)]
    wts = [half[k] * weights for k in range(lo.size)]
    pts = np.stack([g.ravel() for g in np.meshgrid(*axes, indexing="ij")], axis=-1)
    w = np.prod(np.stack([g.ravel() for g in np.meshgrid(*wts, indexing="ij")], axis=-1), axis=-1)
    return float(np.dot(w, density(pts)))
