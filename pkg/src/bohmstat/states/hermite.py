"""Hermite polynomials and normalized Hermite functions."""

import math

import numpy as np

MAX_ORDER = 30

_PI_QUARTER = math.pi ** -0.25


class UnsupportedOrderError(ValueError):
    """Requested Hermite order is outside the supported range."""


def hermite(n, u):
    """Physicists' Hermite polynomial H_n(u).

    Uses the three-term recurrence H_{k+1} = 2u H_k - 2k H_{k-1}.
    Orders above ``MAX_ORDER`` raise :class:`UnsupportedOrderError`.
    """
    n = int(n)
    if n < 0 or n > MAX_ORDER:
        raise UnsupportedOrderError(f"Hermite order {n} outside [0, {MAX_ORDER}]")
    u = np.asarray(u, dtype=float)
    h_prev = np.ones_like(u)
    if n == 0:
        return h_prev if h_prev.ndim else float(h_prev)
    h = 2.0 * u
    for k in range(1, n):
        h_prev, h = h, 2.0 * u * h - 2.0 * k * h_prev
    return h if h.ndim else float(h)


def hermite_functions(nmax, u):
    """Normalized Hermite functions h_0..h_nmax evaluated at ``u``.

    h_n(u) = H_n(u) exp(-u^2/2) / sqrt(2^n n! sqrt(pi)), orthonormal on the
    real line. Returns an array of shape ``(nmax + 1,) + u.shape``. The
    normalized recurrence never forms H_n itself, so there is no order cap.
    """
    u = np.asarray(u, dtype=float)
    out = np.empty((nmax + 1,) + u.shape)
    out[0] = _PI_QUARTER * np.exp(-0.5 * u * u)
    if nmax >= 1:
        out[1] = np.sqrt(2.0) * u * out[0]
    for k in range(1, nmax):
        out[k + 1] = np.sqrt(2.0 / (k + 1)) * u * out[k] - np.sqrt(k / (k + 1)) * out[k - 1]
    return out


def hermite_function_derivatives(h):
    """d h_n / du from a stack of Hermite functions of orders 0..nmax+1.

    Uses h_n' = sqrt(n/2) h_{n-1} - sqrt((n+1)/2) h_{n+1}; the result has one
    order fewer than the input.
    """
    nmax = h.shape[0] - 2
    d = np.empty((nmax + 1,) + h.shape[1:])
    d[0] = -np.sqrt(0.5) * h[1]
    for n in range(1, nmax + 1):
        d[n] = np.sqrt(n / 2.0) * h[n - 1] - np.sqrt((n + 1) / 2.0) * h[n + 1]
    return d


def hermite_polynomial_parts(nmax, u):
    """Polynomial parts p_n = h_n(u) exp(u^2/2) and their derivatives.

    Returns two lists ``p, dp`` indexed by order, with p_n' = sqrt(2n)
    p_{n-1}. The constant orders are plain floats, so callers multiply them
    by broadcasting. Multiplying by the Gaussian once per point is cheaper
    than carrying it through every order and axis.
    """
    u = np.asarray(u, dtype=float)
    p = [_PI_QUARTER]
    if nmax >= 1:
        p.append((math.sqrt(2.0) * _PI_QUARTER) * u)
    for k in range(1, nmax):
        p.append(math.sqrt(2.0 / (k + 1)) * (u * p[k]) - math.sqrt(k / (k + 1)) * p[k - 1])
    dp = [0.0] + [math.sqrt(2.0 * k) * p[k - 1] for k in range(1, nmax + 1)]
    if nmax >= 1:
        dp[1] = float(dp[1])
    return p, dp
