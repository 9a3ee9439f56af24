"""Gaussian wavepackets in a harmonic or free potential."""

from dataclasses import dataclass, field
import math

import numpy as np

from .base import BornMoments, PhysicalConstants, State


def _sin_over_omega(omega, t):
    if omega == 0.0:
        return np.asarray(t, dtype=float)
    return np.sin(omega * t) / omega


def packet_trajectory_params(t, x_c, p0, gamma2, omega, hbar, mass):
    """Complex width a(t), center q(t), momentum p(t) and w(t) of a packet.

    The packet is A exp[-a (x - q)^2 + i p (x - q) / hbar] with
    a = -(i M / 2 hbar) w'/w, w(t) = cos(omega t) + i hbar sin(omega t) /
    (2 M gamma^2 omega). omega = 0 is the free-particle limit.
    """
    t = np.asarray(t, dtype=float)
    c = np.cos(omega * t)
    s = _sin_over_omega(omega, t)
    kappa = hbar / (2.0 * mass * gamma2)
    w = c + 1j * kappa * s
    dw = -(omega ** 2) * s + 1j * kappa * c
    a = -0.5j * mass / hbar * dw / w
    q = x_c * c + p0 * s / mass
    p = p0 * c - mass * omega ** 2 * x_c * s
    return a, q, p, w


def _log_sqrt_w(w, omega, t):
    """-0.5 log w on the branch continuous from w(0) = 1."""
    raw = np.angle(w)
    wt = omega * np.asarray(t, dtype=float)
    theta = wt + np.mod(raw - wt + np.pi, 2.0 * np.pi) - np.pi
    return -0.5 * (np.log(np.abs(w)) + 1j * theta)


def packet_1d(x, t, x_c, p0, gamma2, omega, hbar, mass):
    """Normalized 1D packet and its first log-derivative at points ``x``.

    Includes the full time-dependent phase, so packets with different centers
    or momenta can be superposed. At t = 0 the packet equals
    (2 pi gamma^2)^{-1/4} exp[-(x - x_c)^2 / 4 gamma^2 + i p0 x / hbar].
    Returns ``(psi, dlog, a)`` where dlog = psi'/psi.
    """
    a, q, p, w = packet_trajectory_params(t, x_c, p0, gamma2, omega, hbar, mass)
    xi = x - q
    expo = (
        -a * xi * xi
        + 1j * p * xi / hbar
        + 0.5j * (p * q - p0 * x_c) / hbar
        + 1j * p0 * x_c / hbar
        + _log_sqrt_w(w, omega, t)
    )
    psi = (2.0 * math.pi * gamma2) ** -0.25 * np.exp(expo)
    dlog = -2.0 * a * xi + 1j * p / hbar
    return psi, dlog, a


@dataclass(frozen=True)
class GaussianPacket(State):
    """Gaussian packet centered at ``x_c`` with momentum ``p0`` and spread gamma^2.

    Evolves in the oscillator of frequency ``constants.omega``; omega = 0 is
    a free particle.
    """

    x_c: float
    p0: float
    gamma2: float
    constants: PhysicalConstants = PhysicalConstants()

    kind = "GAUSSIAN_PACKET"

    def __post_init__(self):
        if not self.gamma2 > 0:
            raise ValueError("gamma2 must be positive")

    def _args(self):
        k = self.constants
        return self.x_c, self.p0, self.gamma2, k.omega, k.hbar, k.mass

    def params(self, t):
        a, q, p, _ = packet_trajectory_params(t, *self._args())
        return a, q, p

    def width(self, t):
        """Position standard deviation 1 / (2 sqrt(Re a))."""
        a, _, _ = self.params(t)
        return 0.5 / np.sqrt(a.real)

    def _amplitudes(self, x, t):
        psi, dlog, _ = packet_1d(x[..., 0], t, *self._args())
        return psi, (psi * dlog)[..., None]

    def _psi(self, x, t):
        return packet_1d(x[..., 0], t, *self._args())[0]

    def _laplacian(self, x, t):
        psi, dlog, a = packet_1d(x[..., 0], t, *self._args())
        return psi * (dlog * dlog - 2.0 * a)

    def born_moments(self, t):
        a, q, _ = self.params(t)
        return BornMoments(mean=np.array([float(q)]),
                           variance=np.array([0.25 / float(a.real)]), t=float(t))

    def quadrature_frame(self, t):
        _, q, _ = self.params(t)
        return np.array([float(q)]), np.array([math.sqrt(2.0) * float(self.width(t))])

    def exact_trajectory(self, x0, t):
        """Closed-form Bohmian path X(t) = q(t) + (x0 - x_c) sigma(t) / sigma(0).

        For the coherent width gamma^2 = hbar / (2 M omega) this is
        x0 + x_c (cos wt - 1) + p0 sin(wt) / (M w).
        """
        t = np.asarray(t, dtype=float)
        _, q, _ = self.params(t)
        ratio = self.width(t) / math.sqrt(self.gamma2)
        return q + np.multiply.outer(np.asarray(x0, dtype=float) - self.x_c, ratio)

    def quantum_force(self, x, t):
        """-dQ/dx in closed form for the Gaussian amplitude."""
        k = self.constants
        a, q, _ = self.params(t)
        x = np.asarray(x, dtype=float)
        return 4.0 * k.hbar ** 2 * a.real ** 2 * (x - q) / k.mass


@dataclass(frozen=True)
class PacketSuperposition(State):
    """Two packets at +-x_c with opposite momenta, normalized numerically.

    psi(x, 0) = N (exp[-(x-x_c)^2/4g^2 + i p0 x/hbar] + exp[-(x+x_c)^2/4g^2 - i p0 x/hbar]).
    """

    x_c: float
    p0: float
    gamma2: float
    constants: PhysicalConstants = PhysicalConstants()
    _scale: float = field(init=False, repr=False, compare=False)

    kind = "PACKET_SUPERPOSITION"

    def __post_init__(self):
        if not self.gamma2 > 0:
            raise ValueError("gamma2 must be positive")
        object.__setattr__(self, "_scale", 1.0)
        raw = self.norm(0.0)
        object.__setattr__(self, "_scale", 1.0 / math.sqrt(raw))

    def _components(self, x, t):
        k = self.constants
        first = packet_1d(x, t, self.x_c, self.p0, self.gamma2, k.omega, k.hbar, k.mass)
        second = packet_1d(x, t, -self.x_c, -self.p0, self.gamma2, k.omega, k.hbar, k.mass)
        return first, second

    def _amplitudes(self, x, t):
        (p1, d1, _), (p2, d2, _) = self._components(x[..., 0], t)
        psi = self._scale * (p1 + p2)
        grad = self._scale * (p1 * d1 + p2 * d2)
        return psi, grad[..., None]

    def _laplacian(self, x, t):
        (p1, d1, a1), (p2, d2, a2) = self._components(x[..., 0], t)
        return self._scale * (p1 * (d1 * d1 - 2 * a1) + p2 * (d2 * d2 - 2 * a2))

    def quadrature_frame(self, t):
        k = self.constants
        a, q, _, _ = packet_trajectory_params(t, self.x_c, self.p0, self.gamma2,
                                              k.omega, k.hbar, k.mass)
        sigma2 = 0.25 / float(a.real)
        return np.zeros(1), np.array([math.sqrt(2.0 * (sigma2 + float(q) ** 2))])
