"""Spin-1/2 states: weak Stern-Gerlach gradient and rotating Ramsey field."""

from dataclasses import dataclass
import math

import numpy as np

from .base import BornMoments, PhysicalConstants, State
from .packets import packet_1d

SPINOR_NORM_TOL = 1e-12


def ramsey_unitary(constants, t):
    """Spin propagator U(0, t) in the field (B1 cos wt, B1 sin wt, B0).

    Returns an array of shape ``t.shape + (2, 2)`` with
    a = sqrt(((w - w0)/2)^2 + mu^2 B1^2 / hbar^2) and w0 = 2 |mu| B0 / hbar.
    """
    t = np.asarray(t, dtype=float)
    k = constants
    w = k.omega_drive
    w0 = 2.0 * abs(k.mu) * k.B0 / k.hbar
    detune = 0.5 * (w - w0)
    rabi = abs(k.mu) * k.B1 / k.hbar
    a = math.hypot(detune, rabi)
    cos_at = np.cos(a * t)
    # sin(at)/a, finite as a -> 0
    sinc_at = t * np.sinc(a * t / math.pi)
    lower = np.exp(-0.5j * w * t)
    upper = np.exp(0.5j * w * t)
    u = np.empty(t.shape + (2, 2), dtype=complex)
    u[..., 0, 0] = (cos_at + 1j * detune * sinc_at) * lower
    u[..., 0, 1] = -1j * rabi * sinc_at * lower
    u[..., 1, 0] = -1j * rabi * sinc_at * upper
    u[..., 1, 1] = (cos_at - 1j * detune * sinc_at) * upper
    return u


def _free_packet_3d(x, t, p0, gamma2, hbar, mass):
    """Free 3D packet centered at the origin: psi and gradient log-derivative."""
    psi = np.ones(x.shape[:-1], dtype=complex)
    dlog = np.empty(x.shape, dtype=complex)
    for k in range(3):
        pk, dk, _ = packet_1d(x[..., k], t, 0.0, p0[k], gamma2, 0.0, hbar, mass)
        psi = psi * pk
        dlog[..., k] = dk
    return psi, dlog


def free_spread_sq(t, gamma2, hbar, mass):
    """gamma(t)^2 = gamma^2 (1 + hbar^2 t^2 / (4 M^2 gamma^4))."""
    t = np.asarray(t, dtype=float)
    return gamma2 * (1.0 + (hbar * t) ** 2 / (4.0 * mass ** 2 * gamma2 ** 2))


@dataclass(frozen=True)
class SpinorWeakField(State):
    """Spinor in the gradient field (0, -b y, b z), first order in b.

    The orbital factor is the exact free packet with complex width and the
    spin corrections solve the Pauli equation exactly at first order in b,
    with y' = y - p_y t / M and z' = z - p_z t / M. The truncated spinor is divided by its norm, which is
    known in closed form because the orbital density is Gaussian.
    """

    spin_up: float
    spin_down: float
    gamma2: float
    p0: tuple = (0.0, 0.0, 0.0)
    constants: PhysicalConstants = PhysicalConstants(omega=0.0)

    kind = "SPINOR_WEAKFIELD"
    dim = 3
    is_spinor = True

    def __post_init__(self):
        object.__setattr__(self, "p0", tuple(float(v) for v in self.p0))
        if len(self.p0) != 3:
            raise ValueError("p0 must have three components")
        if abs(self.spin_up ** 2 + self.spin_down ** 2 - 1.0) > SPINOR_NORM_TOL:
            raise ValueError("spinor amplitudes must satisfy A^2 + B^2 = 1")
        if not self.gamma2 > 0:
            raise ValueError("gamma2 must be positive")

    def _coefficient(self, t):
        """c(t) = t - i (hbar/M) t^2 a(t), a(t) = 1 / (4 gamma^2 + 2 i hbar t / M).

        Exact first-order spin amplitude per unit displacement for the
        complex-width packet. Its imaginary part is -hbar t^2 / (4 M gamma(t)^2),
        the real-spread form; the real part adds -hbar^2 t^3 / (8 M^2 gamma^2 gamma(t)^2).
        """
        k = self.constants
        a = 1.0 / (4.0 * self.gamma2 + 2j * k.hbar * t / k.mass)
        return t - 1j * (k.hbar / k.mass) * t * t * a

    def _spin_terms(self, x, t):
        """K_y, K_z and their (common) derivative dK/dy = dK/dz."""
        k = self.constants
        c = self._coefficient(t)
        y, z = x[..., 1], x[..., 2]
        _, py, pz = self.p0
        half_t2 = 0.5 * t * t / k.mass
        ky = c * (y - py * t / k.mass) + half_t2 * py
        kz = c * (z - pz * t / k.mass) + half_t2 * pz
        return ky, kz, c

    def norm_factor(self, t):
        """sqrt of the integral of the truncated spinor density."""
        k = self.constants
        t = np.asarray(t, dtype=float)
        beta = k.mu * k.b / k.hbar
        g2t = free_spread_sq(t, self.gamma2, k.hbar, k.mass)
        c2 = np.abs(self._coefficient(t)) ** 2
        _, py, pz = self.p0
        dy = py * t * t / (2.0 * k.mass)
        dz = pz * t * t / (2.0 * k.mass)
        return np.sqrt(1.0 + beta ** 2 * (2.0 * g2t * c2 + dy * dy + dz * dz))

    def _amplitudes(self, x, t):
        k = self.constants
        A, B = self.spin_up, self.spin_down
        beta = k.mu * k.b / k.hbar
        psi, dlog = _free_packet_3d(x, t, self.p0, self.gamma2, k.hbar, k.mass)
        ky, kz, dk = self._spin_terms(x, t)
        chi_up = A - beta * B * ky + 1j * beta * A * kz
        chi_dn = B + beta * A * ky - 1j * beta * B * kz
        zeros = np.zeros_like(dk)
        grad_up = np.stack([zeros, -beta * B * dk, 1j * beta * A * dk], axis=-1)
        grad_dn = np.stack([zeros, beta * A * dk, -1j * beta * B * dk], axis=-1)
        scale = 1.0 / self.norm_factor(t)
        out = np.stack([psi * chi_up, psi * chi_dn], axis=-1) * scale[..., None]
        gpsi = psi[..., None] * dlog
        grad = np.stack([
            gpsi * chi_up[..., None] + psi[..., None] * grad_up,
            gpsi * chi_dn[..., None] + psi[..., None] * grad_dn,
        ], axis=-2) * scale[..., None, None]
        return out, grad

    def quadrature_frame(self, t):
        k = self.constants
        center = np.array(self.p0) * t / k.mass
        spread = math.sqrt(2.0 * float(free_spread_sq(t, self.gamma2, k.hbar, k.mass)))
        return center, np.full(3, spread)

    def born_moments(self, t):
        # rho is a Gaussian times a quadratic polynomial: the rule is exact
        return self.quadrature_moments(t)

    def z_drift(self, t):
        """First-order shift of <z> relative to the free packet, mu b t^2 (A^2 - B^2) / 2M."""
        k = self.constants
        t = np.asarray(t, dtype=float)
        return k.mu * k.b * t * t * (self.spin_up ** 2 - self.spin_down ** 2) / (2.0 * k.mass)


@dataclass(frozen=True)
class SpinorRamsey(State):
    """Free 3D packet times a uniform spinor driven by the Ramsey propagator."""

    spinor: tuple
    gamma2: float
    p0: tuple = (0.0, 0.0, 0.0)
    constants: PhysicalConstants = PhysicalConstants(omega=0.0)

    kind = "SPINOR_RAMSEY"
    dim = 3
    is_spinor = True

    def __post_init__(self):
        spinor = tuple(complex(v) for v in self.spinor)
        if len(spinor) != 2:
            raise ValueError("spinor must have two components")
        if abs(sum(abs(v) ** 2 for v in spinor) - 1.0) > SPINOR_NORM_TOL:
            raise ValueError("spinor must be normalized")
        object.__setattr__(self, "spinor", spinor)
        object.__setattr__(self, "p0", tuple(float(v) for v in self.p0))
        if len(self.p0) != 3:
            raise ValueError("p0 must have three components")
        if not self.gamma2 > 0:
            raise ValueError("gamma2 must be positive")

    def spin_state(self, t):
        u = ramsey_unitary(self.constants, t)
        return u @ np.array(self.spinor)

    def _amplitudes(self, x, t):
        k = self.constants
        psi, dlog = _free_packet_3d(x, t, self.p0, self.gamma2, k.hbar, k.mass)
        chi = self.spin_state(t)
        out = psi[..., None] * chi
        grad = (psi[..., None] * dlog)[..., None, :] * chi[..., :, None]
        return out, grad

    def born_moments(self, t):
        k = self.constants
        mean = np.array(self.p0) * t / k.mass
        var = np.full(3, float(free_spread_sq(t, self.gamma2, k.hbar, k.mass)))
        return BornMoments(mean=mean, variance=var, t=float(t))

    def quadrature_frame(self, t):
        k = self.constants
        center = np.array(self.p0) * t / k.mass
        spread = math.sqrt(2.0 * float(free_spread_sq(t, self.gamma2, k.hbar, k.mass)))
        return center, np.full(3, spread)
