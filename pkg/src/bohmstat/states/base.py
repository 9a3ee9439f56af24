"""Shared types for the analytic state catalog."""

from dataclasses import dataclass
import math

import numpy as np

from . import quadrature


@dataclass(frozen=True)
class PhysicalConstants:
    """Physical parameters shared by a state and its guidance field.

    ``omega`` is the oscillator frequency (0 means a free particle);
    ``mu``, ``b`` describe the Stern-Gerlach gradient field and ``B0``,
    ``B1``, ``omega_drive`` the rotating Ramsey field.
    """

    hbar: float = 1.0
    mass: float = 1.0
    omega: float = 1.0
    mu: float = 0.0
    b: float = 0.0
    B0: float = 0.0
    B1: float = 0.0
    omega_drive: float = 0.0

    def __post_init__(self):
        for name in ("hbar", "mass", "omega", "mu", "b", "B0", "B1", "omega_drive"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value!r}")
        if self.hbar <= 0:
            raise ValueError("hbar must be positive")
        if self.mass <= 0:
            raise ValueError("mass must be positive")
        if self.omega < 0:
            raise ValueError("omega must be non-negative")

    @property
    def alpha(self):
        """Inverse oscillator length sqrt(M omega / hbar)."""
        return math.sqrt(self.mass * self.omega / self.hbar)


@dataclass(frozen=True)
class FieldSample:
    """Wavefunction, gradient and density at a batch of spacetime points.

    Scalar states: ``psi`` has the batch shape and ``grad`` an extra trailing
    axis of length d. Spinors carry a component axis of length 2 before it:
    ``psi`` is (..., 2) and ``grad`` is (..., 2, d).
    """

    x: np.ndarray
    t: np.ndarray
    psi: np.ndarray
    grad: np.ndarray
    rho: np.ndarray


@dataclass(frozen=True)
class BornMoments:
    mean: np.ndarray
    variance: np.ndarray
    t: float

    @property
    def std(self):
        return np.sqrt(self.variance)


def as_points(x, dim):
    """Coerce ``x`` to an array of points with a trailing axis of size ``dim``."""
    x = np.asarray(x, dtype=float)
    if dim == 1 and (x.ndim == 0 or x.shape[-1] != 1):
        x = x[..., None]
    if x.shape[-1] != dim:
        raise ValueError(f"expected points with last axis {dim}, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("positions must be finite")
    return x


def as_times(t, batch_shape):
    t = np.asarray(t, dtype=float)
    if not np.all(np.isfinite(t)):
        raise ValueError("times must be finite")
    return np.broadcast_to(t, batch_shape)


class State:
    """Base class for catalog wavefunctions.

    Subclasses implement ``_amplitudes(x, t)`` returning ``(psi, grad)`` for
    validated inputs, ``quadrature_frame(t)`` and, for scalar states,
    ``_laplacian``.
    """

    kind = "STATE"
    dim = 1
    is_spinor = False

    def evaluate(self, x, t):
        x = as_points(x, self.dim)
        t = as_times(t, x.shape[:-1])
        psi, grad = self._amplitudes(x, t)
        return FieldSample(x=x, t=t, psi=psi, grad=grad, rho=self._rho(psi))

    def density(self, x, t):
        x = as_points(x, self.dim)
        t = as_times(t, x.shape[:-1])
        return self._rho(self._psi(x, t))

    def laplacian(self, x, t):
        if self.is_spinor:
            raise TypeError("laplacian is only defined for scalar states")
        x = as_points(x, self.dim)
        t = as_times(t, x.shape[:-1])
        return self._laplacian(x, t)

    def _psi(self, x, t):
        return self._amplitudes(x, t)[0]

    def _rho(self, psi):
        if self.is_spinor:
            return np.sum(psi.real ** 2 + psi.imag ** 2, axis=-1)
        return psi.real ** 2 + psi.imag ** 2

    def quadrature_frame(self, t):
        """Center and scale per axis for Gauss-Hermite integration at time t."""
        raise NotImplementedError

    def born_moments(self, t):
        return self.quadrature_moments(t)

    def quadrature_moments(self, t, rtol=1e-9):
        """Born moments by adaptive Gauss-Hermite quadrature of |psi|^2."""
        center, scale = self.quadrature_frame(t)
        norm, mean, var = quadrature.moment_integrals(
            lambda x: self.density(x, t), center, scale, rtol=rtol
        )
        return BornMoments(mean=mean, variance=var, t=float(t))

    def norm(self, t, rtol=1e-9):
        """Integral of the density over all space (should be 1)."""
        center, scale = self.quadrature_frame(t)
        return float(quadrature.moment_integrals(
            lambda x: self.density(x, t), center, scale, rtol=rtol)[0])

    def reference_density(self):
        """Typical density at t = 0, the expectation of rho under rho."""
        center, scale = self.quadrature_frame(0.0)
        order = 64 if self.dim == 1 else 32
        val = quadrature.integrate(
            lambda x: self.density(x, 0.0) ** 2, center, scale, order)
        return float(val)
