"""Bohmian velocity fields, quantum potential and spin diagnostics."""

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .states.base import as_points, as_times

RHO_FLOOR_FACTOR = 1e-12


class CurrentKind(str, Enum):
    SPINLESS = "spinless"
    CONVECTIVE = "conv"
    PAULI_TOTAL = "pauli"


class NodeProximityError(ArithmeticError):
    """Density at or below the floor; v = j / rho is not trustworthy there."""

    def __init__(self, message, mask=None):
        super().__init__(message)
        self.mask = mask


class IncompatibleCurrentError(ValueError):
    pass


@dataclass(frozen=True)
class VelocitySample:
    v: np.ndarray
    rho: np.ndarray
    node_proximity: np.ndarray


def default_current(spec):
    return CurrentKind.CONVECTIVE if spec.is_spinor else CurrentKind.SPINLESS


def check_current(spec, kind):
    kind = CurrentKind(kind)
    if spec.is_spinor == (kind is CurrentKind.SPINLESS):
        raise IncompatibleCurrentError(
            f"current {kind.value!r} is not defined for {spec.kind} states")
    return kind


def spin_density_jacobian(psi, grad):
    """d_j (Psi^dag sigma_k Psi) as an array (..., k, j).

    Uses d(Psi^dag sigma Psi) = 2 Re(Psi^dag sigma dPsi) for Hermitian sigma.
    """
    up, dn = psi[..., 0, None], psi[..., 1, None]
    gup, gdn = grad[..., 0, :], grad[..., 1, :]
    cross = np.conj(gup) * dn + np.conj(up) * gdn
    jx = 2.0 * cross.real
    jy = 2.0 * cross.imag
    jz = 2.0 * (np.conj(up) * gup - np.conj(dn) * gdn).real
    return np.stack([jx, jy, jz], axis=-2)


def spin_density(psi):
    """Psi^dag sigma Psi as an array (..., 3)."""
    up, dn = psi[..., 0], psi[..., 1]
    cross = np.conj(up) * dn
    return np.stack([2.0 * cross.real, 2.0 * cross.imag,
                     np.abs(up) ** 2 - np.abs(dn) ** 2], axis=-1)


def _curl(jac):
    return np.stack([
        jac[..., 2, 1] - jac[..., 1, 2],
        jac[..., 0, 2] - jac[..., 2, 0],
        jac[..., 1, 0] - jac[..., 0, 1],
    ], axis=-1)


def _current_from_sample(spec, psi, grad, kind):
    k = spec.constants
    if spec.is_spinor:
        j = (k.hbar / k.mass) * np.sum(np.conj(psi)[..., None] * grad, axis=-2).imag
        if kind is CurrentKind.PAULI_TOTAL:
            j = j + (0.5 * k.hbar / k.mass) * _curl(spin_density_jacobian(psi, grad))
        return j
    return (k.hbar / k.mass) * (np.conj(psi)[..., None] * grad).imag


def current(spec, x, t, kind=None):
    """Probability current j(x, t) for the given current kind."""
    kind = check_current(spec, kind or default_current(spec))
    f = spec.evaluate(x, t)
    return _current_from_sample(spec, f.psi, f.grad, kind)


def pauli_term(spec, x, t):
    """The added spin current (hbar / 2M) curl(Psi^dag sigma Psi)."""
    if not spec.is_spinor:
        raise IncompatibleCurrentError("the Pauli spin current needs a spinor state")
    f = spec.evaluate(x, t)
    k = spec.constants
    return (0.5 * k.hbar / k.mass) * _curl(spin_density_jacobian(f.psi, f.grad))


def velocity_field(spec, x, t, kind):
    """Raw (v, rho) for validated arrays; no node check, used by the integrator."""
    fast = getattr(spec, "_spinless_velocity", None)
    if fast is not None and kind is CurrentKind.SPINLESS:
        return fast(x, t)
    psi, grad = spec._amplitudes(x, t)
    rho = spec._rho(psi)
    j = _current_from_sample(spec, psi, grad, kind)
    return j / rho[..., None], rho


def velocity(spec, x, t, kind=None, rho_ref=None, rho_floor=None):
    """Guidance velocity v = j / rho at a point or batch of points.

    ``rho_ref`` defaults to :meth:`State.reference_density`; the floor
    defaults to 1e-12 of it. Any point at or below the floor raises
    :class:`NodeProximityError`.
    """
    kind = check_current(spec, kind or default_current(spec))
    x = as_points(x, spec.dim)
    t = as_times(t, x.shape[:-1])
    if rho_ref is None:
        rho_ref = spec.reference_density()
    if rho_floor is None:
        rho_floor = RHO_FLOOR_FACTOR * rho_ref
    v, rho = velocity_field(spec, x, t, kind)
    low = ~(rho > rho_floor)
    if np.any(low):
        raise NodeProximityError(
            f"density below floor {rho_floor:.3e} at {int(np.sum(low))} point(s)", mask=low)
    return VelocitySample(v=v, rho=rho, node_proximity=np.clip(rho / rho_ref, 0.0, 1.0))


def quantum_potential(spec, x, t, rho_floor=0.0):
    """Q = -(hbar^2 / 2M) lap(R) / R with R = |psi|.

    lap(R)/R = Re(lap psi / psi) + |Im(grad psi / psi)|^2.
    """
    if spec.is_spinor:
        raise TypeError("the quantum potential is defined here for scalar states only")
    x = as_points(x, spec.dim)
    t = as_times(t, x.shape[:-1])
    psi, grad = spec._amplitudes(x, t)
    rho = spec._rho(psi)
    if np.any(~(rho > rho_floor)):
        raise NodeProximityError("density below floor in quantum_potential")
    lap = spec._laplacian(x, t)
    dlog = grad / psi[..., None]
    ratio = (lap / psi).real + np.sum(dlog.imag ** 2, axis=-1)
    k = spec.constants
    return -(k.hbar ** 2) / (2.0 * k.mass) * ratio


def spin_vector(spec, x, t, rho_floor=0.0):
    """s = hbar Psi^dag sigma Psi / (2 rho)."""
    if not spec.is_spinor:
        raise TypeError("spin_vector needs a spinor state")
    f = spec.evaluate(x, t)
    if np.any(~(f.rho > rho_floor)):
        raise NodeProximityError("density below floor in spin_vector")
    return 0.5 * spec.constants.hbar * spin_density(f.psi) / f.rho[..., None]
