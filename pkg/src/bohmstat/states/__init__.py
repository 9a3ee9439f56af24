"""Analytic wavefunction catalog.

Every state evaluates psi, its analytic gradient and the density at batches
of spacetime points, and knows its exact Born position moments.
"""

from .base import BornMoments, FieldSample, PhysicalConstants, State
from .hermite import MAX_ORDER, UnsupportedOrderError, hermite
from .oscillator import HO3DDegenerate, HOSuperposition, equal_superposition, nodal_superposition_3d
from .packets import GaussianPacket, PacketSuperposition
from .quadrature import QuadratureError
from .spinors import SpinorRamsey, SpinorWeakField, free_spread_sq, ramsey_unitary

__all__ = [
    "BornMoments", "FieldSample", "PhysicalConstants", "State",
    "MAX_ORDER", "UnsupportedOrderError", "hermite",
    "HOSuperposition", "HO3DDegenerate", "equal_superposition", "nodal_superposition_3d",
    "GaussianPacket", "PacketSuperposition",
    "SpinorWeakField", "SpinorRamsey", "free_spread_sq", "ramsey_unitary",
    "QuadratureError",
    "eval_state", "packet_params", "born_moments",
]


def eval_state(spec, x, t):
    """psi, analytic gradient and density of ``spec`` at positions ``x``, time ``t``."""
    return spec.evaluate(x, t)


def packet_params(spec, t):
    """(a(t), q(t), p(t)) of a Gaussian packet."""
    if not isinstance(spec, GaussianPacket):
        raise TypeError("packet_params needs a GaussianPacket")
    return spec.params(t)


def born_moments(spec, t):
    """Exact Born mean and variance of position at time ``t``."""
    return spec.born_moments(t)
