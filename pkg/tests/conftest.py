import math

import numpy as np
import pytest

from bohmstat.states import (GaussianPacket, HO3DDegenerate, HOSuperposition, PacketSuperposition,
                             PhysicalConstants, SpinorRamsey, SpinorWeakField, equal_superposition,
                             nodal_superposition_3d)

FREE = PhysicalConstants(omega=0.0)


def catalog():
    """One representative instance of every state kind, plus a few variants."""
    return {
        "ho_01": equal_superposition(1),
        "ho_012": equal_superposition(2),
        "ho_phase": HOSuperposition((0, 3, 5), (0.6, 0.64j, 0.48 * np.exp(0.3j))),
        "coherent": GaussianPacket(1.0, 0.0, 0.5),
        "squeezed": GaussianPacket(1.0, 0.4, 1 / 1.6),
        "free": GaussianPacket(0.0, 0.0, 0.5, FREE),
        "packets_free": PacketSuperposition(1.0, 1.0, 0.5, FREE),
        "packets_osc": PacketSuperposition(1.0, 1.0, 0.5),
        "nodal": nodal_superposition_3d(),
        "weak_field": SpinorWeakField(0.0, 1.0, 1.0, (0.0, 0.08, 0.0),
                                      PhysicalConstants(omega=0.0, mu=-0.001, b=0.1)),
        "weak_mixed": SpinorWeakField(0.6, 0.8, 1.0, (0.1, 0.0, 0.2),
                                      PhysicalConstants(omega=0.0, mu=-0.001, b=0.3)),
        "ramsey": SpinorRamsey((1 / math.sqrt(2), 1j / math.sqrt(2)), 0.5, (0.0, 0.08, 0.0),
                               PhysicalConstants(omega=0.0, mu=-0.001, B0=1.0, B1=0.2,
                                                 omega_drive=0.0015)),
    }


CATALOG = catalog()
SCALAR = {k: v for k, v in CATALOG.items() if not v.is_spinor}
SPINOR = {k: v for k, v in CATALOG.items() if v.is_spinor}


def random_points(spec, n, rng, t_max=3.0):
    """Points drawn around the Born mean at random times, with rho well above zero."""
    t = rng.uniform(0.0, t_max, n)
    out = np.empty((n, spec.dim))
    for i, ti in enumerate(t):
        born = spec.born_moments(ti)
        out[i] = born.mean + born.std * rng.uniform(-1.5, 1.5, spec.dim)
    return out, t


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE_LINES = []


def record(criterion, passed, detail):
    """Log one acceptance line; printed in the terminal summary."""
    ACCEPTANCE_LINES.append(f"criterion {criterion:<3} {'PASS' if passed else 'FAIL'}  {detail}")
    print(ACCEPTANCE_LINES[-1])
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
