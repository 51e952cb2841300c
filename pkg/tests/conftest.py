"""Shared fixtures.

Full-resolution forward solves take a few hundred ms each; the ones used
by several test modules (and the acceptance gate) are session-scoped so
each happens once.
"""

import math
from dataclasses import replace

import pytest

from superlens_imaging.core import PhysicalConfig
from superlens_imaging.forward import Discretization, solve_forward
from superlens_imaging.profiles import peaks_profile, trig_profile

OMEGA = 2.0 * math.pi / 1.1


@pytest.fixture(scope="session")
def phys_table1() -> PhysicalConfig:
    """Lossy matched slab at the first experiment's operating point."""
    return PhysicalConfig(omega=OMEGA, a=0.1, b=0.2,
                          rho=-1 + 0.01j, kappa=-1 + 0.01j, epsilon=1e-3)


@pytest.fixture(scope="session")
def phys_vacuum() -> PhysicalConfig:
    """Slab-absent control: the layer is the same medium as below."""
    return PhysicalConfig(omega=OMEGA, a=0.1, b=0.2,
                          rho=1 + 0j, kappa=1 + 0j, epsilon=1e-3)


@pytest.fixture(scope="session")
def disc_default() -> Discretization:
    return Discretization()


@pytest.fixture(scope="session")
def disc_fast() -> Discretization:
    return Discretization(I=33, N_f=8, M=32)


@pytest.fixture(scope="session")
def sol_table1(phys_table1, disc_default):
    return solve_forward(trig_profile(), phys_table1, disc_default)


@pytest.fixture(scope="session")
def sol_table1_half_eps(phys_table1, disc_default):
    return solve_forward(trig_profile(), replace(phys_table1, epsilon=5e-4),
                         disc_default)


@pytest.fixture(scope="session")
def sol_vacuum_peaks(phys_vacuum, disc_default):
    return solve_forward(peaks_profile(), phys_vacuum, disc_default)
