"""Physical configuration and the per-mode spectral scalars.

Geometry (all lengths in units of the sound speed / angular frequency
normalization): the unknown surface sits at z = f(x, y) = eps * g(x, y),
the slab occupies a < z < b with complex density rho and bulk modulus
kappa, and data are taken on the slab top z = b.  h = b - a is the slab
thickness.

Every other module consumes the scalars computed here:

    alpha_n = (2 pi n1 / L1, 2 pi n2 / L2)        lateral wavevector
    gamma_n = sqrt(omega^2 - |alpha_n|^2)          free-space vertical
    eta_n   = sqrt((rho/kappa) omega^2 - |alpha_n|^2)   in-slab vertical

both square roots on the Im >= 0 branch, and the incident-field constant
tau = -2i omega e^{-i omega b}.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass

import numpy as np

from .errors import ResonantMode

Mode = tuple[int, int]

#: relative tolerance below which a vertical wavenumber counts as resonant
RESONANCE_RTOL = 1e-12


@dataclass(frozen=True)
class PhysicalConfig:
    omega: float
    period1: float = 1.0
    period2: float = 1.0
    a: float = 0.1
    b: float = 0.2
    rho: complex = 1.0 + 0j
    kappa: complex = 1.0 + 0j
    epsilon: float = 0.0

    def __post_init__(self):
        if not self.omega > 0:
            raise ValueError("omega must be positive")
        if not (self.period1 > 0 and self.period2 > 0):
            raise ValueError("periods must be positive")
        if not 0 < self.a < self.b:
            raise ValueError("need 0 < a < b")
        if self.epsilon < 0:
            raise ValueError("epsilon must be nonnegative")
        if self.rho == 0 or self.kappa == 0:
            raise ValueError("rho and kappa must be nonzero")

    @property
    def h(self) -> float:
        return self.b - self.a


def branch_sqrt(w: complex) -> complex:
    """Principal square root flipped onto the Im >= 0 branch.

    Enforces the sign convention directly instead of relying on the host
    library's cut: for w real positive the result is real positive, for w
    real negative it is +i sqrt|w|.
    """
    r = cmath.sqrt(w)
    if r.imag < 0:
        r = -r
    return r


def alpha_of(n: Mode, cfg: PhysicalConfig) -> tuple[float, float]:
    return (2.0 * np.pi * n[0] / cfg.period1, 2.0 * np.pi * n[1] / cfg.period2)


def _alpha_sq(n: Mode, cfg: PhysicalConfig) -> float:
    ax, ay = alpha_of(n, cfg)
    return ax * ax + ay * ay


def gamma_of(n: Mode, cfg: PhysicalConfig) -> complex:
    g = branch_sqrt(cfg.omega**2 - _alpha_sq(n, cfg))
    if abs(g) < RESONANCE_RTOL * cfg.omega:
        raise ResonantMode(f"gamma vanishes at mode {n}")
    return g


def eta_of(n: Mode, cfg: PhysicalConfig) -> complex:
    e = branch_sqrt((cfg.rho / cfg.kappa) * cfg.omega**2 - _alpha_sq(n, cfg))
    if abs(e) < RESONANCE_RTOL * cfg.omega:
        raise ResonantMode(f"eta vanishes at mode {n}")
    return e


def tau_of(cfg: PhysicalConfig) -> complex:
    return -2j * cfg.omega * cmath.exp(-1j * cfg.omega * cfg.b)


@dataclass(frozen=True)
class Scalars:
    """Bundle of the per-mode quantities the layer algebra needs."""
    alpha: tuple[float, float]
    alpha_sq: float
    gamma: complex
    eta: complex
    phi: complex
    psi: complex


def mode_scalars(n: Mode, cfg: PhysicalConfig) -> Scalars:
    g = gamma_of(n, cfg)
    e = eta_of(n, cfg)
    return Scalars(
        alpha=alpha_of(n, cfg),
        alpha_sq=_alpha_sq(n, cfg),
        gamma=g,
        eta=e,
        phi=e / cfg.rho + g,
        psi=e / cfg.rho - g,
    )


def mode_set(N: int) -> list[Mode]:
    """All modes with max(|n1|, |n2|) <= N, row-major in n1 then n2."""
    if N < 0:
        raise ValueError("N must be nonnegative")
    return [(n1, n2) for n1 in range(-N, N + 1) for n2 in range(-N, N + 1)]


# --- vectorized variants used by sweeps and the solvers ------------------

def alpha_grid(n1: np.ndarray, n2: np.ndarray, cfg: PhysicalConfig):
    """(alpha_x, alpha_y, |alpha|^2) for integer index arrays of equal shape."""
    ax = 2.0 * np.pi * n1 / cfg.period1
    ay = 2.0 * np.pi * n2 / cfg.period2
    return ax, ay, ax * ax + ay * ay


def branch_sqrt_arr(w: np.ndarray) -> np.ndarray:
    r = np.sqrt(w.astype(complex))
    return np.where(r.imag < 0, -r, r)


def gamma_eta_grid(n1: np.ndarray, n2: np.ndarray, cfg: PhysicalConfig):
    """Vectorized (gamma_n, eta_n, resonant-mask) over index arrays.

    Resonant entries are flagged, not raised; callers decide how to report
    them (sweeps keep the row, the reconstruction drops the mode).
    """
    _, _, asq = alpha_grid(n1, n2, cfg)
    gam = branch_sqrt_arr(cfg.omega**2 - asq)
    eta = branch_sqrt_arr((cfg.rho / cfg.kappa) * cfg.omega**2 - asq)
    tol = RESONANCE_RTOL * cfg.omega
    resonant = (np.abs(gam) < tol) | (np.abs(eta) < tol)
    return gam, eta, resonant
