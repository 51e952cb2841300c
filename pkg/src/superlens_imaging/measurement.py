"""Noisy sampling of the field on the measurement plane z = b.

Noise is additive complex white Gaussian: independent N(0, sigma^2) draws
for the real and imaginary part of every grid sample.  The generator is
pinned (counter-based uniform stream + Box-Muller, row-major order) so a
seed reproduces a measurement bitwise within this implementation; across
implementations only the statistics are promised.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ZeroNoise
from .spectral import dft2, grid_l2_norm


@dataclass(frozen=True)
class NoiseSpec:
    sigma: float
    seed: int = 0

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError("sigma >= 0 required")


@dataclass(frozen=True)
class Measurement:
    """One noisy top-plane sample set.  u_delta - delta is the clean field
    exactly; snr is the realized power ratio ||u||^2 / ||delta||^2 (+inf
    when sigma = 0)."""
    u_delta: np.ndarray
    delta: np.ndarray
    sigma: float
    seed: int
    snr: float

    @property
    def clean(self) -> np.ndarray:
        return self.u_delta - self.delta


def complex_gaussian(shape: tuple[int, ...], sigma: float, seed: int) -> np.ndarray:
    """sigma-scaled complex normals from a Philox counter stream.

    Two uniforms per sample in row-major order; Box-Muller with
    log1p(-u) so an exact 0 from the stream stays in the log's domain.
    """
    gen = np.random.Generator(np.random.Philox(seed))
    u = gen.random(size=shape + (2,))
    r = np.sqrt(-2.0 * np.log1p(-u[..., 0]))
    theta = 2.0 * np.pi * u[..., 1]
    return sigma * r * (np.cos(theta) + 1j * np.sin(theta))


def snr_of(u: np.ndarray, delta: np.ndarray) -> float:
    """Power signal-to-noise ratio in the grid norm; scale-invariant."""
    nd = grid_l2_norm(delta)
    if nd == 0.0:
        raise ZeroNoise("noise grid is identically zero")
    return float((grid_l2_norm(u) / nd) ** 2)


def add_noise(u: np.ndarray, spec: NoiseSpec) -> Measurement:
    u = np.asarray(u, dtype=complex)
    if spec.sigma == 0.0:
        return Measurement(u_delta=u.copy(), delta=np.zeros_like(u),
                           sigma=0.0, seed=spec.seed, snr=math.inf)
    delta = complex_gaussian(u.shape, spec.sigma, spec.seed)
    return Measurement(u_delta=u + delta, delta=delta, sigma=spec.sigma,
                       seed=spec.seed, snr=snr_of(u, delta))


def rescale_to_snr(u: np.ndarray, m: Measurement, target_snr: float) -> Measurement:
    """Scale the noise realization so the realized SNR equals target_snr.

    The draw's direction is kept (same seed, same relative pattern); only
    its amplitude moves.  This is how operating points specified as an SNR
    rather than a sigma are produced.
    """
    if not (target_snr > 0 and math.isfinite(target_snr)):
        raise ValueError("target_snr must be positive and finite")
    u = np.asarray(u, dtype=complex)
    nd = grid_l2_norm(m.delta)
    if nd == 0.0:
        raise ZeroNoise("cannot rescale an identically zero noise grid")
    scale = grid_l2_norm(u) / (math.sqrt(target_snr) * nd)
    delta = m.delta * scale
    return Measurement(u_delta=u + delta, delta=delta, sigma=m.sigma * scale,
                       seed=m.seed, snr=snr_of(u, delta))


@dataclass(frozen=True)
class NoiseDftStats:
    """Per-mode empirical statistics of dft2 applied to pure noise grids.

    Arrays live on the centered mode window of dft2.  For an I1 x I2 grid
    the white-noise law gives std(Re U_n) = std(Im U_n) = sigma/sqrt(I1*I2)
    with Re and Im uncorrelated, uniformly over modes.
    """
    std_re: np.ndarray
    std_im: np.ndarray
    cov: np.ndarray
    trials: int
    expected_std: float


def noise_dft_stats(spec: NoiseSpec, I: int, trials: int) -> NoiseDftStats:
    """Monte-Carlo check of the noise-DFT law over `trials` fresh grids.

    Trial t uses seed + t, so the trials are independent streams and the
    whole sweep is reproducible.
    """
    if trials < 100:
        raise ValueError("trials >= 100 required")
    if I < 1:
        raise ValueError("I >= 1 required")
    s_re = s_im = s_re2 = s_im2 = s_cross = 0.0
    for t in range(trials):
        delta = complex_gaussian((I, I), spec.sigma, spec.seed + t)
        U = dft2(delta).values
        re, im = U.real, U.imag
        s_re = s_re + re
        s_im = s_im + im
        s_re2 = s_re2 + re * re
        s_im2 = s_im2 + im * im
        s_cross = s_cross + re * im
    n = trials
    m_re, m_im = s_re / n, s_im / n
    var_re = (s_re2 - n * m_re**2) / (n - 1)
    var_im = (s_im2 - n * m_im**2) / (n - 1)
    cov = (s_cross - n * m_re * m_im) / (n - 1)
    return NoiseDftStats(std_re=np.sqrt(np.maximum(var_re, 0.0)),
                         std_im=np.sqrt(np.maximum(var_im, 0.0)),
                         cov=cov, trials=trials,
                         expected_std=spec.sigma / I)


# --- serialization -----------------------------------------------------------

CSV_HEADER = ["i1", "i2", "re_u", "im_u", "re_delta", "im_delta"]


def save_measurement_csv(m: Measurement, path: str | Path) -> None:
    """One row per sample: indices, noisy field, noise.  repr() floats so
    the grids round-trip bitwise."""
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(CSV_HEADER)
        I1, I2 = m.u_delta.shape
        for i1 in range(I1):
            for i2 in range(I2):
                ud = m.u_delta[i1, i2]
                d = m.delta[i1, i2]
                wr.writerow([i1, i2, repr(float(ud.real)), repr(float(ud.imag)),
                             repr(float(d.real)), repr(float(d.imag))])


def load_measurement_csv(path: str | Path) -> Measurement:
    """Inverse of save_measurement_csv.

    Only the grids survive the round trip: sigma comes back as NaN and the
    seed as -1 (the CSV does not carry them), and snr is recomputed from
    the grids (+inf for a zero noise grid).
    """
    rows = []
    with open(path, newline="") as fh:
        rd = csv.reader(fh)
        header = next(rd)
        if [h.strip() for h in header] != CSV_HEADER:
            raise ValueError(f"unexpected measurement CSV header: {header}")
        for row in rd:
            if row:
                rows.append(row)
    if not rows:
        raise ValueError("measurement CSV has no data rows")
    I1 = max(int(r[0]) for r in rows) + 1
    I2 = max(int(r[1]) for r in rows) + 1
    u_delta = np.zeros((I1, I2), dtype=complex)
    delta = np.zeros((I1, I2), dtype=complex)
    for r in rows:
        i1, i2 = int(r[0]), int(r[1])
        u_delta[i1, i2] = float(r[2]) + 1j * float(r[3])
        delta[i1, i2] = float(r[4]) + 1j * float(r[5])
    try:
        snr = snr_of(u_delta - delta, delta)
    except ZeroNoise:
        snr = math.inf
    return Measurement(u_delta=u_delta, delta=delta, sigma=float("nan"),
                       seed=-1, snr=snr)
