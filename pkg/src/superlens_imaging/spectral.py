"""Uniform-grid 2D Fourier analysis/synthesis and the l2 norm used everywhere.

Grid convention: u[i1, i2] samples the cell point x = (i1/I1 * L1, i2/I2 * L2),
0 <= ik < Ik, right/top endpoints excluded (periodic wrap).

Transform convention (mean-normalized):

    U_n = (1/(I1 I2)) sum_i exp(-2 pi i (n1 i1/I1 + n2 i2/I2)) u_i

reported on the centered window |nk| <= floor((Ik-1)/2).  With the matching
norm  ||u|| = sqrt(mean |u_i|^2)  Parseval holds exactly:
||u||^2 = sum_n |U_n|^2, so grid-side and coefficient-side thresholds agree.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CutoffOutOfRange


@dataclass
class SpectrumField:
    """Fourier coefficients on a centered mode window.

    ``values[n1 + W1, n2 + W2]`` holds the coefficient of
    exp(i alpha_n . x); shape (2 W1 + 1, 2 W2 + 1).
    """
    values: np.ndarray
    W1: int
    W2: int

    def __post_init__(self):
        expect = (2 * self.W1 + 1, 2 * self.W2 + 1)
        if self.values.shape != expect:
            raise ValueError(f"values shape {self.values.shape} != {expect}")

    @property
    def W(self) -> int:
        return min(self.W1, self.W2)

    def coeff(self, n: tuple[int, int]) -> complex:
        n1, n2 = n
        if abs(n1) > self.W1 or abs(n2) > self.W2:
            raise CutoffOutOfRange(f"mode {n} outside window ({self.W1},{self.W2})")
        return complex(self.values[n1 + self.W1, n2 + self.W2])

    def mode_arrays(self):
        """(n1, n2) integer index arrays matching ``values``."""
        n1 = np.arange(-self.W1, self.W1 + 1)[:, None]
        n2 = np.arange(-self.W2, self.W2 + 1)[None, :]
        return np.broadcast_arrays(n1, n2)

    def ring(self) -> np.ndarray:
        """max(|n1|, |n2|) per entry — the sup-norm 'ring' of each mode."""
        n1, n2 = self.mode_arrays()
        return np.maximum(np.abs(n1), np.abs(n2))

    def truncated(self, N: int) -> "SpectrumField":
        if N > self.W:
            raise CutoffOutOfRange(f"N={N} exceeds window {self.W}")
        c = self.values[self.W1 - N:self.W1 + N + 1, self.W2 - N:self.W2 + N + 1]
        return SpectrumField(c.copy(), N, N)


def window_halfwidth(I: int) -> int:
    return (I - 1) // 2


def dft2(u: np.ndarray) -> SpectrumField:
    """Mean-normalized DFT reported on the centered window.

    For even grid sizes the un-pairable Nyquist row/column is dropped.
    """
    I1, I2 = u.shape
    F = np.fft.fft2(u) / (I1 * I2)
    W1, W2 = window_halfwidth(I1), window_halfwidth(I2)
    rows = np.arange(-W1, W1 + 1) % I1
    cols = np.arange(-W2, W2 + 1) % I2
    return SpectrumField(F[np.ix_(rows, cols)], W1, W2)


def synthesize(coeffs: SpectrumField, N: int, grid_shape: tuple[int, int],
               take_real: bool = False) -> np.ndarray:
    """sum_{max(|n1|,|n2|) <= N} c_n exp(i alpha_n . x_i) on the grid.

    The synthesis grid must resolve the requested window (Ik > 2N), else
    distinct modes would collide under index wrap-around.
    """
    if N < 0 or N > coeffs.W:
        raise CutoffOutOfRange(f"N={N} outside coefficient window {coeffs.W}")
    I1, I2 = grid_shape
    if I1 <= 2 * N or I2 <= 2 * N:
        raise CutoffOutOfRange(f"grid {grid_shape} cannot resolve N={N}")
    full = np.zeros((I1, I2), dtype=complex)
    block = coeffs.values[coeffs.W1 - N:coeffs.W1 + N + 1,
                          coeffs.W2 - N:coeffs.W2 + N + 1]
    rows = np.arange(-N, N + 1) % I1
    cols = np.arange(-N, N + 1) % I2
    full[np.ix_(rows, cols)] = block
    u = np.fft.ifft2(full) * (I1 * I2)
    return u.real if take_real else u


def grid_l2_norm(u: np.ndarray) -> float:
    """sqrt(mean |u_i|^2); Parseval-consistent with dft2."""
    return float(np.sqrt(np.mean(np.abs(u) ** 2)))
