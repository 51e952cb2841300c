"""Full (non-linearized) forward solver on the flattened domain.

The change of variables that maps the region between the rough surface and
the slab bottom onto the strip 0 < z < a turns the Helmholtz equation into
a variable-coefficient equation with five coefficient fields c1..c5 built
from the surface f and its first two derivatives.  The slab and the
radiation condition above it are eliminated analytically into a per-mode
impedance relation at z = a, so the discrete unknowns live only below the
slab: Fourier collocation laterally (modes ||n||_inf <= N_f), finite
differences of order fd_order in z on M intervals.

Coefficient products are applied pointwise on an internal lateral grid of
P = 4*N_f + 1 points per period, which is wide enough that no aliased
frequency wraps back into the solver window as long as f is band-limited
to N_f; smooth non-band-limited profiles incur only their (spectrally
small) sampling tails.  Image-derived indicator profiles are differentiated
on their truncated spectrum at the solver cut-off — the solver, like the
inverse problem, only ever sees the band-limited surface.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import LinearOperator, gmres

from .core import Mode, PhysicalConfig, gamma_eta_grid, mode_scalars, tau_of
from .errors import (DegenerateSlab, NoConvergence, NyquistViolation,
                     ProfileTooTall, ResonantMode)
from .profiles import SurfaceProfile, profile_spectrum
from .spectral import SpectrumField, synthesize
from .tfe import first_order_top, u0_top

_SOLVERS = ("dense-direct", "preconditioned-iterative")


@dataclass(frozen=True)
class Discretization:
    I: int = 99
    N_f: int = 12
    M: int = 64
    fd_order: int = 4
    solver: str = "preconditioned-iterative"
    iter_tol: float = 1e-10
    iter_max: int = 200

    def __post_init__(self):
        if self.N_f < 1:
            raise ValueError("N_f >= 1 required")
        if self.I <= 2 * self.N_f:
            raise NyquistViolation(
                f"I={self.I} must exceed 2*N_f={2 * self.N_f} to resolve the window")
        if self.M < 8:
            raise ValueError("M >= 8 required")
        if self.fd_order not in (2, 4):
            raise ValueError("fd_order must be 2 or 4")
        if self.solver not in _SOLVERS:
            raise ValueError(f"solver must be one of {_SOLVERS}")
        if not (0 < self.iter_tol <= 1e-4):
            raise ValueError("iter_tol must lie in (0, 1e-4]")
        if self.iter_max < 1:
            raise ValueError("iter_max >= 1 required")

    @property
    def P(self) -> int:
        """Lateral points of the internal product grid (alias-free for
        surfaces band-limited to N_f)."""
        return 4 * self.N_f + 1

    @property
    def K(self) -> int:
        """Modes per lateral axis."""
        return 2 * self.N_f + 1


# --- finite differences ------------------------------------------------------

def fd_weights(x: np.ndarray, x0: float, m: int) -> np.ndarray:
    """Fornberg weights: column k holds the weights of the k-th derivative
    at x0 on the (arbitrary) nodes x."""
    n = len(x)
    c = np.zeros((n, m + 1))
    c1, c4 = 1.0, x[0] - x0
    c[0, 0] = 1.0
    for i in range(1, n):
        mn = min(i, m)
        c2, c5, c4 = 1.0, c4, x[i] - x0
        for j in range(i):
            c3 = x[i] - x[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i, k] = c1 * (k * c[i - 1, k - 1] - c5 * c[i - 1, k]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = (c4 * c[j, k] - k * c[j, k - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c


def deriv_matrix(M: int, h: float, d: int, p: int) -> np.ndarray:
    """(M+1)x(M+1) matrix of the d-th z-derivative at order >= p on the
    uniform levels z_j = j*h; rows near the ends switch to off-centered
    stencils of the same order."""
    z = np.arange(M + 1) * h
    r = p // 2
    n_edge = p + d
    D = np.zeros((M + 1, M + 1))
    for j in range(M + 1):
        if j - r >= 0 and j + r <= M:
            lo, hi = j - r, j + r
        elif j < r:
            lo, hi = 0, min(M, n_edge - 1)
        else:
            lo, hi = max(0, M - n_edge + 1), M
        w = fd_weights(z[lo:hi + 1], z[j], d)
        D[j, lo:hi + 1] = w[:, d]
    return D


# --- coefficient fields ------------------------------------------------------

@dataclass(frozen=True)
class CoefficientFields:
    """The five flattening coefficients on the solver tensor grid.

    c1 is z-independent and strictly positive (the transform requires
    f < a); c2..c5 are stored as full (M+1, P, P) blocks with z varying
    along the first axis.  one_minus_f_over_a feeds the interface row.
    """
    c1: np.ndarray
    c2: np.ndarray
    c3: np.ndarray
    c4: np.ndarray
    c5: np.ndarray
    one_minus_f_over_a: np.ndarray
    xs: np.ndarray
    ys: np.ndarray
    zs: np.ndarray


def _surface_fields(profile: SurfaceProfile, cfg: PhysicalConfig,
                    disc: Discretization):
    """f, f_x, f_y, Laplacian f on the P x P product grid (eps included).

    Profiles without analytic derivatives are replaced by their truncated
    spectrum at the solver cut-off and differentiated spectrally.
    """
    P = disc.P
    xs = np.arange(P) / P * cfg.period1
    ys = np.arange(P) / P * cfg.period2
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    if profile.has_derivatives:
        g = profile.sample(X, Y)
        gx, gy = profile.grad(X, Y)
        glap = profile.laplacian(X, Y)
    else:
        spec = profile_spectrum(profile, disc.N_f, quad_I=P)
        n1, n2 = spec.mode_arrays()
        ax = 2 * np.pi * n1 / cfg.period1
        ay = 2 * np.pi * n2 / cfg.period2
        g = synthesize(spec, disc.N_f, (P, P), take_real=True)
        gx = synthesize(SpectrumField(1j * ax * spec.values, spec.W1, spec.W2),
                        disc.N_f, (P, P), take_real=True)
        gy = synthesize(SpectrumField(1j * ay * spec.values, spec.W1, spec.W2),
                        disc.N_f, (P, P), take_real=True)
        glap = synthesize(SpectrumField(-(ax**2 + ay**2) * spec.values,
                                        spec.W1, spec.W2),
                          disc.N_f, (P, P), take_real=True)
    e = cfg.epsilon
    return e * g, e * gx, e * gy, e * glap, xs, ys


def coefficient_fields(profile: SurfaceProfile, cfg: PhysicalConfig,
                       disc: Discretization) -> CoefficientFields:
    f, fx, fy, flap, xs, ys = _surface_fields(profile, cfg, disc)
    a = cfg.a
    if np.max(np.abs(f)) >= a:
        raise ProfileTooTall(
            f"surface amplitude {np.max(np.abs(f)):.3g} reaches the slab at a={a}")
    zs = np.arange(disc.M + 1) * (a / disc.M)
    az = (a - zs)[:, None, None]
    gradsq = fx**2 + fy**2
    c1 = (a - f) ** 2
    c2 = a**2 + az**2 * gradsq[None, :, :]
    c3 = 2 * az * ((a - f) * fx)[None, :, :]
    c4 = 2 * az * ((a - f) * fy)[None, :, :]
    c5 = az * (2 * gradsq + (a - f) * flap)[None, :, :]
    return CoefficientFields(c1=c1, c2=c2, c3=c3, c4=c4, c5=c5,
                             one_minus_f_over_a=1.0 - f / a,
                             xs=xs, ys=ys, zs=zs)


# --- slab elimination --------------------------------------------------------

def slab_impedance(n: Mode, cfg: PhysicalConfig) -> tuple[complex, complex]:
    """Affine relation d/dz u_n(a+) = Z_n u_n(a) + zeta_n obtained by
    eliminating the slab amplitudes against the top radiation row.

    zeta_n carries the incident forcing, hence vanishes off n = 0.
    """
    s = mode_scalars(n, cfg)  # raises ResonantMode when gamma/eta degenerate
    h = cfg.h
    ep, em = np.exp(1j * s.eta * h), np.exp(-1j * s.eta * h)
    t1, t2 = s.psi * ep, s.phi * em
    den = t1 + t2
    if abs(den) < 1e-12 * max(abs(t1) + abs(t2), 1e-300):
        raise DegenerateSlab(f"slab elimination denominator cancels at mode {n}")
    Z = 1j * s.eta * (s.phi * em - s.psi * ep) / den
    tau_n = tau_of(cfg) if n == (0, 0) else 0.0
    zeta = 2 * s.eta * tau_n / den
    return complex(Z), complex(zeta)


def _impedance_grid(cfg: PhysicalConfig, N_f: int):
    """Vectorized slab_impedance over the solver window; raises on any
    resonant or degenerate mode inside it."""
    K = 2 * N_f + 1
    n1g, n2g = np.meshgrid(np.arange(-N_f, N_f + 1), np.arange(-N_f, N_f + 1),
                           indexing="ij")
    gam, eta, resonant = gamma_eta_grid(n1g, n2g, cfg)
    if resonant.any():
        i, j = np.argwhere(resonant)[0]
        raise ResonantMode(f"resonant mode ({n1g[i, j]}, {n2g[i, j]}) in solver window")
    phi = eta / cfg.rho + gam
    psi = eta / cfg.rho - gam
    ep, em = np.exp(1j * eta * cfg.h), np.exp(-1j * eta * cfg.h)
    t1, t2 = psi * ep, phi * em
    den = t1 + t2
    degenerate = np.abs(den) < 1e-12 * (np.abs(t1) + np.abs(t2))
    if degenerate.any():
        i, j = np.argwhere(degenerate)[0]
        raise DegenerateSlab(
            f"slab elimination denominator cancels at mode ({n1g[i, j]}, {n2g[i, j]})")
    Z = 1j * eta * (phi * em - psi * ep) / den
    zeta = np.zeros((K, K), dtype=complex)
    zeta[N_f, N_f] = 2 * eta[N_f, N_f] * tau_of(cfg) / den[N_f, N_f]
    return Z, zeta, gam, eta


# --- the discrete operator ---------------------------------------------------

class _Operator:
    """Matrix-free application of the collocation system.

    State layout: complex (K, K, M+1), C-order flattened; index [i1, i2, j]
    is mode (i1 - N_f, i2 - N_f) at level z_j.  Row j=0 is the Dirichlet
    identity, rows 1..M-1 the transformed PDE, row M the impedance
    interface condition.
    """

    def __init__(self, cfg: PhysicalConfig, disc: Discretization,
                 cf: CoefficientFields):
        K, P, M = disc.K, disc.P, disc.M
        self.K, self.P, self.M = K, P, M
        self.N_f = disc.N_f
        self.cfg = cfg
        self.cf = cf
        self.dim = K * K * (M + 1)

        n = np.arange(-disc.N_f, disc.N_f + 1)
        n1g, n2g = np.meshgrid(n, n, indexing="ij")
        self.ax = 2 * np.pi * n1g / cfg.period1
        self.ay = 2 * np.pi * n2g / cfg.period2
        self.asq = self.ax**2 + self.ay**2
        self.lat = cfg.omega**2 - self.asq  # (omega^2 - |alpha|^2) per mode

        hz = cfg.a / M
        Dz = deriv_matrix(M, hz, 1, disc.fd_order)
        Dzz = deriv_matrix(M, hz, 2, disc.fd_order)
        self.Dz_dense, self.Dzz_dense = Dz, Dzz
        self.Dz = sp.csr_matrix(Dz)
        self.Dzz = sp.csr_matrix(Dzz)

        self.Z, self.zeta, self.gam_w, self.eta_w = _impedance_grid(cfg, disc.N_f)
        # wrapped embedding indices of the centered window in the P-grid
        self.idx = np.arange(-disc.N_f, disc.N_f + 1) % P

    # spectral (K,K) or (L,K,K) <-> physical (L,P,P)
    def _embed(self, C: np.ndarray) -> np.ndarray:
        single = C.ndim == 2
        if single:
            C = C[None]
        out = np.zeros((C.shape[0], self.P, self.P), dtype=complex)
        out[np.ix_(range(C.shape[0]), self.idx, self.idx)] = C
        return out[0] if single else out

    def _extract(self, F: np.ndarray) -> np.ndarray:
        single = F.ndim == 2
        if single:
            F = F[None]
        out = F[np.ix_(range(F.shape[0]), self.idx, self.idx)]
        return out[0] if single else out

    def _to_phys(self, C: np.ndarray) -> np.ndarray:
        return np.fft.ifft2(self._embed(C), axes=(-2, -1)) * (self.P * self.P)

    def _to_spec(self, U: np.ndarray) -> np.ndarray:
        return self._extract(np.fft.fft2(U, axes=(-2, -1)) / (self.P * self.P))

    def _dz_apply(self, D: sp.csr_matrix, S: np.ndarray) -> np.ndarray:
        K, M1 = self.K, self.M + 1
        flat = S.reshape(K * K, M1)
        return (D @ flat.T).T.reshape(K, K, M1)

    def apply(self, x: np.ndarray) -> np.ndarray:
        K, M, P = self.K, self.M, self.P
        S = x.reshape(K, K, M + 1)
        SZ = self._dz_apply(self.Dz, S)
        SZZ = self._dz_apply(self.Dzz, S)

        # move z to the leading axis for batched lateral FFTs
        def lead(A):
            return np.transpose(A, (2, 0, 1))

        lat_phys = self._to_phys(lead(self.lat[:, :, None] * S))
        szz_phys = self._to_phys(lead(SZZ))
        sxz_phys = self._to_phys(lead(1j * self.ax[:, :, None] * SZ))
        syz_phys = self._to_phys(lead(1j * self.ay[:, :, None] * SZ))
        sz_phys = self._to_phys(lead(SZ))

        cf = self.cf
        phys = (cf.c1[None, :, :] * lat_phys + cf.c2 * szz_phys
                - cf.c3 * sxz_phys - cf.c4 * syz_phys - cf.c5 * sz_phys)
        out = np.transpose(self._to_spec(phys), (1, 2, 0))

        # row 0: Dirichlet on the flattened surface
        out[:, :, 0] = S[:, :, 0]
        # row M: one-sided dz minus the slab impedance seen through (1 - f/a)
        ua_phys = self._to_phys(self.Z * S[:, :, M])
        w = (cf.one_minus_f_over_a / self.cfg.rho) * ua_phys
        out[:, :, M] = SZ[:, :, M] - self._to_spec(w)
        return out.reshape(-1)

    def rhs(self) -> np.ndarray:
        r = np.zeros((self.K, self.K, self.M + 1), dtype=complex)
        zeta0 = self.zeta[self.N_f, self.N_f]
        r[:, :, self.M] = (zeta0 / self.cfg.rho) * self._to_spec(
            self.cf.one_minus_f_over_a.astype(complex))
        return r.reshape(-1)

    def preconditioner(self) -> LinearOperator:
        """Exact inverse of the flat-surface (f=0) operator, which is
        mode-diagonal: one (M+1)x(M+1) dense system per lateral mode."""
        K, M = self.K, self.M
        a2 = self.cfg.a ** 2
        base = np.zeros((K, K, M + 1, M + 1), dtype=complex)
        interior = a2 * self.Dzz_dense[1:M, :]
        base[:, :, 1:M, :] = interior[None, None]
        j = np.arange(1, M)
        base[:, :, j, j] += a2 * self.lat[:, :, None]
        base[:, :, 0, 0] = 1.0
        base[:, :, M, :] = self.Dz_dense[M, :][None, None]
        base[:, :, M, M] -= self.Z / self.cfg.rho
        inv = np.linalg.inv(base.reshape(K * K, M + 1, M + 1))

        def apply_inv(x):
            S = x.reshape(K * K, M + 1)
            return np.einsum("qij,qj->qi", inv, S).reshape(-1)

        return LinearOperator((self.dim, self.dim), matvec=apply_inv,
                              dtype=complex)


# --- solution container ------------------------------------------------------

@dataclass(frozen=True)
class ForwardSolution:
    """interior: physical field on the I x I x (M+1) flattened tensor grid;
    spectral_interior: its mode coefficients (K, K, M+1); top: coefficients
    u_n(b) on the solver window; top_grid: u(x_i, b) on the I x I grid."""
    interior: np.ndarray
    spectral_interior: np.ndarray
    top: SpectrumField
    top_grid: np.ndarray
    iterations: int
    residual: float


def _back_substitute(op: _Operator, S: np.ndarray, cfg: PhysicalConfig,
                     disc: Discretization) -> SpectrumField:
    """Slab amplitudes from u_n(a), then u_n(b)."""
    ua = S[:, :, -1]
    s_plus = op.Z * ua + op.zeta
    eta = op.eta_w
    Pc = 0.5 * (ua + s_plus / (1j * eta))
    Qc = 0.5 * (ua - s_plus / (1j * eta))
    h = cfg.h
    top = Pc * np.exp(1j * eta * h) + Qc * np.exp(-1j * eta * h)
    return SpectrumField(top, disc.N_f, disc.N_f)


def solve_forward(profile: SurfaceProfile, cfg: PhysicalConfig,
                  disc: Discretization) -> ForwardSolution:
    """Solve the flattened scattering problem and evaluate the data plane.

    Iterative mode is GMRES preconditioned by the exact flat-surface
    inverse; the reported residual is the true relative residual of the
    unpreconditioned system, re-checked after the solve.
    """
    cf = coefficient_fields(profile, cfg, disc)
    op = _Operator(cfg, disc, cf)
    b = op.rhs()
    b_norm = np.linalg.norm(b)

    if disc.solver == "dense-direct":
        if op.dim > 6000:
            raise ValueError(
                f"dense-direct assembly of dimension {op.dim} refused; "
                "use the iterative solver for production discretizations")
        A = np.empty((op.dim, op.dim), dtype=complex)
        e = np.zeros(op.dim, dtype=complex)
        for k in range(op.dim):
            e[k] = 1.0
            A[:, k] = op.apply(e)
            e[k] = 0.0
        x = np.linalg.solve(A, b)
        iterations = 0
    else:
        A = LinearOperator((op.dim, op.dim), matvec=op.apply, dtype=complex)
        Minv = op.preconditioner()
        count = {"n": 0}

        def cb(_):
            count["n"] += 1

        restart = min(50, disc.iter_max)
        maxiter = max(1, -(-disc.iter_max // restart))
        x, _ = gmres(A, b, M=Minv, rtol=0.05 * disc.iter_tol, atol=0.0,
                     restart=restart, maxiter=maxiter,
                     callback=cb, callback_type="pr_norm")
        iterations = count["n"]

    res = float(np.linalg.norm(op.apply(x) - b) / b_norm)
    if res > disc.iter_tol and disc.solver != "dense-direct":
        raise NoConvergence(
            f"relative residual {res:.3e} above tolerance {disc.iter_tol:.1e} "
            f"after {iterations} iterations")

    S = x.reshape(op.K, op.K, disc.M + 1)
    top = _back_substitute(op, S, cfg, disc)
    top_grid = synthesize(top, disc.N_f, (disc.I, disc.I))
    spec_lead = np.transpose(S, (2, 0, 1))
    interior = np.stack(
        [synthesize(SpectrumField(spec_lead[j], disc.N_f, disc.N_f),
                    disc.N_f, (disc.I, disc.I)) for j in range(disc.M + 1)],
        axis=-1)
    return ForwardSolution(interior=interior, spectral_interior=S, top=top,
                           top_grid=top_grid, iterations=iterations,
                           residual=res)


def synthesize_linear_data(profile: SurfaceProfile, cfg: PhysicalConfig,
                           N_max: int = 12, quad_I: int = 99) -> SpectrumField:
    """Top-plane coefficients with the second-order remainder dropped:
    u_n(b) = u0(b) [n=0] + eps * u1_n(b).

    Inverse-crime data for round-trip tests — the linearized reconstruction
    inverts it exactly; real data come from solve_forward.
    """
    g_spec = profile_spectrum(profile, N_max, quad_I=quad_I)
    vals = np.zeros_like(g_spec.values)
    W = g_spec.W1
    for i1 in range(vals.shape[0]):
        for i2 in range(vals.shape[1]):
            n = (i1 - W, i2 - W)
            vals[i1, i2] = cfg.epsilon * first_order_top(n, g_spec.values[i1, i2], cfg)
    vals[W, W] += u0_top(cfg)
    return SpectrumField(vals, W, W)


def reflected_flux(top: SpectrumField, cfg: PhysicalConfig) -> float:
    """Outgoing energy flux above the slab, normalized by the incident
    flux.  For lossless media this cannot exceed 1 beyond discretization
    error (the sound-soft bottom returns all energy)."""
    n1, n2 = top.mode_arrays()
    gam, _, _ = gamma_eta_grid(n1, n2, cfg)
    R = top.values.copy()
    R[top.W1, top.W2] -= np.exp(-1j * cfg.omega * cfg.b)
    propagating = np.abs(gam.imag) < 1e-12 * cfg.omega
    return float(np.sum((np.abs(R) ** 2 * gam.real / cfg.omega)[propagating]))


# --- binary dump -------------------------------------------------------------

_MAGIC = b"SLIF"


def save_solution(sol: ForwardSolution, path: str | Path) -> None:
    """Little-endian layout: magic 'SLIF', u32 version=1, then int64
    I, N_f, M, iterations, float64 residual, followed by C-order
    complex128 arrays spectral_interior (K,K,M+1), top (K,K), and
    top_grid (I,I).  The physical interior is re-synthesized on load."""
    K = sol.top.values.shape[0]
    N_f = (K - 1) // 2
    I = sol.top_grid.shape[0]
    M = sol.spectral_interior.shape[2] - 1
    with open(path, "wb") as fh:
        fh.write(struct.pack("<4sI", _MAGIC, 1))
        fh.write(struct.pack("<qqqq", I, N_f, M, sol.iterations))
        fh.write(struct.pack("<d", sol.residual))
        fh.write(np.ascontiguousarray(sol.spectral_interior,
                                      dtype="<c16").tobytes())
        fh.write(np.ascontiguousarray(sol.top.values, dtype="<c16").tobytes())
        fh.write(np.ascontiguousarray(sol.top_grid, dtype="<c16").tobytes())


def load_solution(path: str | Path) -> ForwardSolution:
    with open(path, "rb") as fh:
        magic, version = struct.unpack("<4sI", fh.read(8))
        if magic != _MAGIC or version != 1:
            raise ValueError(f"not a forward-solution dump: {path}")
        I, N_f, M, iterations = struct.unpack("<qqqq", fh.read(32))
        (residual,) = struct.unpack("<d", fh.read(8))
        K = 2 * N_f + 1

        def arr(shape):
            n = int(np.prod(shape))
            buf = fh.read(16 * n)
            return np.frombuffer(buf, dtype="<c16").reshape(shape).copy()

        spectral = arr((K, K, M + 1))
        top_vals = arr((K, K))
        top_grid = arr((I, I))
    top = SpectrumField(top_vals, N_f, N_f)
    spec_lead = np.transpose(spectral, (2, 0, 1))
    interior = np.stack(
        [synthesize(SpectrumField(spec_lead[j], N_f, N_f), N_f, (I, I))
         for j in range(M + 1)], axis=-1)
    return ForwardSolution(interior=interior, spectral_interior=spectral,
                           top=top, top_grid=top_grid, iterations=iterations,
                           residual=residual)
