"""Generators, spectral gaps, interaction operators and spectral diagnostics.

The central object is the weighted elliptic generator

    L f = -(1/nu) div(nu grad f),

assembled from staggered two-point face differences so that it is exactly
similar to a symmetric matrix, has kernel equal to the constants, and its
smallest nonzero eigenvalue is the Poincare constant of ``nu``.  On top of
the eigendecomposition this module provides the weighted negative-Sobolev
norm, integral operators built from truncated-Fourier kernels, the least
admissible convexity defect of a kernel, cross-derivative bounds, and the
spectral abscissa of the drift-linearization.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import scipy.linalg

from .grid import PeriodicGrid, _check_scalar, gradient, integrate, weighted_divergence
from .measures import Density

DENSE_SOLVE_BUDGET = 4096


# ---------------------------------------------------------------------------
# generator assembly and eigendecomposition


class Generator:
    """Dense discretization of ``L = -(1/nu) div(nu grad .)`` on a grid.

    ``matrix`` acts on flattened node vectors; ``conjugated`` is the
    symmetric similarity transform ``D^{1/2} L D^{-1/2}`` with
    ``D = diag(nu)``.
    """

    def __init__(self, nu: Density):
        self.density = nu
        grid = nu.grid
        size = grid.size
        h = grid.spacing
        nuf = nu.values.ravel()
        idx = np.arange(size).reshape(grid.shape)
        ar = np.arange(size)
        B = np.zeros((size, size))
        for a in range(grid.dim):
            nb = np.roll(idx, -1, axis=a).ravel()
            w = 0.5 * (nuf + nuf[nb]) / h**2
            B[ar, ar] += w
            B[nb, nb] += w
            B[ar, nb] -= w
            B[nb, ar] -= w
        self._form = B
        self.matrix = B / nuf[:, None]
        inv_sqrt = 1.0 / np.sqrt(nuf)
        self.conjugated = B * np.outer(inv_sqrt, inv_sqrt)

    def apply(self, f: np.ndarray) -> np.ndarray:
        """Apply the generator to a node field without flattening."""
        grid = self.density.grid
        f = _check_scalar(grid, f)
        nu = self.density.values
        h = grid.spacing
        out = np.zeros(grid.shape)
        for a in range(grid.dim):
            w_up = 0.5 * (nu + np.roll(nu, -1, axis=a))
            w_dn = np.roll(w_up, 1, axis=a)
            out += (w_up * (f - np.roll(f, -1, axis=a)) + w_dn * (f - np.roll(f, 1, axis=a))) / h**2
        return out / nu


def assemble_generator(nu: Density) -> Generator:
    return Generator(nu)


@dataclass(frozen=True)
class SpectralData:
    """Eigendecomposition of the generator of a reference density.

    ``eigenvalues`` are ascending with ``eigenvalues[0] ~ 0``; ``modes[k]``
    is the flattened k-th eigenfunction, stored L2(nu)-orthonormal.  The
    Poincare constant is the spectral gap ``eigenvalues[1]``.
    """

    density: Density
    eigenvalues: np.ndarray
    modes: np.ndarray

    @property
    def poincare(self) -> float:
        return float(self.eigenvalues[1])

    def eigenfunction(self, k: int) -> np.ndarray:
        return self.modes[k].reshape(self.density.grid.shape)

    def coefficients(self, f: np.ndarray) -> np.ndarray:
        """Expansion coefficients ``<g_k, f>_nu`` of a node field."""
        grid = self.density.grid
        f = _check_scalar(grid, f)
        w = self.density.values.ravel() * grid.cell_volume
        return self.modes @ (f.ravel() * w)


def spectrum(nu: Density) -> SpectralData:
    """Full symmetric eigendecomposition of the generator of ``nu``.

    Solved in the sqrt(nu)-conjugated frame and mapped back, so the
    returned eigenfunctions are orthonormal in L2(nu) to round-off.
    """
    grid = nu.grid
    if grid.size > DENSE_SOLVE_BUDGET:
        raise ValueError(f"grid size {grid.size} exceeds dense solve budget {DENSE_SOLVE_BUDGET}")
    gen = Generator(nu)
    vals, vecs = scipy.linalg.eigh(gen.conjugated)
    scale = np.sqrt(nu.values.ravel()) * np.sqrt(grid.cell_volume)
    modes = (vecs / scale[:, None]).T
    # deterministic sign: largest-magnitude entry of each mode is positive
    for k in range(modes.shape[0]):
        j = int(np.argmax(np.abs(modes[k])))
        if modes[k, j] < 0:
            modes[k] = -modes[k]
    modes.setflags(write=False)
    vals.setflags(write=False)
    return SpectralData(density=nu, eigenvalues=vals, modes=modes)


def poincare_constant(s: SpectralData) -> float:
    """Spectral gap of the generator: the optimal Poincare constant."""
    return s.poincare


def project_mean_zero(f: np.ndarray, nu: Density) -> np.ndarray:
    """Remove the nu-mean: ``f - int f dnu``."""
    f = _check_scalar(nu.grid, f)
    return f - integrate(nu.grid, f, nu.values)


def h_minus1_norm_sq(f: np.ndarray, s: SpectralData) -> float:
    """Squared weighted negative-Sobolev norm ``<f, L^{-1} f>_nu``.

    The field is projected onto mean zero first; the norm is the spectral
    sum ``sum_k>=1 <f, g_k>^2 / lambda_k``.
    """
    f0 = project_mean_zero(f, s.density)
    c = s.coefficients(f0)[1:]
    return float(np.sum(c * c / s.eigenvalues[1:]))


def apply_generator_inverse(f: np.ndarray, s: SpectralData) -> np.ndarray:
    """Solve ``L u = f`` on the mean-zero subspace via the eigenbasis."""
    f0 = project_mean_zero(f, s.density)
    c = s.coefficients(f0)
    u = (c[1:] / s.eigenvalues[1:]) @ s.modes[1:]
    return u.reshape(s.density.grid.shape)


def dual_operator_spectrum(nu: Density) -> np.ndarray:
    """Eigenvalues of ``grad grad*`` acting on staggered vector fields.

    ``grad*`` is the weighted adjoint of the face-difference gradient, so
    this operator is the partner of the node generator ``L = grad* grad``:
    their nonzero spectra coincide.  Used to check that the smallest
    nonzero eigenvalue here equals the Poincare constant.
    """
    grid = nu.grid
    if grid.size > DENSE_SOLVE_BUDGET:
        raise ValueError(f"grid size {grid.size} exceeds dense solve budget {DENSE_SOLVE_BUDGET}")
    size = grid.size
    h = grid.spacing
    nuf = nu.values.ravel()
    idx = np.arange(size).reshape(grid.shape)
    nfaces = grid.dim * size
    D = np.zeros((nfaces, size))
    w_face = np.empty(nfaces)
    for a in range(grid.dim):
        nb = np.roll(idx, -1, axis=a).ravel()
        rows = a * size + np.arange(size)
        D[rows, nb] += 1.0 / h
        D[rows, np.arange(size)] -= 1.0 / h
        w_face[rows] = 0.5 * (nuf + nuf[nb])
    # grad grad* = D W_N^{-1} D^T W_F, symmetrized by conjugation with W_F^{1/2}
    sqrt_wf = np.sqrt(w_face)
    core = (D / nuf[None, :]) @ D.T
    sym = core * np.outer(sqrt_wf, sqrt_wf)
    return scipy.linalg.eigvalsh(sym)


# ---------------------------------------------------------------------------
# truncated-Fourier interaction kernels


@dataclass(frozen=True)
class KernelMode:
    """One mode ``amplitude * cos(wx <p,x> + wy <q,y> + phase)``.

    ``p`` and ``q`` are integer wavevectors in units of the fundamental
    frequency of the x- and y-grids respectively.
    """

    p: tuple
    q: tuple
    amplitude: float
    phase: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "p", tuple(int(c) for c in np.atleast_1d(self.p)))
        object.__setattr__(self, "q", tuple(int(c) for c in np.atleast_1d(self.q)))


def _eval_modes(modes, grid_x: PeriodicGrid, grid_y: PeriodicGrid,
                xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Evaluate a mode sum on the product of two coordinate lists.

    ``xs`` has shape ``(dim_x, Nx)`` and ``ys`` ``(dim_y, Ny)``; returns the
    ``(Nx, Ny)`` sample matrix.
    """
    out = np.zeros((xs.shape[1], ys.shape[1]))
    wx = grid_x.fundamental_frequency
    wy = grid_y.fundamental_frequency
    for m in modes:
        px = wx * np.asarray(m.p, dtype=float)
        qy = wy * np.asarray(m.q, dtype=float)
        if px.shape != (grid_x.dim,) or qy.shape != (grid_y.dim,):
            raise ValueError(f"mode wavevectors {m.p}, {m.q} do not match grid dimensions")
        ax = px @ xs
        ay = qy @ ys
        out += m.amplitude * np.cos(ax[:, None] + ay[None, :] + m.phase)
    return out


def _node_list(grid: PeriodicGrid) -> np.ndarray:
    return grid.coords().reshape(grid.dim, grid.size)


class Kernel:
    """Two-point interaction ``k(x, y)`` as Fourier modes plus samples.

    ``matrix[i, j] = k(x_i, y_j)`` on the node lists of the two grids.  The
    ``symmetric`` flag asserts the sampled matrix equals its transpose
    within 1e-12 (requires both grids equal); it is checked at build time.
    """

    def __init__(self, grid_x: PeriodicGrid, grid_y: PeriodicGrid,
                 modes, matrix: np.ndarray, symmetric: bool):
        self.grid_x = grid_x
        self.grid_y = grid_y
        self.modes = tuple(modes)
        matrix = np.asarray(matrix, dtype=float)
        if matrix.shape != (grid_x.size, grid_y.size):
            raise ValueError(f"sample matrix has shape {matrix.shape}, expected "
                             f"{(grid_x.size, grid_y.size)}")
        if symmetric:
            if grid_x != grid_y:
                raise ValueError("symmetric kernel requires identical grids")
            if np.max(np.abs(matrix - matrix.T)) > 1e-12:
                raise ValueError("kernel marked symmetric but samples are not")
        matrix.setflags(write=False)
        self.matrix = matrix
        self.symmetric = bool(symmetric)

    @classmethod
    def from_modes(cls, modes, grid_x: PeriodicGrid, grid_y: PeriodicGrid | None = None,
                   symmetric: bool | None = None) -> "Kernel":
        grid_y = grid_x if grid_y is None else grid_y
        modes = tuple(modes)
        matrix = _eval_modes(modes, grid_x, grid_y, _node_list(grid_x), _node_list(grid_y))
        if symmetric is None:
            symmetric = (grid_x == grid_y
                         and np.max(np.abs(matrix - matrix.T), initial=0.0) <= 1e-12)
        return cls(grid_x, grid_y, modes, matrix, symmetric)

    @classmethod
    def zero(cls, grid_x: PeriodicGrid, grid_y: PeriodicGrid | None = None) -> "Kernel":
        grid_y = grid_x if grid_y is None else grid_y
        return cls(grid_x, grid_y, (), np.zeros((grid_x.size, grid_y.size)), grid_x == grid_y)

    def transposed(self) -> "Kernel":
        modes = tuple(KernelMode(p=m.q, q=m.p, amplitude=m.amplitude, phase=m.phase)
                      for m in self.modes)
        return Kernel(self.grid_y, self.grid_x, modes, self.matrix.T.copy(), self.symmetric)

    def scaled(self, c: float) -> "Kernel":
        modes = tuple(KernelMode(p=m.p, q=m.q, amplitude=c * m.amplitude, phase=m.phase)
                      for m in self.modes)
        return Kernel(self.grid_x, self.grid_y, modes, c * self.matrix, self.symmetric)

    def sample(self, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
        """Evaluate the mode sum at arbitrary coordinate lists."""
        return _eval_modes(self.modes, self.grid_x, self.grid_y, xs, ys)


def apply_K(kern: Kernel, f: np.ndarray, nu: Density) -> np.ndarray:
    """Integral operator ``(K f)(x) = int k(x, y) f(y) dnu(y)``.

    ``f`` and ``nu`` live on the kernel's y-grid; the result lives on the
    x-grid.
    """
    if nu.grid != kern.grid_y:
        raise ValueError("density grid does not match the kernel's y-grid")
    f = _check_scalar(kern.grid_y, f)
    w = nu.values.ravel() * kern.grid_y.cell_volume
    return (kern.matrix @ (f.ravel() * w)).reshape(kern.grid_x.shape)


def interaction_potential(kern: Kernel, mu: Density) -> np.ndarray:
    """Lebesgue-weighted kernel integral ``x -> int k(x, y) dmu(y)``."""
    if mu.grid != kern.grid_y:
        raise ValueError("density grid does not match the kernel's y-grid")
    w = mu.values.ravel() * kern.grid_y.cell_volume
    return (kern.matrix @ w).reshape(kern.grid_x.shape)


def _mean_zero_basis(weights: np.ndarray) -> np.ndarray:
    """Orthonormal basis of the complement of sqrt(weights), via Householder."""
    u = np.sqrt(weights)
    u = u / np.linalg.norm(u)
    v = u.copy()
    v[0] -= 1.0
    norm = np.linalg.norm(v)
    if norm < 1e-14:
        return np.eye(len(u))[:, 1:]
    v /= norm
    H = np.eye(len(u)) - 2.0 * np.outer(v, v)
    return H[:, 1:]


def _kernel_quadratic_form(kern: Kernel, nu: Density) -> tuple:
    """Symmetric part of K in the conjugated frame plus the mean-zero basis."""
    w = nu.values.ravel() * nu.grid.cell_volume
    sw = np.sqrt(w)
    sym = 0.5 * (kern.matrix + kern.matrix.T)
    C = sym * np.outer(sw, sw)
    Q = _mean_zero_basis(w)
    return C, Q, sw


def tau0_estimate(kern: Kernel, s: SpectralData) -> float:
    """Least admissible convexity defect of a symmetric kernel.

    Returns ``max(0, -lambda_min)`` where ``lambda_min`` is the smallest
    eigenvalue of the kernel's quadratic form on the mean-zero subspace of
    L2(nu).  Zero means the kernel is conditionally positive semi-definite
    there; the result is never negative.
    """
    if not kern.symmetric:
        raise ValueError("tau0_estimate requires a symmetric kernel")
    if kern.grid_x != s.density.grid:
        raise ValueError("kernel and spectral data live on different grids")
    C, Q, _ = _kernel_quadratic_form(kern, s.density)
    lam = scipy.linalg.eigvalsh(Q.T @ C @ Q)
    return float(max(0.0, -lam[0]))


def most_negative_direction(kern: Kernel, nu: Density) -> tuple:
    """Smallest mean-zero eigenvalue of a symmetric kernel and its direction.

    Returns ``(lambda_min, f)`` with ``f`` an L2(nu)-normalized mean-zero
    node field achieving the minimum of ``<f, K f>_nu``.
    """
    if not kern.symmetric:
        raise ValueError("most_negative_direction requires a symmetric kernel")
    C, Q, sw = _kernel_quadratic_form(kern, nu)
    lam, vec = scipy.linalg.eigh(Q.T @ C @ Q)
    f = (Q @ vec[:, 0]) / sw
    j = int(np.argmax(np.abs(f)))
    if f[j] < 0:
        f = -f
    return float(lam[0]), f.reshape(nu.grid.shape)


def m11(kern: Kernel, sample_stride: int | None = None) -> float:
    """Uniform bound on the cross-derivative ``sup ||grad_x grad_y k||_op``.

    Conservative maximum of the analytic per-mode triangle bound
    ``sum |a_j| |p_j| |q_j|`` (in physical frequencies) and a sampled
    central-difference sweep of the cross-Hessian over node pairs.
    """
    wx = kern.grid_x.fundamental_frequency
    wy = kern.grid_y.fundamental_frequency
    analytic = 0.0
    for m in kern.modes:
        analytic += abs(m.amplitude) * np.linalg.norm(wx * np.asarray(m.p, float)) \
            * np.linalg.norm(wy * np.asarray(m.q, float))
    if not kern.modes:
        return 0.0

    xs = _node_list(kern.grid_x)
    ys = _node_list(kern.grid_y)
    if sample_stride is None:
        sample_stride = 1
        while (xs.shape[1] // sample_stride) * (ys.shape[1] // sample_stride) > 300_000:
            sample_stride *= 2
    xs = xs[:, ::sample_stride]
    ys = ys[:, ::sample_stride]
    hx = kern.grid_x.spacing
    hy = kern.grid_y.spacing
    dimx, dimy = kern.grid_x.dim, kern.grid_y.dim
    cross = np.empty((xs.shape[1], ys.shape[1], dimx, dimy))
    for a in range(dimx):
        xp = xs.copy(); xp[a] += hx
        xm = xs.copy(); xm[a] -= hx
        for b in range(dimy):
            yp = ys.copy(); yp[b] += hy
            ym = ys.copy(); ym[b] -= hy
            cross[:, :, a, b] = (kern.sample(xp, yp) - kern.sample(xp, ym)
                                 - kern.sample(xm, yp) + kern.sample(xm, ym)) / (4 * hx * hy)
    if dimx == 1 and dimy == 1:
        sampled = float(np.max(np.abs(cross)))
    else:
        sv = np.linalg.svd(cross.reshape(-1, dimx, dimy), compute_uv=False)
        sampled = float(np.max(sv))
    return max(analytic, sampled)


class SpectralAbscissa(NamedTuple):
    """Minimum real part of ``tau L + L K`` plus the symmetric cross-check.

    ``hessian_min`` is the smallest eigenvalue of the symmetric form
    ``tau grad grad* + grad K grad*`` on gradient fields, i.e. the bottom
    of the second-order expansion of the free energy at the equilibrium.
    """

    sigma: float
    hessian_min: float


def spectral_abscissa(tau: float, s: SpectralData, kern: Kernel) -> SpectralAbscissa:
    """Spectral abscissa of the linearized drift operator.

    Builds ``tau L + L K`` restricted to the full mean-zero eigenbasis of
    the generator, computes all complex eigenvalues, and returns the
    minimum real part together with the symmetric-form cross-check.
    """
    nu = s.density
    if kern.grid_x != nu.grid or kern.grid_y != nu.grid:
        raise ValueError("spectral_abscissa requires kernel and density on one grid")
    if nu.grid.size > DENSE_SOLVE_BUDGET:
        raise ValueError("grid size exceeds dense solve budget")
    w = nu.values.ravel() * nu.grid.cell_volume
    G = s.modes[1:]
    lam = s.eigenvalues[1:]
    KG = kern.matrix @ (G.T * w[:, None])
    B = G @ (w[:, None] * KG)
    A = np.diag(tau * lam) + lam[:, None] * B
    eig = np.linalg.eigvals(A)
    sigma = float(np.min(eig.real))
    Bsym = 0.5 * (B + B.T)
    sq = np.sqrt(lam)
    M = (tau * np.eye(len(lam)) + Bsym) * np.outer(sq, sq)
    hess_min = float(scipy.linalg.eigvalsh(M)[0])
    return SpectralAbscissa(sigma=sigma, hessian_min=hess_min)


def gradK_bound_check(kern: Kernel, s: SpectralData, f: np.ndarray) -> tuple:
    """Evaluate both sides of ``sup ||grad K f|| <= M11 ||f||_{H^-1}``.

    Returns ``(lhs, rhs)``; the inequality is the assertion, up to a
    discretization tolerance chosen by the caller.
    """
    nu = s.density
    f0 = project_mean_zero(f, nu)
    Kf = apply_K(kern, f0, nu)
    g = gradient(kern.grid_x, Kf)
    lhs = float(np.max(np.sqrt(np.sum(g * g, axis=0))))
    rhs = m11(kern) * np.sqrt(h_minus1_norm_sq(f0, s))
    return lhs, float(rhs)


def _hessian_of(grid: PeriodicGrid, V: np.ndarray) -> np.ndarray:
    """Second-derivative matrix of a node potential, shape (dim, dim, *shape)."""
    h = grid.spacing
    out = np.empty((grid.dim, grid.dim) + grid.shape)
    for a in range(grid.dim):
        out[a, a] = (np.roll(V, -1, axis=a) - 2.0 * V + np.roll(V, 1, axis=a)) / h**2
    if grid.dim == 2:
        ga = gradient(grid, V)
        cross = gradient(grid, ga[0])[1]
        out[0, 1] = cross
        out[1, 0] = cross
    return out


def hessian_identity_residual(phi: np.ndarray, nu: Density, V: np.ndarray) -> float:
    """Relative defect between the two quadratures of the curvature form.

    Compares ``int [trace((grad phi)^2) + phi^T hess(V) phi] dnu`` with
    ``int (grad* phi)^2 dnu`` for ``nu`` proportional to ``exp(-V)``; the
    two agree in the continuum, so the residual measures discretization
    error and decays at second order.
    """
    grid = nu.grid
    V = _check_scalar(grid, V, "V")
    phi = np.asarray(phi, dtype=float)
    if phi.shape != (grid.dim,) + grid.shape:
        raise ValueError("phi must be a vector field on the density's grid")
    mismatch = gradient(grid, np.log(nu.values)) + gradient(grid, V)
    if np.max(np.abs(mismatch)) > 1e-6:
        raise ValueError("V is not the potential of nu: grad log nu + grad V exceeds 1e-6")

    jac = np.empty((grid.dim, grid.dim) + grid.shape)
    for b in range(grid.dim):
        jac[:, b] = gradient(grid, phi[b])
    trace_sq = np.zeros(grid.shape)
    for a in range(grid.dim):
        for b in range(grid.dim):
            trace_sq += jac[a, b] * jac[b, a]
    hessV = _hessian_of(grid, V)
    quad = np.einsum("ab...,a...,b...->...", hessV, phi, phi)
    A = integrate(grid, trace_sq + quad, nu.values)
    div = weighted_divergence(grid, nu.values, phi)
    B = integrate(grid, div * div, nu.values)
    return float(abs(A - B) / max(abs(A), abs(B), 1e-14))
