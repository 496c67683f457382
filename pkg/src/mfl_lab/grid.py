"""Discrete calculus on flat tori.

Uniform periodic grids in one and two dimensions, centered finite
differences, flux-form weighted divergences and quadrature.  All fields are
plain numpy arrays: a scalar field has shape ``grid.shape`` and a vector
field has shape ``(grid.dim,) + grid.shape``.

Two discrete gradients coexist on purpose.  The node-centered
:func:`gradient` is second-order accurate and is the exact adjoint of
:func:`weighted_divergence` in the weighted inner product.  The staggered
:func:`face_difference` lives on cell faces (entry ``i`` sits between nodes
``i`` and ``i+1``) and is what the spectral generator and the finite-volume
fluxes are built from, so that the assembled operators have a trivial
kernel and exact discrete Gibbs states.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class PeriodicGrid:
    """Uniform discretization of the torus ``T^dim`` with period ``period``.

    Nodes along each axis are ``x_i = i * spacing`` for ``i = 0..n-1`` and
    indexing wraps modulo ``n``.
    """

    dim: int
    n: int
    period: float

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValueError(f"dim must be 1 or 2, got {self.dim}")
        if self.n < 8:
            raise ValueError(f"n must be at least 8, got {self.n}")
        if not self.period > 0:
            raise ValueError(f"period must be positive, got {self.period}")

    @property
    def spacing(self) -> float:
        return self.period / self.n

    @property
    def shape(self) -> tuple:
        return (self.n,) * self.dim

    @property
    def size(self) -> int:
        return self.n**self.dim

    @property
    def cell_volume(self) -> float:
        return self.spacing**self.dim

    @property
    def fundamental_frequency(self) -> float:
        """Angular frequency ``2*pi/period`` of the lowest nonzero mode."""
        return 2.0 * np.pi / self.period

    def axis_coords(self) -> np.ndarray:
        """Node coordinates along one axis, shape ``(n,)``."""
        return self.spacing * np.arange(self.n)

    def coords(self) -> np.ndarray:
        """Node coordinates, shape ``(dim,) + shape``."""
        x = self.axis_coords()
        if self.dim == 1:
            return x[None, :]
        xx, yy = np.meshgrid(x, x, indexing="ij")
        return np.stack([xx, yy])


def build_grid(dim: int, n: int, period: float) -> PeriodicGrid:
    """Construct a :class:`PeriodicGrid`, validating the inputs."""
    return PeriodicGrid(dim=int(dim), n=int(n), period=float(period))


def _check_scalar(grid: PeriodicGrid, f: np.ndarray, name: str = "field"):
    f = np.asarray(f, dtype=float)
    if f.shape != grid.shape:
        raise ValueError(f"{name} has shape {f.shape}, expected {grid.shape}")
    return f


def _check_vector(grid: PeriodicGrid, phi: np.ndarray, name: str = "field"):
    phi = np.asarray(phi, dtype=float)
    expected = (grid.dim,) + grid.shape
    if phi.shape != expected:
        raise ValueError(f"{name} has shape {phi.shape}, expected {expected}")
    return phi


def gradient(grid: PeriodicGrid, f: np.ndarray) -> np.ndarray:
    """Node-centered periodic gradient.

    Per axis, ``(df)_i = (f_{i+1} - f_{i-1}) / (2 h)`` with indices mod
    ``n``; second-order accurate on smooth fields.
    """
    f = _check_scalar(grid, f)
    h = grid.spacing
    out = np.empty((grid.dim,) + grid.shape)
    for a in range(grid.dim):
        out[a] = (np.roll(f, -1, axis=a) - np.roll(f, 1, axis=a)) / (2.0 * h)
    return out


def face_difference(grid: PeriodicGrid, f: np.ndarray) -> np.ndarray:
    """Staggered two-point difference ``(f_{i+1} - f_i) / h`` on faces.

    Component ``a`` at multi-index ``i`` is the difference across the face
    between node ``i`` and node ``i+1`` along axis ``a``.
    """
    f = _check_scalar(grid, f)
    h = grid.spacing
    out = np.empty((grid.dim,) + grid.shape)
    for a in range(grid.dim):
        out[a] = (np.roll(f, -1, axis=a) - f) / h
    return out


def face_average(grid: PeriodicGrid, f: np.ndarray) -> np.ndarray:
    """Arithmetic node-to-face average, same staggering as face_difference."""
    f = _check_scalar(grid, f)
    out = np.empty((grid.dim,) + grid.shape)
    for a in range(grid.dim):
        out[a] = 0.5 * (f + np.roll(f, -1, axis=a))
    return out


def weighted_divergence(grid: PeriodicGrid, nu: np.ndarray, phi: np.ndarray) -> np.ndarray:
    """Flux-form divergence ``(1/nu) div(nu * phi)`` at nodes.

    Per axis the face flux is ``F_{i+1/2} = (nu_i phi_i + nu_{i+1}
    phi_{i+1}) / 2`` and the output at node ``i`` is ``(F_{i+1/2} -
    F_{i-1/2}) / (h nu_i)``.  The construction telescopes, so the output
    integrates to zero against ``nu``, and ``-weighted_divergence`` is the
    exact adjoint of :func:`gradient` between the weighted inner products.

    Note the sign: this returns ``+ (1/nu) div(nu phi)``; the operator
    usually written ``grad*`` is its negation.
    """
    nu = _check_scalar(grid, nu, "nu")
    phi = _check_vector(grid, phi, "phi")
    if np.any(nu <= 0):
        raise ValueError("nu must be strictly positive on every node")
    h = grid.spacing
    out = np.zeros(grid.shape)
    for a in range(grid.dim):
        m = nu * phi[a]
        flux = 0.5 * (m + np.roll(m, -1, axis=a))
        out += (flux - np.roll(flux, 1, axis=a)) / h
    return out / nu


def integrate(grid: PeriodicGrid, f: np.ndarray, weight: np.ndarray | None = None) -> float:
    """Quadrature of ``f`` over the torus.

    With ``weight=None`` this is the Lebesgue integral ``sum(f) * h^dim``;
    otherwise ``sum(f * weight) * h^dim``, e.g. the expectation of ``f``
    under a density.
    """
    f = _check_scalar(grid, f)
    if weight is None:
        return float(np.sum(f) * grid.cell_volume)
    weight = _check_scalar(grid, weight, "weight")
    return float(np.sum(f * weight) * grid.cell_volume)


def inner(grid: PeriodicGrid, f: np.ndarray, g: np.ndarray, weight: np.ndarray) -> float:
    """Weighted inner product of scalar or vector fields.

    Vector fields are contracted over their component axis first.
    """
    f = np.asarray(f, dtype=float)
    g = np.asarray(g, dtype=float)
    if f.shape != g.shape:
        raise ValueError(f"shape mismatch: {f.shape} vs {g.shape}")
    if f.shape == grid.shape:
        prod = f * g
    elif f.shape == (grid.dim,) + grid.shape:
        prod = np.sum(f * g, axis=0)
    else:
        raise ValueError(f"unexpected field shape {f.shape}")
    return integrate(grid, prod, weight)
