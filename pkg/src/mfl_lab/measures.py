"""Probability densities on periodic grids and the divergences between them.

A :class:`Density` stores strictly positive node values that integrate to
one under the grid quadrature.  Divergences (chi-squared, KL) and the exact
circular 2-Wasserstein distance are the error metrics used throughout the
rest of the package.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import PeriodicGrid, _check_scalar, integrate

# Storage floor keeping log-based divergences finite along trajectories
# where upwinded densities may underflow.
POSITIVITY_FLOOR = 1e-300

MASS_TOL = 1e-10


@dataclass(frozen=True)
class Density:
    """Nonnegative grid function integrating to one.

    Instances are immutable; construct them with :func:`normalize`,
    :func:`uniform_density` or :func:`perturb` rather than by hand.
    """

    grid: PeriodicGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != self.grid.shape:
            raise ValueError(f"density shape {v.shape} != grid shape {self.grid.shape}")
        if np.any(v < POSITIVITY_FLOOR):
            raise ValueError("density values must be >= the positivity floor")
        mass = float(np.sum(v) * self.grid.cell_volume)
        if abs(mass - 1.0) > MASS_TOL:
            raise ValueError(f"density mass {mass} deviates from 1 beyond {MASS_TOL}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def mass(self) -> float:
        return float(np.sum(self.values) * self.grid.cell_volume)


def _same_grid(mu: Density, nu: Density):
    if mu.grid != nu.grid:
        raise ValueError("densities live on different grids")


def normalize(grid: PeriodicGrid, raw: np.ndarray) -> Density:
    """Clamp a nonnegative field at the positivity floor and rescale to mass one."""
    raw = _check_scalar(grid, raw, "raw")
    if not np.any(raw > 0):
        raise ValueError("cannot normalize a field with no positive values")
    clipped = np.clip(raw, POSITIVITY_FLOOR, None)
    mass = np.sum(clipped) * grid.cell_volume
    return Density(grid, clipped / mass)


def uniform_density(grid: PeriodicGrid) -> Density:
    return Density(grid, np.full(grid.shape, 1.0 / grid.period**grid.dim))


def chi_squared(mu: Density, nu: Density) -> float:
    """chi^2 divergence ``int (mu/nu - 1)^2 dnu``; zero iff the densities agree."""
    _same_grid(mu, nu)
    r = mu.values / nu.values - 1.0
    return float(np.sum(r * r * nu.values) * mu.grid.cell_volume)


def kl(mu: Density, nu: Density) -> float:
    """Relative entropy ``int log(mu/nu) dmu``; dominated by chi_squared."""
    _same_grid(mu, nu)
    return float(np.sum(np.log(mu.values / nu.values) * mu.values) * mu.grid.cell_volume)


def entropy(mu: Density) -> float:
    """Negative differential entropy ``int log(mu) dmu``."""
    return float(np.sum(np.log(mu.values) * mu.values) * mu.grid.cell_volume)


@dataclass(frozen=True)
class FourierMode:
    """One cosine mode ``amplitude * cos(freq * <wavevector, x> + phase)``.

    Wavevectors are integer multiples of the grid's fundamental frequency;
    the zero mode is rejected so mode sums have zero Lebesgue mean.
    """

    wavevector: tuple
    amplitude: float
    phase: float = 0.0

    def __post_init__(self):
        w = tuple(int(c) for c in np.atleast_1d(self.wavevector))
        if all(c == 0 for c in w):
            raise ValueError("zero mode is excluded from perturbations")
        object.__setattr__(self, "wavevector", w)


def fourier_field(grid: PeriodicGrid, modes) -> np.ndarray:
    """Evaluate a sum of cosine modes on the grid nodes."""
    x = grid.coords()
    out = np.zeros(grid.shape)
    for m in modes:
        w = np.asarray(m.wavevector, dtype=float)
        if w.shape != (grid.dim,):
            raise ValueError(f"wavevector {m.wavevector} does not match dim {grid.dim}")
        phase_field = grid.fundamental_frequency * np.tensordot(w, x, axes=(0, 0))
        out += m.amplitude * np.cos(phase_field + m.phase)
    return out


def perturb(nu: Density, modes, scale: float) -> Density:
    """Multiplicative Fourier perturbation ``mu = (1 + scale * f) nu``.

    ``f`` is the zero-mean mode sum from :func:`fourier_field`; the result
    is rescaled by a uniform factor so it stays in the probability simplex.
    Requires ``scale * max|f| < 1`` so the perturbed density stays positive.
    """
    f = fourier_field(nu.grid, modes)
    if scale != 0.0 and np.max(np.abs(f)) * abs(scale) >= 1.0:
        raise ValueError("perturbation amplitude violates positivity: need scale*max|f| < 1")
    raw = (1.0 + scale * f) * nu.values
    return normalize(nu.grid, raw)


def perturb_along(nu: Density, direction: np.ndarray, scale: float) -> Density:
    """Like :func:`perturb` but along an arbitrary mean-zero node field."""
    direction = _check_scalar(nu.grid, direction, "direction")
    if scale != 0.0 and np.max(np.abs(direction)) * abs(scale) >= 1.0:
        raise ValueError("perturbation amplitude violates positivity: need scale*max|f| < 1")
    return normalize(nu.grid, (1.0 + scale * direction) * nu.values)


def _quantile_cost(p: np.ndarray, q: np.ndarray, x: np.ndarray) -> float:
    """Exact quadratic quantile-coupling cost of two atomic laws on the line.

    Atoms sit at positions ``x`` with masses ``p`` and ``q`` (both summing
    to one); the cost is ``int_0^1 (Q_p(t) - Q_q(t))^2 dt`` computed by
    merging the two cumulative-mass ladders.
    """
    cp = np.cumsum(p)
    cq = np.cumsum(q)
    t = np.union1d(cp, cq)
    seg = np.diff(np.concatenate(([0.0], t)))
    mid = t - 0.5 * seg
    ip = np.minimum(np.searchsorted(cp, mid), len(x) - 1)
    iq = np.minimum(np.searchsorted(cq, mid), len(x) - 1)
    d = x[ip] - x[iq]
    return float(np.sum(seg * d * d))


def _all_cut_costs(p: np.ndarray, q: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Quantile-coupling cost of every cyclic cut, evaluated in one batch.

    Row ``c`` reproduces ``_quantile_cost(roll(p, -c), roll(q, -c), x)``:
    the cut ladders are sliding windows of the wrapped cumulative sums, and
    the merged-segment bookkeeping is done with a batched stable argsort.
    """
    n = len(p)
    cp = np.cumsum(p)
    cq = np.cumsum(q)
    wp = np.lib.stride_tricks.sliding_window_view(np.concatenate([cp, 1.0 + cp[:-1]]), n)[:n]
    wq = np.lib.stride_tricks.sliding_window_view(np.concatenate([cq, 1.0 + cq[:-1]]), n)[:n]
    ladders = np.concatenate(
        [wp - np.concatenate(([0.0], cp[:-1]))[:, None],
         wq - np.concatenate(([0.0], cq[:-1]))[:, None]], axis=1)
    order = np.argsort(ladders, axis=1, kind="stable")
    merged = np.take_along_axis(ladders, order, axis=1)
    from_p = order < n
    cs = np.cumsum(from_p, axis=1)
    ip = np.minimum(cs - from_p, n - 1)
    iq = np.minimum(np.arange(2 * n)[None, :] - cs + from_p, n - 1)
    seg = np.diff(merged, axis=1, prepend=0.0)
    d = x[ip] - x[iq]
    return np.sum(seg * d * d, axis=1)


def w2_circle(mu: Density, nu: Density) -> float:
    """Circular 2-Wasserstein distance between two grid densities (1D only).

    Each node carries mass ``values * h``.  For every cyclic cut position
    the circle is unrolled into a line starting at that node and the exact
    quantile-coupling cost of the two unrolled laws is evaluated; the
    distance is the square root of the minimum over all ``n`` cuts.
    """
    _same_grid(mu, nu)
    g = mu.grid
    if g.dim != 1:
        raise ValueError("w2_circle is defined for one-dimensional grids only")
    h = g.spacing
    p = mu.values * h
    q = nu.values * h
    p = p / p.sum()
    q = q / q.sum()
    x = h * np.arange(g.n)
    best = float(np.min(_all_cut_costs(p, q, x)))
    return float(np.sqrt(max(best, 0.0)))
