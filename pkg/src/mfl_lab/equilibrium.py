"""Stationary measures and equilibrium tuples via damped fixed-point iteration.

A :class:`SystemSpec` describes one of three diffusive systems on tori: a
single-species flow with a symmetric interaction kernel, a two-species
descent-ascent flow driven by a payoff kernel, or a general table-coupled
multi-species flow.  Stationary states solve the self-consistency condition
``potential_I + tau log nu_I = const`` per species, computed here by damped
proximal-Gibbs iteration.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import PeriodicGrid, _check_scalar
from .measures import Density, chi_squared, fourier_field, normalize, uniform_density
from .spectral import Kernel, interaction_potential

MFLD = "mfld"
MFLDA = "mflda"
NSPECIES = "nspecies"


def _as_potential(grid: PeriodicGrid, pot) -> np.ndarray | None:
    """Accept a node array, a list of Fourier modes, or None."""
    if pot is None:
        return None
    if isinstance(pot, np.ndarray):
        return _check_scalar(grid, pot, "potential")
    return fourier_field(grid, pot)


@dataclass(frozen=True)
class SystemSpec:
    """One diffusive mean-field system: grids, temperature, couplings.

    ``kernels`` is the canonical N x N coupling table: entry (I, J) maps a
    J-species density to the I-species potential contribution
    ``z -> int k_IJ(z, w) dmu_J(w)``.  For the descent-ascent variant the
    ascent sign is already folded into the table, and ``gamma`` is the
    relative timescale of the second species.
    """

    variant: str
    tau: float
    grids: tuple
    potentials: tuple
    kernels: tuple
    gamma: float = 1.0

    def __post_init__(self):
        if self.variant not in (MFLD, MFLDA, NSPECIES):
            raise ValueError(f"unknown variant {self.variant!r}")
        if not self.tau > 0:
            raise ValueError("tau must be positive")
        if self.gamma < 0:
            raise ValueError("gamma must be nonnegative")
        n = len(self.grids)
        if self.variant == MFLD and n != 1:
            raise ValueError("single-species system needs exactly one grid")
        if self.variant == MFLDA and n != 2:
            raise ValueError("descent-ascent system needs exactly two grids")
        if len(self.potentials) != n or len(self.kernels) != n:
            raise ValueError("potentials and kernel table must have one row per species")
        for I in range(n):
            if len(self.kernels[I]) != n:
                raise ValueError("kernel table must be square")
            for J in range(n):
                k = self.kernels[I][J]
                if k is None:
                    continue
                if k.grid_x != self.grids[I] or k.grid_y != self.grids[J]:
                    raise ValueError(f"kernel ({I},{J}) grids do not match the species grids")

    @property
    def n_species(self) -> int:
        return len(self.grids)

    def stationarity_potentials(self, mus) -> list:
        """Effective potential of each species given the current tuple."""
        pots = []
        for I in range(self.n_species):
            p = np.zeros(self.grids[I].shape)
            if self.potentials[I] is not None:
                p = p + self.potentials[I]
            for J in range(self.n_species):
                k = self.kernels[I][J]
                if k is not None:
                    p = p + interaction_potential(k, mus[J])
            pots.append(p)
        return pots


def mfld_system(grid: PeriodicGrid, tau: float, potential=None,
                kernel: Kernel | None = None) -> SystemSpec:
    """Single-species gradient flow; the kernel must be symmetric."""
    if kernel is None:
        kernel = Kernel.zero(grid)
    if not kernel.symmetric:
        raise ValueError("single-species flow requires a symmetric kernel")
    return SystemSpec(variant=MFLD, tau=float(tau), grids=(grid,),
                      potentials=(_as_potential(grid, potential),),
                      kernels=((kernel,),))


def mflda_system(grid_x: PeriodicGrid, grid_y: PeriodicGrid, tau: float,
                 payoff: Kernel | None = None, gamma: float = 1.0,
                 potential_x=None, potential_y=None) -> SystemSpec:
    """Two-species descent-ascent flow for a payoff kernel ``k(x, y)``.

    The first species descends on ``int k(., y) dmu_y``, the second ascends
    on ``int k(x, .) dmu_x``.  Optional external potentials are plain
    descent potentials for their own species (the ascent sign applies to
    the payoff coupling only), matching the effect of adding a separable
    part ``V(x) - W(y)`` to the payoff.
    """
    if payoff is None:
        payoff = Kernel.zero(grid_x, grid_y)
    table = ((None, payoff), (payoff.transposed().scaled(-1.0), None))
    return SystemSpec(variant=MFLDA, tau=float(tau), grids=(grid_x, grid_y),
                      potentials=(_as_potential(grid_x, potential_x),
                                  _as_potential(grid_y, potential_y)),
                      kernels=table, gamma=float(gamma))


def nspecies_system(grids, tau: float, kernels, potentials=None) -> SystemSpec:
    """General multi-species flow with an N x N kernel table."""
    grids = tuple(grids)
    n = len(grids)
    if potentials is None:
        potentials = (None,) * n
    pots = tuple(_as_potential(grids[i], p) for i, p in enumerate(potentials))
    table = tuple(tuple(row[j] for j in range(n)) for row in kernels)
    return SystemSpec(variant=NSPECIES, tau=float(tau), grids=grids,
                      potentials=pots, kernels=table)


def pairwise_zero_sum_table(grids, payoffs: dict) -> list:
    """Build the kernel table of a pairwise-zero-sum polymatrix game.

    ``payoffs`` maps ordered pairs ``(I, J)`` with I < J to the kernel felt
    by species I from species J; the mirrored entry is ``-k^T`` and the
    diagonal is empty.
    """
    n = len(grids)
    table = [[None] * n for _ in range(n)]
    for (I, J), k in payoffs.items():
        if not (0 <= I < J < n):
            raise ValueError(f"payoff pair {(I, J)} is not ordered or out of range")
        table[I][J] = k
        table[J][I] = k.transposed().scaled(-1.0)
    return table


@dataclass(frozen=True)
class EquilibriumResult:
    densities: tuple
    residual: float
    iterations: int
    converged: bool

    @property
    def density(self) -> Density:
        if len(self.densities) != 1:
            raise ValueError("result holds more than one species")
        return self.densities[0]


def proximal_gibbs(grid: PeriodicGrid, potential: np.ndarray, tau: float) -> Density:
    """Normalized ``exp(-potential / tau)`` with overflow-safe shifting."""
    if not tau > 0:
        raise ValueError("tau must be positive")
    potential = _check_scalar(grid, potential, "potential")
    shifted = potential - np.min(potential)
    return normalize(grid, np.exp(-shifted / tau))


def _oscillation(field: np.ndarray) -> float:
    return float(np.max(field) - np.min(field))


def _stationarity_residual(spec: SystemSpec, mus) -> float:
    pots = spec.stationarity_potentials(mus)
    return max(_oscillation(pots[I] + spec.tau * np.log(mus[I].values))
               for I in range(spec.n_species))


def _mix(mu: Density, target: Density, alpha: float) -> Density:
    if alpha >= 1.0:
        return target
    return Density(mu.grid, (1.0 - alpha) * mu.values + alpha * target.values)


def _jacobi_solve(spec: SystemSpec, inits, damping, tol, max_iter) -> EquilibriumResult:
    mus = list(inits)
    alpha = damping
    prev = np.inf
    best = (np.inf, mus, 0)
    for it in range(max_iter + 1):
        pots = spec.stationarity_potentials(mus)
        res = max(_oscillation(pots[I] + spec.tau * np.log(mus[I].values))
                  for I in range(spec.n_species))
        if res < best[0]:
            best = (res, list(mus), it)
        if res <= tol:
            return EquilibriumResult(tuple(mus), res, it, True)
        if it == max_iter:
            break
        if res > prev:
            alpha = max(0.1, 0.5 * alpha)
        prev = res
        targets = [proximal_gibbs(spec.grids[I], pots[I], spec.tau)
                   for I in range(spec.n_species)]
        mus = [_mix(mus[I], targets[I], alpha) for I in range(spec.n_species)]
    res, mus, it = best
    return EquilibriumResult(tuple(mus), res, it, False)


def _default_inits(spec: SystemSpec):
    return [uniform_density(g) for g in spec.grids]


def mfld_stationary(spec: SystemSpec, damping: float = 0.5, tol: float = 1e-10,
                    max_iter: int = 10_000, init: Density | None = None) -> EquilibriumResult:
    """Stationary measure of the single-species flow.

    Iterates ``mu <- (1-alpha) mu + alpha gibbs(V + K mu)`` until the
    oscillation of the stationarity field drops below ``tol``.  On stall
    the best iterate is returned flagged as non-converged.
    """
    if spec.variant != MFLD:
        raise ValueError("spec is not a single-species system")
    if not 0 < damping <= 1:
        raise ValueError("damping must lie in (0, 1]")
    inits = [init] if init is not None else _default_inits(spec)
    return _jacobi_solve(spec, inits, damping, tol, max_iter)


def nspecies_equilibrium(spec: SystemSpec, damping: float = 0.5, tol: float = 1e-10,
                         max_iter: int = 10_000, inits=None) -> EquilibriumResult:
    """Equilibrium tuple of the multi-species flow by a damped Jacobi sweep."""
    if spec.variant != NSPECIES:
        raise ValueError("spec is not a multi-species system")
    if not 0 < damping <= 1:
        raise ValueError("damping must lie in (0, 1]")
    inits = list(inits) if inits is not None else _default_inits(spec)
    return _jacobi_solve(spec, inits, damping, tol, max_iter)


def mflda_equilibrium(spec: SystemSpec, damping: float = 0.5, tol: float = 1e-10,
                      max_iter: int = 10_000, inits=None) -> EquilibriumResult:
    """Equilibrium pair of the descent-ascent flow.

    Damped alternating updates: the descent species responds to the current
    ascent species, then the ascent species responds to the fresh one.  The
    residual is the larger of the two stationarity defects.
    """
    if spec.variant != MFLDA:
        raise ValueError("spec is not a descent-ascent system")
    if not 0 < damping <= 1:
        raise ValueError("damping must lie in (0, 1]")
    mus = list(inits) if inits is not None else _default_inits(spec)
    alpha = damping
    prev = np.inf
    best = (np.inf, list(mus), 0)
    for it in range(max_iter + 1):
        res = _stationarity_residual(spec, mus)
        if res < best[0]:
            best = (res, list(mus), it)
        if res <= tol:
            return EquilibriumResult(tuple(mus), res, it, True)
        if it == max_iter:
            break
        if res > prev:
            alpha = max(0.1, 0.5 * alpha)
        prev = res
        for I in range(spec.n_species):
            pots = spec.stationarity_potentials(mus)
            target = proximal_gibbs(spec.grids[I], pots[I], spec.tau)
            mus[I] = _mix(mus[I], target, alpha)
    res, mus, it = best
    return EquilibriumResult(tuple(mus), res, it, False)


def solve_equilibrium(spec: SystemSpec, **kwargs) -> EquilibriumResult:
    """Dispatch to the variant-appropriate solver."""
    if spec.variant == MFLD:
        return mfld_stationary(spec, **kwargs)
    if spec.variant == MFLDA:
        return mflda_equilibrium(spec, **kwargs)
    return nspecies_equilibrium(spec, **kwargs)


def stationarity_certificate(spec: SystemSpec, result: EquilibriumResult) -> float:
    """Sup-norm movement of one exact proximal-Gibbs re-application.

    For a converged result this is at most a small multiple of the solver
    tolerance, measured as oscillation of the log-density change.
    """
    pots = spec.stationarity_potentials(result.densities)
    worst = 0.0
    for I in range(spec.n_species):
        target = proximal_gibbs(spec.grids[I], pots[I], spec.tau)
        move = _oscillation(np.log(target.values) - np.log(result.densities[I].values))
        worst = max(worst, move)
    return worst


def equilibrium_chi_squared_gap(a: EquilibriumResult, b: EquilibriumResult) -> float:
    """Largest per-species chi-squared between two equilibrium tuples."""
    if len(a.densities) != len(b.densities):
        raise ValueError("results have different species counts")
    return max(chi_squared(x, y) for x, y in zip(a.densities, b.densities))
