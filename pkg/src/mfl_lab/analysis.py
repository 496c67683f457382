"""Rate fitting, convergence-constant evaluation and certification checks.

The constant calculator evaluates, for each supported regime, the explicit
local-convergence package (decay rate, basin radius in chi-squared,
constant prefactor, and for the mixed-Lyapunov regimes the mixing weight
and Lyapunov threshold).  Rate fitting extracts empirical exponents from
positive decaying series over a deterministic value band, and the
monotonicity residual certifies the multi-species coupling condition at
the discrete level.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .dynamics import Trajectory, evaluate_energy
from .equilibrium import SystemSpec
from .measures import Density, chi_squared, kl, w2_circle
from .spectral import _mean_zero_basis

REGIME_MFLD_QUADRATIC = "mfld_quadratic"
REGIME_MFLD_GENERAL = "mfld_general"
REGIME_MFLDA = "mflda"
REGIME_TWO_TIMESCALE = "two_timescale"
REGIME_NSPECIES_GENERAL = "nspecies_general"
REGIME_NSPECIES_LINEAR = "nspecies_linear"

REGIMES = (REGIME_MFLD_QUADRATIC, REGIME_MFLD_GENERAL, REGIME_MFLDA,
           REGIME_TWO_TIMESCALE, REGIME_NSPECIES_GENERAL, REGIME_NSPECIES_LINEAR)


@dataclass(frozen=True)
class RateReport:
    """Fit of an exponential decay exponent over a value band."""

    fitted_rate: float
    r_squared: float
    window: tuple
    n_samples: int
    series_id: str = ""
    predicted_rate: float | None = None

    @property
    def ratio(self) -> float | None:
        if self.predicted_rate is None or self.predicted_rate == 0:
            return None
        return self.fitted_rate / self.predicted_rate


def fit_rate(times, values, floor: float | None = None, ceiling: float | None = None,
             series_id: str = "", predicted_rate: float | None = None) -> RateReport:
    """Least-squares exponent of ``values ~ exp(-rate * t)`` inside a band.

    Only samples with value in ``[floor, ceiling]`` enter the fit, which
    excludes the early transient and the round-off tail deterministically.
    Defaults: ``ceiling = 0.1 * values[0]`` and ``floor = max(1e-12, 1e-6 *
    values[0])``.  At least ten samples must fall inside the band.
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if times.shape != values.shape or times.ndim != 1:
        raise ValueError("times and values must be matching one-dimensional arrays")
    if np.any(values <= 0):
        raise ValueError("rate fitting requires strictly positive values")
    if ceiling is None:
        ceiling = 0.1 * values[0]
    if floor is None:
        floor = max(1e-12, 1e-6 * values[0])
    mask = (values >= floor) & (values <= ceiling)
    if int(mask.sum()) < 10:
        raise ValueError(f"fit window holds {int(mask.sum())} samples, need at least 10")
    t = times[mask]
    y = np.log(values[mask])
    slope, intercept = np.polyfit(t, y, 1)
    resid = y - (slope * t + intercept)
    total = y - y.mean()
    denom = float(total @ total)
    r2 = 1.0 if denom == 0 else 1.0 - float(resid @ resid) / denom
    return RateReport(fitted_rate=float(-slope), r_squared=r2,
                      window=(float(t[0]), float(t[-1])), n_samples=int(mask.sum()),
                      series_id=series_id, predicted_rate=predicted_rate)


@dataclass(frozen=True)
class TheoremConstants:
    """Local-convergence package of one regime.

    ``radius`` bounds the admissible initial chi-squared (total over
    species), ``rate`` is the certified exponential decay exponent and
    ``prefactor`` the constant in front of the bound.  The mixed-Lyapunov
    regimes also carry the mixing weight ``lyapunov_gamma``, the effective
    cross-derivative scale ``big_m`` and the Lyapunov threshold
    ``lyapunov_radius``.
    """

    regime: str
    rate: float
    radius: float
    prefactor: float
    inputs: dict
    lyapunov_gamma: float | None = None
    big_m: float | None = None
    lyapunov_radius: float | None = None


def _positive(name, value):
    if not value > 0:
        raise ValueError(f"{name} must be positive, got {value}")
    return float(value)


def _check_eps(epsilon, upper, regime):
    if upper == 0.125:
        ok = 0.0 < epsilon <= 0.125
    else:
        ok = 0.0 < epsilon < 1.0
    if not ok:
        bracket = "]" if upper == 0.125 else ")"
        raise ValueError(f"epsilon={epsilon} outside (0, {upper}{bracket} for regime {regime}")
    return float(epsilon)


def _check_gap(tau, tau0):
    if tau0 < 0:
        raise ValueError("tau0 must be nonnegative")
    if not tau > tau0:
        raise ValueError(f"need tau > tau0, got tau={tau}, tau0={tau0}")


def _mixed_package(tau, tau0, c, epsilon, big_m):
    """gamma, threshold, radius and prefactor of the mixed H^-1 + chi^2 norm."""
    gap = tau - tau0
    if big_m == 0:
        return np.inf, 1.0, np.inf, np.inf
    gamma = tau * gap * c * epsilon**2 / (128.0 * big_m**2)
    w0 = min(2.0**-20 * gap**4 * c**3 * epsilon**4 / big_m**4, 1.0)
    radius = w0 / (gamma + 1.0 / c)
    prefactor = 1.0 + 128.0 * big_m**2 / (tau * gap * c**2 * epsilon**2)
    return gamma, w0, radius, prefactor


def theorem_constants(regime: str, *, tau: float, epsilon: float, tau0: float = 0.0,
                      c_pi: float | None = None, c_x: float | None = None,
                      c_y: float | None = None, gamma: float | None = None,
                      n_species: int | None = None, m11: float = 0.0,
                      m111: float = 0.0, m12: float = 0.0) -> TheoremConstants:
    """Evaluate the convergence constants of one regime exactly.

    Regimes: ``mfld_quadratic`` (single species, quadratic objective, fully
    explicit), ``mfld_general`` (mixed-Lyapunov constants; requires
    ``epsilon <= 1/8``; ``m111`` and ``m12`` are user inputs), ``mflda``
    and ``two_timescale`` (descent-ascent, per-species gaps, ``tau0 = 0``),
    and ``nspecies_linear`` / ``nspecies_general`` (N-species tables).
    """
    tau = _positive("tau", tau)
    if regime == REGIME_MFLD_QUADRATIC:
        epsilon = _check_eps(epsilon, 1.0, regime)
        _check_gap(tau, tau0)
        c = _positive("c_pi", c_pi)
        gap = tau - tau0
        rate = 2.0 * gap * c * (1.0 - epsilon)
        if m11 == 0:
            radius, prefactor = np.inf, 1.0
        else:
            radius = gap**2 * c**2 * epsilon**2 / (4.0 * m11**2)
            prefactor = 1.0 + m11**2 / (tau * gap * c**2 * epsilon**2)
        return TheoremConstants(regime, rate, radius, prefactor,
                                inputs=dict(tau=tau, tau0=tau0, c_pi=c, epsilon=epsilon, m11=m11))

    if regime == REGIME_MFLD_GENERAL:
        epsilon = _check_eps(epsilon, 0.125, regime)
        _check_gap(tau, tau0)
        c = _positive("c_pi", c_pi)
        big_m = max(m11, (m12 + m111) / c)
        g, w0, radius, prefactor = _mixed_package(tau, tau0, c, epsilon, big_m)
        rate = 2.0 * (tau - tau0) * c * (1.0 - epsilon)
        return TheoremConstants(regime, rate, radius, prefactor,
                                inputs=dict(tau=tau, tau0=tau0, c_pi=c, epsilon=epsilon,
                                            m11=m11, m111=m111, m12=m12),
                                lyapunov_gamma=g, big_m=big_m, lyapunov_radius=w0)

    if regime == REGIME_MFLDA:
        epsilon = _check_eps(epsilon, 1.0, regime)
        cx = _positive("c_x", c_x)
        cy = _positive("c_y", c_y)
        c = min(cx, cy)
        rate = 2.0 * tau * c * (1.0 - epsilon)
        if m11 == 0:
            radius, prefactor = np.inf, 1.0
        else:
            radius = tau**2 * c**2 * epsilon**2 / (4.0 * m11**2)
            prefactor = 1.0 + m11**2 / (tau**2 * c**2 * epsilon**2)
        return TheoremConstants(regime, rate, radius, prefactor,
                                inputs=dict(tau=tau, c_x=cx, c_y=cy, epsilon=epsilon, m11=m11))

    if regime == REGIME_TWO_TIMESCALE:
        epsilon = _check_eps(epsilon, 1.0, regime)
        cx = _positive("c_x", c_x)
        cy = _positive("c_y", c_y)
        gam = _positive("gamma", gamma)
        c = min(cx, gam * cy)
        rate = 2.0 * tau * c * (1.0 - epsilon)
        if m11 == 0:
            radius, prefactor = np.inf, 1.0
        else:
            radius = tau**2 * c**2 * epsilon**2 / (4.0 * gam * m11**2)
            prefactor = 1.0 + gam * m11**2 / (tau**2 * c**2 * epsilon**2)
        return TheoremConstants(regime, rate, radius, prefactor,
                                inputs=dict(tau=tau, c_x=cx, c_y=cy, gamma=gam,
                                            epsilon=epsilon, m11=m11))

    if regime == REGIME_NSPECIES_LINEAR:
        epsilon = _check_eps(epsilon, 1.0, regime)
        _check_gap(tau, tau0)
        c = _positive("c_pi", c_pi)
        if not n_species or n_species < 1:
            raise ValueError("n_species must be a positive integer")
        gap = tau - tau0
        rate = 2.0 * gap * c * (1.0 - epsilon)
        if m11 == 0:
            radius, prefactor = np.inf, 1.0
        else:
            radius = gap**2 * c**2 * epsilon**2 / (8.0 * n_species**2 * m11**2)
            prefactor = 1.0 + 2.0 * n_species**2 * m11**2 / (tau * gap * c**2 * epsilon**2)
        return TheoremConstants(regime, rate, radius, prefactor,
                                inputs=dict(tau=tau, tau0=tau0, c_pi=c, epsilon=epsilon,
                                            m11=m11, n_species=n_species))

    if regime == REGIME_NSPECIES_GENERAL:
        epsilon = _check_eps(epsilon, 0.125, regime)
        _check_gap(tau, tau0)
        c = _positive("c_pi", c_pi)
        if not n_species or n_species < 1:
            raise ValueError("n_species must be a positive integer")
        big_m = np.sqrt(2.0) * n_species * max(m11, (m12 + n_species * m111) / c)
        g, w0, radius, prefactor = _mixed_package(tau, tau0, c, epsilon, big_m)
        rate = 2.0 * (tau - tau0) * c * (1.0 - epsilon)
        return TheoremConstants(regime, rate, radius, prefactor,
                                inputs=dict(tau=tau, tau0=tau0, c_pi=c, epsilon=epsilon,
                                            m11=m11, m111=m111, m12=m12, n_species=n_species),
                                lyapunov_gamma=g, big_m=big_m, lyapunov_radius=w0)

    raise ValueError(f"unknown regime {regime!r}; expected one of {REGIMES}")


def lyapunov_series(traj: Trajectory, gamma: float) -> np.ndarray:
    """Mixed series ``W_t = sum_I hm1_I + gamma * sum_I chi2_I`` per recorded time."""
    if traj.hm1_sq.size == 0 or traj.chi2.size == 0:
        raise ValueError("trajectory carries no recorded diagnostics")
    return traj.hm1_total + gamma * traj.chi2_total


@dataclass(frozen=True)
class MonotonicityReport:
    """Discrete certificate for the multi-species coupling condition."""

    residual: float
    tau0: float
    lambda_min: float


def monotonicity_residual(kernel_table, nus) -> MonotonicityReport:
    """Most negative eigenvalue of the symmetric coupling form, clipped at zero.

    Assembles the quadrature-weighted block operator of the kernel table on
    the product of the per-species mean-zero subspaces and symmetrizes it.
    A zero residual certifies discrete linear monotonicity; the implied
    convexity defect ``tau0`` equals the residual.
    """
    nus = list(nus)
    n = len(nus)
    if len(kernel_table) != n or any(len(row) != n for row in kernel_table):
        raise ValueError("kernel table must be square with one row per species")
    sizes = [nu.grid.size for nu in nus]
    weights = [nu.values.ravel() * nu.grid.cell_volume for nu in nus]
    offsets = np.concatenate(([0], np.cumsum(sizes)))
    total = int(offsets[-1])
    C = np.zeros((total, total))
    for I in range(n):
        swI = np.sqrt(weights[I])
        for J in range(n):
            kern = kernel_table[I][J]
            if kern is None:
                continue
            if kern.grid_x != nus[I].grid or kern.grid_y != nus[J].grid:
                raise ValueError(f"kernel ({I},{J}) does not match the species grids")
            swJ = np.sqrt(weights[J])
            C[offsets[I]:offsets[I + 1], offsets[J]:offsets[J + 1]] = \
                kern.matrix * np.outer(swI, swJ)
    C = 0.5 * (C + C.T)
    bases = [_mean_zero_basis(w) for w in weights]
    Q = np.zeros((total, total - n))
    col = 0
    for I in range(n):
        Q[offsets[I]:offsets[I + 1], col:col + sizes[I] - 1] = bases[I]
        col += sizes[I] - 1
    lam = scipy.linalg.eigvalsh(Q.T @ C @ Q)
    lam_min = float(lam[0])
    return MonotonicityReport(residual=max(0.0, -lam_min),
                              tau0=max(0.0, -lam_min), lambda_min=lam_min)


def interaction_lipschitz_bound(kern) -> float:
    """Default displacement-Lipschitz scale of a truncated-Fourier kernel.

    Triangle-inequality bound ``sum |a| (|p|^2 + |p||q|)`` over the modes in
    physical frequencies, covering both the spatial Hessian and the
    measure-shift sensitivity of the interaction drift.
    """
    wx = kern.grid_x.fundamental_frequency
    wy = kern.grid_y.fundamental_frequency
    beta = 0.0
    for m in kern.modes:
        p = np.linalg.norm(wx * np.asarray(m.p, float))
        q = np.linalg.norm(wy * np.asarray(m.q, float))
        beta += abs(m.amplitude) * (p * p + p * q)
    return float(beta)


def ftau_gap_bound_check(mu: Density, nu: Density, spec: SystemSpec,
                         beta: float | None = None, c: float | None = None) -> tuple:
    """Evaluate both sides of the free-energy gap bound (1D single species).

    ``lhs`` is the energy gap; ``rhs = (beta + beta^2/(c tau)) W2^2 + tau KL
    + (tau/2) chi^2``.  ``beta`` defaults to the kernel's Fourier bound and
    ``c`` must be supplied by the caller: with a genuine log-Sobolev
    constant the inequality is a strict check, with the Poincare constant
    as a stand-in the pair is report-only (that substitution shrinks the
    right-hand side).
    """
    if spec.variant != "mfld":
        raise ValueError("the gap bound is evaluated for the single-species system")
    if spec.grids[0].dim != 1:
        raise ValueError("the gap bound needs the circular distance, so dim must be 1")
    if c is None or not c > 0:
        raise ValueError("a positive constant c is required")
    if beta is None:
        beta = interaction_lipschitz_bound(spec.kernels[0][0])
    lhs = evaluate_energy(mu, spec, nu)
    w2sq = w2_circle(mu, nu) ** 2
    rhs = (beta + beta**2 / (c * spec.tau)) * w2sq + spec.tau * kl(mu, nu) \
        + 0.5 * spec.tau * chi_squared(mu, nu)
    return float(lhs), float(rhs)


def _constants_dict(tc: TheoremConstants) -> dict:
    out = {"regime": tc.regime, "rate": tc.rate, "radius": tc.radius,
           "prefactor": tc.prefactor, "inputs": dict(sorted(tc.inputs.items()))}
    if tc.lyapunov_gamma is not None:
        out["lyapunov_gamma"] = tc.lyapunov_gamma
        out["big_m"] = tc.big_m
        out["lyapunov_radius"] = tc.lyapunov_radius
    return out


def _rate_dict(rr: RateReport) -> dict:
    return {"fitted_rate": rr.fitted_rate, "r_squared": rr.r_squared,
            "window": list(rr.window), "n_samples": rr.n_samples,
            "series_id": rr.series_id, "predicted_rate": rr.predicted_rate,
            "ratio": rr.ratio}


def report(runs) -> dict:
    """Aggregate run results into one deterministic, JSON-ready structure.

    Each run is a mapping that may carry ``trajectory`` (:class:`Trajectory`),
    ``rate`` (:class:`RateReport`), ``constants`` (:class:`TheoremConstants`)
    and ``spectral`` (a plain mapping of spectral summaries); entries appear
    in input order with sorted keys inside.
    """
    entries = []
    for run in runs:
        entry = {}
        traj = run.get("trajectory")
        if traj is not None:
            entry["trajectory"] = {
                "n_times": int(len(traj.times)),
                "t_final": float(traj.times[-1]) if len(traj.times) else 0.0,
                "chi2_total_final": float(traj.chi2_total[-1]) if len(traj.times) else None,
                "aborted": bool(traj.aborted),
                "n_species": int(traj.n_species),
            }
        if run.get("rate") is not None:
            entry["rate"] = _rate_dict(run["rate"])
        if run.get("constants") is not None:
            entry["constants"] = _constants_dict(run["constants"])
        if run.get("spectral") is not None:
            entry["spectral"] = dict(sorted(run["spectral"].items()))
        entries.append(entry)
    return {"schema_version": 1, "runs": entries}
