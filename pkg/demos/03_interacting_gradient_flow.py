"""
Self-interacting gradient flow and its certified local rate
===========================================================

A confining potential plus a conditionally positive-definite interaction
kernel.  The stationary measure comes from the damped proximal-Gibbs
iteration; the local convergence package (basin radius, rate, prefactor)
is evaluated from the measured spectral quantities and compared against
the fitted decay, together with the mixed Lyapunov functional that blends
the weighted negative-Sobolev norm with the chi-squared divergence.
"""

import os

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from mfl_lab import (Kernel, KernelMode, StepperConfig, build_grid, chi_squared,
                     fit_rate, lyapunov_series, m11, mfld_stationary,
                     mfld_system, perturb_along, simulate_mfld,
                     spectral_abscissa, spectrum, tau0_estimate,
                     theorem_constants)
from mfl_lab.analysis import REGIME_MFLD_GENERAL, REGIME_MFLD_QUADRATIC

OUT = os.path.join(os.path.dirname(__file__), "output")
os.makedirs(OUT, exist_ok=True)

g = build_grid(1, 256, 2 * np.pi)
x = g.axis_coords()
kern = Kernel.from_modes([KernelMode(p=1, q=-1, amplitude=0.3)], g)
spec = mfld_system(g, tau=1.0, potential=np.cos(x), kernel=kern)

# %% Equilibrium and the spectral quantities entering the theory

eq = mfld_stationary(spec)
print(f"fixed point: residual {eq.residual:.2e} after {eq.iterations} iterations")
s = spectrum(eq.density)
tau0 = tau0_estimate(kern, s)
m = m11(kern)
sa = spectral_abscissa(spec.tau, s, kern)
print(f"c_pi = {s.poincare:.6f}, tau0 = {tau0:.2e}, M11 = {m:.3f}")
print(f"spectral abscissa sigma = {sa.sigma:.6f} "
      f"(symmetric-form floor {sa.hessian_min:.6f})")

quad = theorem_constants(REGIME_MFLD_QUADRATIC, tau=spec.tau, tau0=tau0,
                         c_pi=s.poincare, epsilon=0.25, m11=m)
print(f"basin radius {quad.radius:.4f}, certified rate {quad.rate:.4f}, "
      f"prefactor {quad.prefactor:.3f}")

# %% Simulate from inside the basin and fit the decay

mu0 = perturb_along(eq.density, s.eigenfunction(1), float(np.sqrt(0.8 * quad.radius)))
print(f"chi2 at start: {chi_squared(mu0, eq.density):.4f} (inside the basin)")
traj = simulate_mfld(spec, mu0, eq, StepperConfig(t_final=9.0, diag_stride=128),
                     spectra=[s])
rr = fit_rate(traj.times, traj.chi2_total, predicted_rate=quad.rate)
print(f"fitted rate {rr.fitted_rate:.4f}: above the certified {quad.rate:.4f}, "
      f"close to 2 sigma = {2 * sa.sigma:.4f}")

# %% Mixed Lyapunov functional

general = theorem_constants(REGIME_MFLD_GENERAL, tau=spec.tau, tau0=tau0,
                            c_pi=s.poincare, epsilon=0.125, m11=m)
w = lyapunov_series(traj, general.lyapunov_gamma)

fig, ax = plt.subplots(figsize=(7, 4.5))
ax.semilogy(traj.times, traj.chi2_total, label=r"$\chi^2$")
ax.semilogy(traj.times, traj.hm1_total, label=r"$\|f\|^2_{H^{-1}_\nu}$")
ax.semilogy(traj.times, w, label=r"mixed $W_t$")
ax.semilogy(traj.times, traj.energy_gap, label="free-energy gap", ls=":")
ref = traj.chi2_total[0] * np.exp(-quad.rate * traj.times)
ax.semilogy(traj.times, ref, "k--", lw=1, label="certified rate")
ax.set_xlabel("t")
ax.set_title("Interacting flow: all diagnostics decay beyond the certificate")
ax.legend()
fig.tight_layout()
fig.savefig(os.path.join(OUT, "interacting_decay.png"), dpi=130)
print(f"\nwrote {OUT}/interacting_decay.png")
