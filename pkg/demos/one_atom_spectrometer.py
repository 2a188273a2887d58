"""
A photon split by one atom, read by two spectrometers
=====================================================

A Gaussian photon centred on k = 100 runs into a resonant two-level atom at
the middle of a 2 pi cavity.  The atom reflects the resonant core of the
packet and lets the wings through, so the transmitted light has a hole at
omega = 100.  We measure the spectrum on each side twice: once with a comb
of weakly coupled analyzer atoms, once by windowing the field correlation
function and projecting it back onto cavity modes.
"""

import matplotlib.pyplot as plt
import numpy as np

from cavityspec import run_experiment, scenarios

spec = scenarios.scenario_one_atom()
res = run_experiment(spec)
print(f"evolved {res.n_atoms} atoms and {res.basis.n_modes} modes in {res.wall_time:.1f} s")

###############################################################################
# The energy density before and after the collision.  At t = 3.8 the
# reflected peak is left of centre and the transmitted light has split into
# two lobes.

fig, ax = plt.subplots(2, 1, sharex=True)
for a, t in zip(ax, sorted(res.energy_density)):
    r, u = res.energy_density[t]
    a.plot(r, u, lw=0.6)
    a.set_ylabel(f"u(r, t={t:g})")
ax[-1].set_xlabel("r")

###############################################################################
# The atom holds the excitation only briefly.

ts = res.trace_times["center"]
plt.figure()
plt.semilogy(ts, res.traces["center"]["center"])
plt.xlabel("t")
plt.ylabel("center atom excitation")

###############################################################################
# Analyzer and mode spectra for every comparison, normalized to unit area.

fig, ax = plt.subplots(2, 2, figsize=(9, 6))
for a, (name, c) in zip(ax.flat, res.comparisons.items()):
    for key, style in ((c.analyzer, "-"), (c.mode, "--")):
        s = res.normalized(key)
        a.plot(s.omega, s.values, style, label=s.provenance)
    a.set_title(f"{name}: L1 = {c.metrics.l1:.3f}")
ax[0, 0].legend()
fig.tight_layout()

###############################################################################
# Each bank takes only a small part of the photon energy.

for name, frac in res.absorption.items():
    print(f"{name:22s} absorbed {100 * frac:.2f}%")

plt.show()
