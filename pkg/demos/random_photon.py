"""
A random multi-peaked photon
============================

Ten Gaussian components with random centres, widths and positions make a
photon with a ragged spectrum.  After it has scattered off the centre atom,
the atom is back in its ground state and the cavity as a whole holds the
same mode populations as before: the scattering is elastic.  Locally, the
two sides see very different spectra.
"""

import matplotlib.pyplot as plt

from cavityspec import run_experiment, scenarios
from cavityspec.spectra import compare_normalized

seed = 2
res = run_experiment(scenarios.scenario_random_photon(seed=seed))

before = res.normalized("initial")
after = res.normalized("full_mode")
print(f"seed {seed}: whole-cavity spectrum changed by L1 = {compare_normalized(before, after).l1:.4f}")
for name, c in res.comparisons.items():
    print(f"{name}: analyzer vs mode L1 = {c.metrics.l1:.4f}")

fig, ax = plt.subplots(3, 1, sharex=True, figsize=(7, 8))
ax[0].plot(before.omega, before.values, label="t = 0")
ax[0].plot(after.omega, after.values, "--", label="after")
ax[0].legend()
for a, side in zip(ax[1:], ("left", "right")):
    for key in (f"{side}_analyzer", f"{side}_mode"):
        s = res.normalized(key)
        a.plot(s.omega, s.values, label=key)
    a.legend()
ax[-1].set_xlabel("omega")
ax[-1].set_xlim(75, 125)
plt.show()
