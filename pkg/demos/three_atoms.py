"""
Three atoms with different linewidths
=====================================

A broad photon meets three co-located atoms tuned to 90, 100 and 110.  The
atom at 110 has a quarter of the decay constant of the others, so its
reflection peak and its transmission dip come out narrower.
"""

import matplotlib.pyplot as plt

from cavityspec import run_experiment, scenarios
from cavityspec.spectra import fwhm, local_maxima, local_minima

res = run_experiment(scenarios.scenario_three_atoms())

left = res.normalized("left_analyzer")
right = res.normalized("right_analyzer")
print("reflection peaks  ", local_maxima(left, 0.1))
print("transmission dips ", local_minima(right, 0.1))
print(f"width at 110: {fwhm(left, 110.0):.2f}, at 100: {fwhm(left, 100.0):.2f}")

fig, ax = plt.subplots(1, 2, figsize=(10, 4))
for a, side in zip(ax, ("left", "right")):
    for key, style in ((f"{side}_analyzer", "-"), (f"{side}_mode", "--")):
        s = res.normalized(key)
        a.plot(s.omega, s.values, style, label=s.provenance)
    a.set_title(side)
    a.set_xlabel("omega")
ax[0].legend()
plt.show()
