"""
Writing your own experiment
===========================

Experiments are plain JSON.  Here a photon centred on k = 60 hits an atom
detuned by 3 from its carrier, and one spectrometer listens on the far side.
The same file can be run from the shell with ``cavityspec run --config``.
"""

import json
import math

import matplotlib.pyplot as plt

from cavityspec import run_experiment
from cavityspec.scenarios import parse_experiment, render_experiment

config = {
    "name": "detuned",
    "cavity": {"length": 2 * math.pi, "n_modes": 200},
    "initial_state": {"kind": "gaussian", "k0": 60.0, "sigma_k": 2 * math.pi, "r0": 2.0},
    "atoms": [{"name": "center", "r": math.pi, "omega0": 63.0, "gamma": math.pi}],
    "banks": [{"name": "far", "n_atoms": 120, "omega_min": 45.0, "omega_max": 75.0,
               "r": 4.5, "t_read": 4.5}],
    "outputs": [
        {"kind": "analyzer_spectrum", "name": "far_analyzer", "bank": "far"},
        {"kind": "mode_spectrum", "name": "far_mode", "t": 3.0,
         "filter": {"kind": "boxcar", "r_min": math.pi, "r_max": 2 * math.pi}},
        {"kind": "initial_spectrum"},
        {"kind": "comparison", "name": "far", "analyzer": "far_analyzer", "mode": "far_mode"},
    ],
}

spec = parse_experiment(json.dumps(config))
# defaults such as the analyzer decay constant are filled in on parsing
print(render_experiment(spec))

res = run_experiment(spec)
print(f"L1 = {res.comparisons['far'].metrics.l1:.4f}")

for key in ("initial", "far_analyzer", "far_mode"):
    s = res.normalized(key)
    plt.plot(s.omega, s.values, label=key)
plt.axvline(63.0, color="k", lw=0.5)
plt.xlabel("omega")
plt.legend()
plt.show()
