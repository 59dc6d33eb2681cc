"""Simulated reaching experiment and learning curves.

Runs the default 8 x 60 protocol, then looks at how reaching error and
forward-model error fall across sessions. Figures go to demo_out/.
Run: python3 demos/02_simulate_learning.py
"""
import warnings
from pathlib import Path

import numpy as np

from bomilearn import ExperimentConfig, ModelParams, default_mapping, run_experiment
from bomilearn.metrics import fme_series, group_and_smooth, reaching_error, session_means
from bomilearn.plotting import plot_series, plot_trajectories

out = Path("demo_out")
out.mkdir(exist_ok=True)

mapping = default_mapping(seed=0)
params = ModelParams()
cfg = ExperimentConfig(seed=0)
records = run_experiment(cfg, mapping, params)
print(len(records), "trials,", sum(r.reached for r in records), "reached")

re = reaching_error(records)
fme = fme_series(records, mapping.w)
print("RE per session: ", np.round(session_means(re, records), 3))
print("FME per session:", np.round(session_means(fme, records), 3))

# errors of trials between the same pair of targets, averaged and smoothed
smooth = group_and_smooth(re, records, window=10)
print("smoothed RE, first/last:", round(smooth.values[0], 3), round(smooth.values[-1], 3))

plot_trajectories(records, out / "trajectories.svg")
plot_series(fme.k, fme.values, out / "fme.svg", ylabel="FME")
plot_series(smooth.k, smooth.values, out / "re_smoothed.svg", ylabel="RE")

# a learner that never updates its forward model keeps the initial error
# (gamma = 0 breaks the timescale ordering, hence the silenced warning)
with warnings.catch_warnings():
    warnings.simplefilter("ignore")
    frozen = run_experiment(cfg.replace(n_sessions=2), mapping, params.replace(gamma=0.0))
print("FME with gamma = 0:", np.round(fme_series(frozen, mapping.w).values[[0, -1]], 3))
