"""Recovering learning rates from a simulated subject.

The reference subject is simulated with known rates. The reaching-error
curve is fitted with an exponential, and gamma is found by replaying the
experiment on a grid and matching joint trajectories.
Run: python3 demos/03_fit_parameters.py  (about half a minute)
"""
import numpy as np

from bomilearn import ExperimentConfig, ModelParams, default_mapping
from bomilearn.fitting import exp_model, fit_eta, fit_gamma, re_learning_curve, synthetic_subject
from bomilearn.metrics import MetricSeries

# exact exponential: the fit recovers its parameters
k = np.arange(1, 301)
fit = fit_eta(MetricSeries(k=k, values=exp_model(k, 0.8, 0.03, 0.2), kind="RE"))
print(f"exact curve: eta={fit.eta:.5f} alpha={fit.alpha:.4f} c={fit.c:.4f} R2={fit.r_squared:.6f}")

mapping = default_mapping(seed=0)
truth = ModelParams(gamma=0.262)
cfg = ExperimentConfig(seed=11)
reference = synthetic_subject(truth, cfg, seed=11, mapping=mapping)

curve = re_learning_curve(reference, window=10)
ef = fit_eta(curve)
print(f"RE curve fit: rate={ef.eta:.4f} per trial, R2={ef.r_squared:.3f}")

gamma_hat, objective = fit_gamma(reference, cfg, mapping, truth, (0.0, 1.0))
print("gamma_hat =", gamma_hat, "(true 0.262)")
best = sorted(objective, key=lambda p: p[1])[:3]
print("three best candidates:", [(round(float(g), 3), round(float(v), 3)) for g, v in best])
