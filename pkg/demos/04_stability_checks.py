"""Two-timescale stability checks.

Walks through the reduced (slow) system, the fast forward-model layer and
the full noisy system, and prints what each check measures.
Run: python3 demos/04_stability_checks.py
"""
import numpy as np

from bomilearn import ModelParams, default_mapping
from bomilearn import verify

mapping = default_mapping(seed=0)
params = ModelParams()
print("timescales: eps_u=%.3f eps_delta=%.3f eps_w=%.3f" % (params.eps_u, params.eps_delta, params.eps_w))

# slow system: inverse command and scaled cursor error, one output axis
rng = np.random.default_rng(0)
z0 = rng.standard_normal((5, 20))
red = verify.simulate_reduced(params, mapping.c[:1], z0)
rep = verify.lyapunov_check(red)
print("reduced:", rep.summary())
print("decay bound rate:", verify.lyapunov_rate(mapping.c[:1], params.mu))
print("time-reversed run flagged:", not verify.lyapunov_check(red.reversed()).passed)

# fast layer: with u frozen the drive is one direction only, so a multisine
# on the synergies is added to excite every column of the forward model
u = 0.1 * rng.standard_normal(19)
drive = verify.multisine_excitation(mapping.basis.phi, amplitude=0.5)
bl = verify.simulate_boundary_layer(params, mapping.basis, mapping.w[:1], u, excitation=drive)
norms = np.linalg.norm(bl.w_tilde.reshape(len(bl.tau_w), -1), axis=1)
slope, r2 = verify.decay_rate(bl.tau_w, norms)
print(f"boundary layer: log-slope {slope:.4f}, R2 {r2:.4f}")

# excitation of the filtered joint velocity
gram = verify.pe_gramian(verify.realized_delta_q(mapping, params, 4000), 100)
print("persistent excitation:", gram.pe_satisfied, "min eig %.3g" % gram.min_eig)

# full system: the residual neighbourhood grows linearly with the noise
scan = verify.theorem_neighborhood_scan(params, mapping, (0.05, 0.1, 0.2), n_seeds=5)
print("steady norms:", np.round(scan.steady_norms, 5), "ratios:", np.round(scan.ratios, 3))
