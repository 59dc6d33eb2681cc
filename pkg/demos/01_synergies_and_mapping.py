"""Postural synergies and the interface map.

Generates posture data from a low-rank factor model, extracts the leading
synergies with PCA and builds the map from joint velocities to the cursor.
Run: python3 demos/01_synergies_and_mapping.py
"""
import numpy as np

from bomilearn.metrics import svd_modes
from bomilearn.synergy import build_mapping, build_synergy_basis, synthesize_posture_data

# 19 joint angles driven by 4 latent factors, sampled at 100 Hz
data = synthesize_posture_data(m=19, latent_dim=4, n_samples=5000, seed=0)
print("samples:", data.samples.shape)

basis = build_synergy_basis(data, h=4)
print("explained variance:", np.round(basis.explained_variance, 4))
print("rows orthonormal:", np.allclose(basis.phi @ basis.phi.T, np.eye(4)))

# the first two synergies drive the two cursor axes
mapping = build_mapping(basis, "first_two")
print("C shape:", mapping.c.shape)
print("W =\n", np.round(mapping.w, 3))

# a random mixing of the synergies gives a harder, non-axis-aligned map
mixed = build_mapping(basis, "random", seed=3)
modes = svd_modes(mixed.c)
print("random map singular values:", np.round(modes.singular_values, 3))

# joint motion along a synergy outside the first two is invisible to the cursor
dq = basis.phi[3]
print("cursor velocity from synergy 4:", np.round(mapping.c @ dq, 12))
