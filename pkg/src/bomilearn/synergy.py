"""Postural synergies and the body-machine interface map.

A synergy basis is the set of top principal directions of hand-posture data;
the interface map sends joint velocities to cursor velocity through
``C = W @ phi`` where ``phi`` holds the synergies as orthonormal rows.
"""
from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
from pathlib import Path

import numpy as np

from .errors import DegenerateData, DimensionMismatch, InvalidConfig, RankDeficient

__all__ = [
    "PostureDataset",
    "SynergyBasis",
    "MappingMatrix",
    "build_synergy_basis",
    "build_mapping",
    "synthesize_posture_data",
    "factor_model_covariance",
    "default_mapping",
    "load_posture_csv",
    "save_basis",
    "load_basis",
    "sign_normalize",
]


@dataclasses.dataclass(frozen=True)
class PostureDataset:
    samples: np.ndarray  # (N, m) joint angles, radians
    rate_hz: float = 100.0

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=float)
        if samples.ndim != 2 or samples.shape[1] < 1:
            raise DimensionMismatch("samples must be a 2-D array (N, m) with m >= 1")
        if samples.shape[0] < samples.shape[1] + 1:
            raise DegenerateData(
                f"need at least m+1={samples.shape[1] + 1} samples, got {samples.shape[0]}"
            )
        if not np.all(np.isfinite(samples)):
            raise DegenerateData("posture samples contain non-finite angles")
        object.__setattr__(self, "samples", samples)

    @property
    def m(self) -> int:
        return self.samples.shape[1]

    def digest(self) -> str:
        return hashlib.sha256(np.ascontiguousarray(self.samples).tobytes()).hexdigest()


@dataclasses.dataclass(frozen=True)
class SynergyBasis:
    phi: np.ndarray  # (h, m), orthonormal rows
    explained_variance: np.ndarray  # (h,)
    source_hash: str = ""

    @property
    def h(self) -> int:
        return self.phi.shape[0]

    @property
    def m(self) -> int:
        return self.phi.shape[1]


@dataclasses.dataclass(frozen=True)
class MappingMatrix:
    c: np.ndarray  # (n, m)
    w: np.ndarray  # (n, h)
    basis: SynergyBasis

    @property
    def n(self) -> int:
        return self.c.shape[0]

    @property
    def phi(self) -> np.ndarray:
        return self.basis.phi


def sign_normalize(rows, partner=None):
    """Flip rows so the largest-magnitude entry of each is positive.

    If ``partner`` is given (columns paired with the rows, as the left
    singular vectors are with the right ones) the same flips are applied to
    its columns, and both arrays are returned.
    """
    rows = np.array(rows, dtype=float, copy=True)
    idx = np.argmax(np.abs(rows), axis=1)
    signs = np.sign(rows[np.arange(rows.shape[0]), idx])
    signs[signs == 0] = 1.0
    rows *= signs[:, None]
    if partner is None:
        return rows
    partner = np.array(partner, dtype=float, copy=True)
    k = min(len(signs), partner.shape[1])
    partner[:, :k] *= signs[None, :k]
    return rows, partner


def build_synergy_basis(data: PostureDataset, h: int) -> SynergyBasis:
    """Top-``h`` principal directions of the posture data.

    PCA is done with an SVD of the mean-centred sample matrix. Rows of the
    returned ``phi`` are ordered by decreasing explained variance and signed
    so that each row's largest entry is positive.

    Raises:
        DimensionMismatch: if ``h`` exceeds the joint count.
        DegenerateData: if the data has fewer than ``h`` directions of
            nonzero variance.
    """
    if h < 1 or h > data.m:
        raise DimensionMismatch(f"h={h} must lie in [1, m={data.m}]")
    centred = data.samples - data.samples.mean(axis=0)
    _, s, vt = np.linalg.svd(centred, full_matrices=False)
    tol = max(centred.shape) * np.finfo(float).eps * (s[0] if s.size else 0.0)
    if np.count_nonzero(s > tol) < h:
        raise DegenerateData(
            f"only {np.count_nonzero(s > tol)} nonzero covariance eigenvalues, need {h}"
        )
    var = s**2
    explained = var[:h] / var.sum()
    phi = sign_normalize(vt[:h])
    return SynergyBasis(phi=phi, explained_variance=explained, source_hash=data.digest())


def build_mapping(
    basis: SynergyBasis,
    scheme: str = "first_two",
    *,
    n: int = 2,
    scale: float = 1.0,
    w: np.ndarray | None = None,
    seed: int = 0,
) -> MappingMatrix:
    """Form the interface map ``C = W @ phi``.

    ``scheme`` selects ``W``:

    * ``"first_two"`` (default): ``W = scale * [I_n | 0]``, so the rows of C
      are the leading ``n`` synergies.
    * ``"random"``: Gaussian entries, each row normalised to unit length,
      then multiplied by ``scale``.
    * ``"explicit"``: use the ``w`` argument as given.
    """
    h = basis.h
    if scheme == "first_two":
        if n > h:
            raise DimensionMismatch(f"cannot pick {n} synergies from h={h}")
        weights = np.zeros((n, h))
        weights[:, :n] = np.eye(n)
        weights *= scale
    elif scheme == "random":
        rng = np.random.default_rng(seed)
        weights = rng.standard_normal((n, h))
        weights /= np.linalg.norm(weights, axis=1, keepdims=True)
        weights *= scale
    elif scheme == "explicit":
        if w is None:
            raise InvalidConfig("scheme='explicit' needs a weight matrix")
        weights = np.array(w, dtype=float)
        if weights.ndim != 2 or weights.shape[1] != h:
            raise DimensionMismatch(f"W must have shape (n, {h}), got {weights.shape}")
    else:
        raise InvalidConfig(f"unknown mapping scheme {scheme!r}")
    c = weights @ basis.phi
    if np.linalg.matrix_rank(c) < c.shape[0]:
        raise RankDeficient(f"mapping has rank {np.linalg.matrix_rank(c)} < n={c.shape[0]}")
    return MappingMatrix(c=c, w=weights, basis=basis)


def _factor_model(m, latent_dim, seed):
    rng = np.random.default_rng(seed)
    loadings, _ = np.linalg.qr(rng.standard_normal((m, latent_dim)))
    latent_std = 0.5 * 0.6 ** np.arange(latent_dim)
    mean = rng.uniform(0.2, 0.8, size=m)
    return rng, loadings, latent_std, mean


def factor_model_covariance(m: int, latent_dim: int, seed: int, noise: float = 1e-3):
    """Exact covariance of the generator used by :func:`synthesize_posture_data`."""
    _, loadings, latent_std, _ = _factor_model(m, latent_dim, seed)
    return loadings @ np.diag(latent_std**2) @ loadings.T + noise**2 * np.eye(m)


def synthesize_posture_data(
    m: int = 19,
    latent_dim: int = 4,
    n_samples: int = 5000,
    seed: int = 0,
    *,
    noise: float = 1e-3,
    rate_hz: float = 100.0,
) -> PostureDataset:
    """Synthetic free-exploration postures from a linear Gaussian factor model.

    Each sample is ``mean + L z + noise * e`` with ``L`` an ``m x latent_dim``
    matrix of orthonormal loadings, ``z ~ N(0, diag(0.5 * 0.6**j)**2)`` and
    ``e ~ N(0, I_m)``. Everything is drawn from ``seed``, so the dataset is a
    pure function of the arguments.
    """
    if m < 1 or latent_dim < 1 or latent_dim > m:
        raise InvalidConfig(f"need 1 <= latent_dim <= m, got latent_dim={latent_dim}, m={m}")
    if n_samples <= m:
        raise InvalidConfig(f"n_samples={n_samples} must exceed m={m}")
    if noise < 0:
        raise InvalidConfig("noise must be non-negative")
    rng, loadings, latent_std, mean = _factor_model(m, latent_dim, seed)
    z = rng.standard_normal((n_samples, latent_dim)) * latent_std
    samples = mean + z @ loadings.T + noise * rng.standard_normal((n_samples, m))
    return PostureDataset(samples=samples, rate_hz=rate_hz)


def default_mapping(seed: int = 0, *, m: int = 19, h: int = 4, scale: float = 1.0) -> MappingMatrix:
    """Synergies from synthetic exploration data and the two-synergy map."""
    data = synthesize_posture_data(m=m, latent_dim=h, n_samples=5000, seed=seed)
    return build_mapping(build_synergy_basis(data, h), scale=scale)


def load_posture_csv(path, rate_hz: float = 100.0) -> PostureDataset:
    """Read one posture per row (radians); a non-numeric first row is a header."""
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if rows:
        try:
            [float(v) for v in rows[0]]
        except ValueError:
            rows = rows[1:]
    if not rows:
        raise DegenerateData(f"{path}: no posture samples")
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise DimensionMismatch(f"{path}: rows have differing column counts {sorted(widths)}")
    return PostureDataset(samples=np.array(rows, dtype=float), rate_hz=rate_hz)


def save_basis(basis: SynergyBasis, path) -> Path:
    """Write ``phi`` as CSV (h rows, m columns) plus a JSON sidecar."""
    path = Path(path)
    np.savetxt(path, basis.phi, delimiter=",", fmt="%.17g")
    meta = {
        "h": basis.h,
        "m": basis.m,
        "explained_variance": [float(v) for v in basis.explained_variance],
        "source_hash": basis.source_hash,
    }
    path.with_suffix(".json").write_text(json.dumps(meta, indent=2))
    return path


def load_basis(path) -> SynergyBasis:
    path = Path(path)
    meta = json.loads(path.with_suffix(".json").read_text())
    phi = np.atleast_2d(np.loadtxt(path, delimiter=","))
    if phi.shape != (meta["h"], meta["m"]):
        raise DimensionMismatch(f"{path}: shape {phi.shape} disagrees with sidecar")
    return SynergyBasis(
        phi=phi,
        explained_variance=np.array(meta["explained_variance"]),
        source_hash=meta.get("source_hash", ""),
    )
