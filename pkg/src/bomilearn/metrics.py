"""Performance measures: reaching error, forward-model error, mapping modes."""
from __future__ import annotations

import dataclasses
import warnings
from pathlib import Path

import numpy as np
import scipy.linalg

from .errors import EmptyGroup, ZeroTrueMapping
from .synergy import sign_normalize

__all__ = [
    "MetricSeries",
    "SvdModes",
    "reaching_error",
    "forward_model_error",
    "fme_series",
    "group_and_smooth",
    "moving_average",
    "svd_modes",
    "subspace_angle",
    "session_means",
    "save_series",
    "load_series",
]


@dataclasses.dataclass(frozen=True)
class MetricSeries:
    k: np.ndarray  # strictly increasing indices
    values: np.ndarray
    kind: str  # "RE" or "FME"
    smoothing: str = "none"

    def __post_init__(self):
        k = np.asarray(self.k)
        v = np.asarray(self.values, dtype=float)
        if k.shape != v.shape or k.ndim != 1:
            raise ValueError("indices and values must be 1-D and equally long")
        if np.any(np.diff(k) <= 0):
            raise ValueError("metric indices must be strictly increasing")
        if np.any(v < 0):
            raise ValueError(f"{self.kind} values must be non-negative")
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "values", v)

    def __len__(self):
        return len(self.values)


@dataclasses.dataclass(frozen=True)
class SvdModes:
    left: np.ndarray  # (n, n)
    singular_values: np.ndarray
    right: np.ndarray  # (m, m), rows are joint-space modes


def reaching_error(records) -> MetricSeries:
    """Final cursor-to-target distance of each trial, indexed 1..N in trial order."""
    values = [r.final_error for r in records]
    return MetricSeries(k=np.arange(1, len(values) + 1), values=np.array(values), kind="RE")


def forward_model_error(w_hat, w) -> float:
    """``|W - W_hat|_F / |W|_F``; equals the same ratio for the joint-space maps."""
    w = np.asarray(w, dtype=float)
    norm = np.linalg.norm(w)
    if norm == 0:
        raise ZeroTrueMapping("true synergy weights are all zero")
    return float(np.linalg.norm(w - np.asarray(w_hat, dtype=float)) / norm)


def fme_series(records, w) -> MetricSeries:
    values = [forward_model_error(r.w_hat_final, w) for r in records]
    return MetricSeries(k=np.arange(1, len(values) + 1), values=np.array(values), kind="FME")


def moving_average(values, window: int) -> np.ndarray:
    """Trailing mean over ``window`` samples; the first ``window - 1`` use what exists."""
    if window < 1:
        raise ValueError("window must be >= 1")
    v = np.asarray(values, dtype=float)
    csum = np.concatenate([[0.0], np.cumsum(v)])
    idx = np.arange(1, len(v) + 1)
    lo = np.maximum(idx - window, 0)
    return (csum[idx] - csum[lo]) / (idx - lo)


def group_and_smooth(series: MetricSeries, records, window: int = 10) -> MetricSeries:
    """Average trials sharing a (start target, end target) pair, then smooth.

    Trials are grouped by the pair of targets they move between. Value ``i``
    of the output is the mean over groups of each group's ``i``-th
    occurrence (groups shorter than ``i + 1`` drop out), followed by a
    trailing moving average over ``window`` points.
    """
    if len(series) != len(records):
        raise ValueError("series and records must describe the same trials")
    groups: dict = {}
    for value, rec in zip(series.values, records):
        groups.setdefault((rec.start_idx, rec.target_idx), []).append(value)
    if not groups:
        raise EmptyGroup("no trials to group")
    length = max(len(g) for g in groups.values())
    sums = np.zeros(length)
    counts = np.zeros(length)
    for g in groups.values():
        sums[: len(g)] += g
        counts[: len(g)] += 1
    averaged = sums / counts
    return MetricSeries(
        k=np.arange(1, length + 1),
        values=moving_average(averaged, window),
        kind=series.kind,
        smoothing=f"grouped by (start, target), {len(groups)} groups; trailing mean window={window}",
    )


def svd_modes(c_like) -> SvdModes:
    """Full SVD, each right mode signed so its largest-magnitude entry is positive."""
    a = np.asarray(c_like, dtype=float)
    u, s, vt = np.linalg.svd(a, full_matrices=True)
    vt, u = sign_normalize(vt, partner=u)
    return SvdModes(left=u, singular_values=s, right=vt)


def subspace_angle(a, b, k: int | None = None) -> float:
    """Largest principal angle (radians) between the top-``k`` right-singular
    subspaces of ``a`` and ``b``; ``k`` defaults to the row count of ``a``.

    Zero singular directions are still included, so a zero matrix compares
    via its (arbitrary but deterministic) SVD basis.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    k = a.shape[0] if k is None else k
    va = svd_modes(a).right[:k]
    vb = svd_modes(b).right[:k]
    return float(np.max(scipy.linalg.subspace_angles(va.T, vb.T)))


def session_means(series: MetricSeries, records) -> np.ndarray:
    """Mean of the per-trial values within each session, in session order."""
    sessions = np.array([r.session_idx for r in records])
    return np.array([series.values[sessions == s].mean() for s in np.unique(sessions)])


def save_series(series: MetricSeries, path) -> Path:
    path = Path(path)
    with open(path, "w") as fh:
        fh.write("k,value\n")
        if len(series):
            np.savetxt(fh, np.column_stack([series.k, series.values]), delimiter=",",
                       fmt=["%d", "%.17g"])
    return path


def load_series(path, kind: str = "RE") -> MetricSeries:
    with warnings.catch_warnings():
        # a header-only file is a valid empty series
        warnings.simplefilter("ignore", UserWarning)
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.size == 0:
        return MetricSeries(k=np.array([], dtype=int), values=np.array([]), kind=kind)
    return MetricSeries(k=data[:, 0].astype(int), values=data[:, 1], kind=kind)
