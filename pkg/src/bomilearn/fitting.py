"""Parameter estimation from trajectory data.

``fit_eta`` fits ``alpha * exp(-eta * k) + c`` to a reaching-error learning
curve; ``fit_gamma`` grid-searches the forward learning rate that best
reproduces recorded joint trajectories.
"""
from __future__ import annotations

import dataclasses
import hashlib
import json
import warnings
from pathlib import Path

import numpy as np

from .dynamics import ModelParams
from .errors import Diverged, FitDiverged, NonDecreasingSeries, TimescaleOrderingWarning
from .metrics import MetricSeries, group_and_smooth, reaching_error
from .protocol import ExperimentConfig, run_experiment
from .synergy import MappingMatrix

__all__ = [
    "FitResult",
    "ExpFit",
    "exp_model",
    "fit_eta",
    "r_squared",
    "re_learning_curve",
    "trajectory_mismatch",
    "fit_gamma",
    "synthetic_subject",
    "save_fit",
]

ETA_STARTS = (0.01, 0.05, 0.2)


@dataclasses.dataclass(frozen=True)
class ExpFit:
    eta: float
    alpha: float
    c: float
    r_squared: float
    ssr: float


@dataclasses.dataclass
class FitResult:
    eta_hat: float
    alpha_hat: float
    c_hat: float
    r_squared: float
    gamma_hat: float | None = None
    gamma_objective_curve: list = dataclasses.field(default_factory=list)
    gamma_range: tuple | None = None

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["gamma_objective_curve"] = [[float(g), float(o)] for g, o in self.gamma_objective_curve]
        d["gamma_range"] = None if self.gamma_range is None else list(self.gamma_range)
        return d


def exp_model(k, alpha, eta, c):
    return alpha * np.exp(-eta * np.asarray(k, dtype=float)) + c


def r_squared(y, fitted) -> float:
    """``1 - SS_res / SS_tot`` clipped to [0, 1]; a flat series scores 1 if fitted exactly."""
    y = np.asarray(y, dtype=float)
    ss_res = float(np.sum((y - fitted) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot == 0.0:
        return 1.0 if ss_res <= 1e-24 * max(1.0, float(np.sum(y**2))) else 0.0
    return float(min(1.0, max(0.0, 1.0 - ss_res / ss_tot)))


def _levenberg_marquardt(k, y, theta, max_iter=500, tol=1e-15):
    """Damped Gauss-Newton on theta = (alpha, eta, c) with the analytic Jacobian."""
    lam = 1e-3

    def resid(th):
        return exp_model(k, th[0], th[1], th[2]) - y

    r = resid(theta)
    cost = r @ r
    for _ in range(max_iter):
        e = np.exp(-theta[1] * k)
        jac = np.column_stack([e, -theta[0] * k * e, np.ones_like(k)])
        jtj = jac.T @ jac
        g = jac.T @ r
        if np.max(np.abs(g)) <= tol * max(1.0, cost):
            break
        improved = False
        while lam < 1e16:
            a = jtj + lam * np.diag(np.maximum(np.diag(jtj), 1e-12))
            try:
                delta = np.linalg.solve(a, -g)
            except np.linalg.LinAlgError:
                lam *= 10
                continue
            cand = theta + delta
            r_new = resid(cand)
            cost_new = r_new @ r_new
            if np.isfinite(cost_new) and cost_new <= cost:
                small = np.max(np.abs(delta) / (np.abs(theta) + 1e-12)) < 1e-14
                theta, r, cost = cand, r_new, cost_new
                lam = max(lam / 10, 1e-15)
                improved = True
                break
            lam *= 10
        if not improved or small:
            break
    return theta, cost


def fit_eta(series: MetricSeries) -> ExpFit:
    """Least-squares fit of ``alpha * exp(-eta * k) + c`` to a learning curve.

    Multi-start from ``eta0`` in (0.01, 0.05, 0.2) with ``alpha0 = max - min``
    and ``c0 = min``; the lowest residual wins. Warns with
    :class:`NonDecreasingSeries` if the best fit does not decay.
    """
    k = np.asarray(series.k, dtype=float)
    y = np.asarray(series.values, dtype=float)
    if len(y) < 10:
        raise ValueError("need at least 10 points to fit a learning curve")
    best = None
    for eta0 in ETA_STARTS:
        theta0 = np.array([y.max() - y.min(), eta0, y.min()])
        with np.errstate(over="ignore", invalid="ignore"):
            theta, cost = _levenberg_marquardt(k, y, theta0)
        if np.all(np.isfinite(theta)) and np.isfinite(cost) and (best is None or cost < best[1]):
            best = (theta, cost)
    if best is None:
        raise FitDiverged("exponential fit failed from every starting point")
    (alpha, eta, c), cost = best
    if not alpha * eta > 1e-12:
        warnings.warn("learning curve does not decay; eta is not identifiable",
                      NonDecreasingSeries, stacklevel=2)
    fitted = exp_model(k, alpha, eta, c)
    return ExpFit(eta=float(eta), alpha=float(alpha), c=float(c),
                  r_squared=r_squared(y, fitted), ssr=float(cost))


def re_learning_curve(records, window: int = 10) -> MetricSeries:
    """Reaching error grouped by target pair across sessions and smoothed."""
    return group_and_smooth(reaching_error(records), records, window)


def trajectory_mismatch(reference, model) -> float:
    """Sum over trials of the Frobenius norm of joint-trajectory differences.

    Only samples whose time stamps appear in both trials are compared, so a
    trial that ended earlier in one run contributes its common prefix.
    """
    if len(reference) != len(model):
        raise ValueError("reference and model must have the same number of trials")
    total = 0.0
    for ref, mod in zip(reference, model):
        _, i, j = np.intersect1d(ref.t, mod.t, assume_unique=True, return_indices=True)
        total += float(np.linalg.norm(ref.joint_traj[i] - mod.joint_traj[j]))
    return total


def _grid(lo, hi, step):
    first = int(np.ceil(lo / step - 1e-9))
    last = int(np.floor(hi / step + 1e-9))
    return np.round(np.arange(first, last + 1) * step, 12)


def fit_gamma(
    reference,
    cfg: ExperimentConfig,
    mapping: MappingMatrix,
    params: ModelParams,
    gamma_range=(0.0, 10.0),
    *,
    coarse_step: float = 0.1,
    fine_step: float = 0.002,
):
    """Grid search for the forward learning rate.

    Every candidate replays the full experiment with the reference's
    configuration and seed (so targets and noise line up) and only ``gamma``
    changed. A coarse pass over ``gamma_range`` is refined with
    ``fine_step`` within one coarse step of the coarse minimum. Diverging
    candidates score ``inf``. Ties go to the smallest gamma.

    Returns ``(gamma_hat, curve)`` with ``curve`` a sorted list of
    ``(gamma, objective)`` pairs over every evaluated candidate.
    """
    lo, hi = gamma_range
    if hi < lo:
        raise ValueError("gamma_range must be (low, high)")
    evaluated: dict = {}

    def objective(g):
        if g not in evaluated:
            try:
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore", TimescaleOrderingWarning)
                    cand = params.replace(gamma=float(g))
                    evaluated[g] = trajectory_mismatch(reference, run_experiment(cfg, mapping, cand))
            except Diverged:
                evaluated[g] = np.inf
        return evaluated[g]

    coarse = _grid(lo, hi, coarse_step)
    scores = [objective(g) for g in coarse]
    g0 = coarse[int(np.argmin(scores))]
    for g in _grid(max(lo, g0 - coarse_step), min(hi, g0 + coarse_step), fine_step):
        objective(g)
    curve = sorted(evaluated.items())
    gammas = np.array([g for g, _ in curve])
    values = np.array([v for _, v in curve])
    return float(gammas[int(np.argmin(values))]), curve


def synthetic_subject(params: ModelParams, cfg: ExperimentConfig, seed: int,
                      mapping: MappingMatrix):
    """Records of a simulated subject, used as reference data for fitting."""
    return run_experiment(cfg.replace(seed=seed), mapping, params)


def config_hash(obj) -> str:
    return hashlib.sha256(json.dumps(obj, sort_keys=True).encode()).hexdigest()[:16]


def save_fit(result: FitResult, path, *, config: dict | None = None) -> Path:
    path = Path(path)
    report = {"fit": result.to_dict(), "config": config or {},
              "config_hash": config_hash(config or {})}
    path.write_text(json.dumps(report, indent=2))
    return path
