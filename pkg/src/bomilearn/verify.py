"""Numerical checks of the stability analysis of the learning model.

The learning model is studied in singular-perturbation form. With the
shifted error ``e_bar = k_p * e_x``, the weight error ``W_t = W_hat - W`` and
slow time ``tau = k_p * t`` (``t`` in ticks) the model reads

    eps_u  du/dtau     = f1(u, e_bar, W_hat)
           de_bar/dtau = f2(u)
    eps_d  ddq/dtau    = f3(dq, u)
    eps_w  dW_t/dtau   = g(W_t, dq)

with ``eps_u = k_p/eta``, ``eps_d = k_p/a`` and ``eps_w = k_p/gamma``. The
reduced system freezes ``W_hat = W`` and drops ``dq``; the boundary layer
freezes ``u`` and runs in the fast time ``tau_w = tau / eps_w = gamma * t``.
Exploration noise enters the ``u`` equation as ``sigma dB(tau)``.
"""
from __future__ import annotations

import dataclasses
import warnings

import numpy as np
import scipy.linalg

from .dynamics import ModelParams, NoiseSchedule, LearnerState, step
from .errors import Diverged, WindowTooLong
from .synergy import MappingMatrix

__all__ = [
    "GramianReport",
    "LyapunovReport",
    "ReducedTrajectory",
    "BoundaryTrajectory",
    "FullTrajectory",
    "ScanReport",
    "f1",
    "f2",
    "f3",
    "g",
    "pe_gramian",
    "lyapunov_rate",
    "reduced_matrix",
    "simulate_reduced",
    "multisine_excitation",
    "simulate_boundary_layer",
    "decay_rate",
    "simulate_full",
    "theorem_neighborhood_scan",
    "epsilon_w_sweep",
    "lyapunov_check",
    "noise_signal",
    "realized_delta_q",
    "central_difference",
    "run_suite",
]

PE_THRESHOLD = 1e-10


# singular-perturbation right-hand sides ----------------------------------

def f1(u, e_bar, w_hat, phi, mu):
    """``-((C_hat^T C_hat + mu I) u - C_hat^T e_bar)`` with ``C_hat = w_hat phi``."""
    c_hat = np.asarray(w_hat) @ phi
    return -(c_hat.T @ (c_hat @ u - e_bar) + mu * np.asarray(u))


def f2(u, w, phi):
    """``-W phi u``."""
    return -(np.asarray(w) @ phi) @ u


def f3(dq, u, a):
    """``-dq + u / a``."""
    return -np.asarray(dq) + np.asarray(u) / a


def g(w_tilde, dq, phi):
    """``-W_t phi dq (phi dq)^T``."""
    p = phi @ dq
    return -np.outer(np.asarray(w_tilde) @ p, p)


# persistent excitation ------------------------------------------------------

@dataclasses.dataclass(frozen=True)
class GramianReport:
    window_length: float
    min_eig: float  # alpha_1, smallest eigenvalue over all windows
    max_eig: float  # alpha_2, largest eigenvalue over all windows
    windows_checked: int
    pe_satisfied: bool
    threshold: float = PE_THRESHOLD

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def pe_gramian(signal, window: float, dt: float = 1.0, *, threshold: float = PE_THRESHOLD,
               ) -> GramianReport:
    """Windowed Gramians ``int_s^{s+T} w w^T`` of a uniformly sampled signal.

    Every window start on the sample grid is checked; integrals use the
    trapezoid rule. The signal must last at least two windows.
    """
    w = np.asarray(signal, dtype=float)
    if w.ndim == 1:
        w = w[:, None]
    n_win = int(round(window / dt))
    if n_win < 1:
        raise WindowTooLong("window shorter than one sample")
    if w.shape[0] - 1 < 2 * n_win:
        raise WindowTooLong(
            f"signal spans {(w.shape[0] - 1) * dt:g}, need at least 2T = {2 * window:g}")
    outer = w[:, :, None] * w[:, None, :]
    panels = 0.5 * dt * (outer[1:] + outer[:-1])
    cum = np.concatenate([np.zeros((1,) + panels.shape[1:]), np.cumsum(panels, axis=0)])
    grams = cum[n_win:] - cum[:-n_win]
    grams = 0.5 * (grams + np.swapaxes(grams, 1, 2))
    eig = np.linalg.eigvalsh(grams)
    lo = max(float(eig[:, 0].min()), 0.0)
    return GramianReport(window_length=float(window), min_eig=lo,
                         max_eig=float(eig[:, -1].max()), windows_checked=len(grams),
                         pe_satisfied=bool(lo > threshold), threshold=threshold)


def noise_signal(noise: NoiseSchedule, n_ticks: int, m: int, session: int = 0, seed: int = 0):
    """Exploration-noise velocities ``sqrt(var(t)) z`` over the first ``n_ticks`` of a session."""
    rng = np.random.default_rng(seed if noise.seed is None else noise.seed)
    var = noise.variance(np.arange(n_ticks, dtype=float), session)
    return np.sqrt(var)[:, None] * rng.standard_normal((n_ticks, m))


def realized_delta_q(mapping: MappingMatrix, params: ModelParams, n_ticks: int,
                     target=(4.5, 4.5), start=(2.5, 2.5), seed: int = 0):
    """``delta_q`` of the full learning model driven toward one target."""
    rng = np.random.default_rng(seed)
    state = LearnerState.initial(mapping, np.asarray(start, float), params.a)
    out = np.empty((n_ticks, mapping.basis.m))
    for k in range(n_ticks):
        out[k] = state.delta_q
        state = step(state, mapping, params, np.asarray(target, float), 1.0, rng, t=float(k))
    return out


# reduced system ------------------------------------------------------------

@dataclasses.dataclass
class ReducedTrajectory:
    tau: np.ndarray  # (N,)
    u: np.ndarray  # (..., N, m)
    e_bar: np.ndarray  # (..., N, r)
    c: np.ndarray  # (r, m) frozen map
    eps_u: float
    mu: float

    def reversed(self) -> "ReducedTrajectory":
        return dataclasses.replace(self, u=self.u[..., ::-1, :].copy(),
                                   e_bar=self.e_bar[..., ::-1, :].copy())


def lyapunov_rate(c, mu: float) -> float:
    """``lambda_min(C^T C + mu I)``, the decay constant in the reduced-system bound."""
    c = np.atleast_2d(np.asarray(c, dtype=float))
    return float(np.linalg.eigvalsh(c.T @ c + mu * np.eye(c.shape[1]))[0])


def reduced_matrix(c, eps_u: float, mu: float) -> np.ndarray:
    """System matrix of the linear reduced system in ``z = (u, e_bar)``."""
    c = np.atleast_2d(np.asarray(c, dtype=float))
    r, m = c.shape
    a = np.zeros((m + r, m + r))
    a[:m, :m] = -(c.T @ c + mu * np.eye(m)) / eps_u
    a[:m, m:] = c.T / eps_u
    a[m:, :m] = -c
    return a


def simulate_reduced(params: ModelParams, c, init, *, horizon: float | None = None,
                     dtau: float | None = None) -> ReducedTrajectory:
    """Sample the reduced system with ``W_hat`` frozen at the true map.

    ``c`` is usually one row of the interface map (a scalar output channel).
    ``init`` stacks ``(u, e_bar)``, one row per initial condition. The system
    is linear, so trajectories are sampled exactly with the matrix
    exponential of one step. The default horizon lets the slowest mode decay
    by a factor 1e8; the default step is 1/50 of the fastest time constant.
    """
    c = np.atleast_2d(np.asarray(c, dtype=float))
    r, m = c.shape
    z0 = np.atleast_2d(np.asarray(init, dtype=float))
    if z0.shape[1] != m + r:
        raise ValueError(f"initial states need {m + r} entries (u then e_bar)")
    a = reduced_matrix(c, params.eps_u, params.mu)
    lam = np.linalg.eigvals(a)
    if np.max(lam.real) >= 0:
        raise Diverged("reduced system is not asymptotically stable")
    if dtau is None:
        dtau = 0.02 / np.max(np.abs(lam))
    if horizon is None:
        horizon = np.log(1e8) / np.min(-lam.real)
    n_steps = int(np.ceil(horizon / dtau))
    prop = scipy.linalg.expm(a * dtau)
    z = np.empty((z0.shape[0], n_steps + 1, m + r))
    z[:, 0] = z0
    for k in range(n_steps):
        z[:, k + 1] = z[:, k] @ prop.T
    if not np.all(np.isfinite(z)):
        raise Diverged("reduced trajectory became non-finite")
    return ReducedTrajectory(tau=np.arange(n_steps + 1) * dtau, u=z[..., :m], e_bar=z[..., m:],
                             c=c, eps_u=params.eps_u, mu=params.mu)


# boundary layer -------------------------------------------------------------

@dataclasses.dataclass
class BoundaryTrajectory:
    tau_w: np.ndarray
    w_tilde: np.ndarray  # (N, r, h)
    dq: np.ndarray  # (N, m)
    u_frozen: np.ndarray
    a: float
    weight: float  # weight of |dq - u/a|^2 in V_b
    excited: bool


def multisine_excitation(phi, amplitude: float = 1.0, freqs=(0.3, 0.7, 1.1, 1.7)):
    """Joint-space excitation ``phi^T s(tau)`` with one sinusoid per synergy."""
    freqs = np.asarray(freqs, dtype=float)[: phi.shape[0]]
    if len(freqs) < phi.shape[0]:
        raise ValueError("need one frequency per synergy")

    def excite(tau):
        return amplitude * (phi.T @ np.sin(freqs * tau))
    return excite


def simulate_boundary_layer(params: ModelParams, basis, w_row, u_frozen, init=None, *,
                            horizon: float = 150.0, dtau: float = 0.01, excitation=None,
                            ) -> BoundaryTrajectory:
    """Fast subsystem ``dW_t/dtau_w = g``, ``d dq/dtau_w = (a/gamma) f3(dq, u + v(tau_w))``.

    ``u`` is frozen; ``excitation`` is an optional joint-velocity signal
    ``v(tau_w)`` added to it to make ``dq`` persistently exciting. ``init``
    is ``(W_t0, dq0)`` and defaults to a unit-norm ``W_t0`` with ``dq0 = u/a``.
    Integration is classical fixed-step RK4.
    """
    phi = basis.phi if hasattr(basis, "phi") else np.asarray(basis, dtype=float)
    w_row = np.atleast_2d(np.asarray(w_row, dtype=float))
    u = np.asarray(u_frozen, dtype=float)
    a = params.a
    if params.gamma <= 0:
        raise ValueError("boundary layer needs gamma > 0")
    ratio = a / params.gamma
    if init is None:
        w0 = np.ones_like(w_row) / np.sqrt(w_row.size)
        dq0 = u / a
    else:
        w0, dq0 = (np.array(v, dtype=float) for v in init)
    r, h = w_row.shape

    def rhs(tau, wt, dq):
        drive = u if excitation is None else u + excitation(tau)
        return g(wt, dq, phi), ratio * f3(dq, drive, a)

    n_steps = int(np.ceil(horizon / dtau))
    wts = np.empty((n_steps + 1, r, h))
    dqs = np.empty((n_steps + 1, len(u)))
    wts[0], dqs[0] = w0, dq0
    for k in range(n_steps):
        tau, wt, dq = k * dtau, wts[k], dqs[k]
        k1 = rhs(tau, wt, dq)
        k2 = rhs(tau + dtau / 2, wt + dtau / 2 * k1[0], dq + dtau / 2 * k1[1])
        k3 = rhs(tau + dtau / 2, wt + dtau / 2 * k2[0], dq + dtau / 2 * k2[1])
        k4 = rhs(tau + dtau, wt + dtau * k3[0], dq + dtau * k3[1])
        wts[k + 1] = wt + dtau / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
        dqs[k + 1] = dq + dtau / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
        if not (np.all(np.isfinite(wts[k + 1])) and np.all(np.isfinite(dqs[k + 1]))):
            raise Diverged("boundary-layer trajectory became non-finite")
    return BoundaryTrajectory(tau_w=np.arange(n_steps + 1) * dtau, w_tilde=wts, dq=dqs,
                              u_frozen=u, a=a, weight=params.eps_delta / params.eps_w,
                              excited=excitation is not None)


def decay_rate(tau, norms, *, skip: float = 0.1, floor: float = 1e-300):
    """Log-linear fit of a decaying envelope after dropping the first ``skip`` fraction.

    Returns ``(slope, r_squared)``; a negative slope is exponential decay
    with rate ``-slope``.
    """
    tau = np.asarray(tau, dtype=float)
    norms = np.asarray(norms, dtype=float)
    keep = slice(int(np.floor(skip * len(tau))), None)
    x, y = tau[keep], np.log(np.maximum(norms[keep], floor))
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = np.sum((y - y.mean()) ** 2)
    r2 = 1.0 - np.sum(resid**2) / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(r2)


# full system ------------------------------------------------------------------

@dataclasses.dataclass
class FullTrajectory:
    tau: np.ndarray
    u: np.ndarray  # (B, N, m)
    e_bar: np.ndarray  # (B, N, r)
    dq: np.ndarray  # (B, N, m)
    w_tilde: np.ndarray  # (B, N, r, h)
    params: ModelParams


def _full_init(mapping, batch, init, rng_init):
    m, (r, h) = mapping.basis.m, mapping.w.shape
    if init is None:
        e0 = 0.5 * rng_init.standard_normal(r)
        w0 = 0.2 * rng_init.standard_normal((r, h))
        init = (np.zeros(m), e0, np.zeros(m), w0)
    u0, e0, dq0, w0 = (np.asarray(v, dtype=float) for v in init)
    return (np.tile(u0, (batch, 1)), np.tile(e0, (batch, 1)), np.tile(dq0, (batch, 1)),
            np.tile(w0, (batch, 1, 1)))


def simulate_full(params: ModelParams, mapping: MappingMatrix, sigmas, *, seeds=(0,),
                  horizon: float = 300.0, dtau: float = 0.01, init=None, eps_w=None,
                  keep_every: int = 10, tail: float = 0.2, init_seed: int = 12345,
                  bound: float = 1e6):
    """Euler-Maruyama integration of the full system in slow time ``tau``.

    One run per (sigma, seed) pair, batched. ``sigma`` scales the Brownian
    increments of ``u``. ``eps_w`` (scalar or one per sigma) overrides the
    weight-learning timescale. ``init`` is ``(u0, e_bar0, dq0, W_t0)``; by
    default ``u0 = dq0 = 0`` and ``e_bar0``, ``W_t0`` are random, drawn from
    ``init_seed`` and shared by every run.

    Returns ``(trajectory, tail_mean)``: the trajectory is subsampled every
    ``keep_every`` steps; ``tail_mean`` is the time-average of
    ``|(u, e_bar, W_t)|`` over the final ``tail`` fraction, shape
    ``(len(sigmas), len(seeds))``.
    """
    sigmas = np.atleast_1d(np.asarray(sigmas, dtype=float))
    seeds = list(seeds)
    n_s, n_seed = len(sigmas), len(seeds)
    batch = n_s * n_seed
    w, phi = mapping.w, mapping.basis.phi
    c = w @ phi
    eps_w = np.broadcast_to(np.asarray(params.eps_w if eps_w is None else eps_w, float), (n_s,))
    inv_ew = np.repeat(1.0 / eps_w, n_seed)[:, None, None]
    sig = np.repeat(sigmas, n_seed)[:, None]
    u, e, dq, wt = _full_init(mapping, batch, init, np.random.default_rng(init_seed))
    rngs = [np.random.default_rng(s) for s in seeds]
    n_steps = int(np.ceil(horizon / dtau))
    first_tail = int(np.floor((1 - tail) * n_steps))
    acc = np.zeros(batch)
    keep = list(range(0, n_steps + 1, keep_every))
    rec = {k: [] for k in ("u", "e", "dq", "wt")}
    sq = np.sqrt(dtau)
    mu, a, inv_eu, inv_ed = params.mu, params.a, 1.0 / params.eps_u, 1.0 / params.eps_delta
    for k in range(n_steps + 1):
        if k % keep_every == 0:
            for key, val in zip(rec, (u, e, dq, wt)):
                rec[key].append(val.copy())
        if k >= first_tail:
            acc += np.sqrt((u**2).sum(1) + (e**2).sum(1) + (wt**2).sum((1, 2)))
        if k == n_steps:
            break
        c_hat = (w + wt) @ phi
        resid = np.einsum("bnm,bm->bn", c_hat, u) - e
        du = -(np.einsum("bnm,bn->bm", c_hat, resid) + mu * u) * inv_eu
        de = -u @ c.T
        ddq = (-dq + u / a) * inv_ed
        p = dq @ phi.T
        dw = -np.einsum("bnh,bh->bn", wt, p)[:, :, None] * p[:, None, :] * inv_ew
        z = np.concatenate([r.standard_normal((1, u.shape[1])) for r in rngs] * n_s)
        u = u + dtau * du + sig * sq * z
        e = e + dtau * de
        dq = dq + dtau * ddq
        wt = wt + dtau * dw
        if not np.all(np.isfinite(u)) or np.max(np.abs(u)) > bound:
            raise Diverged("full-system trajectory left the bounded region")
    traj = FullTrajectory(
        tau=np.array(keep) * dtau,
        u=np.stack(rec["u"], axis=1), e_bar=np.stack(rec["e"], axis=1),
        dq=np.stack(rec["dq"], axis=1), w_tilde=np.stack(rec["wt"], axis=1), params=params)
    tail_mean = (acc / (n_steps + 1 - first_tail)).reshape(n_s, n_seed)
    return traj, tail_mean


def _steady(traj: FullTrajectory, groups: int, tail: float = 0.2) -> np.ndarray:
    """Relative change of the tail-window average of the seed-averaged norm
    between the two halves of the window, one value per group of runs.
    Below 0.01 counts as statistically steady."""
    norm = np.sqrt((traj.u**2).sum(-1) + (traj.e_bar**2).sum(-1) + (traj.w_tilde**2).sum((-1, -2)))
    norm = norm.reshape(groups, -1, norm.shape[-1]).mean(1)
    n = norm.shape[1]
    win = max(2, int(tail * n))
    first = norm[:, n - win: n - win // 2].mean(1)
    second = norm[:, n - win // 2:].mean(1)
    return np.abs(second - first) / np.maximum(np.abs(second), 1e-300)


@dataclasses.dataclass
class ScanReport:
    amplitudes: list
    steady_norms: list  # mean over seeds, per amplitude
    per_seed: list
    ratios: list  # successive steady_norms ratios
    ratio_to_amplitude: list
    zero_noise_norm: float
    steady_change: list  # relative drift of the seed-averaged tail mean, per amplitude
    passed_scaling: bool
    passed_zero_noise: bool

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def theorem_neighborhood_scan(params: ModelParams, mapping: MappingMatrix, amplitudes=(0.05, 0.1, 0.2),
                              *, n_seeds: int = 10, horizon: float = 300.0, dtau: float = 0.01,
                              seed: int = 0) -> ScanReport:
    """Steady-state size of ``(u, e_bar, W_t)`` against noise amplitude.

    Each amplitude is run with ``n_seeds`` noise seeds from the same random
    initial condition. The zero-noise reference run starts from ``W_t0 = 0``
    because without noise ``dq`` settles and stops exciting ``W_t``.
    """
    amps = np.asarray(amplitudes, dtype=float)
    if np.any(amps <= 0) or np.any(np.diff(amps) <= 0):
        raise ValueError("amplitudes must be positive and increasing")
    seeds = [seed + i for i in range(n_seeds)]
    traj, tail = simulate_full(params, mapping, amps, seeds=seeds, horizon=horizon, dtau=dtau)
    norms = tail.mean(1)
    drift = _steady(traj, len(amps))
    rng_init = np.random.default_rng(12345)
    r = mapping.n
    e0 = 0.5 * rng_init.standard_normal(r)
    m, h = mapping.basis.m, mapping.basis.h
    init0 = (np.zeros(m), e0, np.zeros(m), np.zeros((r, h)))
    _, tail0 = simulate_full(params, mapping, [0.0], seeds=[seed], horizon=horizon, dtau=dtau,
                             init=init0)
    zero = float(tail0[0, 0])
    ratios = norms[1:] / norms[:-1]
    return ScanReport(
        amplitudes=amps.tolist(), steady_norms=norms.tolist(), per_seed=tail.tolist(),
        ratios=ratios.tolist(), ratio_to_amplitude=(norms / amps).tolist(), zero_noise_norm=zero,
        steady_change=drift.tolist(),
        passed_scaling=bool(np.all((ratios >= 1) & (ratios <= 4))),
        passed_zero_noise=bool(zero < 1e-4))


def epsilon_w_sweep(params: ModelParams, mapping: MappingMatrix, gammas=(0.131, 0.262, 0.524, 1.048),
                    *, sigma: float = 0.1, n_seeds: int = 10, horizon: float = 300.0,
                    dtau: float = 0.01, seed: int = 0):
    """Steady-state norm at fixed noise as ``gamma`` grows (``eps_w`` shrinks).

    Returns a dict with the sweep table and ``non_increasing``: whether the
    least-squares slope of the norm against ``log(gamma)`` is at most zero
    (up to 1e-9 relative).
    """
    gammas = np.asarray(gammas, dtype=float)
    eps_w = params.k_p / gammas
    seeds = [seed + i for i in range(n_seeds)]
    _, tail = simulate_full(params, mapping, np.full(len(gammas), sigma), seeds=seeds,
                            horizon=horizon, dtau=dtau, eps_w=eps_w)
    norms = tail.mean(1)
    slope = np.polyfit(np.log(gammas), norms, 1)[0] if len(gammas) > 1 else 0.0
    return {"gamma": gammas.tolist(), "eps_w": eps_w.tolist(), "steady_norm": norms.tolist(),
            "slope": float(slope), "sigma": sigma,
            "non_increasing": bool(slope <= 1e-9 * max(np.max(norms), 1e-300))}


# Lyapunov checks -------------------------------------------------------------

@dataclasses.dataclass
class LyapunovReport:
    t: np.ndarray
    v: np.ndarray  # (B, N)
    v_dot: np.ndarray  # numerical derivative, (B, N-4) on interior points
    bound: np.ndarray  # (B, N-4)
    max_violation: float  # max(v_dot - bound)
    max_increase: float  # max step-to-step increase of V
    tolerance: float
    passed: bool

    def summary(self) -> dict:
        return {"max_violation": self.max_violation, "max_increase": self.max_increase,
                "tolerance": self.tolerance, "passed": self.passed}


def central_difference(v, h: float):
    """Fourth-order central difference on interior points (drops two at each end)."""
    v = np.asarray(v, dtype=float)
    return (v[..., :-4] - 8 * v[..., 1:-3] + 8 * v[..., 3:-1] - v[..., 4:]) / (12 * h)


def _reduced_v(traj: ReducedTrajectory):
    u, e = traj.u, traj.e_bar
    v = 0.5 * traj.eps_u * (u**2).sum(-1) + 0.5 * (e**2).sum(-1)
    bound = -lyapunov_rate(traj.c, traj.mu) * (u**2).sum(-1)
    return v, bound


def _boundary_v(traj: BoundaryTrajectory):
    off = traj.dq - traj.u_frozen / traj.a
    v = (traj.w_tilde**2).sum((-1, -2)) + traj.weight * (off**2).sum(-1)
    return v[None], np.zeros_like(v)[None]


def _full_v(traj: FullTrajectory, d: float):
    p = traj.params
    vr = 0.5 * p.eps_u * (traj.u**2).sum(-1) + 0.5 * (traj.e_bar**2).sum(-1)
    off = traj.dq - traj.u / p.a
    vb = (traj.w_tilde**2).sum((-1, -2)) + (p.eps_delta / p.eps_w) * (off**2).sum(-1)
    v = (1 - d) * vr + d * vb
    return v, np.zeros_like(v)


def lyapunov_check(traj, system: str | None = None, *, tol: float = 1e-6,
                   monotone_slack: float = 1e-9, composite_weight: float = 0.5) -> LyapunovReport:
    """Evaluate a Lyapunov function along a noise-free trajectory and test its bound.

    ``system`` is ``"reduced"`` (``V = eps_u/2 |u|^2 + 1/2 |e_bar|^2`` with
    ``dV/dtau <= -lambda_min(C^T C + mu I) |u|^2``), ``"boundary"``
    (``V_b = |W_t|_F^2 + (eps_d/eps_w) |dq - u/a|^2``, ``dV_b/dtau_w <= 0``)
    or ``"full"`` (a convex combination of the two, ``dV/dtau <= 0``). It is
    inferred from the trajectory type when omitted. ``dV`` is a fourth-order
    central difference on the sample grid; the check passes if every sample
    satisfies the bound within ``tol`` (scaled by ``max(1, max V)``) and V
    never increases by more than ``monotone_slack`` between samples.
    """
    if system is None:
        system = {ReducedTrajectory: "reduced", BoundaryTrajectory: "boundary",
                  FullTrajectory: "full"}[type(traj)]
    if system == "reduced":
        t = traj.tau
        v, bound = _reduced_v(traj)
    elif system == "boundary":
        t = traj.tau_w
        v, bound = _boundary_v(traj)
    elif system == "full":
        t = traj.tau
        v, bound = _full_v(traj, composite_weight)
    else:
        raise ValueError(f"unknown system {system!r}")
    v = np.atleast_2d(v)
    bound = np.atleast_2d(bound)
    h = t[1] - t[0]
    v_dot = central_difference(v, h)
    b = bound[..., 2:-2]
    scale = max(1.0, float(np.max(np.abs(v))))
    violation = float(np.max(v_dot - b)) if v_dot.size else 0.0
    increase = float(np.max(np.diff(v, axis=-1))) if v.shape[-1] > 1 else 0.0
    passed = violation <= tol * scale and increase <= monotone_slack * scale
    return LyapunovReport(t=t, v=v, v_dot=v_dot, bound=b, max_violation=violation,
                          max_increase=increase, tolerance=tol, passed=bool(passed))


def quiet_params(**changes) -> ModelParams:
    """ModelParams without the timescale-ordering warning (for deliberate sweeps)."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return ModelParams(**changes)


# suite ---------------------------------------------------------------------

DEFAULT_SUITE = {
    "n_inits": 50,
    "amplitudes": [0.05, 0.1, 0.2],
    "n_seeds": 10,
    "horizon": 300.0,
    "dtau": 0.01,
    "sweep_gammas": [0.131, 0.262, 0.524, 1.048],
    "sweep_sigma": 0.1,
    "excitation_amplitude": 0.5,
    "boundary_horizon": 150.0,
    "pe_window": 100,
    "pe_ticks": 6000,
    "seed": 0,
}


def _check(name, ok, required=True, **measured):
    measured.pop("passed", None)
    return {"name": name, "required": required, "passed": bool(ok), **measured}


def run_suite(params: ModelParams, mapping: MappingMatrix, settings: dict | None = None, *,
              quick: bool = False):
    """Run the verification checks and collect a JSON-ready report.

    ``quick`` keeps only the reduced-system and excitation checks. Returns
    ``(report, tables)`` where ``tables`` maps CSV names to
    ``(header, rows)`` sweep data.
    """
    s = {**DEFAULT_SUITE, **(settings or {})}
    rng = np.random.default_rng(s["seed"])
    checks, tables = [], {}
    c_row = mapping.c[:1]
    m = mapping.basis.m

    # reduced system from random initial conditions in the unit ball
    z = rng.standard_normal((s["n_inits"], m + 1))
    z *= rng.uniform(size=(s["n_inits"], 1)) ** (1 / (m + 1)) / np.linalg.norm(z, axis=1, keepdims=True)
    traj = simulate_reduced(params, c_row, z)
    final = np.sqrt((traj.u[:, -1] ** 2).sum(-1) + (traj.e_bar[:, -1] ** 2).sum(-1))
    lyap = lyapunov_check(traj)
    alpha1 = lyapunov_rate(c_row, params.mu)
    checks.append(_check("reduced_convergence", final.max() < 1e-4, max_final_norm=float(final.max()),
                         horizon=float(traj.tau[-1])))
    checks.append(_check("reduced_lyapunov", lyap.passed, alpha1=alpha1, **lyap.summary()))
    rev = lyapunov_check(traj.reversed())
    checks.append(_check("reduced_lyapunov_negative_control", not rev.passed,
                         max_violation=rev.max_violation))

    # excitation of the exploration noise and of the realized filter state
    pe_noise = pe_gramian(noise_signal(params.noise, s["pe_ticks"], m, seed=s["seed"]), s["pe_window"])
    checks.append(_check("pe_noise", pe_noise.pe_satisfied, **pe_noise.to_dict()))
    pe_dq = pe_gramian(realized_delta_q(mapping, params, 20 * s["pe_window"], seed=s["seed"]),
                       s["pe_window"])
    checks.append(_check("pe_delta_q", pe_dq.pe_satisfied, **pe_dq.to_dict()))

    if not quick:
        u = 0.1 * rng.standard_normal(m)
        w_row = mapping.w[:1]
        bl = simulate_boundary_layer(params, mapping.basis, w_row, u, horizon=s["boundary_horizon"],
                                     excitation=multisine_excitation(mapping.basis.phi,
                                                                     s["excitation_amplitude"]))
        slope, r2 = decay_rate(bl.tau_w, np.linalg.norm(bl.w_tilde, axis=(1, 2)))
        checks.append(_check("boundary_exponential_decay", slope < 0 and r2 > 0.95, rate=-slope,
                             r_squared=r2))
        w0 = np.ones_like(w_row)
        still = simulate_boundary_layer(params, mapping.basis, w_row, np.zeros(m),
                                        init=(w0, np.zeros(m)), horizon=10.0)
        drift = float(np.max(np.abs(still.w_tilde - w0)))
        checks.append(_check("boundary_stationary_without_excitation", drift == 0.0, max_drift=drift))
        free = simulate_boundary_layer(params, mapping.basis, w_row, u, init=(w0, np.zeros(m)),
                                       horizon=s["boundary_horizon"])
        checks.append(_check("boundary_lyapunov", lyapunov_check(free).passed,
                             **lyapunov_check(free).summary()))

        scan = theorem_neighborhood_scan(params, mapping, s["amplitudes"], n_seeds=s["n_seeds"],
                                         horizon=s["horizon"], dtau=s["dtau"], seed=s["seed"])
        checks.append(_check("theorem_scaling", scan.passed_scaling, ratios=scan.ratios,
                             steady_norms=scan.steady_norms, steady_change=scan.steady_change))
        checks.append(_check("theorem_zero_noise", scan.passed_zero_noise,
                             zero_noise_norm=scan.zero_noise_norm))
        tables["theorem_scan.csv"] = (["amplitude", "steady_norm", "ratio_to_amplitude"],
                                      list(zip(scan.amplitudes, scan.steady_norms,
                                               scan.ratio_to_amplitude)))
        sweep = epsilon_w_sweep(params, mapping, s["sweep_gammas"], sigma=s["sweep_sigma"],
                                n_seeds=s["n_seeds"], horizon=s["horizon"], dtau=s["dtau"],
                                seed=s["seed"])
        checks.append(_check("eps_w_sweep_non_increasing", sweep["non_increasing"], slope=sweep["slope"],
                             largest_eps_w_tested=max(sweep["eps_w"])))
        tables["eps_w_sweep.csv"] = (["gamma", "eps_w", "steady_norm"],
                                     list(zip(sweep["gamma"], sweep["eps_w"], sweep["steady_norm"])))

        full, _ = simulate_full(params, mapping, [0.0], horizon=50.0, keep_every=1)
        comp = lyapunov_check(full)
        checks.append(_check("full_composite_lyapunov", comp.passed, required=False,
                             **comp.summary()))

    report = {
        "checks": checks,
        "constants": {"alpha1": alpha1, "eps_u": params.eps_u, "eps_delta": params.eps_delta,
                      "eps_w": params.eps_w},
        "quick": quick,
        "settings": s,
        "all_required_passed": all(c["passed"] for c in checks if c["required"]),
    }
    return report, tables
