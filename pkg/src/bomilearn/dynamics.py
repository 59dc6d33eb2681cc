"""Coupled forward/inverse learning dynamics of a BoMI user.

State and time conventions
--------------------------
The model clock runs in simulation ticks: one tick is ``1 / sim_rate``
seconds (10 ms at the default 100 Hz), and every rate in
:class:`ModelParams` is "per tick". The learner carries

* ``u``       joint-velocity command (m,)
* ``q``       joint angles (m,), with ``dq/dt = u``
* ``x``       cursor position (n,), with ``dx/dt = C u``
* ``chi``     cursor filter state (n,), ``dchi/dt = -a chi + x``
* ``delta_q`` filtered joint increment (m,), ``d delta_q/dt = -a delta_q + u``
* ``w_hat``   synergy-weight estimate (n, h); the internal map is ``w_hat @ phi``

The filtered cursor increment ``delta_x = -a chi + x`` is derived, not stored.

Forward learning descends ``0.5 * |delta_x - w_hat phi delta_q|^2`` in
``w_hat``; inverse learning descends
``0.5 * |C_hat u - k_p e_x|^2 + 0.5 * mu |u|^2`` in ``u``, plus exploration
noise. Integration is Euler-Maruyama.
"""
from __future__ import annotations

import dataclasses
import warnings

import numba
import numpy as np

from .errors import (
    DimensionMismatch,
    Diverged,
    InvalidConfig,
    RankDeficient,
    TimescaleOrderingWarning,
)
from .synergy import MappingMatrix, SynergyBasis

__all__ = [
    "NoiseSchedule",
    "ModelParams",
    "LearnerState",
    "cursor_rhs",
    "filter_rhs",
    "forward_rhs",
    "inverse_rhs",
    "inverse_fixed_point",
    "feedback_oracle",
    "step",
]


def _default_amplitudes():
    return tuple(1e-4 * 0.75**s for s in range(8))


@dataclasses.dataclass(frozen=True)
class NoiseSchedule:
    """Variance schedule of the exploration noise added to ``du/dt``.

    At tick ``t`` of session ``s`` the white-noise intensity is
    ``s_session[s] * (floor + exp(-decay_rate * t))``. Sessions past the end
    of ``s_session`` reuse its last entry. An all-zero ``s_session`` turns
    the noise off.
    """

    s_session: tuple = dataclasses.field(default_factory=_default_amplitudes)
    decay_rate: float = 0.1
    floor: float = 0.01
    seed: int | None = None

    def __post_init__(self):
        amps = tuple(float(v) for v in np.atleast_1d(self.s_session))
        if not amps:
            raise InvalidConfig("s_session needs at least one amplitude")
        if any(v < 0 or not np.isfinite(v) for v in amps):
            raise InvalidConfig("noise amplitudes must be finite and non-negative")
        if any(b > a for a, b in zip(amps, amps[1:])):
            raise InvalidConfig("noise amplitudes must be non-increasing over sessions")
        if self.floor < 0 or self.decay_rate < 0:
            raise InvalidConfig("floor and decay_rate must be non-negative")
        object.__setattr__(self, "s_session", amps)

    @classmethod
    def off(cls) -> "NoiseSchedule":
        return cls(s_session=(0.0,))

    @property
    def enabled(self) -> bool:
        return any(v > 0 for v in self.s_session)

    def amplitude(self, session: int) -> float:
        return self.s_session[min(session, len(self.s_session) - 1)]

    def variance(self, t, session: int = 0):
        """Noise intensity at tick(s) ``t`` (since session start)."""
        t = np.asarray(t, dtype=float)
        return self.amplitude(session) * (self.floor + np.exp(-self.decay_rate * t))


@dataclasses.dataclass(frozen=True)
class ModelParams:
    """Learning-model constants, all rates per simulation tick.

    Defaults are the fitted learning rates (``eta``, ``gamma``, ``mu``) with a
    session-1 proportional gain and a filter constant of 0.5/tick (a 20 ms
    time constant at 100 Hz).
    """

    gamma: float = 0.262
    eta: float = 0.04522
    mu: float = 0.3
    k_p: float = 0.02
    a: float = 0.5
    noise: NoiseSchedule = dataclasses.field(default_factory=NoiseSchedule)

    def __post_init__(self):
        for name in ("gamma", "eta"):
            v = getattr(self, name)
            if not np.isfinite(v) or v < 0:
                raise InvalidConfig(f"{name} must be finite and >= 0, got {v}")
        for name in ("mu", "k_p", "a"):
            v = getattr(self, name)
            if not np.isfinite(v) or v <= 0:
                raise InvalidConfig(f"{name} must be finite and > 0, got {v}")
        if not self.timescales_ordered():
            warnings.warn(
                f"timescale ordering k_p < eta < gamma, a > k_p violated "
                f"(k_p={self.k_p}, eta={self.eta}, gamma={self.gamma}, a={self.a})",
                TimescaleOrderingWarning,
                stacklevel=3,
            )

    def timescales_ordered(self) -> bool:
        return self.k_p < self.eta < self.gamma and self.a > self.k_p

    def replace(self, **changes) -> "ModelParams":
        return dataclasses.replace(self, **changes)

    # singular-perturbation parameters
    @property
    def eps_u(self) -> float:
        return self.k_p / self.eta

    @property
    def eps_delta(self) -> float:
        return self.k_p / self.a

    @property
    def eps_w(self) -> float:
        return self.k_p / self.gamma


@dataclasses.dataclass
class LearnerState:
    u: np.ndarray
    q: np.ndarray
    x: np.ndarray
    chi: np.ndarray
    delta_q: np.ndarray
    w_hat: np.ndarray

    @classmethod
    def initial(cls, mapping: MappingMatrix, x0, a: float, w_hat=None) -> "LearnerState":
        """At rest at ``x0`` with the cursor filter already settled (delta_x = 0)."""
        n, m = mapping.c.shape
        x0 = np.array(x0, dtype=float)
        if x0.shape != (n,):
            raise DimensionMismatch(f"x0 must have shape ({n},)")
        w_hat = np.zeros((n, mapping.basis.h)) if w_hat is None else np.array(w_hat, dtype=float)
        return cls(
            u=np.zeros(m),
            q=np.zeros(m),
            x=x0,
            chi=x0 / a,
            delta_q=np.zeros(m),
            w_hat=w_hat,
        )

    def copy(self) -> "LearnerState":
        return LearnerState(*(np.array(getattr(self, f.name)) for f in dataclasses.fields(self)))

    def delta_x(self, a: float) -> np.ndarray:
        return -a * self.chi + self.x

    def max_abs(self) -> float:
        return max(float(np.max(np.abs(getattr(self, f.name)), initial=0.0))
                   for f in dataclasses.fields(self))

    def is_finite(self) -> bool:
        return all(np.all(np.isfinite(getattr(self, f.name))) for f in dataclasses.fields(self))


def _matrix(c):
    return c.c if isinstance(c, MappingMatrix) else np.asarray(c, dtype=float)


def cursor_rhs(c, u) -> np.ndarray:
    """Cursor velocity ``C u``."""
    c = _matrix(c)
    u = np.asarray(u, dtype=float)
    if c.ndim != 2 or u.shape != (c.shape[1],):
        raise DimensionMismatch(f"C {c.shape} cannot act on u {u.shape}")
    return c @ u


def filter_rhs(state: LearnerState, a: float):
    """Returns ``(chi_dot, delta_q_dot, delta_x)``; note ``delta_x == chi_dot``."""
    if a <= 0:
        raise InvalidConfig("filter constant a must be positive")
    delta_x = -a * state.chi + state.x
    return delta_x.copy(), -a * state.delta_q + state.u, delta_x


def forward_rhs(state: LearnerState, basis: SynergyBasis, gamma: float, delta_x) -> np.ndarray:
    """``gamma * (delta_x - w_hat phi delta_q) (phi delta_q)^T``."""
    phi = basis.phi
    if state.delta_q.shape != (phi.shape[1],) or state.w_hat.shape[1] != phi.shape[0]:
        raise DimensionMismatch("state dimensions do not match the synergy basis")
    delta_x = np.asarray(delta_x, dtype=float)
    if delta_x.shape != (state.w_hat.shape[0],):
        raise DimensionMismatch("delta_x must have one entry per cursor axis")
    p = phi @ state.delta_q
    eps = delta_x - state.w_hat @ p
    return gamma * np.outer(eps, p)


def inverse_rhs(state: LearnerState, basis: SynergyBasis, params: ModelParams, e_x) -> np.ndarray:
    """Deterministic part of ``du/dt``:
    ``-eta ((C_hat^T C_hat + mu I) u - k_p C_hat^T e_x)`` with ``C_hat = w_hat phi``.
    """
    phi = basis.phi
    e_x = np.asarray(e_x, dtype=float)
    if state.u.shape != (phi.shape[1],) or state.w_hat.shape != (e_x.shape[0], phi.shape[0]):
        raise DimensionMismatch("state, basis and e_x dimensions disagree")
    c_hat = state.w_hat @ phi
    m = phi.shape[1]
    return -params.eta * ((c_hat.T @ c_hat + params.mu * np.eye(m)) @ state.u
                          - params.k_p * c_hat.T @ e_x)


def inverse_fixed_point(w_hat, basis: SynergyBasis, mu: float, k_p: float, e_x) -> np.ndarray:
    """The unique zero of :func:`inverse_rhs` for frozen ``w_hat`` and ``e_x``."""
    c_hat = np.asarray(w_hat, dtype=float) @ basis.phi
    m = c_hat.shape[1]
    return np.linalg.solve(c_hat.T @ c_hat + mu * np.eye(m), k_p * c_hat.T @ np.asarray(e_x, float))


def feedback_oracle(c, k_p: float, e_x) -> np.ndarray:
    """Minimum-norm joint velocity giving cursor velocity ``k_p e_x``: ``k_p C^+ e_x``."""
    c = _matrix(c)
    if np.linalg.matrix_rank(c) < c.shape[0]:
        raise RankDeficient("feedback oracle needs a full-row-rank map")
    e_x = np.asarray(e_x, dtype=float)
    if e_x.shape != (c.shape[0],):
        raise DimensionMismatch("e_x must have one entry per cursor axis")
    return k_p * np.linalg.pinv(c) @ e_x


def step(
    state: LearnerState,
    mapping: MappingMatrix,
    params: ModelParams,
    x_des,
    dt: float = 1.0,
    rng: np.random.Generator | None = None,
    *,
    t: float = 0.0,
    session: int = 0,
    z=None,
    bound: float = 1e6,
) -> LearnerState:
    """Advance every state by one Euler-Maruyama step of length ``dt`` ticks.

    Noise enters only the ``u`` equation, as ``sqrt(var(t) * dt) * z`` with
    ``z`` standard normal (drawn from ``rng`` unless given). With no ``rng``,
    no ``z`` or a zero noise schedule the step is deterministic.
    """
    if dt <= 0:
        raise InvalidConfig("dt must be positive")
    c, phi, w_hat = mapping.c, mapping.basis.phi, state.w_hat
    a = params.a
    e_x = np.asarray(x_des, dtype=float) - state.x
    delta_x = -a * state.chi + state.x
    p = phi @ state.delta_q
    w_dot = params.gamma * np.outer(delta_x - w_hat @ p, p)
    c_hat = w_hat @ phi
    u_dot = -params.eta * (c_hat.T @ (c_hat @ state.u - params.k_p * e_x) + params.mu * state.u)

    new = LearnerState(
        u=state.u + dt * u_dot,
        q=state.q + dt * state.u,
        x=state.x + dt * (c @ state.u),
        chi=state.chi + dt * delta_x,
        delta_q=state.delta_q + dt * (-a * state.delta_q + state.u),
        w_hat=w_hat + dt * w_dot,
    )
    var = float(params.noise.variance(t, session))
    if var > 0 and (z is not None or rng is not None):
        if z is None:
            z = rng.standard_normal(state.u.shape[0])
        new.u = new.u + np.sqrt(var * dt) * np.asarray(z, dtype=float)
    if not new.is_finite() or new.max_abs() > bound:
        raise Diverged(f"state magnitude exceeded {bound:g}")
    return new


@numba.njit(cache=True)
def _trial_kernel(u, q, x, chi, dq, w_hat, c, phi, target, eta, gamma, mu, k_p, a, dt,
                  sigma, z, n_max, stop_radius, record_every, bound, rec_tick, rec_x, rec_q):
    """Run one reaching movement in place; see ``protocol.run_trial``.

    Returns ``(ticks, n_recorded, status)`` with status 1 = reached,
    0 = timed out, 2 = diverged.
    """
    n, m = c.shape
    h = phi.shape[0]
    p = np.empty(h)
    c_hat = np.empty((n, m))
    r = np.empty(n)
    dx = np.empty(n)
    eps = np.empty(n)
    u_dot = np.empty(m)
    sqdt = np.sqrt(dt)
    n_rec = 0
    k = 0
    while True:
        d2 = 0.0
        for i in range(n):
            d2 += (target[i] - x[i]) ** 2
        reached = np.sqrt(d2) <= stop_radius
        last = reached or k >= n_max
        if k % record_every == 0 or last:
            rec_tick[n_rec] = k
            rec_x[n_rec, :] = x
            rec_q[n_rec, :] = q
            n_rec += 1
        if last:
            return k, n_rec, 1 if reached else 0

        for j in range(h):
            s = 0.0
            for l in range(m):
                s += phi[j, l] * dq[l]
            p[j] = s
        for i in range(n):
            dx[i] = -a * chi[i] + x[i]
            s = 0.0
            for j in range(h):
                s += w_hat[i, j] * p[j]
            eps[i] = dx[i] - s
        for i in range(n):
            for l in range(m):
                s = 0.0
                for j in range(h):
                    s += w_hat[i, j] * phi[j, l]
                c_hat[i, l] = s
            s = 0.0
            for l in range(m):
                s += c_hat[i, l] * u[l]
            r[i] = s - k_p * (target[i] - x[i])
        for l in range(m):
            s = 0.0
            for i in range(n):
                s += c_hat[i, l] * r[i]
            u_dot[l] = -eta * (s + mu * u[l])

        big = 0.0
        for i in range(n):
            s = 0.0
            for l in range(m):
                s += c[i, l] * u[l]
            x[i] += dt * s
            chi[i] += dt * dx[i]
            for j in range(h):
                w_hat[i, j] += dt * gamma * eps[i] * p[j]
                big = max(big, abs(w_hat[i, j]))
            big = max(big, abs(x[i]))
        noise = sigma[k] * sqdt
        for l in range(m):
            q[l] += dt * u[l]
            dq[l] += dt * (-a * dq[l] + u[l])
            u[l] += dt * u_dot[l] + noise * z[k, l]
            big = max(big, abs(u[l]), abs(q[l]), abs(dq[l]))
        k += 1
        if not big <= bound:
            return k, n_rec, 2
