"""Reaching experiment: sessions of trials toward randomly ordered targets.

Each trial starts from rest at wherever the cursor stopped last time, and ends
when the cursor enters ``stop_radius`` of the target or after
``trial_timeout`` seconds. The internal map estimate, cursor position and
joint angles carry over between trials of a session; cursor and joints are
re-centred at the start of every session.
"""
from __future__ import annotations

import dataclasses
import json
import warnings
from pathlib import Path

import numpy as np

from .dynamics import LearnerState, ModelParams, NoiseSchedule, _trial_kernel
from .errors import Diverged, InvalidConfig, SchemaVersionMismatch, TimescaleOrderingWarning
from .synergy import MappingMatrix, SynergyBasis

__all__ = [
    "DEFAULT_TARGETS",
    "ExperimentConfig",
    "TrialRecord",
    "run_trial",
    "run_experiment",
    "export_records",
    "import_records",
    "SCHEMA_VERSION",
]

DEFAULT_TARGETS = ((0.5, 4.5), (2.5, 0.5), (2.5, 2.5), (4.5, 4.5))
SCHEMA_VERSION = 1


def _default_kp_schedule():
    return tuple(0.02 * 0.97**s for s in range(8))


@dataclasses.dataclass(frozen=True)
class ExperimentConfig:
    n_sessions: int = 8
    trials_per_session: int = 60
    targets: tuple = DEFAULT_TARGETS
    stop_radius: float = 0.15
    trial_timeout: float = 2.0  # seconds
    sim_rate: int = 100  # Hz, one model tick per sample
    record_rate: int = 50  # Hz
    k_p_schedule: tuple | None = dataclasses.field(default_factory=_default_kp_schedule)
    start_pos: tuple = (2.5, 2.5)
    seed: int = 0
    w_hat_init_std: float = 0.0
    bound: float = 1e6

    def __post_init__(self):
        targets = tuple(tuple(float(v) for v in t) for t in self.targets)
        object.__setattr__(self, "targets", targets)
        object.__setattr__(self, "start_pos", tuple(float(v) for v in self.start_pos))
        if self.n_sessions < 1 or self.trials_per_session < 1:
            raise InvalidConfig("need at least one session and one trial")
        if len(set(targets)) < 2:
            raise InvalidConfig("need at least 2 distinct targets")
        if len({len(t) for t in targets}) != 1 or len(self.start_pos) != len(targets[0]):
            raise InvalidConfig("targets and start position must share one dimension")
        if self.stop_radius <= 0 or self.trial_timeout <= 0:
            raise InvalidConfig("stop_radius and trial_timeout must be positive")
        if self.sim_rate <= 0 or self.record_rate <= 0 or self.sim_rate % self.record_rate:
            raise InvalidConfig("record_rate must divide sim_rate")
        if self.k_p_schedule is not None:
            kp = tuple(float(v) for v in self.k_p_schedule)
            if not kp or any(v <= 0 for v in kp):
                raise InvalidConfig("k_p schedule must be non-empty and positive")
            if any(b > a for a, b in zip(kp, kp[1:])):
                raise InvalidConfig("k_p schedule must be non-increasing")
            object.__setattr__(self, "k_p_schedule", kp)
        if self.w_hat_init_std < 0:
            raise InvalidConfig("w_hat_init_std must be non-negative")

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    @property
    def max_ticks(self) -> int:
        return int(round(self.trial_timeout * self.sim_rate))

    @property
    def record_every(self) -> int:
        return self.sim_rate // self.record_rate

    def k_p_for(self, session: int, default: float) -> float:
        if self.k_p_schedule is None:
            return default
        return self.k_p_schedule[min(session, len(self.k_p_schedule) - 1)]

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["targets"] = [list(t) for t in self.targets]
        d["start_pos"] = list(self.start_pos)
        d["k_p_schedule"] = None if self.k_p_schedule is None else list(self.k_p_schedule)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        d["targets"] = tuple(tuple(t) for t in d["targets"])
        d["start_pos"] = tuple(d["start_pos"])
        if d.get("k_p_schedule") is not None:
            d["k_p_schedule"] = tuple(d["k_p_schedule"])
        return cls(**d)


@dataclasses.dataclass
class TrialRecord:
    session_idx: int
    trial_idx: int
    start_idx: int  # index of the previous target (-1 if none)
    target_idx: int
    start_pos: np.ndarray
    target: np.ndarray
    t: np.ndarray  # seconds since trial start, on the simulation grid
    cursor_traj: np.ndarray  # (N, n)
    joint_traj: np.ndarray  # (N, m)
    w_hat_final: np.ndarray  # (n, h)
    reach_time: float  # seconds; equals the timeout when not reached
    reached: bool
    final_error: float

    def __eq__(self, other):
        if not isinstance(other, TrialRecord):
            return NotImplemented
        return all(
            np.array_equal(getattr(self, f.name), getattr(other, f.name))
            for f in dataclasses.fields(self)
        )


def run_trial(
    state: LearnerState,
    target,
    cfg: ExperimentConfig,
    mapping: MappingMatrix,
    params: ModelParams,
    rng: np.random.Generator,
    *,
    session: int = 0,
    t0: float = 0.0,
    trial_idx: int = 0,
    start_idx: int = -1,
    target_idx: int = -1,
):
    """Simulate one movement toward ``target``.

    The command, joint filter and cursor filter restart from rest (u = 0,
    delta_q = 0, delta_x = 0); ``w_hat``, ``x`` and ``q`` carry over from
    ``state``. ``t0`` is the session clock in ticks, which drives the noise
    envelope. A standard-normal block covering the full timeout is drawn from
    ``rng`` whether or not the trial ends early, so noise stays aligned across
    runs that differ only in learning parameters.

    Returns the post-trial state and its :class:`TrialRecord`.
    """
    a = params.a
    s = state.copy()
    s.u[:] = 0.0
    s.delta_q[:] = 0.0
    s.chi = s.x / a
    start = s.x.copy()
    target = np.asarray(target, dtype=float)

    n_max = cfg.max_ticks
    m = s.u.shape[0]
    z = rng.standard_normal((n_max, m))
    sigma = np.sqrt(params.noise.variance(t0 + np.arange(n_max), session))
    n_buf = n_max // cfg.record_every + 2
    rec_tick = np.empty(n_buf, dtype=np.int64)
    rec_x = np.empty((n_buf, s.x.shape[0]))
    rec_q = np.empty((n_buf, m))

    ticks, n_rec, status = _trial_kernel(
        s.u, s.q, s.x, s.chi, s.delta_q, s.w_hat, mapping.c, mapping.basis.phi, target,
        params.eta, params.gamma, params.mu, params.k_p, a, 1.0,
        sigma, z, n_max, cfg.stop_radius, cfg.record_every, cfg.bound,
        rec_tick, rec_x, rec_q,
    )
    if status == 2:
        raise Diverged(f"session {session} trial {trial_idx}: state exceeded {cfg.bound:g}")
    cursor = rec_x[:n_rec].copy()
    record = TrialRecord(
        session_idx=session,
        trial_idx=trial_idx,
        start_idx=start_idx,
        target_idx=target_idx,
        start_pos=start,
        target=target.copy(),
        t=rec_tick[:n_rec] / cfg.sim_rate,
        cursor_traj=cursor,
        joint_traj=rec_q[:n_rec].copy(),
        w_hat_final=s.w_hat.copy(),
        reach_time=ticks / cfg.sim_rate,
        reached=bool(status == 1),
        final_error=float(np.linalg.norm(cursor[-1] - target)),
    )
    return s, record


def _target_index(cfg, pos):
    for i, t in enumerate(cfg.targets):
        if np.allclose(t, pos):
            return i
    return -1


def run_experiment(cfg: ExperimentConfig, mapping: MappingMatrix, params: ModelParams):
    """All sessions and trials of one simulated subject.

    Targets are drawn uniformly from ``cfg.targets`` excluding the one just
    visited (at session start, the one under the cursor). The gain ``k_p``
    follows ``cfg.k_p_schedule`` and the noise amplitude follows
    ``params.noise``. Random streams for targets, noise and the initial
    estimate are independent children of ``cfg.seed``; ``params.noise.seed``,
    when set, overrides the noise stream.

    Raises:
        Diverged: carrying the records completed before the failure.
    """
    target_ss, noise_ss, init_ss = np.random.SeedSequence(cfg.seed).spawn(3)
    target_rng = np.random.default_rng(target_ss)
    noise_rng = np.random.default_rng(
        noise_ss if params.noise.seed is None else params.noise.seed
    )
    n, h = mapping.w.shape
    w_hat = np.random.default_rng(init_ss).standard_normal((n, h)) * cfg.w_hat_init_std

    targets = np.array(cfg.targets)
    home = _target_index(cfg, cfg.start_pos)
    records = []
    for session in range(cfg.n_sessions):
        with warnings.catch_warnings():
            # ordering was already checked when params were built
            warnings.simplefilter("ignore", TimescaleOrderingWarning)
            p = params.replace(k_p=cfg.k_p_for(session, params.k_p))
        state = LearnerState.initial(mapping, cfg.start_pos, p.a, w_hat=w_hat)
        prev = home
        clock = 0
        for trial in range(cfg.trials_per_session):
            choices = [i for i in range(len(targets)) if i != prev]
            idx = choices[int(target_rng.integers(len(choices)))]
            try:
                state, rec = run_trial(
                    state, targets[idx], cfg, mapping, p, noise_rng,
                    session=session, t0=clock, trial_idx=trial,
                    start_idx=prev, target_idx=idx,
                )
            except Diverged as exc:
                raise Diverged(str(exc), records) from exc
            records.append(rec)
            clock += int(round(rec.reach_time * cfg.sim_rate))
            prev = idx
        w_hat = state.w_hat
    return records


# --- on-disk format -------------------------------------------------------

def export_records(records, path, *, config: dict | None = None) -> Path:
    """Write records as ``<path>`` (CSV samples) and ``<path>.json`` (sidecar).

    CSV columns are ``session, trial, t, x1..xn, q1..qm``, one row per
    recorded sample; floats are written with 17 significant digits so the
    round trip is exact. The sidecar holds the schema version, per-trial
    metadata, final estimates, and an optional config echo.
    """
    path = Path(path)
    n = records[0].cursor_traj.shape[1] if records else 0
    m = records[0].joint_traj.shape[1] if records else 0
    header = ["session", "trial", "t"] + [f"x{i + 1}" for i in range(n)] + [
        f"q{i + 1}" for i in range(m)]
    blocks = []
    for r in records:
        k = len(r.t)
        blocks.append(np.column_stack([
            np.full(k, r.session_idx), np.full(k, r.trial_idx), r.t, r.cursor_traj, r.joint_traj,
        ]))
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        if blocks:
            np.savetxt(fh, np.vstack(blocks), delimiter=",", fmt="%.17g")
    meta = {
        "schema_version": SCHEMA_VERSION,
        "n": n,
        "m": m,
        "config": config or {},
        "trials": [
            {
                "session": r.session_idx,
                "trial": r.trial_idx,
                "start_idx": r.start_idx,
                "target_idx": r.target_idx,
                "start_pos": r.start_pos.tolist(),
                "target": r.target.tolist(),
                "n_samples": len(r.t),
                "reach_time": r.reach_time,
                "reached": r.reached,
                "final_error": r.final_error,
                "w_hat_final": r.w_hat_final.tolist(),
            }
            for r in records
        ],
    }
    _sidecar(path).write_text(json.dumps(meta, indent=1))
    return path


def _sidecar(path: Path) -> Path:
    return path.with_suffix(path.suffix + ".json") if path.suffix == ".csv" else Path(
        str(path) + ".json")


def read_sidecar(path) -> dict:
    return json.loads(_sidecar(Path(path)).read_text())


def import_records(path):
    """Inverse of :func:`export_records`."""
    path = Path(path)
    meta = read_sidecar(path)
    if meta.get("schema_version") != SCHEMA_VERSION:
        raise SchemaVersionMismatch(
            f"{path}: schema {meta.get('schema_version')} != {SCHEMA_VERSION}")
    n, m = meta["n"], meta["m"]
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        body = fh.read()
    trials = meta["trials"]
    if not trials:
        return []
    if len(header) != 3 + n + m:
        raise SchemaVersionMismatch(f"{path}: expected {3 + n + m} columns, got {len(header)}")
    data = np.loadtxt(body.splitlines(), delimiter=",", ndmin=2)
    if data.shape[1] != 3 + n + m:
        raise SchemaVersionMismatch(f"{path}: expected {3 + n + m} columns, got {data.shape[1]}")
    out, row = [], 0
    for tr in trials:
        block = data[row:row + tr["n_samples"]]
        row += tr["n_samples"]
        out.append(TrialRecord(
            session_idx=tr["session"],
            trial_idx=tr["trial"],
            start_idx=tr["start_idx"],
            target_idx=tr["target_idx"],
            start_pos=np.array(tr["start_pos"]),
            target=np.array(tr["target"]),
            t=block[:, 2].copy(),
            cursor_traj=block[:, 3:3 + n].copy(),
            joint_traj=block[:, 3 + n:].copy(),
            w_hat_final=np.array(tr["w_hat_final"]),
            reach_time=tr["reach_time"],
            reached=tr["reached"],
            final_error=tr["final_error"],
        ))
    if row != data.shape[0]:
        raise SchemaVersionMismatch(f"{path}: sidecar sample count disagrees with CSV")
    return out


def mapping_to_dict(mapping: MappingMatrix) -> dict:
    return {
        "w": mapping.w.tolist(),
        "phi": mapping.basis.phi.tolist(),
        "explained_variance": mapping.basis.explained_variance.tolist(),
    }


def mapping_from_dict(d: dict) -> MappingMatrix:
    basis = SynergyBasis(phi=np.array(d["phi"]), explained_variance=np.array(d["explained_variance"]))
    w = np.array(d["w"])
    return MappingMatrix(c=w @ basis.phi, w=w, basis=basis)


def params_to_dict(params: ModelParams) -> dict:
    d = dataclasses.asdict(params)
    d["noise"]["s_session"] = list(params.noise.s_session)
    return d


def params_from_dict(d: dict) -> ModelParams:
    d = dict(d)
    d["noise"] = NoiseSchedule(**{**d["noise"], "s_session": tuple(d["noise"]["s_session"])})
    return ModelParams(**d)
