import warnings

import numpy as np
import pytest

from bomilearn.dynamics import (
    LearnerState,
    ModelParams,
    NoiseSchedule,
    _trial_kernel,
    cursor_rhs,
    feedback_oracle,
    filter_rhs,
    forward_rhs,
    inverse_fixed_point,
    inverse_rhs,
    step,
)
from bomilearn.errors import (
    DimensionMismatch,
    Diverged,
    InvalidConfig,
    RankDeficient,
    TimescaleOrderingWarning,
)

from conftest import quiet_params


def random_state(mapping, rng):
    n, m, h = mapping.n, mapping.basis.m, mapping.basis.h
    return LearnerState(u=rng.standard_normal(m), q=rng.standard_normal(m), x=rng.standard_normal(n),
                        chi=rng.standard_normal(n), delta_q=rng.standard_normal(m),
                        w_hat=rng.standard_normal((n, h)))


def test_initial_state_has_settled_cursor_filter(mapping):
    s = LearnerState.initial(mapping, (2.5, 2.5), a=0.5)
    np.testing.assert_array_equal(s.delta_x(0.5), np.zeros(2))
    assert not s.u.any() and not s.delta_q.any() and not s.w_hat.any()
    with pytest.raises(DimensionMismatch):
        LearnerState.initial(mapping, (1.0, 2.0, 3.0), a=0.5)


def test_rhs_shapes_and_errors(mapping, params):
    s = random_state(mapping, np.random.default_rng(0))
    assert cursor_rhs(mapping, s.u).shape == (2,)
    chi_dot, dq_dot, dx = filter_rhs(s, params.a)
    np.testing.assert_array_equal(chi_dot, dx)
    np.testing.assert_allclose(dq_dot, -params.a * s.delta_q + s.u)
    with pytest.raises(DimensionMismatch):
        cursor_rhs(mapping, np.zeros(3))
    with pytest.raises(InvalidConfig):
        filter_rhs(s, 0.0)
    with pytest.raises(DimensionMismatch):
        forward_rhs(s, mapping.basis, 1.0, np.zeros(3))
    with pytest.raises(DimensionMismatch):
        inverse_rhs(s, mapping.basis, params, np.zeros(3))


def test_forward_rhs_vanishes_for_exact_model(mapping):
    s = random_state(mapping, np.random.default_rng(1))
    s.w_hat = mapping.w.copy()
    dx = mapping.c @ s.delta_q
    np.testing.assert_allclose(forward_rhs(s, mapping.basis, 0.3, dx), 0.0, atol=1e-14)


def test_inverse_fixed_point_zeroes_rhs(mapping, params):
    rng = np.random.default_rng(2)
    s = random_state(mapping, rng)
    e_x = rng.standard_normal(2)
    s.u = inverse_fixed_point(s.w_hat, mapping.basis, params.mu, params.k_p, e_x)
    np.testing.assert_allclose(inverse_rhs(s, mapping.basis, params, e_x), 0.0, atol=1e-15)


def test_fixed_point_tends_to_minimum_norm_solution(mapping):
    e_x = np.array([0.7, -1.2])
    oracle = feedback_oracle(mapping, 0.02, e_x)
    # the regularised solution approaches the pseudo-inverse linearly in mu
    errs = [np.linalg.norm(inverse_fixed_point(mapping.w, mapping.basis, mu, 0.02, e_x) - oracle)
            for mu in (1e-3, 1e-4, 1e-5)]
    assert errs[2] < 1e-4 * np.linalg.norm(oracle)
    np.testing.assert_allclose(np.array(errs[:-1]) / np.array(errs[1:]), 10.0, rtol=0.01)
    np.testing.assert_allclose(mapping.c @ oracle, 0.02 * e_x, atol=1e-14)
    with pytest.raises(RankDeficient):
        feedback_oracle(np.ones((2, 5)), 0.02, e_x)


def test_step_matches_trial_kernel(mapping, params):
    rng = np.random.default_rng(3)
    s0 = random_state(mapping, rng)
    s0.w_hat *= 0.1
    s0.u *= 0.01
    target = np.array([4.5, 4.5])
    n_ticks = 150
    z = rng.standard_normal((n_ticks, 19))
    sigma = np.sqrt(params.noise.variance(np.arange(n_ticks)))

    s = s0.copy()
    for k in range(n_ticks):
        s = step(s, mapping, params, target, 1.0, t=float(k), z=z[k])

    k_state = s0.copy()
    buf = n_ticks + 2
    ticks, _, status = _trial_kernel(
        k_state.u, k_state.q, k_state.x, k_state.chi, k_state.delta_q, k_state.w_hat,
        mapping.c, mapping.phi, target, params.eta, params.gamma, params.mu, params.k_p,
        params.a, 1.0, sigma, z, n_ticks, 1e-12, 1, 1e6,
        np.empty(buf, np.int64), np.empty((buf, 2)), np.empty((buf, 19)))
    assert (ticks, status) == (n_ticks, 0)
    for name in ("u", "q", "x", "chi", "delta_q", "w_hat"):
        np.testing.assert_allclose(getattr(k_state, name), getattr(s, name), rtol=1e-10, atol=1e-13)


def test_euler_error_halves_with_step(mapping):
    params = quiet_params(noise=NoiseSchedule.off())
    s0 = random_state(mapping, np.random.default_rng(4))
    s0.u *= 0.1
    s0.w_hat *= 0.2
    target = np.array([1.0, 2.0])
    horizon = 20.0

    def run(dt):
        s = s0.copy()
        for _ in range(int(round(horizon / dt))):
            s = step(s, mapping, params, target, dt)
        return np.concatenate([s.u, s.x, s.w_hat.ravel()])

    ref = run(1 / 1024)
    errs = [np.linalg.norm(run(dt) - ref) for dt in (0.25, 0.125, 0.0625)]
    order = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    # Euler is first order: halving the step roughly halves the error
    assert np.all(np.abs(order - 1) < 0.15), order


def test_step_without_noise_is_deterministic(mapping):
    params = quiet_params(noise=NoiseSchedule.off())
    s = LearnerState.initial(mapping, (2.5, 2.5), params.a)
    a = step(s, mapping, params, (4.5, 4.5), rng=np.random.default_rng(0))
    b = step(s, mapping, params, (4.5, 4.5), rng=np.random.default_rng(99))
    for name in ("u", "x", "q"):
        np.testing.assert_array_equal(getattr(a, name), getattr(b, name))


def test_noise_increment_has_requested_variance(mapping):
    params = ModelParams(noise=NoiseSchedule(s_session=(1e-2,), decay_rate=0.0, floor=0.0))
    # variance at t: S (floor + exp(0)) = 1e-2
    s = LearnerState.initial(mapping, (2.5, 2.5), params.a)
    rng = np.random.default_rng(5)
    draws = np.array([step(s, mapping, params, (2.5, 2.5), 0.5, rng).u for _ in range(4000)])
    assert draws.var() == pytest.approx(1e-2 * 0.5, rel=0.05)


def test_step_raises_on_divergence(mapping, params):
    s = LearnerState.initial(mapping, (2.5, 2.5), params.a)
    s.u[:] = 1e3
    with pytest.raises(Diverged):
        step(s, mapping, params, (2.5, 2.5), bound=10.0)
    with pytest.raises(InvalidConfig):
        step(s, mapping, params, (2.5, 2.5), dt=0.0)


def test_noise_schedule():
    ns = NoiseSchedule(s_session=(2.0, 1.0), decay_rate=0.5, floor=0.1)
    assert ns.variance(0.0, 0) == pytest.approx(2.0 * 1.1)
    assert ns.variance(2.0, 1) == pytest.approx(0.1 + np.exp(-1.0))
    assert ns.amplitude(7) == 1.0
    assert not NoiseSchedule.off().enabled
    with pytest.raises(InvalidConfig):
        NoiseSchedule(s_session=(1.0, 2.0))
    with pytest.raises(InvalidConfig):
        NoiseSchedule(s_session=(-1.0,))
    with pytest.raises(InvalidConfig):
        NoiseSchedule(floor=-1.0)
    default = NoiseSchedule()
    assert len(default.s_session) == 8 and default.enabled


def test_model_params_validation_and_timescales():
    p = ModelParams()
    assert p.eps_u == pytest.approx(p.k_p / p.eta)
    assert p.eps_delta == pytest.approx(p.k_p / p.a)
    assert p.eps_w == pytest.approx(p.k_p / p.gamma)
    assert p.timescales_ordered()
    with pytest.warns(TimescaleOrderingWarning):
        ModelParams(eta=0.5, gamma=0.1)
    for bad in ({"k_p": 0.0}, {"mu": -1.0}, {"a": 0.0}, {"eta": -0.1}, {"gamma": np.nan}):
        with pytest.raises(InvalidConfig), warnings.catch_warnings():
            warnings.simplefilter("ignore")
            ModelParams(**bad)
    frozen = quiet_params(eta=0.0)
    assert frozen.eta == 0.0
