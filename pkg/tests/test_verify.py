import numpy as np
import pytest

from bomilearn import verify
from bomilearn.dynamics import LearnerState, NoiseSchedule, forward_rhs, inverse_rhs
from bomilearn.errors import WindowTooLong
from bomilearn.synergy import build_mapping, build_synergy_basis, synthesize_posture_data

from conftest import quiet_params


def test_perturbation_form_is_an_identity(mapping, params):
    """The rewritten right-hand sides equal the model's, scaled by the timescale rates."""
    rng = np.random.default_rng(0)
    phi, w = mapping.phi, mapping.w
    for _ in range(100):
        u, dq = rng.standard_normal(19), rng.standard_normal(19)
        e_x = rng.standard_normal(2)
        w_hat = rng.standard_normal(w.shape)
        s = LearnerState(u=u, q=np.zeros(19), x=np.zeros(2), chi=np.zeros(2), delta_q=dq, w_hat=w_hat)
        e_bar = params.k_p * e_x
        np.testing.assert_allclose(inverse_rhs(s, mapping.basis, params, e_x),
                                   params.eta * verify.f1(u, e_bar, w_hat, phi, params.mu),
                                   rtol=1e-12, atol=1e-12)
        # d e_bar/dt = -k_p C u
        np.testing.assert_allclose(-params.k_p * (mapping.c @ u), params.k_p * verify.f2(u, w, phi),
                                   rtol=1e-12, atol=1e-14)
        np.testing.assert_allclose(-params.a * dq + u, params.a * verify.f3(dq, u, params.a),
                                   rtol=1e-12, atol=1e-12)
        # with the filtered cursor increment equal to C dq
        np.testing.assert_allclose(forward_rhs(s, mapping.basis, params.gamma, mapping.c @ dq),
                                   params.gamma * verify.g(w_hat - w, dq, phi), rtol=1e-12, atol=1e-12)


def test_lyapunov_rate_matches_independent_eigenvalue(mapping, params):
    # more joints than outputs: C^T C is singular, so the smallest eigenvalue is mu
    assert verify.lyapunov_rate(mapping.c, params.mu) == pytest.approx(params.mu, abs=1e-10)
    assert verify.lyapunov_rate(mapping.c[:1], params.mu) == pytest.approx(params.mu, abs=1e-10)
    sq = np.array([[2.0, 1.0], [0.0, 0.5]])
    s_min = np.linalg.svd(sq, compute_uv=False)[-1]
    assert verify.lyapunov_rate(sq, 0.3) == pytest.approx(s_min**2 + 0.3, abs=1e-10)


def test_reduced_system_origin_is_stationary(mapping, params):
    traj = verify.simulate_reduced(params, mapping.c[:1], np.zeros(20), horizon=5.0)
    assert not traj.u.any() and not traj.e_bar.any()
    rep = verify.lyapunov_check(traj)
    assert rep.passed and not rep.v.any() and not rep.v_dot.any()


def test_reversed_trajectory_is_caught(mapping, params):
    z0 = np.zeros(20)
    z0[-1] = 0.8
    traj = verify.simulate_reduced(params, mapping.c[:1], z0)
    assert verify.lyapunov_check(traj).passed
    assert not verify.lyapunov_check(traj.reversed()).passed


def test_reduced_matrix_eigenvalues_stable(mapping, params):
    lam = np.linalg.eigvals(verify.reduced_matrix(mapping.c[:1], params.eps_u, params.mu))
    assert np.all(lam.real < 0)


def test_boundary_equilibrium_is_stationary(mapping, params):
    u = np.random.default_rng(1).standard_normal(19)
    run = verify.simulate_boundary_layer(params, mapping.basis, mapping.w[:1], u,
                                         init=(np.zeros((1, 4)), u / params.a), horizon=5.0)
    assert not run.w_tilde.any()
    np.testing.assert_allclose(run.dq, np.broadcast_to(u / params.a, run.dq.shape), rtol=1e-14)


def test_boundary_layer_lyapunov_decreases(mapping, params):
    u = np.random.default_rng(2).standard_normal(19)
    run = verify.simulate_boundary_layer(params, mapping.basis, mapping.w[:1], u,
                                         init=(np.ones((1, 4)), np.zeros(19)), horizon=40.0)
    assert verify.lyapunov_check(run).passed


def test_decay_rate_of_exact_exponential():
    tau = np.linspace(0, 10, 500)
    slope, r2 = verify.decay_rate(tau, 3.0 * np.exp(-0.7 * tau))
    assert slope == pytest.approx(-0.7, rel=1e-10) and r2 == pytest.approx(1.0)


def test_pe_gramian_zero_and_window_errors():
    rep = verify.pe_gramian(np.zeros((100, 3)), 10.0)
    assert rep.min_eig == 0.0 and rep.max_eig == 0.0 and not rep.pe_satisfied
    with pytest.raises(WindowTooLong):
        verify.pe_gramian(np.ones((10, 2)), 6.0)
    with pytest.raises(WindowTooLong):
        verify.pe_gramian(np.ones((10, 2)), 0.1)


def test_pe_gramian_brute_force_window():
    rng = np.random.default_rng(3)
    sig = rng.standard_normal((50, 2))
    rep = verify.pe_gramian(sig, 10, dt=0.5)
    # windows of 20 samples; direct trapezoid sums for each start
    mins, maxs = [], []
    for s in range(len(sig) - 20):
        seg = sig[s:s + 21]
        outer = np.einsum("ki,kj->kij", seg, seg)
        g = 0.5 * 0.5 * (outer[1:] + outer[:-1]).sum(0)
        e = np.linalg.eigvalsh(g)
        mins.append(e[0])
        maxs.append(e[-1])
    assert rep.windows_checked == len(mins)
    assert rep.min_eig == pytest.approx(min(mins), rel=1e-10)
    assert rep.max_eig == pytest.approx(max(maxs), rel=1e-10)


def test_realized_filter_state_is_exciting(mapping, params):
    rep = verify.pe_gramian(verify.realized_delta_q(mapping, params, 2000), 100)
    assert rep.pe_satisfied


def test_noise_off_signal_is_not_exciting():
    sig = verify.noise_signal(NoiseSchedule.off(), 500, 4)
    assert not verify.pe_gramian(sig, 100).pe_satisfied


def test_full_system_without_noise_from_zero_weight_error(mapping, params):
    init = (np.zeros(19), np.array([0.3, -0.2]), np.zeros(19), np.zeros((2, 4)))
    _, tail = verify.simulate_full(params, mapping, [0.0], init=init, horizon=100.0)
    assert tail[0, 0] < 1e-4


def test_full_system_noise_scales_linearly_without_weight_error(mapping, params):
    init = (np.zeros(19), np.zeros(2), np.zeros(19), np.zeros((2, 4)))
    _, tail = verify.simulate_full(params, mapping, [0.1, 0.2], seeds=[0, 1], init=init, horizon=20.0)
    np.testing.assert_allclose(tail[1], 2 * tail[0], rtol=1e-10)


def test_eps_w_sweep_reports_trend(mapping, params):
    sweep = verify.epsilon_w_sweep(params, mapping, (0.262, 0.524, 1.048), n_seeds=2, horizon=50.0)
    slope = np.polyfit(np.log(sweep["gamma"]), sweep["steady_norm"], 1)[0]
    assert sweep["slope"] == pytest.approx(slope)
    assert sweep["non_increasing"] == (slope <= 1e-9 * max(sweep["steady_norm"]))
    assert sweep["eps_w"] == pytest.approx([params.k_p / g for g in sweep["gamma"]])


def test_scan_validates_amplitudes(mapping, params):
    with pytest.raises(ValueError):
        verify.theorem_neighborhood_scan(params, mapping, (0.2, 0.1))
    with pytest.raises(ValueError):
        verify.theorem_neighborhood_scan(params, mapping, (0.0, 0.1))


def test_quick_suite_subset(mapping, params):
    report, tables = verify.run_suite(params, mapping, quick=True)
    names = [c["name"] for c in report["checks"]]
    assert names == ["reduced_convergence", "reduced_lyapunov", "reduced_lyapunov_negative_control",
                     "pe_noise", "pe_delta_q"]
    assert report["all_required_passed"] and tables == {}


def test_reduced_checks_on_another_map(params):
    basis = build_synergy_basis(synthesize_posture_data(m=10, latent_dim=3, seed=7), 3)
    mp = build_mapping(basis, "random", seed=1, scale=1.5)
    rng = np.random.default_rng(4)
    z = 0.5 * rng.standard_normal((10, 11))
    traj = verify.simulate_reduced(quiet_params(eta=0.1), mp.c[1:2], z)
    assert verify.lyapunov_check(traj).passed
