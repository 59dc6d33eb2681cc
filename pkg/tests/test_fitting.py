import json
import warnings

import numpy as np
import pytest

from bomilearn.dynamics import NoiseSchedule
from bomilearn.errors import NonDecreasingSeries
from bomilearn.fitting import (
    FitResult,
    exp_model,
    fit_eta,
    fit_gamma,
    r_squared,
    re_learning_curve,
    save_fit,
    synthetic_subject,
    trajectory_mismatch,
)
from bomilearn.metrics import MetricSeries
from bomilearn.protocol import ExperimentConfig

from conftest import quiet_params

K = np.arange(1, 481)


def series(values):
    return MetricSeries(k=K[: len(values)], values=np.asarray(values), kind="RE")


def test_exact_recovery_from_other_parameters():
    for alpha, eta, c in [(1.2, 0.01, 0.3), (0.2, 0.15, 0.05), (2.0, 0.002, 0.0)]:
        fit = fit_eta(series(exp_model(K, alpha, eta, c)))
        assert fit.alpha == pytest.approx(alpha, abs=1e-6)
        assert fit.eta == pytest.approx(eta, abs=1e-6)
        assert fit.c == pytest.approx(c, abs=1e-6)
        assert fit.r_squared == pytest.approx(1.0, abs=1e-12)


def test_noisy_recovery_over_seeds():
    for seed in range(20):
        y = exp_model(K, 0.5, 0.05, 0.1) + np.random.default_rng(seed).normal(0, 0.01, K.size)
        fit = fit_eta(series(np.abs(y)))
        assert abs(fit.eta - 0.05) < 0.1 * 0.05
        assert fit.r_squared > 0.9


def test_constant_series_warns():
    with pytest.warns(NonDecreasingSeries):
        fit = fit_eta(series(np.full(100, 0.4)))
    assert abs(fit.alpha) < 1e-6 or abs(fit.eta) < 1e-6
    assert 0.0 <= fit.r_squared <= 1.0


def test_short_series_rejected():
    with pytest.raises(ValueError):
        fit_eta(series([1.0, 0.5, 0.2]))


def test_r_squared_matches_direct_computation():
    rng = np.random.default_rng(0)
    y = exp_model(K, 0.4, 0.03, 0.2) + rng.normal(0, 0.02, K.size)
    fit = fit_eta(series(np.abs(y)))
    yy = np.abs(y)
    fitted = fit.alpha * np.exp(-fit.eta * K) + fit.c
    direct = 1 - np.sum((yy - fitted) ** 2) / np.sum((yy - yy.mean()) ** 2)
    assert fit.r_squared == pytest.approx(direct, abs=1e-12)
    assert r_squared(np.ones(5), np.zeros(5)) == 0.0


def test_trajectory_mismatch_uses_common_prefix(mapping, params):
    cfg = ExperimentConfig(n_sessions=1, trials_per_session=3)
    recs = synthetic_subject(params, cfg, 0, mapping)
    assert trajectory_mismatch(recs, recs) == 0.0
    import dataclasses
    shorter = [dataclasses.replace(r, t=r.t[:2], joint_traj=r.joint_traj[:2]) for r in recs]
    assert trajectory_mismatch(recs, shorter) == 0.0
    with pytest.raises(ValueError):
        trajectory_mismatch(recs, recs[:1])


def test_zero_reference_frozen_learner_ties_to_smallest_gamma(mapping):
    cfg = ExperimentConfig(n_sessions=1, trials_per_session=4, seed=0)
    frozen = quiet_params(eta=0.0, noise=NoiseSchedule.off())
    ref = synthetic_subject(frozen, cfg, 0, mapping)
    for r in ref:
        assert not r.joint_traj.any()
    g_hat, curve = fit_gamma(ref, cfg, mapping, frozen, (0.0, 0.3))
    assert all(v == 0.0 for _, v in curve)
    assert g_hat == 0.0


def test_gamma_search_small_round_trip(mapping):
    cfg = ExperimentConfig(n_sessions=2, trials_per_session=30)
    truth = quiet_params(gamma=0.262)
    ref = synthetic_subject(truth, cfg, 4, mapping)
    cfg = cfg.replace(seed=4)
    g_hat, curve = fit_gamma(ref, cfg, mapping, truth, (0.0, 1.0))
    assert abs(g_hat - 0.262) <= 0.002 + 1e-12
    values = dict(curve)
    assert values[g_hat] == min(values.values())
    # the refine pass covers one coarse step either side of the coarse minimum
    fine = [g for g, _ in curve if 0.1 < g < 0.4 and round(g, 1) != g]
    assert len(fine) > 50
    g2, curve2 = fit_gamma(ref, cfg, mapping, truth, (0.0, 1.0))
    assert g2 == g_hat and curve2 == curve


def test_diverging_candidates_score_inf(mapping):
    cfg = ExperimentConfig(n_sessions=1, trials_per_session=3, bound=50.0)
    truth = quiet_params()
    ref = synthetic_subject(truth, cfg, 0, mapping)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        g_hat, curve = fit_gamma(ref, cfg, mapping, truth, (0.0, 200.0), coarse_step=50.0, fine_step=25.0)
    assert np.isfinite(dict(curve)[g_hat])


def test_synthetic_subject_determinism(mapping, params):
    cfg = ExperimentConfig(n_sessions=1, trials_per_session=5)
    a = synthetic_subject(params, cfg, 1, mapping)
    assert a == synthetic_subject(params, cfg, 1, mapping)
    assert a != synthetic_subject(params, cfg, 2, mapping)


# without exploration the grouped curve need not decay, which is warned about
@pytest.mark.filterwarnings("ignore::bomilearn.errors.NonDecreasingSeries")
def test_zero_noise_subject_gives_repeatable_fit(mapping):
    cfg = ExperimentConfig(n_sessions=2, trials_per_session=60)
    p = quiet_params(noise=NoiseSchedule.off())
    e1 = fit_eta(re_learning_curve(synthetic_subject(p, cfg, 0, mapping))).eta
    e2 = fit_eta(re_learning_curve(synthetic_subject(p, cfg, 0, mapping))).eta
    assert e1 == e2


def test_fit_report_json(tmp_path):
    res = FitResult(eta_hat=0.05, alpha_hat=0.5, c_hat=0.1, r_squared=0.9, gamma_hat=0.26,
                    gamma_objective_curve=[(0.0, 3.0), (0.26, 1.0)], gamma_range=(0.0, 10.0))
    path = save_fit(res, tmp_path / "fit.json", config={"seed": 1})
    d = json.loads(path.read_text())
    assert d["fit"]["gamma_range"] == [0.0, 10.0]
    assert d["fit"]["gamma_objective_curve"][1] == [0.26, 1.0]
    assert d["config"] == {"seed": 1} and len(d["config_hash"]) == 16
