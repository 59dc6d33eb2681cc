import pytest

from bomilearn.config import build_run_config, default_tree, load_config
from bomilearn.errors import InvalidConfig, TimescaleOrderingWarning


def write(tmp_path, text):
    path = tmp_path / "run.toml"
    path.write_text(text)
    return path


def test_defaults_build():
    run = build_run_config(load_config())
    assert run.params.gamma == 0.262 and run.params.eta == 0.04522
    assert run.experiment.n_sessions == 8 and run.mapping.c.shape == (2, 19)
    assert run.warnings == []
    assert run.echo() == default_tree() and run.echo() is not run.tree


def test_toml_values_and_overrides(tmp_path):
    path = write(tmp_path, """
[experiment]
n_sessions = 3
seed = 4

[model]
gamma = 0.5

[fit]
gamma_range = [0.1, 2.0]
""")
    tree = load_config(path, {"experiment": {"seed": 9}})
    run = build_run_config(tree)
    assert run.experiment.n_sessions == 3
    assert run.seed == 9  # command line is applied last
    assert run.params.gamma == 0.5 and run.params.eta == 0.04522
    assert tree["fit"]["gamma_range"] == [0.1, 2.0]


def test_unknown_keys_rejected(tmp_path):
    with pytest.raises(InvalidConfig):
        load_config(write(tmp_path, "[model]\ngama = 1.0\n"))
    with pytest.raises(InvalidConfig):
        load_config(write(tmp_path, "[modle]\ngamma = 1.0\n"))
    with pytest.raises(InvalidConfig):
        load_config(write(tmp_path, "[model\n"))


def test_invalid_values_rejected():
    bad = [
        {"experiment": {"targets": [[1.0, 1.0, 1.0], [2.0, 2.0, 2.0]], "start_pos": [0.0, 0.0, 0.0]}},
        {"model": {"mu": -1.0}},
        {"fit": {"gamma_range": [2.0, 1.0]}},
        {"fit": {"eta_source": "guess"}},
        {"mapping": {"h": 40}},
    ]
    for over in bad:
        with pytest.raises(InvalidConfig):
            build_run_config(load_config(overrides=over))


def test_misordered_timescales_warn_but_run():
    with pytest.warns(TimescaleOrderingWarning):
        run = build_run_config(load_config(overrides={"model": {"eta": 1.0, "gamma": 0.01}}))
    assert run.warnings and run.params.eta == 1.0
