"""Run configuration: defaults, TOML files and command-line overrides.

A configuration file is TOML with up to six tables::

    [experiment]   # ExperimentConfig fields (n_sessions, targets, seed, ...)
    [model]        # gamma, eta, mu, k_p, a
    [noise]        # s_session, decay_rate, floor, seed
    [mapping]      # seed, m, h, scale, scheme, n, posture_csv
    [fit]          # gamma_range, coarse_step, fine_step, window, eta_source
    [verify]       # settings of the verification suite

Missing keys keep their defaults; unknown keys are an error. Values from
the command line are applied last.
"""
from __future__ import annotations

import copy
import dataclasses
import warnings
from pathlib import Path

import tomli

from .dynamics import ModelParams, NoiseSchedule
from .errors import InvalidConfig
from .protocol import ExperimentConfig
from .synergy import (
    MappingMatrix,
    build_mapping,
    build_synergy_basis,
    load_posture_csv,
    synthesize_posture_data,
)
from .verify import DEFAULT_SUITE

__all__ = ["RunConfig", "default_tree", "load_config", "build_run_config"]


def default_tree() -> dict:
    exp = ExperimentConfig().to_dict()
    model = {"gamma": 0.262, "eta": 0.04522, "mu": 0.3, "k_p": 0.02, "a": 0.5}
    noise = dataclasses.asdict(NoiseSchedule())
    noise["s_session"] = list(noise["s_session"])
    return {
        "experiment": exp,
        "model": model,
        "noise": noise,
        "mapping": {"seed": 0, "m": 19, "h": 4, "n_samples": 5000, "scale": 1.0,
                    "scheme": "first_two", "n": 2, "posture_csv": None},
        "fit": {"gamma_range": [0.0, 10.0], "coarse_step": 0.1, "fine_step": 0.002,
                "window": 10, "eta_source": "config"},
        "verify": dict(DEFAULT_SUITE),
    }


def _merge(base: dict, override: dict, where: str = ""):
    for key, value in override.items():
        if key not in base:
            raise InvalidConfig(f"unknown config key {where}{key!r}")
        if isinstance(base[key], dict) and isinstance(value, dict):
            _merge(base[key], value, f"{where}{key}.")
        else:
            base[key] = value


def load_config(path=None, overrides: dict | None = None) -> dict:
    """Defaults, then the TOML file, then ``overrides``; returns the merged tree."""
    tree = default_tree()
    if path is not None:
        path = Path(path)
        try:
            with open(path, "rb") as fh:
                _merge(tree, tomli.load(fh))
        except tomli.TOMLDecodeError as exc:
            raise InvalidConfig(f"{path}: {exc}") from exc
    if overrides:
        _merge(tree, overrides)
    return tree


@dataclasses.dataclass
class RunConfig:
    tree: dict
    experiment: ExperimentConfig
    params: ModelParams
    mapping: MappingMatrix
    warnings: list

    @property
    def seed(self) -> int:
        return self.experiment.seed

    def echo(self) -> dict:
        return copy.deepcopy(self.tree)


def _none_if_empty(v):
    return None if v in ("", None) else v


def build_mapping_from(tree: dict) -> MappingMatrix:
    mp = tree["mapping"]
    csv_path = _none_if_empty(mp.get("posture_csv"))
    if csv_path is not None:
        data = load_posture_csv(csv_path)
    else:
        data = synthesize_posture_data(m=int(mp["m"]), latent_dim=int(mp["h"]),
                                       n_samples=int(mp["n_samples"]), seed=int(mp["seed"]))
    basis = build_synergy_basis(data, int(mp["h"]))
    return build_mapping(basis, mp["scheme"], n=int(mp["n"]), scale=float(mp["scale"]),
                         seed=int(mp["seed"]))


def build_run_config(tree: dict) -> RunConfig:
    """Validate every section; raises InvalidConfig before any simulation."""
    try:
        exp = ExperimentConfig.from_dict(tree["experiment"])
        noise_d = dict(tree["noise"])
        noise_d["s_session"] = tuple(noise_d["s_session"])
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            params = ModelParams(**tree["model"], noise=NoiseSchedule(**noise_d))
        mapping = build_mapping_from(tree)
    except (TypeError, KeyError) as exc:
        raise InvalidConfig(f"bad configuration: {exc}") from exc
    if len(exp.targets[0]) != mapping.n:
        raise InvalidConfig(f"targets are {len(exp.targets[0])}-D but the map drives {mapping.n} axes")
    fit = tree["fit"]
    lo, hi = fit["gamma_range"]
    if not 0 <= lo <= hi:
        raise InvalidConfig("fit.gamma_range must satisfy 0 <= low <= high")
    if fit["eta_source"] not in ("config", "fitted"):
        raise InvalidConfig("fit.eta_source must be 'config' or 'fitted'")
    if fit["coarse_step"] <= 0 or fit["fine_step"] <= 0 or int(fit["window"]) < 1:
        raise InvalidConfig("fit steps and window must be positive")
    for w in caught:
        warnings.warn(w.message, w.category, stacklevel=2)
    return RunConfig(tree=tree, experiment=exp, params=params, mapping=mapping,
                     warnings=[str(w.message) for w in caught])
