"""Learning dynamics of a body-machine interface user.

Submodules: ``synergy`` (postural synergies, interface map), ``dynamics``
(coupled forward/inverse learning model), ``protocol`` (reaching
experiment), ``metrics`` (reaching and forward-model error, SVD modes),
``fitting`` (parameter estimation), ``verify`` (stability checks), ``cli``.
"""
from .dynamics import LearnerState, ModelParams, NoiseSchedule, step
from .errors import *  # noqa: F401,F403
from .fitting import FitResult, fit_eta, fit_gamma, synthetic_subject
from .metrics import MetricSeries, forward_model_error, reaching_error, subspace_angle
from .protocol import ExperimentConfig, TrialRecord, export_records, import_records, run_experiment
from .synergy import (
    MappingMatrix,
    PostureDataset,
    SynergyBasis,
    build_mapping,
    build_synergy_basis,
    default_mapping,
    synthesize_posture_data,
)

__version__ = "0.1.0"
