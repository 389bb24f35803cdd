"""risktwin: real-time structural-risk digital twin.

Simulation-free recursive Bayesian updating of component reliability
indices from streamed sensor data, color-banded Risk Shadow frames, and
risk-informed control, with three benchmark systems: a simply supported
plate, a cantilever beam steered by a mechanical arm, and a BEM wind
turbine under Gaussian-process wind.
"""

from .ensemble import PrecomputedEnsemble
from .inference import (
    NoiseModel,
    Observation,
    PosteriorWeightState,
    WeightCollapseError,
    effective_sample_size,
    init_weights,
    log_likelihood,
    posterior_moment,
    sample_prior,
    update_weights,
)
from .priors import Deterministic, GaussianProcessRef, Lognormal, Normal, PriorModel, Uniform
from .reliability import (
    BETA_CAP,
    DEFAULT_RISK_BANDS,
    ComponentReliability,
    LimitState,
    ReliabilityReading,
    RiskBand,
    fosm_reliability,
    posterior_failure_probability,
    prior_reliability_index,
    reliability_index,
    risk_band,
    sample_failure_conditional,
)
from .runtime import (
    Session,
    run_forward_experiment,
    run_inverse_experiment,
    run_offline_phase,
)
from .scenario import load_scenario

__version__ = "0.1.0"

__all__ = [
    "BETA_CAP", "ComponentReliability", "DEFAULT_RISK_BANDS", "Deterministic",
    "GaussianProcessRef", "LimitState", "Lognormal", "NoiseModel", "Normal",
    "Observation", "PosteriorWeightState", "PrecomputedEnsemble", "PriorModel",
    "ReliabilityReading", "RiskBand", "Session", "Uniform", "WeightCollapseError",
    "effective_sample_size", "fosm_reliability", "init_weights", "load_scenario",
    "log_likelihood", "posterior_failure_probability", "posterior_moment",
    "prior_reliability_index", "reliability_index", "risk_band",
    "run_forward_experiment", "run_inverse_experiment", "run_offline_phase",
    "sample_failure_conditional", "sample_prior", "update_weights",
]
