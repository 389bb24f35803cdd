"""Recursive, simulation-free Bayesian updating over precomputed ensembles.

The posterior over the basic random variables is represented as importance
weights on an offline sample set. Each observation multiplies an
alpha-blend of the previous posterior and the prior by the current
likelihood:

    u_i = L_i * (alpha * w_i + (1 - alpha) / N)

and renormalizes. All accumulation runs in log domain with a per-step
max-shift, so long observation streams cannot underflow; the per-step
normalizing constants c^(1..t) are kept in log form so the expanded
product form of the recursion can be reconstructed exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .ensemble import PrecomputedEnsemble

LOG_ZERO = -np.inf


class WeightCollapseError(RuntimeError):
    """Every unnormalized weight underflowed: the observation lies outside
    the ensemble's support (true support mismatch, not numerical noise)."""


@dataclass(frozen=True)
class NoiseModel:
    """Zero-mean Gaussian measurement/model error, one sd per channel."""

    sigmas: tuple[float, ...]

    def __post_init__(self):
        if len(self.sigmas) == 0:
            raise ValueError("noise model needs at least one channel")
        if any(s <= 0 or not math.isfinite(s) for s in self.sigmas):
            raise ValueError(f"all channel sigmas must be finite and > 0, got {self.sigmas}")

    @property
    def n_channels(self) -> int:
        return len(self.sigmas)


@dataclass(frozen=True)
class Observation:
    """Aggregated measurement for one computational step."""

    t: int
    values: tuple[float, ...]
    n_raw: int = 1
    span_s: float = 0.0

    def array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=float)


@dataclass(frozen=True)
class PosteriorWeightState:
    """Immutable snapshot of the weighted-ensemble posterior at step t.

    ``log_scale`` holds per-sample log density-ratio values; for a state
    normalized against its own constants their mean exponential is 1, and
    for a failure-conditional state updated against a reference state's
    constants the mean exponential is the running likelihood accumulator
    of the failure-probability ratio (see reliability.py).
    """

    ensemble: PrecomputedEnsemble
    alpha: float
    t: int = 0
    log_scale: np.ndarray = field(default=None, repr=False)
    log_constants: tuple[float, ...] = ()
    last_observation: Observation | None = None

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")
        if self.log_scale is None:
            ls = np.zeros(self.ensemble.n)
        else:
            ls = np.asarray(self.log_scale, dtype=float)
        ls = ls.copy()
        ls.flags.writeable = False
        object.__setattr__(self, "log_scale", ls)

    @property
    def n(self) -> int:
        return self.ensemble.n

    @property
    def weights(self) -> np.ndarray:
        """Normalized weights; always sum to 1."""
        cached = getattr(self, "_weights_cache", None)
        if cached is not None:
            return cached
        shift = np.max(self.log_scale)
        if shift == LOG_ZERO:
            raise WeightCollapseError("all weights are zero")
        w = np.exp(self.log_scale - shift)
        w /= w.sum()
        w.flags.writeable = False
        object.__setattr__(self, "_weights_cache", w)
        return w

    @property
    def log_accumulator(self) -> float:
        """log of mean_i exp(log_scale_i); 0 for a self-normalized state."""
        return _log_mean_exp(self.log_scale)

    @property
    def constants(self) -> tuple[float, ...]:
        """Linear-domain c^(1..t); may under/overflow for long streams."""
        return tuple(math.exp(c) for c in self.log_constants)

    def effective_sample_size(self) -> float:
        w = self.weights
        return 1.0 / float(np.sum(w * w))

    def rebaseline_recommended(self) -> bool:
        """Weight degeneracy diagnostic: ESS below N/100."""
        return self.effective_sample_size() < self.n / 100.0


def _log_mean_exp(v: np.ndarray) -> float:
    shift = np.max(v)
    if shift == LOG_ZERO:
        return LOG_ZERO
    return float(shift + np.log(np.mean(np.exp(v - shift))))


def sample_prior(prior, model, n: int, seed: int, *,
                 scenario_id: str = "", units: list[str] | None = None) -> PrecomputedEnsemble:
    """Draw x^(i) ~ f(x) and cache the forward-model outputs M(x^(i)).

    ``model`` maps an (n, dim) sample block to an (n, m) output block.
    Deterministic for a given seed.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    rng = np.random.default_rng(seed)
    samples = prior.sample(n, rng)
    outputs = np.atleast_2d(np.asarray(model(samples), dtype=float))
    if outputs.shape[0] != n:
        outputs = outputs.T
    if not np.all(np.isfinite(outputs)):
        bad = int(np.argmin(np.isfinite(outputs).all(axis=1)))
        raise ValueError(
            f"forward model produced non-finite output for sample row {bad}; "
            "model and prior are inconsistent"
        )
    return PrecomputedEnsemble(
        samples=samples,
        model_outputs=outputs,
        variable_names=prior.names,
        provenance="prior",
        seed=seed,
        scenario_id=scenario_id,
        units=units or [],
    )


def init_weights(ensemble: PrecomputedEnsemble, alpha: float) -> PosteriorWeightState:
    """Uniform-weight state at t = 0 with empty constant history."""
    if ensemble.n < 1:
        raise ValueError("cannot initialize weights on an empty ensemble")
    return PosteriorWeightState(ensemble=ensemble, alpha=alpha)


def log_likelihood(y: Observation | np.ndarray, m, noise: NoiseModel) -> float:
    """Unnormalized Gaussian log-density of the residual y - m.

    Returns -sum_k (y_k - m_k)^2 / (2 sigma_k^2); the normalizing constant
    cancels in the self-normalized weight update.
    """
    yv = y.array() if isinstance(y, Observation) else np.asarray(y, dtype=float)
    mv = np.asarray(m, dtype=float)
    if yv.shape != mv.shape:
        raise ValueError(f"channel count mismatch: y has {yv.shape}, m has {mv.shape}")
    if yv.size != noise.n_channels:
        raise ValueError(
            f"observation has {yv.size} channels, noise model has {noise.n_channels}"
        )
    if not (np.all(np.isfinite(yv)) and np.all(np.isfinite(mv))):
        raise ValueError("non-finite observation or model output")
    r = yv - mv
    s = np.asarray(noise.sigmas)
    return float(-np.sum(r * r / (2.0 * s * s)))


def log_likelihood_rows(y: Observation, outputs: np.ndarray, noise: NoiseModel) -> np.ndarray:
    """Vectorized log_likelihood across all ensemble rows."""
    yv = y.array()
    outputs = np.atleast_2d(outputs)
    if outputs.shape[1] != yv.size or yv.size != noise.n_channels:
        raise ValueError(
            f"channel mismatch: outputs {outputs.shape[1]}, observation {yv.size}, "
            f"noise {noise.n_channels}"
        )
    if not np.all(np.isfinite(yv)):
        raise ValueError("non-finite observation")
    r = outputs - yv
    s = np.asarray(noise.sigmas)
    # overflow to -inf is the designed signal for a true support mismatch
    with np.errstate(over="ignore"):
        return -np.sum(r * r / (2.0 * s * s), axis=1)


def _mix_log(state: PosteriorWeightState) -> np.ndarray:
    """log(alpha * s_i + (1 - alpha)) computed stably for alpha in [0, 1]."""
    a = state.alpha
    if a == 0.0:
        return np.zeros(state.n)
    if a == 1.0:
        return state.log_scale.copy()
    return np.logaddexp(math.log(a) + state.log_scale, math.log1p(-a))


def update_weights(state: PosteriorWeightState, y: Observation, noise: NoiseModel,
                   *, model_outputs: np.ndarray | None = None,
                   log_norm_override: float | None = None) -> PosteriorWeightState:
    """One recursive posterior update; returns a new immutable state.

    ``model_outputs`` substitutes refreshed predictions for the cached ones
    (used when the measurement map depends on the known control state).
    ``log_norm_override`` normalizes against another state's step constant
    instead of this state's own, which is how a failure-conditional
    ensemble tracks the failure-probability numerator of the ratio update.
    """
    if y.t != state.t + 1:
        raise ValueError(f"observation step {y.t} does not follow state step {state.t}")
    outputs = state.ensemble.model_outputs if model_outputs is None else model_outputs
    ll = log_likelihood_rows(y, outputs, noise)
    raw = ll + _mix_log(state)
    log_c_self = _log_mean_exp(raw)
    if log_c_self == LOG_ZERO:
        raise WeightCollapseError(
            f"all sample likelihoods vanished at step {y.t}: observation is "
            "inconsistent with the ensemble support"
        )
    log_c = log_c_self if log_norm_override is None else log_norm_override
    return replace(
        state,
        t=y.t,
        log_scale=raw - log_c,
        log_constants=state.log_constants + (log_c_self,),
        last_observation=y,
    )


def posterior_moment(state: PosteriorWeightState, q: np.ndarray) -> float:
    """Self-normalized estimate of E[q(X) | y^(1:t)] = sum_i w_i q(x_i)."""
    q = np.asarray(q, dtype=float)
    if q.shape[0] != state.n:
        raise ValueError(f"q has {q.shape[0]} values for {state.n} samples")
    if not np.all(np.isfinite(q)):
        raise ValueError("q contains non-finite values")
    return float(np.dot(state.weights, q))


def effective_sample_size(state: PosteriorWeightState) -> float:
    """1 / sum_i w_i^2, in [1, N]."""
    return state.effective_sample_size()
