"""Component reliability: prior and posterior indices, rare-event offline
sampling, FOSM fallback, and risk-band mapping.

The posterior failure probability follows the ratio form

    p^(t) = Phi(-beta0) * A_R / A

where A_R and A are the running likelihood accumulators of the
failure-conditional and prior ensembles, both driven by the same
alpha-blended recursion and the same observation stream, with the
failure-conditional side normalized against the prior side's per-step
constants. With no observations the ratio is 1 and the prior index is
recovered.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np
from scipy import stats

from .ensemble import PrecomputedEnsemble
from .inference import (
    NoiseModel,
    Observation,
    PosteriorWeightState,
    init_weights,
    update_weights,
)
from .priors import Lognormal, PriorModel, Uniform

BETA_CAP = 10.0


class UnreachableEventError(RuntimeError):
    """The failure region has no probability mass under the prior."""


class SamplerDegenerateError(RuntimeError):
    """A conditional-sampling stage collapsed onto too few survivors."""


class DegenerateLimitStateError(RuntimeError):
    """sigma_G = 0: the limit state does not vary over the ensemble."""


@dataclass
class LimitState:
    """Named capacity-minus-demand function with its offline artifacts."""

    id: str
    component: str
    evaluator: Callable[[np.ndarray], np.ndarray]
    beta0: float | None = None
    ensemble_d: PrecomputedEnsemble | None = None
    ensemble_dr: PrecomputedEnsemble | None = None

    def g(self, x_rows: np.ndarray) -> np.ndarray:
        return np.asarray(self.evaluator(np.atleast_2d(x_rows)), dtype=float)


@dataclass(frozen=True)
class RiskBand:
    name: str
    lo: float
    hi: float
    rgb: tuple[int, int, int]


# Color map for the Risk Shadow display; intervals partition the real line.
DEFAULT_RISK_BANDS = (
    RiskBand("Safe", 3.7, math.inf, (124, 252, 0)),
    RiskBand("Low", 3.2, 3.7, (255, 255, 0)),
    RiskBand("Medium", 2.7, 3.2, (240, 150, 110)),
    RiskBand("High", -math.inf, 2.7, (255, 0, 0)),
)


def risk_band(beta: float, bands: tuple[RiskBand, ...] = DEFAULT_RISK_BANDS) -> RiskBand:
    """Map a reliability index to its band; intervals are half-open [lo, hi)."""
    if not math.isfinite(beta):
        raise ValueError(f"beta must be finite, got {beta}")
    for band in bands:
        if band.lo <= beta < band.hi:
            return band
    raise ValueError(f"risk bands do not cover beta = {beta}")


class ReliabilityIndexResult(NamedTuple):
    beta: float
    fosm_fallback: bool


@dataclass(frozen=True)
class ReliabilityReading:
    limit_state_id: str
    p: float
    beta: float
    method: str  # "simulation-free" | "fosm-fallback"
    t: int


def reliability_index(p: float) -> ReliabilityIndexResult:
    """beta = -Phi^{-1}(p), capped at 10 for display.

    p = 0 cannot be inverted; the result carries a flag telling the caller
    to fall back to the FOSM estimate.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"probability must lie in [0, 1], got {p}")
    if p == 0.0:
        return ReliabilityIndexResult(BETA_CAP, True)
    beta = float(-stats.norm.ppf(p))
    return ReliabilityIndexResult(min(max(beta, -BETA_CAP), BETA_CAP), False)


def fosm_reliability(state: PosteriorWeightState, ls: LimitState,
                     g_values: np.ndarray | None = None) -> float:
    """Mean-value first-order second-moment index beta = mu_G / sigma_G.

    Uses the posterior-weighted moments of the cached limit-state values,
    so the online phase stays simulation-free. Capped at 10.
    """
    if g_values is None:
        g_values = state.ensemble.limit_state_values.get(ls.id)
        if g_values is None:
            raise ValueError(f"no cached limit-state values for '{ls.id}' on this ensemble")
    g = np.asarray(g_values, dtype=float)
    w = state.weights
    mu = float(np.dot(w, g))
    var = float(np.dot(w, (g - mu) ** 2))
    if var <= 0.0:
        raise DegenerateLimitStateError(f"limit state '{ls.id}' has zero variance")
    beta = mu / math.sqrt(var)
    return min(max(beta, -BETA_CAP), BETA_CAP)


def posterior_failure_probability(state_d: PosteriorWeightState,
                                  state_dr: PosteriorWeightState,
                                  beta0: float) -> float:
    """Simulation-free posterior failure probability (ratio form above).

    ``state_dr`` must have been updated against ``state_d``'s per-step
    constants with the same alpha and observation stream.
    """
    if state_d.t != state_dr.t:
        raise ValueError(
            f"ensemble states are out of step: D at t={state_d.t}, D_R at t={state_dr.t}"
        )
    if state_d.alpha != state_dr.alpha:
        raise ValueError("D and D_R states use different alpha")
    log_ratio = state_dr.log_accumulator - state_d.log_accumulator
    p = float(stats.norm.cdf(-beta0) * math.exp(log_ratio))
    return min(max(p, 0.0), 1.0)


def weighted_indicator_probability(state: PosteriorWeightState,
                                   g_values: np.ndarray) -> tuple[float, float]:
    """Direct estimate sum_i w_i 1{G <= 0} and its Monte Carlo standard error."""
    w = state.weights
    ind = (np.asarray(g_values, dtype=float) <= 0.0).astype(float)
    p = float(np.dot(w, ind))
    se = float(np.sqrt(np.sum((w * (ind - p)) ** 2)))
    return p, se


# ----------------------------------------------------------------------
# offline phase: prior index and failure-conditional sampling
# ----------------------------------------------------------------------

_STAGE_P0 = 0.1          # per-stage conditional probability target
_MAX_STAGES = 30
_MIN_SURVIVORS = 10
# give up once the running estimate drops below the display floor: such a
# component reads as beta = 10 (cap) and carries no failure ensemble
_LOG_P_FLOOR = math.log(float(stats.norm.cdf(-(BETA_CAP + 2.0))))


@dataclass
class StagedResult:
    p: float
    samples_u: np.ndarray          # standard-normal-space rows with G <= 0
    thresholds: list[float] = field(default_factory=list)


def _mcmc_stage(prior: PriorModel, evaluator, u_seeds: np.ndarray,
                g_seeds: np.ndarray, threshold: float, n_out: int,
                rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Component-wise random-walk resampling of f(u | G <= threshold).

    Modified Metropolis in standard-normal space: each stochastic component
    proposes u' = u + xi, accepts with min(1, phi(u')/phi(u)), and the whole
    move is rejected if it leaves the conditioning region.
    """
    move_idx = prior.stochastic_indices()
    n_seeds = u_seeds.shape[0]
    steps = int(math.ceil(n_out / n_seeds))
    chains_u = u_seeds.copy()
    chains_g = g_seeds.copy()
    out_u = [u_seeds.copy()]
    out_g = [g_seeds.copy()]
    for _ in range(steps):
        prop = chains_u.copy()
        for j in move_idx:
            cand = chains_u[:, j] + rng.standard_normal(n_seeds)
            log_acc = 0.5 * (chains_u[:, j] ** 2 - cand**2)
            accept = np.log(rng.random(n_seeds)) < log_acc
            prop[accept, j] = cand[accept]
        g_prop = evaluator(prior.from_standard_normal(prop))
        ok = g_prop <= threshold
        chains_u[ok] = prop[ok]
        chains_g[ok] = g_prop[ok]
        out_u.append(chains_u.copy())
        out_g.append(chains_g.copy())
    u_all = np.concatenate(out_u[1:], axis=0)
    g_all = np.concatenate(out_g[1:], axis=0)
    return u_all[:n_out], g_all[:n_out]


def staged_failure_sampler(ls: LimitState, prior: PriorModel, n_stage: int,
                           seed: int) -> StagedResult:
    """Nested-threshold conditional sampling down to the failure region.

    Thresholds are set at the 0.1-quantile of each stage's G values; the
    failure-probability estimate is the product of per-stage conditional
    probabilities.
    """
    rng = np.random.default_rng(seed)
    u = rng.standard_normal((n_stage, prior.dim))
    g = ls.g(prior.from_standard_normal(u))
    log_p = 0.0
    thresholds: list[float] = []
    prev_threshold = math.inf
    for _ in range(_MAX_STAGES):
        n_fail = int(np.sum(g <= 0.0))
        if n_fail >= _STAGE_P0 * n_stage:
            log_p += math.log(n_fail / n_stage)
            thresholds.append(0.0)
            keep = g <= 0.0
            return StagedResult(math.exp(log_p), u[keep], thresholds)
        threshold = float(np.quantile(g, _STAGE_P0))
        if threshold <= 0.0:
            threshold = 0.0
        if threshold >= prev_threshold:
            raise UnreachableEventError(
                f"limit state '{ls.id}': staged thresholds stalled at {threshold:.6g}; "
                "the failure region appears unreachable under the prior"
            )
        keep = g <= threshold
        n_keep = int(np.sum(keep))
        distinct = len(np.unique(g[keep]))
        if n_keep < _MIN_SURVIVORS or distinct < _MIN_SURVIVORS:
            raise SamplerDegenerateError(
                f"limit state '{ls.id}': stage at threshold {threshold:.6g} kept only "
                f"{n_keep} survivors ({distinct} distinct)"
            )
        log_p += math.log(n_keep / n_stage)
        if log_p < _LOG_P_FLOOR:
            raise UnreachableEventError(
                f"limit state '{ls.id}': failure probability fell below the "
                f"beta = {BETA_CAP:g} display floor during staging"
            )
        thresholds.append(threshold)
        prev_threshold = threshold
        u, g = _mcmc_stage(prior, ls.g, u[keep], g[keep], threshold, n_stage, rng)
    raise UnreachableEventError(
        f"limit state '{ls.id}': no failure samples after {_MAX_STAGES} stages"
    )


def prior_reliability_index(ls: LimitState, prior: PriorModel, n_mc: int,
                            seed: int) -> float:
    """beta0 = -Phi^{-1}(P(G(X) <= 0)) under the prior.

    Direct Monte Carlo; escalates to the staged conditional sampler when
    fewer than 10 failures are observed, using its product-of-conditionals
    estimate.
    """
    if n_mc < 1000:
        raise ValueError(f"n_mc must be >= 1000, got {n_mc}")
    rng = np.random.default_rng(seed)
    x = prior.sample(n_mc, rng)
    g = ls.g(x)
    n_fail = int(np.sum(g <= 0.0))
    if n_fail >= 10:
        return float(-stats.norm.ppf(n_fail / n_mc))
    n_stage = min(max(1000, n_mc // 10), 10_000)
    staged = staged_failure_sampler(ls, prior, n_stage, seed + 1)
    if staged.p <= 0.0:
        raise UnreachableEventError(f"limit state '{ls.id}' unreachable under the prior")
    return float(-stats.norm.ppf(staged.p))


def sample_failure_conditional(ls: LimitState, prior: PriorModel, n_prime: int,
                               seed: int, model=None, *,
                               scenario_id: str = "") -> PrecomputedEnsemble:
    """Draw n' rows of x ~ f(x | G(x) <= 0) with cached model outputs.

    Direct rejection when the failure probability is moderate (>= 1e-2),
    otherwise staged conditional sampling with a final fill-in stage at
    threshold zero.
    """
    rng = np.random.default_rng(seed)
    n_pilot = max(2000, n_prime)
    x_pilot = prior.sample(n_pilot, rng)
    g_pilot = ls.g(x_pilot)
    p_hat = float(np.mean(g_pilot <= 0.0))

    if p_hat >= 1e-2:
        rows = [x_pilot[g_pilot <= 0.0]]
        n_have = rows[0].shape[0]
        while n_have < n_prime:
            x = prior.sample(n_pilot, rng)
            g = ls.g(x)
            rows.append(x[g <= 0.0])
            n_have += rows[-1].shape[0]
        x_fail = np.concatenate(rows, axis=0)[:n_prime]
    else:
        n_stage = min(max(2000, 2 * n_prime), 10_000)
        staged = staged_failure_sampler(ls, prior, n_stage, seed + 1)
        u = staged.samples_u
        g_u = ls.g(prior.from_standard_normal(u))
        if u.shape[0] < n_prime:
            u, g_u = _mcmc_stage(prior, ls.g, u, g_u, 0.0, n_prime, rng)
        sel = rng.permutation(u.shape[0])[:n_prime]
        x_fail = prior.from_standard_normal(u[sel])

    g_fail = ls.g(x_fail)
    # MCMC moves were accepted against G <= 0, so this is a hard guarantee.
    assert np.all(g_fail <= 0.0), "failure-conditional sampler produced G > 0 rows"
    outputs = (np.atleast_2d(np.asarray(model(x_fail), dtype=float))
               if model is not None else np.zeros((n_prime, 0)))
    return PrecomputedEnsemble(
        samples=x_fail,
        model_outputs=outputs,
        variable_names=prior.names,
        provenance=f"failure-conditional:{ls.id}",
        seed=seed,
        scenario_id=scenario_id,
        limit_state_values={ls.id: g_fail},
    )


# ----------------------------------------------------------------------
# shared observation bus: paired D / D_R tracking per limit state
# ----------------------------------------------------------------------

@dataclass
class ComponentReliability:
    """Keeps one limit state's D_R state in lockstep with the shared D state.

    The runtime updates the shared prior-ensemble state once per step and
    then calls :meth:`update` with the new state so the failure-conditional
    side is normalized against the same per-step constants, as the ratio
    form requires.
    """

    ls: LimitState
    beta0: float
    state_dr: PosteriorWeightState

    @classmethod
    def create(cls, ls: LimitState, beta0: float, alpha: float) -> "ComponentReliability":
        if ls.ensemble_dr is None:
            raise ValueError(f"limit state '{ls.id}' has no failure-conditional ensemble")
        return cls(ls=ls, beta0=beta0, state_dr=init_weights(ls.ensemble_dr, alpha))

    def update(self, state_d: PosteriorWeightState, y: Observation, noise: NoiseModel,
               dr_outputs: np.ndarray | None = None) -> None:
        self.state_dr = update_weights(
            self.state_dr, y, noise,
            model_outputs=dr_outputs,
            log_norm_override=state_d.log_constants[-1],
        )

    def probability(self, state_d: PosteriorWeightState) -> float:
        return posterior_failure_probability(state_d, self.state_dr, self.beta0)

    def reading(self, state_d: PosteriorWeightState) -> ReliabilityReading:
        p = self.probability(state_d)
        beta, fallback = reliability_index(p)
        if fallback:
            beta = fosm_reliability(state_d, self.ls)
            return ReliabilityReading(self.ls.id, p, beta, "fosm-fallback", state_d.t)
        return ReliabilityReading(self.ls.id, p, beta, "simulation-free", state_d.t)


def resample_with_jitter(state: PosteriorWeightState, prior: PriorModel, n: int,
                         rng: np.random.Generator,
                         jitter_frac: float = 0.01) -> np.ndarray:
    """Multinomial resample by posterior weights plus small Gaussian jitter.

    Jitter is 1% of the posterior standard deviation per component, zero for
    deterministic components, and clipped back into bounded supports.
    """
    w = state.weights
    idx = rng.choice(state.n, size=n, replace=True, p=w)
    x = state.ensemble.samples[idx].copy()
    mu = w @ state.ensemble.samples
    var = w @ (state.ensemble.samples - mu) ** 2
    sd = np.sqrt(np.maximum(var, 0.0))
    for j, (_, marginal) in enumerate(prior.variables):
        scale = jitter_frac * sd[j]
        if scale <= 0.0 or marginal.std == 0.0:
            continue
        x[:, j] += scale * rng.standard_normal(n)
        if isinstance(marginal, Uniform):
            x[:, j] = np.clip(x[:, j], marginal.lo, marginal.hi)
        elif isinstance(marginal, Lognormal):
            x[:, j] = np.maximum(x[:, j], 1e-300)
    return x
