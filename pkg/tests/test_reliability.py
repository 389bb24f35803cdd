import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from risktwin.ensemble import PrecomputedEnsemble
from risktwin.inference import (
    NoiseModel,
    Observation,
    init_weights,
    sample_prior,
    update_weights,
)
from risktwin.priors import Normal, PriorModel
from risktwin.reliability import (
    BETA_CAP,
    DEFAULT_RISK_BANDS,
    ComponentReliability,
    DegenerateLimitStateError,
    LimitState,
    SamplerDegenerateError,
    UnreachableEventError,
    fosm_reliability,
    posterior_failure_probability,
    prior_reliability_index,
    reliability_index,
    risk_band,
    sample_failure_conditional,
    staged_failure_sampler,
    weighted_indicator_probability,
)


def _shift_ls(a):
    return LimitState(id=f"g{a}", component="c", evaluator=lambda x, a=a: a - x[:, 0])


class TestPriorReliabilityIndex:
    def test_median_split(self, std_normal_prior):
        ls = LimitState(id="g", component="c", evaluator=lambda x: x[:, 0])
        beta0 = prior_reliability_index(ls, std_normal_prior, n_mc=100_000, seed=1)
        assert beta0 == pytest.approx(0.0, abs=0.05)

    def test_linear_gaussian_direct(self, std_normal_prior):
        beta0 = prior_reliability_index(_shift_ls(3.0), std_normal_prior,
                                        n_mc=2_000_000, seed=2)
        assert beta0 == pytest.approx(3.0, abs=0.05)

    def test_staged_escalation_matches_exact_tail(self, std_normal_prior):
        beta0 = prior_reliability_index(_shift_ls(4.5), std_normal_prior,
                                        n_mc=50_000, seed=3)
        assert beta0 == pytest.approx(4.5, abs=0.1)

    def test_unreachable_event_raises(self, std_normal_prior):
        ls = LimitState(id="g", component="c",
                        evaluator=lambda x: np.full(x.shape[0], 1.0))
        with pytest.raises((UnreachableEventError, SamplerDegenerateError)):
            prior_reliability_index(ls, std_normal_prior, n_mc=10_000, seed=4)

    def test_n_mc_floor(self, std_normal_prior):
        with pytest.raises(ValueError):
            prior_reliability_index(_shift_ls(1.0), std_normal_prior, n_mc=100, seed=5)


class TestFailureConditionalSampling:
    def test_sure_event_reproduces_prior(self, std_normal_prior, identity_model):
        ls = LimitState(id="g", component="c",
                        evaluator=lambda x: np.full(x.shape[0], -1.0))
        ens = sample_failure_conditional(ls, std_normal_prior, 4000, seed=6,
                                         model=identity_model)
        assert ens.samples[:, 0].mean() == pytest.approx(0.0, abs=0.06)
        assert ens.samples[:, 0].std() == pytest.approx(1.0, abs=0.06)

    def test_truncated_normal_mean(self, std_normal_prior, identity_model):
        ens = sample_failure_conditional(_shift_ls(3.0), std_normal_prior, 1000,
                                         seed=7, model=identity_model)
        exact = stats.norm.pdf(3.0) / stats.norm.cdf(-3.0)  # 3.2831
        assert ens.samples[:, 0].mean() == pytest.approx(exact, abs=0.05)

    def test_every_row_in_failure_region(self, std_normal_prior, identity_model):
        ens = sample_failure_conditional(_shift_ls(2.0), std_normal_prior, 500,
                                         seed=8, model=identity_model)
        assert np.all(_shift_ls(2.0).g(ens.samples) <= 0.0)
        assert ens.provenance == "failure-conditional:g2.0"

    def test_loader_enforces_failure_rows(self, std_normal_prior, tmp_path):
        with pytest.raises(Exception, match="G > 0"):
            PrecomputedEnsemble(
                samples=np.array([[0.5]]), model_outputs=np.array([[0.5]]),
                variable_names=["x"], provenance="failure-conditional:g",
                limit_state_values={"g": np.array([0.5])})

    def test_degenerate_stage_raises(self, std_normal_prior):
        ls = LimitState(id="g", component="c",
                        evaluator=lambda x: np.where(x[:, 0] < 5.0, 1.0, -1.0))
        with pytest.raises(SamplerDegenerateError):
            staged_failure_sampler(ls, std_normal_prior, 2000, seed=9)


class _LinearGaussianCase:
    """Shared setup: G = a - x, x ~ N(0,1), observations y = x + eps."""

    def __init__(self, a, alpha=1.0, sigma=2.0, n=100_000, n_prime=1000, seed=0, t=5):
        self.a = a
        self.sigma = sigma
        self.prior = PriorModel([("x", Normal(0.0, 1.0))])
        self.ls = _shift_ls(a)
        model = lambda s: s.copy()
        self.ens_d = sample_prior(self.prior, model, n, seed=seed + 1)
        self.ens_dr = sample_failure_conditional(self.ls, self.prior, n_prime,
                                                 seed=seed + 2, model=model)
        self.noise = NoiseModel((sigma,))
        rng = np.random.default_rng(seed + 3)
        self.ys = 0.5 + sigma * rng.standard_normal(t)
        self.state_d = init_weights(self.ens_d, alpha)
        self.comp = ComponentReliability(ls=self.ls, beta0=float(a),
                                         state_dr=init_weights(self.ens_dr, alpha))
        for step, y in enumerate(self.ys, start=1):
            obs = Observation(t=step, values=(float(y),))
            self.state_d = update_weights(self.state_d, obs, self.noise)
            self.comp.update(self.state_d, obs, self.noise)

    def analytic_tail(self):
        prec = 1.0 + len(self.ys) / self.sigma**2
        mu = (self.ys.sum() / self.sigma**2) / prec
        return float(stats.norm.cdf((mu - self.a) * math.sqrt(prec)))


class TestPosteriorFailureProbability:
    def test_no_observations_recovers_prior(self, std_normal_prior, identity_model):
        ls = _shift_ls(3.0)
        ens_d = sample_prior(std_normal_prior, identity_model, 2000, seed=10)
        ens_dr = sample_failure_conditional(ls, std_normal_prior, 300, seed=11,
                                            model=identity_model)
        p = posterior_failure_probability(init_weights(ens_d, 0.5),
                                          init_weights(ens_dr, 0.5), 3.0)
        assert p == pytest.approx(stats.norm.cdf(-3.0), rel=1e-12)

    def test_uninformative_observation_keeps_prior(self, std_normal_prior, identity_model):
        # a constant-likelihood observation: enormous noise makes every
        # sample equally likely, so the accumulator ratio stays 1
        ls = _shift_ls(2.0)
        ens_d = sample_prior(std_normal_prior, identity_model, 2000, seed=12)
        ens_dr = sample_failure_conditional(ls, std_normal_prior, 300, seed=13,
                                            model=identity_model)
        noise = NoiseModel((1e12,))
        state_d = init_weights(ens_d, 0.5)
        comp = ComponentReliability(ls=ls, beta0=2.0, state_dr=init_weights(ens_dr, 0.5))
        obs = Observation(t=1, values=(0.4,))
        state_d = update_weights(state_d, obs, noise)
        comp.update(state_d, obs, noise)
        assert comp.probability(state_d) == pytest.approx(stats.norm.cdf(-2.0), rel=1e-6)

    def test_linear_gaussian_matches_dense_mc_oracle(self):
        case = _LinearGaussianCase(a=2.0, alpha=1.0, seed=21)
        # dense Monte Carlo on the analytically known Gaussian posterior
        prec = 1.0 + len(case.ys) / case.sigma**2
        mu = (case.ys.sum() / case.sigma**2) / prec
        rng = np.random.default_rng(99)
        draw = mu + rng.standard_normal(1_000_000) / math.sqrt(prec)
        p_mc = float(np.mean(draw >= case.a))
        p_est = case.comp.probability(case.state_d)
        assert p_est == pytest.approx(p_mc, rel=0.10)

    def test_timestep_mismatch_rejected(self, std_normal_prior, identity_model):
        ls = _shift_ls(2.0)
        ens_d = sample_prior(std_normal_prior, identity_model, 500, seed=14)
        ens_dr = sample_failure_conditional(ls, std_normal_prior, 200, seed=15,
                                            model=identity_model)
        state_d = update_weights(init_weights(ens_d, 0.5),
                                 Observation(t=1, values=(0.1,)), NoiseModel((1.0,)))
        with pytest.raises(ValueError, match="out of step"):
            posterior_failure_probability(state_d, init_weights(ens_dr, 0.5), 2.0)

    def test_scale_invariance_of_likelihood(self, std_normal_prior):
        # multiplying every likelihood value at a step by a positive
        # constant must cancel in the self-normalized ratio; a second
        # channel with a sample-independent output realizes exactly that
        # (it shifts every log-likelihood by the same amount)
        ls = _shift_ls(1.5)
        plain = lambda s: s.copy()
        padded = lambda s: np.column_stack([s[:, 0], np.zeros(s.shape[0])])
        results = []
        for model, noise, extra in ((plain, NoiseModel((2.0,)), ()),
                                    (padded, NoiseModel((2.0, 1.0)), (3.0,))):
            ens_d = sample_prior(std_normal_prior, model, 20_000, seed=61)
            ens_dr = sample_failure_conditional(ls, std_normal_prior, 500, seed=62,
                                                model=model)
            state_d = init_weights(ens_d, 0.5)
            comp = ComponentReliability(ls=ls, beta0=1.5,
                                        state_dr=init_weights(ens_dr, 0.5))
            for t, y in enumerate((0.4, -0.2, 0.9), start=1):
                obs = Observation(t=t, values=(y, *extra))
                state_d = update_weights(state_d, obs, noise)
                comp.update(state_d, obs, noise)
            results.append(comp.probability(state_d))
        assert results[0] == pytest.approx(results[1], rel=1e-12)

    def test_indicator_and_ratio_paths_agree_within_3se(self):
        case = _LinearGaussianCase(a=1.0, alpha=0.5, seed=41, t=3)
        g_values = case.ls.g(case.ens_d.samples)
        p_ind, se_ind = weighted_indicator_probability(case.state_d, g_values)
        n_fail_weighted = int(np.sum((g_values <= 0)
                                     & (case.state_d.weights > 0)))
        assert n_fail_weighted >= 50, "case must carry enough failure samples"
        p_ratio = case.comp.probability(case.state_d)
        s = case.comp.state_dr.log_scale
        acc = np.exp(s - s.max())
        se_ratio = (stats.norm.cdf(-case.comp.beta0)
                    * np.exp(s.max()) * acc.std() / math.sqrt(len(acc)))
        assert abs(p_ratio - p_ind) <= 3.0 * (se_ind + se_ratio)


class TestReliabilityIndex:
    def test_half_probability_gives_zero(self):
        assert reliability_index(0.5).beta == pytest.approx(0.0, abs=1e-12)

    def test_inverse_identity(self):
        assert reliability_index(float(stats.norm.cdf(-2.0))).beta == pytest.approx(2.0, abs=1e-9)
        for beta in np.linspace(0.0, 8.0, 33):
            p = float(stats.norm.cdf(-beta))
            assert reliability_index(p).beta == pytest.approx(beta, abs=1e-9)

    def test_zero_probability_caps_with_fallback_flag(self):
        res = reliability_index(0.0)
        assert res.beta == BETA_CAP
        assert res.fosm_fallback is True

    def test_out_of_range_rejected(self):
        with pytest.raises(ValueError):
            reliability_index(-0.01)
        with pytest.raises(ValueError):
            reliability_index(1.01)


class TestFosm:
    def _state_with_g(self, g):
        g = np.asarray(g, dtype=float)
        n = len(g)
        ens = PrecomputedEnsemble(
            samples=np.zeros((n, 1)), model_outputs=np.zeros((n, 1)),
            variable_names=["x"], limit_state_values={"g": g})
        ls = LimitState(id="g", component="c", evaluator=lambda x: np.zeros(x.shape[0]))
        return init_weights(ens, 0.5), ls

    def test_direct_formula(self):
        rng = np.random.default_rng(1)
        g = 3.0 + rng.standard_normal(200_000)
        state, ls = self._state_with_g(g)
        mu, sd = g.mean(), g.std()
        assert fosm_reliability(state, ls) == pytest.approx(mu / sd, rel=1e-9)

    def test_shift_property(self):
        rng = np.random.default_rng(2)
        g = rng.standard_normal(10_000)
        state, ls = self._state_with_g(g)
        state2, ls2 = self._state_with_g(g + 2.5)
        sd = g.std()
        assert (fosm_reliability(state2, ls2) - fosm_reliability(state, ls)
                == pytest.approx(2.5 / sd, rel=1e-6))

    def test_linear_gaussian_matches_exact_index(self, std_normal_prior, identity_model):
        a = 2.8
        ens = sample_prior(std_normal_prior, identity_model, 1_000_000, seed=44)
        g = a - ens.samples[:, 0]
        ens.limit_state_values["g"] = g
        ls = LimitState(id="g", component="c", evaluator=lambda x: a - x[:, 0])
        assert fosm_reliability(init_weights(ens, 0.5), ls) == pytest.approx(a, abs=0.01)

    def test_zero_variance_rejected(self):
        state, ls = self._state_with_g(np.full(100, 2.0))
        with pytest.raises(DegenerateLimitStateError):
            fosm_reliability(state, ls)


class TestRiskBand:
    @pytest.mark.parametrize("beta,name,rgb", [
        (4.0, "Safe", (124, 252, 0)),
        (3.7, "Safe", (124, 252, 0)),
        (3.5, "Low", (255, 255, 0)),
        (3.2, "Low", (255, 255, 0)),
        (3.0, "Medium", (240, 150, 110)),
        (2.7, "Medium", (240, 150, 110)),
        (2.0, "High", (255, 0, 0)),
    ])
    def test_boundaries_and_colors(self, beta, name, rgb):
        band = risk_band(beta)
        assert band.name == name
        assert band.rgb == rgb

    @settings(max_examples=200, deadline=None)
    @given(beta=st.floats(-50.0, 50.0, allow_nan=False))
    def test_bands_partition_the_line(self, beta):
        band = risk_band(beta)
        hits = [b for b in DEFAULT_RISK_BANDS if b.lo <= beta < b.hi]
        assert len(hits) == 1 and hits[0] is band
