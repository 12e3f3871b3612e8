import numpy as np
import numpy.testing as npt
import pytest
from scipy import stats
from scipy.special import expit

from gsbps.basis import design_matrix, make_knots
from gsbps.errors import (
    DataValidationError,
    NumericFailureError,
    UnsupportedOperationError,
)
from gsbps.penalty import penalty_matrix
from gsbps.targets import (
    BinomialData,
    BinomialModel,
    CountSeriesData,
    HistogramData,
    ModelState,
    NegBinModel,
    PoissonModel,
    binom_loglik,
    negbin_loglik,
    poisson_loglik,
    rho_conditional,
    theta_conditional,
)

RNG = np.random.default_rng(20240917)


def hist_fixture(n=30, K=10, seed=5):
    rng = np.random.default_rng(seed)
    mids = np.linspace(0.05, 0.95, n) if n > 1 else np.array([0.5])
    width = mids[1] - mids[0] if n > 1 else 0.1
    counts = rng.poisson(5.0, size=n)
    kv = make_knots(0.0, 1.0, K)
    B = design_matrix(mids, kv)
    return HistogramData(mids, counts, width), B, kv


def binom_fixture(n=25, K=8, seed=6):
    rng = np.random.default_rng(seed)
    x = np.linspace(0.0, 1.0, n)
    m = rng.integers(5, 40, size=n)
    y = rng.binomial(m, expit(np.sin(2 * np.pi * x)))
    kv = make_knots(0.0, 1.0, K)
    return BinomialData(x, y, m), design_matrix(x, kv), kv


def counts_fixture(n=40, K=12, seed=8):
    rng = np.random.default_rng(seed)
    x = np.arange(1.0, n + 1)
    mu = np.exp(2.0 + np.sin(x / 6.0))
    y = rng.negative_binomial(5, 5 / (5 + mu))
    data = CountSeriesData(y=y, x=x)
    kv = make_knots(1.0, float(n), K)
    return data, design_matrix(x, kv), kv


class TestDataValidation:
    def test_histogram_spacing(self):
        with pytest.raises(DataValidationError):
            HistogramData([0.0, 0.1, 0.25], [1, 2, 3], 0.1)

    def test_histogram_negative_counts(self):
        with pytest.raises(DataValidationError):
            HistogramData([0.0, 0.1], [1, -2], 0.1)

    def test_binomial_y_exceeds_m_names_row(self):
        with pytest.raises(DataValidationError, match="row 1"):
            BinomialData([0.0, 1.0], [1, 5], [3, 3])

    def test_counts_default_x(self):
        d = CountSeriesData(y=[0, 1, 2])
        npt.assert_array_equal(d.x, [1.0, 2.0, 3.0])

    def test_counts_reject_negative(self):
        with pytest.raises(DataValidationError):
            CountSeriesData(y=[1, -1])

    def test_state_positivity(self):
        with pytest.raises(Exception):
            ModelState(np.zeros(3), lam=-1.0, delta=1.0)


class TestPoissonLoglik:
    def test_zero_theta_is_minus_n(self):
        data, B, _ = hist_fixture(n=30)
        assert poisson_loglik(np.zeros(10), B, data) == pytest.approx(-30.0)

    def test_single_term_reduction(self):
        data = HistogramData([0.5], [2], 0.1)
        B = np.array([[1.0]])
        for t in (-1.0, 0.3, 2.0):
            assert poisson_loglik(np.array([t]), B, data) == pytest.approx(2 * t - np.exp(t))

    def test_matches_pmf_oracle_up_to_constant(self):
        data, B, _ = hist_fixture()
        const = -np.sum(stats.poisson.logpmf(data.counts, 1.0) + 1.0)  # sum log y_i!
        for _ in range(5):
            theta = RNG.normal(scale=0.5, size=10)
            mu = np.exp(B @ theta)
            oracle = np.sum(stats.poisson.logpmf(data.counts, mu))
            ours = poisson_loglik(theta, B, data)
            assert ours == pytest.approx(oracle + const, rel=1e-10)


class TestBinomLoglik:
    def test_zero_theta(self):
        data, B, _ = binom_fixture()
        assert binom_loglik(np.zeros(8), B, data) == pytest.approx(-np.log(2) * data.m.sum())

    def test_saturation_limit(self):
        x = np.linspace(0, 1, 5)
        m = np.full(5, 7)
        data = BinomialData(x, m.copy(), m)
        kv = make_knots(0.0, 1.0, 5)
        B = design_matrix(x, kv)
        vals = [binom_loglik(np.full(5, c), B, data) for c in (0.0, 2.0, 5.0, 14.0)]
        assert np.all(np.diff(vals) > 0)
        assert vals[-1] > -1e-4  # all-success likelihood approaches 0 from below

    def test_matches_pmf_oracle_up_to_constant(self):
        data, B, _ = binom_fixture()
        const = np.sum(
            stats.binom.logpmf(data.y, data.m, 0.5) + np.log(2) * data.m
        )  # log binomial coefficients
        for _ in range(5):
            theta = RNG.normal(scale=0.7, size=8)
            p = expit(B @ theta)
            oracle = np.sum(stats.binom.logpmf(data.y, data.m, p))
            assert binom_loglik(theta, B, data) == pytest.approx(oracle - const, rel=1e-10)


class TestNegbinLoglik:
    def test_zero_count_single_term(self):
        data = CountSeriesData(y=[0])
        B = np.array([[1.0]])
        rho, t = 3.0, 0.7
        mu = np.exp(t)
        expected = rho * np.log(rho) - rho * np.log(rho + mu)
        assert negbin_loglik(np.array([t]), rho, B, data) == pytest.approx(expected)

    def test_matches_pmf_oracle(self):
        data, B, _ = counts_fixture()
        logfact = np.sum(-stats.poisson.logpmf(data.y, 1.0) - 1.0)  # sum log y_i!
        for _ in range(5):
            theta = RNG.normal(scale=0.3, size=12) + 1.0
            rho = float(RNG.uniform(0.5, 8.0))
            mu = np.exp(B @ theta)
            oracle = np.sum(stats.nbinom.logpmf(data.y, rho, rho / (rho + mu)))
            ours = negbin_loglik(theta, rho, B, data)
            assert ours == pytest.approx(oracle + logfact, rel=1e-9)

    def test_poisson_limit_gradients(self):
        # at rho = 1e6 the theta-gradient matches the Poisson GLM gradient
        # B'(y - mu) to 1e-4; small data keeps the O(1/rho) gap tiny
        rng = np.random.default_rng(3)
        y = rng.poisson(1.5, size=6)
        data = CountSeriesData(y=y, x=np.arange(1.0, 7.0))
        kv = make_knots(1.0, 6.0, 5)
        B = design_matrix(data.x, kv)
        model = NegBinModel(data, B)
        pm = penalty_matrix(5, 2)
        theta = rng.normal(scale=0.2, size=5)
        # negligible prior exposes the pure likelihood gradient via the target
        state = ModelState(theta, lam=1e-10, delta=1.0, rho=1e6)
        mu = np.exp(B @ theta)
        g_poisson_oracle = B.T @ (y - mu)
        for k in range(5):
            tgt = theta_conditional(model, state, k, pm)
            assert float(tgt.dlogpdf(theta[k])) == pytest.approx(
                g_poisson_oracle[k], abs=1e-4
            )

    def test_moments_of_parameterization(self):
        # the pmf used above has mean mu and variance mu + mu^2 / rho
        rho, mu = 4.0, 7.0
        dist = stats.nbinom(rho, rho / (rho + mu))
        assert dist.mean() == pytest.approx(mu)
        assert dist.var() == pytest.approx(mu + mu**2 / rho)


def _models():
    data_p, B_p, _ = hist_fixture()
    data_b, B_b, _ = binom_fixture()
    data_n, B_n, _ = counts_fixture()
    return [
        (PoissonModel(data_p, B_p), 10, None),
        (BinomialModel(data_b, B_b), 8, None),
        (NegBinModel(data_n, B_n), 12, 2.5),
    ]


def random_state(K, rho, seed):
    rng = np.random.default_rng(seed)
    return ModelState(
        theta=rng.normal(scale=0.5, size=K),
        lam=float(rng.uniform(0.2, 30.0)),
        delta=1.0,
        rho=rho,
    )


class TestThetaConditional:
    @pytest.mark.parametrize("idx", [0, 1, 2])
    def test_derivatives_match_finite_differences(self, idx):
        model, K, rho = _models()[idx]
        pm = penalty_matrix(K, 2)
        for trial in range(20):
            state = random_state(K, rho, seed=trial)
            k = trial % K
            tgt = theta_conditional(model, state, k, pm)
            t = float(np.random.default_rng(trial).uniform(-2, 2))
            h = 1e-5
            d1_num = (tgt.logpdf(t + h) - tgt.logpdf(t - h)) / (2 * h)
            d2_num = (tgt.dlogpdf(t + h) - tgt.dlogpdf(t - h)) / (2 * h)
            assert float(tgt.dlogpdf(t)) == pytest.approx(d1_num, rel=1e-5, abs=1e-7)
            assert float(tgt.d2logpdf(t)) == pytest.approx(d2_num, rel=1e-5, abs=1e-7)

    @pytest.mark.parametrize("idx", [0, 1, 2])
    def test_concave_everywhere_sampled(self, idx):
        model, K, rho = _models()[idx]
        pm = penalty_matrix(K, 2)
        for trial in range(10):
            state = random_state(K, rho, seed=100 + trial)
            for k in range(K):
                tgt = theta_conditional(model, state, k, pm)
                ts = np.array([-20.0, -3.0, 0.0, 1.7, 20.0])
                assert np.all(tgt.d2logpdf(ts) < 0.0)
                assert tgt.declared_logconcave

    def test_poisson_second_derivative_closed_form(self):
        model, K, _ = _models()[0]
        pm = penalty_matrix(K, 2)
        state = random_state(K, None, seed=1)
        B, y = model.B, model.data.counts
        for k in (0, 4, 9):
            tgt = theta_conditional(model, state, k, pm)
            for t in (-1.0, 0.0, 0.8):
                theta = state.theta.copy()
                theta[k] = t
                eta_mk = B @ theta - t * B[:, k]
                direct = -np.sum(np.exp(t * B[:, k]) * np.exp(eta_mk) * B[:, k] ** 2)
                expected = -state.lam * pm.z[k] + direct
                assert float(tgt.d2logpdf(t)) == pytest.approx(expected, rel=1e-10)

    def test_binomial_curvature_at_zero(self):
        # m_i = 1, theta = 0: likelihood curvature is -sum b_k^2 / 4
        x = np.linspace(0, 1, 15)
        data = BinomialData(x, np.zeros(15, dtype=int), np.ones(15, dtype=int))
        kv = make_knots(0.0, 1.0, 6)
        B = design_matrix(x, kv)
        model = BinomialModel(data, B)
        pm = penalty_matrix(6, 2)
        state = ModelState(np.zeros(6), lam=2.0, delta=1.0)
        for k in range(6):
            tgt = theta_conditional(model, state, k, pm)
            expected = -2.0 * pm.z[k] - np.sum(B[:, k] ** 2) / 4.0
            assert float(tgt.d2logpdf(0.0)) == pytest.approx(expected, rel=1e-12)

    def test_binomial_second_derivative_closed_form(self):
        model, K, _ = _models()[1]
        pm = penalty_matrix(K, 2)
        state = random_state(K, None, seed=2)
        B, m = model.B, model.data.m
        k, t = 3, 0.6
        tgt = theta_conditional(model, state, k, pm)
        eta_mk = B @ state.theta - state.theta[k] * B[:, k]
        em = np.exp(-t * B[:, k]) * np.exp(-eta_mk)
        direct = -np.sum(m * em / (1.0 + em) ** 2 * B[:, k] ** 2)
        assert float(tgt.d2logpdf(t)) == pytest.approx(-state.lam * pm.z[k] + direct, rel=1e-10)

    def test_negbin_second_derivative_closed_form(self):
        # direct form in exp(-eta): -rho sum (y+rho) e^{-eta} b^2 / (1 + rho e^{-eta})^2
        model, K, rho = _models()[2]
        pm = penalty_matrix(K, 2)
        state = random_state(K, rho, seed=3)
        B, y = model.B, model.data.y
        k, t = 5, -0.4
        tgt = theta_conditional(model, state, k, pm)
        eta = B @ state.theta + (t - state.theta[k]) * B[:, k]
        em = np.exp(-eta)
        direct = -rho * np.sum((y + rho) * em * B[:, k] ** 2 / (1.0 + rho * em) ** 2)
        assert float(tgt.d2logpdf(t)) == pytest.approx(-state.lam * pm.z[k] + direct, rel=1e-10)

    def test_eta_cache_matches_fresh_computation(self):
        model, K, rho = _models()[2]
        pm = penalty_matrix(K, 2)
        state = random_state(K, rho, seed=4)
        eta = model.linear_predictor(state.theta)
        for k in (0, 6, 11):
            a = theta_conditional(model, state, k, pm)
            b = theta_conditional(model, state, k, pm, eta=eta)
            ts = np.linspace(-2, 2, 7)
            npt.assert_allclose(a.logpdf(ts), b.logpdf(ts), rtol=1e-14)

    def test_fused_and_value_grad_consistency(self):
        for model, K, rho in _models():
            pm = penalty_matrix(K, 2)
            state = random_state(K, rho, seed=5)
            tgt = theta_conditional(model, state, 2, pm)
            for t in (-1.3, 0.0, 0.9):
                v, g, h = tgt.fused(t)
                assert v == pytest.approx(float(tgt.logpdf(t)), rel=1e-14)
                assert g == pytest.approx(float(tgt.dlogpdf(t)), rel=1e-14)
                assert h == pytest.approx(float(tgt.d2logpdf(t)), rel=1e-14)
            ts = np.array([-0.5, 0.2])
            v, g = tgt.value_grad(ts)
            npt.assert_allclose(v, tgt.logpdf(ts), rtol=1e-14)
            npt.assert_allclose(g, tgt.dlogpdf(ts), rtol=1e-14)

    def test_overflow_raises(self):
        model, K, _ = _models()[0]
        pm = penalty_matrix(K, 2)
        state = random_state(K, None, seed=6)
        tgt = theta_conditional(model, state, 4, pm)
        with pytest.raises(NumericFailureError):
            tgt.logpdf(5000.0)


class TestRhoConditional:
    def setup_method(self):
        data, B, _ = counts_fixture()
        self.model = NegBinModel(data, B)
        self.state = random_state(12, 2.0, seed=9)

    def test_requires_negbin(self):
        data, B, _ = hist_fixture()
        with pytest.raises(UnsupportedOperationError):
            rho_conditional(self.state, PoissonModel(data, B), 1e-4, 1e-4)

    def test_definitional_decomposition(self):
        a_rho, b_rho = 0.3, 0.7
        tgt = rho_conditional(self.state, self.model, a_rho, b_rho)
        for rb in (-1.0, 0.0, 0.5, 2.0):
            ll = self.model.loglik(self.state.theta, np.exp(rb))
            assert float(tgt.logpdf(rb)) - ll == pytest.approx(
                a_rho * rb - b_rho * np.exp(rb), rel=1e-12, abs=1e-12
            )

    def test_gradient_self_consistency_two_steps(self):
        tgt = rho_conditional(self.state, self.model, 1e-4, 1e-4)
        for rb in (-0.8, 0.4, 1.5):
            g = float(tgt.dlogpdf(rb))
            for h in (1e-4, 1e-5):
                num = (float(tgt.logpdf(rb + h)) - float(tgt.logpdf(rb - h))) / (2 * h)
                assert g == pytest.approx(num, rel=1e-4, abs=1e-6)

    def test_flat_prior_gradient_at_zero(self):
        # a_rho = b_rho: prior contribution to the gradient vanishes at log rho = 0
        with_prior = rho_conditional(self.state, self.model, 1e-4, 1e-4)
        eps_prior = rho_conditional(self.state, self.model, 1e-12, 1e-12)
        assert float(with_prior.dlogpdf(0.0)) == pytest.approx(
            float(eps_prior.dlogpdf(0.0)), abs=1e-6
        )

    def test_not_declared_logconcave(self):
        tgt = rho_conditional(self.state, self.model, 1e-4, 1e-4)
        assert not tgt.declared_logconcave

    def test_vectorized_logpdf(self):
        tgt = rho_conditional(self.state, self.model, 1e-4, 1e-4)
        rbs = np.array([-1.0, 0.0, 1.0])
        vec = tgt.logpdf(rbs)
        scalars = [float(tgt.logpdf(r)) for r in rbs]
        npt.assert_allclose(vec, scalars, rtol=1e-14)
