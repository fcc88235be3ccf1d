import numpy as np
import pytest
from scipy import stats

from src.modules import estimator
from src.modules.depth import sample_depths
from src.modules.errors import AllDownweightedError, DegenerateSampleError, DegenerateStepError
from src.modules.estimator import (
    ModelParams,
    check_fixed_point,
    mle,
    relative_change,
    weighted_loglik,
    wlee_fit,
    wlee_step,
)
from src.modules.weights import WeightConfig

IDENTITY = WeightConfig(scheme='raf', raf_kind='identity')


def relative_frobenius(a, b):
    return np.linalg.norm(a - b, ord='fro') / np.linalg.norm(b, ord='fro')


class TestMle:
    def test_square(self):
        theta = mle(np.array([[0.0, 0.0], [2.0, 0.0], [0.0, 2.0], [2.0, 2.0]]))
        assert np.allclose(theta.mu, [1.0, 1.0])
        assert np.allclose(theta.sigma, np.eye(2))

    def test_repeated_point(self):
        with pytest.raises(DegenerateSampleError):
            mle(np.ones((5, 2)))

    def test_univariate(self):
        theta = mle(np.array([-1.0, 1.0]))
        assert theta.mu.tolist() == [0.0]
        assert theta.sigma.tolist() == [[1.0]]

    def test_too_few_points(self):
        with pytest.raises(DegenerateSampleError):
            mle(np.array([[0.0, 1.0], [1.0, 0.0]]))

    def test_collinear(self):
        with pytest.raises(DegenerateSampleError):
            mle(np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0], [3.0, 3.0]]))


class TestWleeStep:
    def test_identity_raf_gives_mle(self, rng):
        X = rng.standard_normal((80, 2))
        theta = ModelParams([1.0, -1.0], [[3.0, 0.5], [0.5, 2.0]])
        updated, weights = wlee_step(X, theta, IDENTITY, sample_depths(X, X))
        expected = mle(X)
        assert np.all(weights == 1.0)
        assert np.allclose(updated.mu, expected.mu)
        assert np.allclose(updated.sigma, expected.sigma)

    def test_weights_on_a_subset(self, rng, monkeypatch):
        X = rng.standard_normal((30, 2))
        forced = np.zeros(30)
        forced[:5] = 1.0
        monkeypatch.setattr(estimator, 'observation_weights', lambda *args: forced)
        updated, _ = wlee_step(X, mle(X), WeightConfig(), np.zeros(30))
        assert np.allclose(updated.mu, X[:5].mean(axis=0))
        assert np.allclose(updated.sigma, mle(X[:5]).sigma)

    def test_nearly_single_support(self, rng, monkeypatch):
        X = rng.standard_normal((30, 2))
        forced = np.full(30, 1e-9)
        forced[0] = 1.0
        monkeypatch.setattr(estimator, 'observation_weights', lambda *args: forced)
        updated, _ = wlee_step(X, mle(X), WeightConfig(), np.zeros(30))
        assert np.allclose(updated.mu, X[0], atol=1e-6)

    def test_single_support_has_no_scatter(self, rng, monkeypatch):
        X = rng.standard_normal((30, 2))
        forced = np.zeros(30)
        forced[0] = 1.0
        monkeypatch.setattr(estimator, 'observation_weights', lambda *args: forced)
        with pytest.raises(DegenerateStepError):
            wlee_step(X, mle(X), WeightConfig(), np.zeros(30))

    def test_all_downweighted(self, rng, monkeypatch):
        X = rng.standard_normal((30, 2))
        monkeypatch.setattr(estimator, 'observation_weights', lambda *args: np.zeros(30))
        with pytest.raises(AllDownweightedError):
            wlee_step(X, mle(X), WeightConfig(), np.zeros(30))

    def test_clean_data_barely_moves(self, clean_normal, clean_depths):
        start = mle(clean_normal)
        updated, _ = wlee_step(clean_normal, start, WeightConfig(), clean_depths)
        assert np.linalg.norm(updated.mu - start.mu) <= 0.05


class TestRelativeChange:
    def test_no_change(self):
        theta = ModelParams([1.0, 2.0], [[2.0, 0.3], [0.3, 1.0]])
        assert relative_change(theta, theta) == (0.0, 0.0)

    def test_mean_shift_in_units_of_scatter(self):
        old = ModelParams([0.0, 0.0], np.diag([4.0, 1.0]))
        new = ModelParams([2.0, 0.0], np.diag([4.0, 1.0]))
        assert relative_change(old, new)[0] == pytest.approx(1.0)

    def test_affine_invariance(self, rng, random_affine):
        old = ModelParams([0.5, -0.5], [[1.0, 0.2], [0.2, 0.7]])
        new = ModelParams([0.6, -0.4], [[1.1, 0.25], [0.25, 0.6]])
        A, b = random_affine(rng, 2)
        before = relative_change(old, new)
        after = relative_change(old.transformed(A, b), new.transformed(A, b))
        assert np.allclose(after, before, atol=1e-9)


class TestWeightedLoglik:
    def test_unit_weights(self, rng):
        X = rng.standard_normal((20, 2))
        theta = ModelParams([0.1, 0.2], [[1.0, 0.3], [0.3, 2.0]])
        expected = stats.multivariate_normal(theta.mu, theta.sigma).logpdf(X).sum()
        assert weighted_loglik(X, np.ones(20), theta) == pytest.approx(expected)

    def test_zero_weights(self, rng):
        X = rng.standard_normal((20, 2))
        assert weighted_loglik(X, np.zeros(20), mle(X)) == 0.0


class TestWleeFit:
    def test_converges_from_mle(self, clean_normal, clean_depths):
        config = WeightConfig()
        fit = wlee_fit(clean_normal, mle(clean_normal), config, depth_cache=clean_depths)
        assert fit.converged
        assert fit.failure is None
        assert check_fixed_point(clean_normal, fit, config, clean_depths)

    def test_history_tracks_steps(self, clean_normal, clean_depths):
        start = ModelParams([0.5, -0.5], 2.0 * np.eye(2))
        fit = wlee_fit(clean_normal, start, WeightConfig(), tol=1e-6, depth_cache=clean_depths)
        assert fit.converged
        assert len(fit.history) == fit.iterations
        assert fit.history[-1] < 1e-6
        assert all(change >= 1e-6 for change in fit.history[:-1])

    def test_clean_root_is_close_to_mle(self, clean_normal, clean_depths):
        start = mle(clean_normal)
        fit = wlee_fit(clean_normal, start, WeightConfig(), depth_cache=clean_depths)
        assert fit.weights.mean() >= 0.9
        assert np.linalg.norm(fit.theta.mu - start.mu) <= 0.05
        assert np.linalg.norm(fit.theta.sigma - start.sigma, ord='fro') <= 0.1

    def test_zero_iterations(self, rng):
        X = rng.standard_normal((40, 2))
        start = ModelParams([3.0, 3.0], np.eye(2))
        fit = wlee_fit(X, start, WeightConfig(), max_iter=0)
        assert fit.theta is start
        assert not fit.converged
        assert fit.iterations == 0
        assert fit.failure is None

    def test_identity_raf_reaches_mle(self, rng):
        X = rng.standard_normal((60, 3))
        expected = mle(X)
        for _ in range(5):
            root = rng.standard_normal((3, 3))
            start = ModelParams(rng.standard_normal(3) * 2.0, root @ root.T + np.eye(3))
            fit = wlee_fit(X, start, IDENTITY, depth_cache=np.ones(60))
            assert fit.converged
            assert np.allclose(fit.theta.mu, expected.mu)
            assert np.allclose(fit.theta.sigma, expected.sigma)

    def test_gross_outlier_is_downweighted(self, clean_normal):
        X = np.vstack([clean_normal[:300], [[8.0, 8.0]]])
        fit = wlee_fit(X, mle(clean_normal[:300]), WeightConfig())
        assert fit.converged
        assert fit.weights[-1] < 0.01

    def test_budget_exhausted(self, clean_normal, clean_depths):
        start = ModelParams([1.0, 1.0], np.eye(2))
        fit = wlee_fit(clean_normal, start, WeightConfig(), max_iter=1, depth_cache=clean_depths)
        assert not fit.converged
        assert fit.iterations == 1
        assert fit.failure == 'maximum iterations reached'
        assert len(fit.history) == 1

    def test_degenerate_step_ends_the_fit(self, rng, monkeypatch):
        X = rng.standard_normal((30, 2))
        monkeypatch.setattr(estimator, 'observation_weights', lambda *args: np.zeros(30))
        start = mle(X)
        fit = wlee_fit(X, start, WeightConfig(), depth_cache=np.zeros(30))
        assert not fit.converged
        assert fit.theta is start
        assert 'total weight' in fit.failure

    def test_affine_equivariance(self, rng, random_affine):
        # without a central region the weights are continuous in theta
        config = WeightConfig(alpha=0.0)
        for _ in range(100):
            X = rng.standard_normal((120, 2))
            fit = wlee_fit(X, mle(X), config, tol=1e-10, max_iter=2000)
            A, b = random_affine(rng, 2)
            moved = X @ A.T + b
            moved_fit = wlee_fit(moved, mle(moved), config, tol=1e-10, max_iter=2000)
            assert fit.converged and moved_fit.converged
            expected = fit.theta.transformed(A, b)
            assert np.linalg.norm(moved_fit.theta.mu - expected.mu) <= 1e-6
            assert relative_frobenius(moved_fit.theta.sigma, expected.sigma) <= 1e-6


class TestFitResult:
    def test_to_dict(self, rng):
        X = rng.standard_normal((40, 2))
        payload = wlee_fit(X, mle(X), WeightConfig()).to_dict()
        assert set(payload) == {'mu', 'sigma', 'dim', 'weight_sum', 'weighted_loglik', 'iterations', 'converged'}
        assert payload['dim'] == 2
