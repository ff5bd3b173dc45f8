import math

import mpmath as mp
import numpy as np
import pytest
from scipy import integrate
from scipy.stats import multivariate_normal

from randcert import (
    CapabilityError,
    CategoricalDistribution,
    DimensionError,
    DistributionEstimate,
    Exact,
    GaussianNoiseSpec,
    GridTableClassifier,
    LinearClassifier,
    MonteCarlo,
    RandomizedClassifier,
    ValidationError,
    expected_01_loss,
    hoeffding_radius,
    mode_classifier,
    model_from_dict,
    model_to_dict,
    predict_distribution,
    predict_distributions,
    sample_prediction,
)

PHI1 = float(mp.ncdf(1))


@pytest.fixture
def quadrant_grid():
    # 2x2 lattice on [-1, 1]^2: labels by quadrant
    return GridTableClassifier([[0, 1], [2, 0]], lower=[-1.0, -1.0], cell_size=[1.0, 1.0])


def grid_mc_oracle(grid, cov, x, n=400_000, seed=0):
    z = np.random.default_rng(seed).multivariate_normal(np.zeros(2), cov, size=n)
    labels = grid.predict(np.asarray(x) + z)
    return np.bincount(labels, minlength=grid.n_classes) / n


class TestBaseClassifiers:
    def test_linear_binary_expansion(self):
        lin = LinearClassifier([2.0, -1.0], 0.5)
        assert lin.weights.shape == (2, 2) and lin.n_classes == 2
        w, b = lin.binary_direction()
        assert np.allclose(w, [2.0, -1.0]) and b == 0.5

    def test_linear_ties_to_smallest_index(self):
        lin = LinearClassifier([[1.0, 0.0], [1.0, 0.0], [0.0, 0.0]], [0.0, 0.0, 0.0])
        assert lin.predict(np.array([1.0, 0.0])) == 0
        assert LinearClassifier([1.0, 0.0], 0.0).predict(np.zeros(2)) == 0

    def test_linear_bad_shapes(self):
        with pytest.raises(DimensionError):
            LinearClassifier(np.ones((3, 2)), [0.0, 0.0])
        with pytest.raises(ValidationError):
            LinearClassifier([[np.inf, 0.0]], [0.0])

    def test_grid_predict_and_clamp(self, quadrant_grid):
        pts = np.array([[-0.5, -0.5], [-0.5, 0.5], [0.5, -0.5], [0.5, 0.5], [-5.0, 5.0]])
        assert quadrant_grid.predict(pts).tolist() == [0, 1, 2, 0, 1]
        assert quadrant_grid.n_classes == 3
        assert quadrant_grid.contains([0.0, 1.0]) and not quadrant_grid.contains([1.5, 0.0])

    def test_grid_validation(self):
        with pytest.raises(ValidationError):
            GridTableClassifier([[0, 1]], lower=0.0, cell_size=0.0)
        with pytest.raises(ValidationError):
            GridTableClassifier([0, 3], lower=0.0, cell_size=1.0, n_classes=2)
        with pytest.raises(ValidationError):
            GridTableClassifier([0.5, 1.0], lower=0.0, cell_size=1.0)


class TestRandomizedClassifier:
    def test_exact_capability(self):
        multi = LinearClassifier(np.eye(3)[:, :2], np.zeros(3))
        with pytest.raises(CapabilityError):
            RandomizedClassifier(multi, GaussianNoiseSpec.isotropic(1.0), Exact())
        with pytest.raises(CapabilityError):
            RandomizedClassifier(
                LinearClassifier([1.0, 0.0], 0.0), GaussianNoiseSpec.from_covariance(np.eye(2)), Exact()
            )
        RandomizedClassifier(multi, None, Exact())  # noise-free is always exact

    def test_monte_carlo_validation(self):
        with pytest.raises(ValidationError):
            MonteCarlo(0)

    def test_pushforward_is_dirac_without_noise(self, unit_linear):
        clf = RandomizedClassifier(unit_linear, None, MonteCarlo(10))
        est = predict_distribution(clf, [0.3, 0.0])
        assert est.dist.probs.tolist() == [0.0, 1.0] and est.confidence_radius == 0.0


class TestPredictDistribution:
    def test_boundary_point(self, exact_linear):
        assert predict_distribution(exact_linear, [0.0, 0.0]).dist.probs == pytest.approx([0.5, 0.5])

    def test_exact_linear_matches_phi(self, exact_linear):
        est = predict_distribution(exact_linear, [1.0, 0.0])
        assert est.dist.probs[1] == pytest.approx(PHI1, abs=1e-14)
        assert est.is_exact and est.m == 0

    def test_exact_linear_matches_monte_carlo_oracle(self, unit_linear):
        z = np.random.default_rng(7).standard_normal((10**6, 2))
        freq = np.mean(unit_linear.predict(np.array([1.0, 0.0]) + z) == 1)
        clf = RandomizedClassifier(unit_linear, GaussianNoiseSpec.isotropic(1.0), Exact())
        assert predict_distribution(clf, [1.0, 0.0]).dist.probs[1] == pytest.approx(freq, abs=2e-3)

    def test_exact_linear_scaled_weights(self):
        # margin / (sigma ||w||) is invariant to rescaling (w, b)
        lin = LinearClassifier([3.0, 4.0], -1.0)
        clf = RandomizedClassifier(lin, GaussianNoiseSpec.isotropic(0.5), Exact())
        x = np.array([0.4, 0.3])
        expected = float(mp.ncdf((3 * 0.4 + 4 * 0.3 - 1.0) / (0.5 * 5.0)))
        assert predict_distribution(clf, x).dist.probs[1] == pytest.approx(expected, abs=1e-14)

    def test_monte_carlo_within_radius(self, unit_linear):
        hits = 0
        for seed in range(20):
            clf = RandomizedClassifier(unit_linear, GaussianNoiseSpec.isotropic(1.0), MonteCarlo(10_000, seed))
            est = predict_distribution(clf, [1.0, 0.0])
            assert est.confidence_radius == pytest.approx(hoeffding_radius(10_000, 2))
            hits += abs(est.dist.probs[1] - PHI1) <= est.confidence_radius
        assert hits == 20

    def test_hoeffding_formula(self):
        assert hoeffding_radius(10_000, 2) == pytest.approx(math.sqrt(math.log(4000) / 20_000))

    def test_exact_grid_diagonal_matches_monte_carlo(self, quadrant_grid):
        cov = np.diag([0.3, 0.6])
        clf = RandomizedClassifier(quadrant_grid, GaussianNoiseSpec.from_covariance(cov), Exact())
        x = [0.2, -0.1]
        got = predict_distribution(clf, x).dist.probs
        assert got == pytest.approx(grid_mc_oracle(quadrant_grid, cov, x), abs=3e-3)

    def test_exact_grid_correlated_matches_cdf_oracle(self, quadrant_grid):
        cov = np.array([[0.5, 0.3], [0.3, 0.4]])
        x = np.array([0.2, -0.1])
        clf = RandomizedClassifier(quadrant_grid, GaussianNoiseSpec.from_covariance(cov), Exact())
        got = predict_distribution(clf, x).dist.probs
        # oracle: the quadrant masses of N(x, cov) around the origin, with outer cells unbounded
        mvn = multivariate_normal(mean=x, cov=cov)
        p_ll = mvn.cdf([0.0, 0.0])
        p_l = float(mp.ncdf(-x[0] / math.sqrt(cov[0, 0])))
        p_b = float(mp.ncdf(-x[1] / math.sqrt(cov[1, 1])))
        p_lu, p_ul = p_l - p_ll, p_b - p_ll
        p_uu = 1.0 - p_ll - p_lu - p_ul
        expected = np.array([p_ll + p_uu, p_lu, p_ul])
        assert got == pytest.approx(expected, rel=1e-4, abs=1e-6)

    def test_exact_grid_1d(self):
        grid = GridTableClassifier([0, 1, 0], lower=-1.5, cell_size=1.0)
        clf = RandomizedClassifier(grid, GaussianNoiseSpec.isotropic(0.5), Exact())
        got = predict_distribution(clf, [0.2]).dist.probs
        mid, _ = integrate.quad(lambda u: math.exp(-((u - 0.2) ** 2) / 0.5) / math.sqrt(0.5 * math.pi), -0.5, 0.5)
        assert got[1] == pytest.approx(mid, rel=1e-8)

    def test_dimension_mismatch(self, exact_linear):
        with pytest.raises(DimensionError):
            predict_distribution(exact_linear, [1.0, 0.0, 0.0])

    def test_batch_matches_single_and_threads(self, unit_linear):
        clf = RandomizedClassifier(unit_linear, GaussianNoiseSpec.isotropic(0.5), MonteCarlo(500, 3))
        xs = np.random.default_rng(0).uniform(-1, 1, (25, 2))
        p1, r1 = predict_distributions(clf, xs, threads=1)
        p4, r4 = predict_distributions(clf, xs, threads=4)
        assert np.array_equal(p1, p4) and r1 == r4
        for i in (0, 7, 24):
            assert np.array_equal(predict_distribution(clf, xs[i], point_index=i).dist.probs, p1[i])

    def test_reproducible_from_seed(self, unit_linear):
        mk = lambda s: RandomizedClassifier(unit_linear, GaussianNoiseSpec.isotropic(1.0), MonteCarlo(1000, s))
        a = predict_distribution(mk(5), [0.3, 0.0]).dist.probs
        assert np.array_equal(a, predict_distribution(mk(5), [0.3, 0.0]).dist.probs)
        assert not np.array_equal(a, predict_distribution(mk(6), [0.3, 0.0]).dist.probs)


class TestModeAndLoss:
    @pytest.mark.parametrize("p, label", [([0.8, 0.2], 0), ([0.5, 0.5], 0), ([0.2, 0.3, 0.5], 2)])
    def test_mode(self, p, label):
        assert mode_classifier(CategoricalDistribution(p)) == label
        assert mode_classifier(DistributionEstimate(CategoricalDistribution(p))) == label

    def test_mode_tie_permutation(self, rng):
        for _ in range(100):
            p = rng.dirichlet(np.ones(5))
            p[rng.choice(5, 2, replace=False)] = p.max()
            p /= p.sum()
            perm = rng.permutation(5)
            a, b = mode_classifier(p), mode_classifier(p[perm])
            assert p[a] == p[perm][b]
            assert a == np.flatnonzero(p == p.max())[0]

    @pytest.mark.parametrize("p, y, loss", [([0.0, 1.0], 1, 0.0), ([0.7, 0.3], 0, 0.3), ([0.25] * 4, 2, 0.75)])
    def test_loss(self, p, y, loss):
        assert expected_01_loss(CategoricalDistribution(p), y) == pytest.approx(loss)

    def test_loss_label_range(self):
        with pytest.raises(ValidationError):
            expected_01_loss(CategoricalDistribution([0.5, 0.5]), 2)


class TestSamplePrediction:
    def test_noise_free(self, unit_linear):
        clf = RandomizedClassifier(unit_linear)
        assert {sample_prediction(clf, [0.4, 0.0], s) for s in range(20)} == {1}

    def test_deterministic(self, exact_linear):
        assert sample_prediction(exact_linear, [0.1, 0.0], 42) == sample_prediction(exact_linear, [0.1, 0.0], 42)

    def test_frequency_matches_distribution(self, exact_linear):
        n = 100_000
        freq = np.mean([sample_prediction(exact_linear, [1.0, 0.0], s) for s in range(n)])
        se = math.sqrt(PHI1 * (1 - PHI1) / n)
        assert abs(freq - PHI1) <= 3 * se


class TestModelFiles:
    def test_roundtrip_linear(self):
        clf = RandomizedClassifier(LinearClassifier([1.0, 2.0], 0.1), GaussianNoiseSpec.isotropic(0.3))
        d = model_to_dict(clf)
        assert d["variant"] == "linear" and d["noise"] == {"sigma": 0.3}
        back = model_from_dict(d)
        assert isinstance(back.eval_mode, Exact)
        assert np.array_equal(back.base.weights, clf.base.weights)

    def test_roundtrip_grid(self, quadrant_grid):
        d = model_to_dict(RandomizedClassifier(quadrant_grid, GaussianNoiseSpec.from_covariance(np.eye(2) * 0.1)))
        back = model_from_dict(d, MonteCarlo(10))
        assert np.array_equal(back.base.labels, quadrant_grid.labels)
        assert np.allclose(back.noise.covariance, np.eye(2) * 0.1)

    def test_inline_noise_keys(self):
        back = model_from_dict({"variant": "linear", "weights": [[1.0, 0.0]], "bias": [0.0], "sigma": 0.5})
        assert back.noise.iso_sigma == 0.5

    def test_unknown_variant(self):
        with pytest.raises(ValidationError):
            model_from_dict({"variant": "forest"})
