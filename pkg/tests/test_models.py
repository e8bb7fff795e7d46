"""Tests for the logistic and MLP objectives and the finite-difference oracle."""

import numpy as np
import pytest
import scipy.sparse as sp

from trish.models import (LogisticModel, MlpModel, default_x0,
                          finite_difference_gradient, testing_accuracy,
                          testing_loss)
from trish.core import FiniteSumProblem


def logistic_fixture(N=40, n=7, seed=0, sparse=False):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(N, n))
    if sparse:
        X[rng.random(size=X.shape) < 0.6] = 0.0
        X = sp.csr_matrix(X)
    y = rng.choice([-1.0, 1.0], size=N)
    return LogisticModel(X, y)


def relative_error(approx, exact):
    return np.linalg.norm(approx - exact) / max(np.linalg.norm(exact), 1e-300)


class TestLogisticModel:
    def test_loss_and_gradient_at_origin(self):
        model = logistic_fixture()
        x = np.zeros(model.n)
        for i in range(5):
            assert np.isclose(model.component_loss(i, x), np.log(2.0), rtol=1e-15)
            z = np.asarray(model.features[i]).ravel()
            np.testing.assert_allclose(model.component_gradient(i, x),
                                       -model.labels[i] * z / 2.0, rtol=1e-14)

    def test_large_margin_no_overflow(self):
        model = LogisticModel(np.array([[50.0]]), np.array([1.0]))
        loss = model.component_loss(0, np.array([1.0]))  # margin +50
        assert np.isclose(loss, np.exp(-50.0), rtol=1e-10)
        loss_neg = model.component_loss(0, np.array([-20.0]))  # margin -1000
        assert np.isfinite(loss_neg) and np.isclose(loss_neg, 1000.0, rtol=1e-12)

    def test_gradient_matches_finite_differences(self):
        model = logistic_fixture(sparse=True)
        rng = np.random.default_rng(1)
        for _ in range(30):
            i = int(rng.integers(model.N))
            x = 0.3 * rng.normal(size=model.n)
            fd = finite_difference_gradient(model, i, x, h=1e-5)
            assert relative_error(fd, model.component_gradient(i, x)) < 1e-6

    def test_full_loss_is_mean_of_components(self):
        model = logistic_fixture()
        rng = np.random.default_rng(2)
        x = rng.normal(size=model.n)
        mean = np.mean([model.component_loss(i, x) for i in range(model.N)])
        assert np.isclose(model.loss(x), mean, rtol=1e-12)

    def test_full_gradient_is_mean_of_components(self):
        model = logistic_fixture(sparse=True)
        rng = np.random.default_rng(3)
        x = rng.normal(size=model.n)
        mean = np.mean([model.component_gradient(i, x) for i in range(model.N)],
                       axis=0)
        np.testing.assert_allclose(model.gradient(x), mean, rtol=1e-10)

    def test_convex_along_random_segments(self):
        model = logistic_fixture()
        rng = np.random.default_rng(4)
        for _ in range(1000):
            a = rng.normal(size=model.n)
            b = rng.normal(size=model.n)
            mid = model.loss((a + b) / 2.0)
            assert mid <= (model.loss(a) + model.loss(b)) / 2.0 + 1e-12

    def test_rejects_bad_labels(self):
        with pytest.raises(ValueError):
            LogisticModel(np.ones((2, 2)), np.array([0.0, 1.0]))


class TestMlpModel:
    def classifier_fixture(self, N=20, ell=9, seed=0):
        rng = np.random.default_rng(seed)
        X = rng.random(size=(N, ell))
        y = rng.integers(0, 2, size=N).astype(float)
        return MlpModel.classifier(X, y, hidden=4)

    def regressor_fixture(self, N=20, seed=0):
        rng = np.random.default_rng(seed)
        X = rng.random(size=(N, 7))
        y = rng.random(size=N)
        return MlpModel.regressor(X, y)

    def test_parameter_count_formula(self):
        """One hidden layer of n1 nodes on ell inputs: (ell+2)*n1 + 1."""
        X = np.zeros((3, 784))
        model = MlpModel.classifier(X, np.zeros(3), hidden=5)
        assert model.n == (784 + 2) * 5 + 1 == 3931

    def test_regressor_parameter_count(self):
        model = self.regressor_fixture()
        assert model.n == 102  # 7*7+7 + 5*7+5 + 1*5+1

    def test_zero_parameters_give_half_output(self):
        model = self.classifier_fixture()
        x = np.zeros(model.n)
        h = model.predict(model.features, x)
        np.testing.assert_allclose(h, 0.5)
        losses = model.component_losses(np.arange(model.N), x)
        np.testing.assert_allclose(losses, np.log(2.0), rtol=1e-12)

    def test_sigmoid_output_in_unit_interval(self):
        model = self.classifier_fixture()
        rng = np.random.default_rng(1)
        h = model.predict(model.features, rng.uniform(-2, 2, model.n))
        assert np.all((h > 0) & (h < 1))

    def test_losses_nonnegative(self):
        rng = np.random.default_rng(2)
        for fixture in (self.classifier_fixture(), self.regressor_fixture()):
            x = rng.uniform(-1, 1, fixture.n)
            assert np.all(fixture.component_losses(np.arange(fixture.N), x) >= 0)

    def test_classifier_gradient_matches_finite_differences(self):
        model = self.classifier_fixture()
        rng = np.random.default_rng(3)
        for _ in range(10):
            i = int(rng.integers(model.N))
            x = rng.uniform(-0.5, 0.5, model.n)
            fd = finite_difference_gradient(model, i, x, h=1e-5)
            assert relative_error(fd, model.component_gradient(i, x)) < 1e-5

    def test_regressor_gradient_matches_finite_differences(self):
        for loss in ("cross_entropy", "squared"):
            rng = np.random.default_rng(4)
            X = rng.random(size=(15, 7))
            y = rng.random(size=15)
            model = MlpModel.regressor(X, y, loss=loss)
            for _ in range(10):
                i = int(rng.integers(model.N))
                x = rng.uniform(-0.5, 0.5, model.n)
                fd = finite_difference_gradient(model, i, x, h=1e-5)
                assert relative_error(fd, model.component_gradient(i, x)) < 1e-5

    def test_per_component_rows_match_single_evaluations(self):
        model = self.classifier_fixture()
        rng = np.random.default_rng(5)
        x = rng.uniform(-0.5, 0.5, model.n)
        idx = np.array([0, 3, 7])
        rows = model.component_gradients(idx, x)
        for row, i in zip(rows, idx):
            np.testing.assert_allclose(row, model.component_gradient(int(i), x),
                                       rtol=1e-12)

    def test_full_gradient_matches_component_mean(self):
        model = self.regressor_fixture()
        rng = np.random.default_rng(6)
        x = rng.uniform(-0.5, 0.5, model.n)
        mean = model.component_gradients(np.arange(model.N), x).mean(axis=0)
        np.testing.assert_allclose(model.gradient(x), mean, rtol=1e-10)

    def test_linear_hidden_stack_collapses_to_affine(self):
        """With identity hidden activations the network equals a single
        affine map followed by the output sigmoid."""
        model = self.regressor_fixture()
        rng = np.random.default_rng(7)
        x = rng.uniform(-0.5, 0.5, model.n)
        (W1, b1), (W2, b2), (W3, b3) = model.unpack(x)
        W_eff = W3 @ W2 @ W1
        b_eff = W3 @ (W2 @ b1 + b2) + b3
        Z = model.features
        expected = 1.0 / (1.0 + np.exp(-(Z @ W_eff.T + b_eff).ravel()))
        np.testing.assert_allclose(model.predict(Z, x), expected, rtol=1e-12)

    def test_parameter_length_mismatch_rejected(self):
        model = self.classifier_fixture()
        with pytest.raises(ValueError):
            model.component_loss(0, np.zeros(model.n + 1))


class TestFiniteDifferenceOracle:
    def test_exact_on_quadratics(self):
        """Central differences are exact for quadratic losses."""
        class Quad(FiniteSumProblem):
            n, N = 3, 1

            def component_loss(self, i, x):
                return 0.5 * float(x @ x)

            def component_gradient(self, i, x):
                return x

        x = np.array([0.3, -1.0, 2.0])
        fd = finite_difference_gradient(Quad(), 0, x, h=0.1)
        np.testing.assert_allclose(fd, x, rtol=1e-12)

    def test_exact_on_linear(self):
        c = np.array([2.0, -3.0, 0.5])

        class Lin(FiniteSumProblem):
            n, N = 3, 1

            def component_loss(self, i, x):
                return float(c @ x)

            def component_gradient(self, i, x):
                return c

        fd = finite_difference_gradient(Lin(), 0, np.zeros(3), h=0.37)
        np.testing.assert_allclose(fd, c, rtol=1e-12)

    def test_rejects_nonpositive_step(self):
        model = logistic_fixture()
        with pytest.raises(ValueError):
            finite_difference_gradient(model, 0, np.zeros(model.n), h=0.0)


class TestMetrics:
    def test_accuracy_perfect_and_tie_convention(self):
        model = logistic_fixture(N=4, n=2)
        X = np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 0.0]])
        y = np.array([1.0, -1.0, 1.0])
        x = np.array([1.0, 0.0])
        # margins 1, -1, 0: the zero margin counts as +1
        assert testing_accuracy(model, x, X, y) == 1.0

    def test_accuracy_constant_half_output_on_balanced_labels(self):
        X = np.zeros((10, 3))
        labels = np.array([1.0, 0.0] * 5)
        model = MlpModel.classifier(np.zeros((4, 3)), np.zeros(4), hidden=2)
        x = np.zeros(model.n)  # h = 0.5 everywhere -> predicts 1
        assert testing_accuracy(model, x, X, labels) == 0.5

    def test_testing_loss_trivial_values(self):
        model = MlpModel.regressor(np.zeros((4, 7)), np.zeros(4))
        x = np.zeros(model.n)  # h = 0.5
        X = np.zeros((6, 7))
        assert np.isclose(testing_loss(model, x, X, np.full(6, 0.5)), 0.0)
        assert np.isclose(testing_loss(model, x, X, np.ones(6)), 0.25)

    def test_empty_test_set_rejected(self):
        model = logistic_fixture()
        with pytest.raises(ValueError):
            testing_accuracy(model, np.zeros(model.n),
                             np.zeros((0, model.n)), np.array([]))

    def test_default_start_points(self):
        rng = np.random.default_rng(0)
        logistic = logistic_fixture()
        np.testing.assert_array_equal(default_x0(logistic, rng),
                                      np.zeros(logistic.n))
        mlp = MlpModel.classifier(np.zeros((3, 4)), np.zeros(3), hidden=2)
        x0 = default_x0(mlp, rng)
        assert x0.shape == (mlp.n,)
        assert np.all((x0 >= -0.5) & (x0 <= 0.5))
