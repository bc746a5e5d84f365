import numpy as np
import pytest

from noduleml.metrics import auroc
from noduleml.models.linear import fit_lda, fit_logistic


class TestLda:
    def test_identical_class_means_scores_prior(self):
        rng = np.random.default_rng(1)
        X = np.vstack([rng.normal(size=(30, 3))] * 2)
        y = np.concatenate([np.ones(30), np.zeros(30)])
        # same feature rows for both classes: means coincide exactly
        model = fit_lda(X, y, np.arange(60))
        scores = model.predict_rows(X, np.arange(60))
        assert scores == pytest.approx(np.full(60, 0.5), abs=1e-10)

    def test_unequal_priors_scored(self):
        rng = np.random.default_rng(2)
        base = rng.normal(size=(20, 2))
        X = np.vstack([base, base, base, base])
        y = np.concatenate([np.ones(60), np.zeros(20)])
        model = fit_lda(X, y, np.arange(80))
        scores = model.predict_rows(X, np.arange(80))
        assert scores == pytest.approx(np.full(80, 0.75), abs=1e-10)

    def test_direction_proportional_to_mean_difference(self):
        # spherical classes: discriminant direction is the mean difference
        rng = np.random.default_rng(3)
        mu = np.array([2.0, -1.0, 0.5])
        X0 = rng.normal(size=(4000, 3))
        X1 = rng.normal(size=(4000, 3)) + mu
        X = np.vstack([X0, X1])
        y = np.concatenate([np.zeros(4000), np.ones(4000)])
        model = fit_lda(X, y, np.arange(8000))
        direction = model.coef / np.linalg.norm(model.coef)
        expected = mu / np.linalg.norm(mu)
        assert direction == pytest.approx(expected, abs=0.05)

    def test_duplicated_feature_column_finite(self):
        rng = np.random.default_rng(4)
        base = rng.normal(size=(50, 2))
        X = np.column_stack([base, base[:, 0]])  # exact duplicate column
        y = (rng.random(50) < 0.5).astype(int)
        y[:2] = [0, 1]
        model = fit_lda(X, y, np.arange(50))
        assert np.all(np.isfinite(model.coef))
        scores = model.predict_rows(X, np.arange(50))
        assert np.all(np.isfinite(scores))

    def test_matches_logistic_ranking_on_gaussians(self):
        # one feature, equal variances: LDA and logistic target the same
        # boundary, so their rankings agree
        rng = np.random.default_rng(5)
        n = 10_000
        X = np.concatenate([rng.normal(0, 1, n // 2),
                            rng.normal(1.2, 1, n // 2)])[:, None]
        y = np.concatenate([np.zeros(n // 2), np.ones(n // 2)])
        rows = np.arange(n)
        lda_auc = auroc(fit_lda(X, y, rows).predict_rows(X, rows), y)
        log_auc = auroc(fit_logistic(X, y, rows).predict_rows(X, rows), y)
        assert lda_auc == pytest.approx(log_auc, abs=0.01)
