"""Scikit-learn style wrapper around the benign-trained window detector.

Fit on normalized benign window statistics only (rows in [0,1]); predict
returns 1 for windows flagged as intrusions. Composes with sklearn
tooling via get_params/set_params/clone.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .drnn import ClampCounter, DrnnParams, detect, drnn_forward
from .learning import FistaConfig, TrainSet, layer_projections, local_learn


class WindowAnomalyDetector(BaseEstimator):
    """Anomaly detector over per-window traffic statistics.

    Parameters mirror the underlying model: activation constants
    (p, r, lambda_plus, lambda_minus), network depth (layers, of which the
    last is linear), the solver settings for the hidden-layer fits, and a
    seed for the fixed random projections.
    """

    def __init__(
        self,
        p=0.05,
        r=0.001,
        lambda_plus=0.1,
        lambda_minus=0.1,
        layers=3,
        cluster_size=10,
        l1_coeff=1.0,
        max_iters=200,
        tol=1e-6,
        random_state=0,
    ):
        self.p = p
        self.r = r
        self.lambda_plus = lambda_plus
        self.lambda_minus = lambda_minus
        self.layers = layers
        self.cluster_size = cluster_size
        self.l1_coeff = l1_coeff
        self.max_iters = max_iters
        self.tol = tol
        self.random_state = random_state

    def _check_X(self, X, fitting=False):
        X = check_array(X, dtype=float, ensure_min_features=1)
        if np.any(X < 0.0):
            raise ValueError("window statistics are non-negative")
        if fitting:
            if np.any(X > 1.0):
                raise ValueError("training features must be normalized into [0, 1]")
        elif X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        return X

    def fit(self, X, y=None):
        """Learn the detector from benign rows; y is ignored."""
        X = self._check_X(X, fitting=True)
        self.n_features_in_ = X.shape[1]
        self.params_ = DrnnParams(
            p=self.p,
            r=self.r,
            lambda_plus=self.lambda_plus,
            lambda_minus=self.lambda_minus,
            layers=self.layers,
            width=self.n_features_in_,
            cluster_size=self.cluster_size,
        )
        cfg = FistaConfig(l1_coeff=self.l1_coeff, max_iters=self.max_iters, tol=self.tol)
        seed = 0 if self.random_state is None else int(self.random_state)
        projections = layer_projections(self.params_, (seed,))
        self.clamp_counter_ = ClampCounter()
        self.model_ = local_learn(
            TrainSet(X, list(range(1, X.shape[0] + 1))),
            self.params_,
            cfg,
            projections,
            self.clamp_counter_,
        )
        return self

    def predict(self, X):
        """Binary intrusion decision per row (1 = intrusion)."""
        check_is_fitted(self, "model_")
        X = self._check_X(X)
        y, _, _ = detect(X, self.model_, self.params_)
        return np.asarray(y, dtype=int)

    def decision_function(self, X):
        """Deviation count per row (how many statistics exceed their whisker)."""
        check_is_fitted(self, "model_")
        X = self._check_X(X)
        _, zeta, _ = detect(X, self.model_, self.params_)
        return np.asarray(zeta, dtype=int)

    def reconstruct(self, X):
        """Expected-benign statistics for each row."""
        check_is_fitted(self, "model_")
        X = self._check_X(X)
        return drnn_forward(X, self.model_, self.params_)

    def score(self, X, y):
        """Detection accuracy against 0/1 window labels."""
        return float(np.mean(self.predict(X) == np.asarray(y, dtype=int)))
