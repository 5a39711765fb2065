"""Scikit-learn-style front end for the width-scaled families.

`NetClassifier` wraps build-and-train behind the usual fit/predict surface
(get_params/set_params/clone come from BaseEstimator), so the families slot
into pipelines, grid searches and cross-validation unchanged. The fitted
network itself stays reachable as `model_` for the attack and harness APIs.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from .train import TrainConfig, train
from .validation import check_images, check_labels
from .zoo import FAMILIES, INPUT_SHAPES, N_CLASSES, build_model


class NetClassifier(BaseEstimator, ClassifierMixin):
    def __init__(self, family="cnn", width=1, epochs=30, lr=0.001, batch_size=20, seed=0):
        self.family = family
        self.width = width
        self.epochs = epochs
        self.lr = lr
        self.batch_size = batch_size
        self.seed = seed

    def fit(self, X, y):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        X = check_images(X, INPUT_SHAPES[self.family])
        y = check_labels(y, X.shape[0], N_CLASSES)
        from .data import Dataset

        self.model_ = build_model(self.family, self.width, seed=self.seed)
        config = TrainConfig(lr=self.lr, batch_size=self.batch_size, epochs=self.epochs, seed=self.seed)
        result = train(self.model_, Dataset(X, y), config)
        self.loss_history_ = result.loss_history
        self.classes_ = np.arange(N_CLASSES)
        self.n_features_in_ = int(np.prod(INPUT_SHAPES[self.family]))
        return self

    def _check_fitted(self):
        if not hasattr(self, "model_"):
            raise RuntimeError("this NetClassifier instance is not fitted yet")

    def decision_function(self, X):
        self._check_fitted()
        X = check_images(X, INPUT_SHAPES[self.family])
        return self.model_.logits(X)

    def predict(self, X):
        return self.decision_function(X).argmax(axis=1)

    def predict_proba(self, X):
        z = self.decision_function(X).astype(np.float64)
        z -= z.max(axis=1, keepdims=True)
        e = np.exp(z)
        return e / e.sum(axis=1, keepdims=True)

    def param_count(self):
        self._check_fitted()
        return self.model_.param_count()
