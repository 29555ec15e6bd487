"""Estimator-style wrappers over the neural kernels and feature selection.

These follow the scikit-learn protocol (get_params/set_params from the
constructor signature, fit returning self, trailing-underscore fitted
attributes, NotFittedError before fit) so the pieces compose with standard
tooling.  The numerical work stays in the from-scratch kernels; sklearn
contributes only the estimator plumbing.
"""

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin
from sklearn.exceptions import NotFittedError

from . import stats
from .errors import AlignmentError, ShapeError
from .features import FeatureVector
from .nn.aff import importance_curve
from .nn.affnet import AffNet
from .nn.dense import DenseNet3, HIDDEN_DIMS_DEFAULT
from .nn.train import TrainConfig, train
from .validation import as_feature_matrix, as_label_vector


def _check_fitted(estimator, attr):
    if not hasattr(estimator, attr):
        raise NotFittedError(
            f"{type(estimator).__name__} is not fitted yet; call fit first"
        )


class DenseNetClassifier(BaseEstimator, ClassifierMixin):
    """Three-layer softmax classifier trained with seeded Adam."""

    def __init__(self, hidden_dims=HIDDEN_DIMS_DEFAULT, lr=1e-3, epochs=100,
                 batch_size=16, seed=0):
        self.hidden_dims = hidden_dims
        self.lr = lr
        self.epochs = epochs
        self.batch_size = batch_size
        self.seed = seed

    def fit(self, X, y):
        X = as_feature_matrix(X)
        y = as_label_vector(y, n_rows=X.shape[0])
        self.net_ = DenseNet3(n_inputs=X.shape[1],
                              hidden_dims=tuple(self.hidden_dims), seed=self.seed)
        self.loss_curve_ = train(
            self.net_, X, y,
            TrainConfig(lr=self.lr, epochs=self.epochs,
                        batch_size=self.batch_size, seed=self.seed),
        )
        self.n_features_in_ = X.shape[1]
        self.classes_ = np.array([0, 1])
        return self

    def predict_proba(self, X):
        _check_fitted(self, "net_")
        return self.net_.predict_proba(as_feature_matrix(X))

    def predict(self, X):
        return (self.predict_proba(X)[:, 1] >= 0.5).astype(np.int64)


class TTestSelector(BaseEstimator, TransformerMixin):
    """Feature selection by per-feature t-test at significance alpha.

    fit(X, y, groups) treats y=1 rows as wet and y=0 as dry; for the paired
    kind, groups carries the patient id of each row and the two conditions
    are aligned per patient.
    """

    def __init__(self, kind=stats.KIND_PAIRED, alpha=stats.ALPHA_DEFAULT,
                 feature_names=None):
        self.kind = kind
        self.alpha = alpha
        self.feature_names = feature_names

    def fit(self, X, y, groups=None):
        X = as_feature_matrix(X)
        y = as_label_vector(y, n_rows=X.shape[0])
        names = tuple(self.feature_names) if self.feature_names is not None \
            else tuple(f"x{j}" for j in range(X.shape[1]))
        if len(names) != X.shape[1]:
            raise ShapeError("feature_names length does not match X columns")
        if groups is None:
            if self.kind == stats.KIND_PAIRED:
                raise AlignmentError("paired selection needs groups (patient ids)")
            groups = [str(i) for i in range(X.shape[0])]
        elif len(groups) != X.shape[0]:
            raise ShapeError("groups length does not match X rows")

        wet, dry = [], []
        for row, label, pid in zip(X, y, groups):
            condition = "wet" if label == 1 else "dry"
            vec = FeatureVector(values=row, names=names,
                                recording_ref=(str(pid), "pg", condition))
            (wet if label == 1 else dry).append(vec)
        self.mask_ = stats.select_features(wet, dry, kind=self.kind,
                                           alpha=self.alpha)
        self.n_features_in_ = X.shape[1]
        return self

    def get_support(self):
        _check_fitted(self, "mask_")
        return self.mask_.selected.copy()

    def transform(self, X):
        _check_fitted(self, "mask_")
        X = as_feature_matrix(X)
        if X.shape[1] != self.n_features_in_:
            raise ShapeError(f"X has {X.shape[1]} columns, expected {self.n_features_in_}")
        return X[:, self.mask_.selected]

    def selected_names(self):
        _check_fitted(self, "mask_")
        return self.mask_.selected_names()


class AffNetClassifier(BaseEstimator, ClassifierMixin):
    """Spectrogram classifier with a trainable frequency filter front end.

    X is a sequence of (T_i, d_freq) power spectrogram arrays; the AFF is
    trimmed on its schedule during fit.
    """

    def __init__(self, d_new=26, encoder_variant="mean", d_ff=64,
                 head_hidden=HIDDEN_DIMS_DEFAULT, lr=2e-2, epochs=60,
                 batch_size=16, seed=0, trim_halfwidth_bins=None,
                 trim_period_epochs=None):
        self.d_new = d_new
        self.encoder_variant = encoder_variant
        self.d_ff = d_ff
        self.head_hidden = head_hidden
        self.lr = lr
        self.epochs = epochs
        self.batch_size = batch_size
        self.seed = seed
        self.trim_halfwidth_bins = trim_halfwidth_bins
        self.trim_period_epochs = trim_period_epochs

    def fit(self, X, y, sample_rate_hz=None):
        if len(X) == 0:
            raise ShapeError("need at least one spectrogram")
        first = np.asarray(getattr(X[0], "frames", X[0]))
        if first.ndim != 2:
            raise ShapeError("spectrograms must be (T, d_freq) arrays")
        y = as_label_vector(np.asarray(y), n_rows=len(X))
        sr = sample_rate_hz
        if sr is None:
            sr = getattr(X[0], "sample_rate_hz", None) or 22050
        self.net_ = AffNet(
            d_freq=first.shape[1], d_new=self.d_new, sample_rate_hz=sr,
            encoder_variant=self.encoder_variant, d_ff=self.d_ff,
            head_hidden=tuple(self.head_hidden), seed=self.seed,
            trim_halfwidth_bins=self.trim_halfwidth_bins,
            trim_period_epochs=self.trim_period_epochs,
        )
        self.loss_curve_ = train(
            self.net_, list(X), y,
            TrainConfig(lr=self.lr, epochs=self.epochs,
                        batch_size=self.batch_size, seed=self.seed),
        )
        self.classes_ = np.array([0, 1])
        return self

    def predict_proba(self, X):
        _check_fitted(self, "net_")
        return self.net_.predict_proba(list(X))

    def predict(self, X):
        return (self.predict_proba(X)[:, 1] >= 0.5).astype(np.int64)

    def importance_curve(self):
        _check_fitted(self, "net_")
        return importance_curve(self.net_.aff)
