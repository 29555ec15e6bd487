"""Three-layer fully connected softmax classifier with manual gradients.

Everything is float64; gradient checks at 1e-5 relative are meaningless at
32-bit precision.
"""

import numpy as np

from ..errors import ShapeError
from ..validation import as_float_array

HIDDEN_DIMS_DEFAULT = (128, 32)
N_CLASSES = 2


def he_uniform(rng, fan_in, fan_out):
    limit = np.sqrt(6.0 / fan_in)
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


def softmax(z):
    """Row-wise softmax, shifted for stability; rows sum to 1."""
    shifted = z - z.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def log_softmax(z):
    shifted = z - z.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


class DenseNet3:
    """in -> h1 -> h2 -> 2 with ReLU hiddens and a softmax head.

    Parameters live in self.params (name -> ndarray); optimizers update
    those arrays in place.  init="zeros" gives the symmetric net that
    outputs [0.5, 0.5] everywhere, used by tests.
    """

    def __init__(self, n_inputs, hidden_dims=HIDDEN_DIMS_DEFAULT, seed=0, init="he"):
        if n_inputs < 1 or any(h < 1 for h in hidden_dims) or len(hidden_dims) != 2:
            raise ShapeError("DenseNet3 needs n_inputs >= 1 and two hidden sizes")
        self.n_inputs = int(n_inputs)
        self.hidden_dims = tuple(int(h) for h in hidden_dims)
        self.seed = int(seed)
        dims = (self.n_inputs, *self.hidden_dims, N_CLASSES)
        rng = np.random.default_rng(seed)
        self.params = {}
        for layer, (d_in, d_out) in enumerate(zip(dims[:-1], dims[1:]), start=1):
            if init == "he":
                w = he_uniform(rng, d_in, d_out)
            elif init == "zeros":
                w = np.zeros((d_in, d_out))
            else:
                raise ValueError(f"unknown init {init!r}")
            self.params[f"W{layer}"] = w
            self.params[f"b{layer}"] = np.zeros(d_out)

    def config(self):
        return {"n_inputs": self.n_inputs, "hidden_dims": list(self.hidden_dims),
                "seed": self.seed}

    @classmethod
    def from_config(cls, cfg):
        return cls(n_inputs=cfg["n_inputs"], hidden_dims=tuple(cfg["hidden_dims"]),
                   seed=cfg.get("seed", 0), init="zeros")

    def _check_input(self, X):
        X = as_float_array(X, "X", ndim=2)
        if X.shape[1] != self.n_inputs:
            raise ShapeError(f"expected {self.n_inputs} input features, got {X.shape[1]}")
        return X

    def _forward(self, X):
        p = self.params
        z1 = X @ p["W1"] + p["b1"]
        a1 = np.maximum(z1, 0.0)
        z2 = a1 @ p["W2"] + p["b2"]
        a2 = np.maximum(z2, 0.0)
        z3 = a2 @ p["W3"] + p["b3"]
        return z1, a1, z2, a2, z3

    def predict_proba(self, X):
        X = self._check_input(X)
        *_, z3 = self._forward(X)
        return softmax(z3)

    def predict(self, X):
        return (self.predict_proba(X)[:, 1] >= 0.5).astype(np.int64)

    def loss(self, X, y):
        X = self._check_input(X)
        *_, z3 = self._forward(X)
        return float(-log_softmax(z3)[np.arange(len(y)), y].mean())

    def loss_and_grads(self, X, y):
        """Mean cross-entropy and exact gradients for every parameter."""
        loss, grads, _ = self.input_grad_and_param_grads(X, y)
        return loss, grads

    def input_grad_and_param_grads(self, X, y):
        """As loss_and_grads but also the gradient w.r.t. X, for stacked models."""
        X = self._check_input(X)
        y = np.asarray(y)
        if y.shape != (X.shape[0],):
            raise ShapeError("labels must be one per row")
        p = self.params
        z1, a1, z2, a2, z3 = self._forward(X)
        logp = log_softmax(z3)
        n = X.shape[0]
        loss = float(-logp[np.arange(n), y].mean())

        dz3 = np.exp(logp)
        dz3[np.arange(n), y] -= 1.0
        dz3 /= n
        grads = {"W3": a2.T @ dz3, "b3": dz3.sum(axis=0)}
        da2 = dz3 @ p["W3"].T
        dz2 = da2 * (z2 > 0)
        grads["W2"] = a1.T @ dz2
        grads["b2"] = dz2.sum(axis=0)
        da1 = dz2 @ p["W2"].T
        dz1 = da1 * (z1 > 0)
        grads["W1"] = X.T @ dz1
        grads["b1"] = dz1.sum(axis=0)
        dX = dz1 @ p["W1"].T
        return loss, grads, dX
