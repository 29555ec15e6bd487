"""Sequence encoders collapsing a (T, d) feature map to one d-vector.

Two variants: plain temporal mean-pooling, and a single-head, single-block
self-attention encoder (scaled dot-product attention with residual, then a
position-wise feed-forward with residual, then the temporal mean).  With
zero-initialized projections the attention variant reduces exactly to
mean-pooling, which the tests exploit.
"""

import numpy as np

from ..errors import ShapeError
from .dense import he_uniform

VARIANT_MEAN = "mean"
VARIANT_ATTENTION = "attention"
FF_DIM_DEFAULT = 64


class SeqEncoder:
    """Stateless mean-pool or parametric attention encoder.

    forward() returns (pooled, cache); backward(cache, d_pooled) returns
    (d_input, param grads).  The attention variant uses key dim d_k = d so
    the residual connection is well-typed.
    """

    def __init__(self, d_model, variant=VARIANT_MEAN, d_ff=FF_DIM_DEFAULT,
                 seed=0, init="he"):
        if d_model < 1:
            raise ShapeError("d_model must be >= 1")
        if variant not in (VARIANT_MEAN, VARIANT_ATTENTION):
            raise ValueError(f"unknown encoder variant {variant!r}")
        self.d_model = int(d_model)
        self.variant = variant
        self.d_ff = int(d_ff)
        self.seed = int(seed)
        self.params = {}
        if variant == VARIANT_ATTENTION:
            rng = np.random.default_rng(seed)
            d = self.d_model
            maker = (lambda fi, fo: he_uniform(rng, fi, fo)) if init == "he" \
                else (lambda fi, fo: np.zeros((fi, fo)))
            self.params = {
                "Wq": maker(d, d),
                "Wk": maker(d, d),
                "Wv": maker(d, d),
                "Wf1": maker(d, self.d_ff),
                "bf1": np.zeros(self.d_ff),
                "Wf2": maker(self.d_ff, d),
                "bf2": np.zeros(d),
            }

    def config(self):
        return {"d_model": self.d_model, "variant": self.variant,
                "d_ff": self.d_ff, "seed": self.seed}

    @classmethod
    def from_config(cls, cfg):
        return cls(d_model=cfg["d_model"], variant=cfg["variant"],
                   d_ff=cfg.get("d_ff", FF_DIM_DEFAULT), seed=cfg.get("seed", 0),
                   init="zeros" if cfg["variant"] == VARIANT_ATTENTION else "he")

    def _check_input(self, F):
        F = np.asarray(F, dtype=np.float64)
        if F.ndim != 2 or F.shape[0] < 1:
            raise ShapeError("encoder input must be a non-empty (T, d) map")
        if F.shape[1] != self.d_model:
            raise ShapeError(f"expected feature dim {self.d_model}, got {F.shape[1]}")
        return F

    def forward(self, F):
        F = self._check_input(F)
        if self.variant == VARIANT_MEAN:
            return F.mean(axis=0), {"T": F.shape[0]}
        p = self.params
        scale = 1.0 / np.sqrt(self.d_model)
        Q = F @ p["Wq"]
        K = F @ p["Wk"]
        V = F @ p["Wv"]
        S = (Q @ K.T) * scale
        S_shift = S - S.max(axis=1, keepdims=True)
        expS = np.exp(S_shift)
        A = expS / expS.sum(axis=1, keepdims=True)
        U = A @ V
        H = F + U
        P1 = H @ p["Wf1"] + p["bf1"]
        R = np.maximum(P1, 0.0)
        G = R @ p["Wf2"] + p["bf2"]
        Z = H + G
        pooled = Z.mean(axis=0)
        cache = {"F": F, "Q": Q, "K": K, "V": V, "A": A, "H": H, "P1": P1,
                 "R": R, "scale": scale, "T": F.shape[0]}
        return pooled, cache

    def backward(self, cache, d_pooled):
        """Exact gradients of pooled w.r.t. input and parameters."""
        d_pooled = np.asarray(d_pooled, dtype=np.float64)
        T = cache["T"]
        dZ = np.tile(d_pooled / T, (T, 1))
        if self.variant == VARIANT_MEAN:
            return dZ, {}
        p = self.params
        F, Q, K, V, A = cache["F"], cache["Q"], cache["K"], cache["V"], cache["A"]
        H, P1, R, scale = cache["H"], cache["P1"], cache["R"], cache["scale"]

        dH = dZ.copy()
        dG = dZ
        dR = dG @ p["Wf2"].T
        grads = {"Wf2": R.T @ dG, "bf2": dG.sum(axis=0)}
        dP1 = dR * (P1 > 0)
        grads["Wf1"] = H.T @ dP1
        grads["bf1"] = dP1.sum(axis=0)
        dH += dP1 @ p["Wf1"].T

        dU = dH
        dF = dH.copy()  # residual branch
        dA = dU @ V.T
        dV = A.T @ dU
        # softmax backward, row-wise
        dS = A * (dA - (dA * A).sum(axis=1, keepdims=True))
        dQ = (dS @ K) * scale
        dK = (dS.T @ Q) * scale
        grads["Wq"] = F.T @ dQ
        grads["Wk"] = F.T @ dK
        grads["Wv"] = F.T @ dV
        dF += dQ @ p["Wq"].T + dK @ p["Wk"].T + dV @ p["Wv"].T
        return dF, grads
