"""Full spectrogram classifier: AFF projection, encoder, dense head.

Per clip: F = S @ AFF, compressed as log(1 + max(F, 0)) for numeric
conditioning, pooled to one vector by the sequence encoder, then classified
by the three-layer head.  Gradients flow through every stage by hand.
"""

import numpy as np

from .. import audio
from ..errors import ShapeError
from .aff import AffMatrix, aff_init_mfcc, trimmed_weights
from .dense import DenseNet3, HIDDEN_DIMS_DEFAULT
from .encoder import SeqEncoder, VARIANT_MEAN


def _spec_array(spec):
    S = np.asarray(getattr(spec, "frames", spec), dtype=np.float64)
    if S.ndim != 2 or S.shape[0] < 1:
        raise ShapeError("each spectrogram must be a non-empty (T, d_freq) array")
    return S


class AffNet:
    """AFF + encoder + DenseNet3 over variable-length spectrograms."""

    def __init__(self, d_freq, d_new=audio.DEFAULTS["n_mel"],
                 sample_rate_hz=audio.CANONICAL_RATE_HZ,
                 encoder_variant=VARIANT_MEAN, d_ff=64,
                 head_hidden=HIDDEN_DIMS_DEFAULT, seed=0,
                 trim_halfwidth_bins=None, trim_period_epochs=None):
        bank = audio.mel_filterbank(d_freq, n_mel=d_new, sample_rate_hz=sample_rate_hz)
        trim_kwargs = {}
        if trim_halfwidth_bins is not None:
            trim_kwargs["trim_halfwidth_bins"] = int(trim_halfwidth_bins)
        if trim_period_epochs is not None:
            trim_kwargs["trim_period_epochs"] = int(trim_period_epochs)
        self.aff = aff_init_mfcc(bank, **trim_kwargs)
        self.encoder = SeqEncoder(d_model=d_new, variant=encoder_variant,
                                  d_ff=d_ff, seed=seed + 1)
        self.head = DenseNet3(n_inputs=d_new, hidden_dims=head_hidden, seed=seed)
        self.sample_rate_hz = float(sample_rate_hz)
        self.seed = int(seed)
        self.params = {"aff": self.aff.weights}
        self.params.update({f"enc.{k}": v for k, v in self.encoder.params.items()})
        self.params.update({f"head.{k}": v for k, v in self.head.params.items()})

    @property
    def trim_period_epochs(self):
        return self.aff.trim_period_epochs

    def trim_hook(self):
        """In-place trim so optimizer state keeps pointing at the same array."""
        self.aff.weights[:, :] = trimmed_weights(
            self.aff.weights, self.aff.trim_halfwidth_bins
        )

    def config(self):
        return {
            "d_freq": self.aff.d_freq,
            "d_new": self.aff.d_new,
            "sample_rate_hz": self.sample_rate_hz,
            "encoder_variant": self.encoder.variant,
            "d_ff": self.encoder.d_ff,
            "head_hidden": list(self.head.hidden_dims),
            "seed": self.seed,
            "trim_halfwidth_bins": self.aff.trim_halfwidth_bins,
            "trim_period_epochs": self.aff.trim_period_epochs,
        }

    @classmethod
    def from_config(cls, cfg):
        return cls(d_freq=cfg["d_freq"], d_new=cfg["d_new"],
                   sample_rate_hz=cfg.get("sample_rate_hz", audio.CANONICAL_RATE_HZ),
                   encoder_variant=cfg.get("encoder_variant", VARIANT_MEAN),
                   d_ff=cfg.get("d_ff", 64),
                   head_hidden=tuple(cfg.get("head_hidden", HIDDEN_DIMS_DEFAULT)),
                   seed=cfg.get("seed", 0),
                   trim_halfwidth_bins=cfg.get("trim_halfwidth_bins"),
                   trim_period_epochs=cfg.get("trim_period_epochs"))

    def _forward_one(self, spec):
        S = _spec_array(spec)
        if S.shape[1] != self.aff.d_freq:
            raise ShapeError(f"spectrogram d_freq {S.shape[1]} != AFF rows {self.aff.d_freq}")
        # scale by the clip's mean power: absolute loudness is not a cue and
        # O(1) values keep the log1p compression from flattening gradients
        S = S / (S.mean() + 1e-12)
        F = S @ self.aff.weights
        C = np.log1p(np.maximum(F, 0.0))
        pooled, cache = self.encoder.forward(C)
        return pooled, {"S": S, "F": F, "enc": cache}

    def pooled_features(self, specs):
        return np.stack([self._forward_one(s)[0] for s in specs])

    def predict_proba(self, specs):
        return self.head.predict_proba(self.pooled_features(specs))

    def predict(self, specs):
        return (self.predict_proba(specs)[:, 1] >= 0.5).astype(np.int64)

    def loss_and_grads(self, specs, y):
        y = np.asarray(y)
        if len(specs) != len(y):
            raise ShapeError("one label per spectrogram required")
        pooled, caches = [], []
        for spec in specs:
            vec, cache = self._forward_one(spec)
            pooled.append(vec)
            caches.append(cache)
        P = np.stack(pooled)
        loss, head_grads, dP = self.head.input_grad_and_param_grads(P, y)

        grads = {f"head.{k}": v for k, v in head_grads.items()}
        d_aff = np.zeros_like(self.aff.weights)
        enc_grads = {f"enc.{k}": np.zeros_like(v)
                     for k, v in self.encoder.params.items()}
        for i, cache in enumerate(caches):
            dC, enc_g = self.encoder.backward(cache["enc"], dP[i])
            F = cache["F"]
            dF = np.where(F > 0, dC / (1.0 + F), 0.0)
            d_aff += cache["S"].T @ dF
            for k, v in enc_g.items():
                enc_grads[f"enc.{k}"] += v
        grads["aff"] = d_aff
        grads.update(enc_grads)
        return loss, grads
