"""Adaptive frequency filter: a trainable (d_freq, d_new) projection.

Applied as S(T, d_freq) @ AFF = F(T, d_new) on power spectrograms.  Columns
start as mel triangles and are periodically trimmed: everything outside a
window around each column's peak is zeroed and negatives are clamped, so
each filter converges to a contiguous band whose location is learned.
"""

from dataclasses import dataclass

import numpy as np

from ..errors import DegenerateError, ShapeError

TRIM_HALFWIDTH_DEFAULT = 12  # bins
TRIM_PERIOD_DEFAULT = 5  # epochs


@dataclass
class AffMatrix:
    weights: np.ndarray  # (d_freq, d_new)
    trim_halfwidth_bins: int = TRIM_HALFWIDTH_DEFAULT
    trim_period_epochs: int = TRIM_PERIOD_DEFAULT

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if self.weights.ndim != 2:
            raise ShapeError("AFF weights must be a (d_freq, d_new) matrix")
        if self.trim_halfwidth_bins < 0 or self.trim_period_epochs < 1:
            raise ValueError("bad trim parameters")

    @property
    def d_freq(self):
        return self.weights.shape[0]

    @property
    def d_new(self):
        return self.weights.shape[1]


def aff_init_mfcc(bank, trim_halfwidth_bins=TRIM_HALFWIDTH_DEFAULT,
                  trim_period_epochs=TRIM_PERIOD_DEFAULT):
    """AFF initialized from a mel filter bank (peak-normalized triangles)."""
    return AffMatrix(weights=bank.weights.copy(),
                     trim_halfwidth_bins=trim_halfwidth_bins,
                     trim_period_epochs=trim_period_epochs)


def aff_apply(spec_frames, aff):
    """F = S @ AFF.  Accepts a Spectrogram or plain (T, d_freq) array."""
    S = np.asarray(getattr(spec_frames, "frames", spec_frames), dtype=np.float64)
    if S.ndim != 2 or S.shape[1] != aff.d_freq:
        raise ShapeError(
            f"spectrogram frequency dim {S.shape[-1] if S.ndim == 2 else '?'} "
            f"!= AFF rows {aff.d_freq}"
        )
    return S @ aff.weights


def trimmed_weights(weights, halfwidth):
    """Per column: keep [argmax-W, argmax+W], zero the rest, clamp negatives.

    np.argmax takes the first index on ties, which fixes the behaviour for
    constant columns.  Idempotent: the surviving peak stays the argmax.
    """
    out = np.zeros_like(weights)
    d_freq = weights.shape[0]
    for col in range(weights.shape[1]):
        peak = int(np.argmax(weights[:, col]))
        lo = max(0, peak - halfwidth)
        hi = min(d_freq, peak + halfwidth + 1)
        out[lo:hi, col] = np.maximum(weights[lo:hi, col], 0.0)
    return out


def aff_trim(aff):
    """Pure trim; training applies the result in place on a schedule."""
    return AffMatrix(weights=trimmed_weights(aff.weights, aff.trim_halfwidth_bins),
                     trim_halfwidth_bins=aff.trim_halfwidth_bins,
                     trim_period_epochs=aff.trim_period_epochs)


def column_supports(aff):
    """Per-column (lo, hi) index span of nonzero weights; None when empty."""
    spans = []
    for col in range(aff.d_new):
        nz = np.flatnonzero(aff.weights[:, col])
        spans.append((int(nz[0]), int(nz[-1])) if len(nz) else None)
    return spans


def importance_curve(aff):
    """Per-bin importance: row sums of the AFF, scaled so the max is 1."""
    curve = aff.weights.sum(axis=1)
    peak = curve.max()
    if peak <= 0:
        raise DegenerateError("AFF has no positive weight; importance undefined")
    return curve / peak


def aggregate_importance(curves):
    """Per-bin mean and population std across task curves."""
    stacked = np.stack([np.asarray(c, dtype=np.float64) for c in curves])
    return stacked.mean(axis=0), stacked.std(axis=0)
