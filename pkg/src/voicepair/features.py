"""Acoustic low-level descriptors and functionals.

Produces one named feature vector per recording: pitch (autocorrelation F0),
voice-quality scalars (jitter, shimmer, HNR), spectral descriptors, and
mean/std/percentile functionals over each descriptor track.  The set is a
documented ~60-feature subset in the GeMAPS spirit, not a clone of any
external toolkit; externally computed feature CSVs can be ingested through
the same schema.
"""

import csv
import logging
from dataclasses import dataclass

import numpy as np

from . import audio
from .errors import (
    ConfigError,
    InsufficientVoicingError,
    ParseError,
    SchemaError,
    ShapeError,
)

log = logging.getLogger(__name__)

VOICING_CORR_THRESHOLD = 0.45
VOICING_RMS_THRESHOLD = 0.01
F_MIN_HZ = 60.0
F_MAX_HZ = 400.0

CSV_KEY_COLUMNS = ("patient_id", "task", "condition")

FUNCTIONAL_NAMES = ("mean", "std", "p20", "p50", "p80")


@dataclass(frozen=True)
class LldTrack:
    """Per-frame values of one descriptor plus a per-frame validity mask."""

    values: np.ndarray
    voiced_mask: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        mask = np.asarray(self.voiced_mask, dtype=bool)
        if values.shape != mask.shape or values.ndim != 1:
            raise ShapeError("LldTrack values and mask must be equal-length 1-d arrays")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "voiced_mask", mask)


@dataclass(frozen=True)
class FeatureVector:
    """Ordered, uniquely named feature values for one recording."""

    values: np.ndarray
    names: tuple
    recording_ref: tuple  # (patient_id, task, condition)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        names = tuple(self.names)
        if values.ndim != 1 or len(values) != len(names):
            raise ShapeError("FeatureVector values/names length mismatch")
        if len(set(names)) != len(names):
            raise SchemaError("FeatureVector names must be unique")
        if not np.all(np.isfinite(values)):
            raise ValueError("FeatureVector values must be finite")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "names", names)


# ---------------------------------------------------------------------------
# Pitch and voice quality
# ---------------------------------------------------------------------------


def _normalized_autocorr(frames, lags):
    """Normalized cross-correlation r(lag) for every frame at once.

    r is close to 1 for periodic frames independent of amplitude, which is
    what the 0.45 voicing threshold assumes.

    Returns an array of shape (n_frames, len(lags)).
    """
    data = frames.data
    n_frames, frame_len = data.shape
    out = np.zeros((n_frames, len(lags)))
    for i, lag in enumerate(lags):
        if lag >= frame_len:
            continue
        head = data[:, : frame_len - lag]
        tail = data[:, lag:]
        num = np.einsum("ij,ij->i", head, tail)
        denom = np.sqrt(
            np.einsum("ij,ij->i", head, head) * np.einsum("ij,ij->i", tail, tail)
        )
        np.divide(num, denom, out=out[:, i], where=denom > 0)
    return out


def f0_autocorrelation(clip, f_min_hz=F_MIN_HZ, f_max_hz=F_MAX_HZ,
                       frame_ms=audio.DEFAULTS["frame_ms"],
                       hop_ms=audio.DEFAULTS["hop_ms"]):
    """Frame-wise F0 via the autocorrelation peak in [sr/f_max, sr/f_min].

    A frame is voiced iff the normalized autocorrelation peak is >= 0.45 and
    the frame RMS is >= 0.01; unvoiced frames carry value 0 and mask False.
    The peak lag is refined by parabolic interpolation before converting to
    Hz.
    """
    sr = clip.sample_rate_hz
    if not (0 < f_min_hz < f_max_hz <= sr / 2):
        raise ConfigError(f"invalid F0 range [{f_min_hz}, {f_max_hz}] at sr={sr}")
    frames = audio.frame_signal_raw(clip, frame_ms, hop_ms)
    frame_len = frames.frame_len_samples

    lag_min = max(2, int(np.ceil(sr / f_max_hz)))
    lag_max = min(int(np.floor(sr / f_min_hz)), frame_len - 2)
    if lag_max <= lag_min:
        raise ConfigError("frame too short for the requested F0 range")

    lags = np.arange(lag_min - 1, lag_max + 2)
    corr = _normalized_autocorr(frames, lags)
    search = corr[:, 1:-1]  # restrict peak picking to [lag_min, lag_max]
    rows = np.arange(frames.n_frames)
    # periodic signals correlate at every multiple of the period, so a bare
    # argmax may land on a subharmonic; among local maxima within 0.01 of
    # the best, the shortest lag is the fundamental period
    peak_idx = np.empty(frames.n_frames, dtype=np.int64)
    for t in range(frames.n_frames):
        r = search[t]
        best = int(np.argmax(r))
        is_local_max = (corr[t, 1:-1] >= corr[t, :-2]) & (corr[t, 1:-1] >= corr[t, 2:])
        candidates = np.flatnonzero(is_local_max & (r >= r[best] - 0.01))
        peak_idx[t] = candidates[0] if len(candidates) else best
    peak_val = search[rows, peak_idx]
    rms = np.sqrt(np.mean(frames.data**2, axis=1))
    voiced = (peak_val >= VOICING_CORR_THRESHOLD) & (rms >= VOICING_RMS_THRESHOLD)

    # parabolic refinement around the peak; corr is padded by one lag each side
    left = corr[rows, peak_idx]
    mid = corr[rows, peak_idx + 1]
    right = corr[rows, peak_idx + 2]
    denom = left - 2 * mid + right
    delta = np.zeros(frames.n_frames)
    ok = np.abs(denom) > 1e-12
    delta[ok] = 0.5 * (left[ok] - right[ok]) / denom[ok]
    delta = np.clip(delta, -1.0, 1.0)

    refined_lag = lag_min + peak_idx + delta
    f0 = np.where(voiced, sr / refined_lag, 0.0)
    return LldTrack(values=f0, voiced_mask=voiced)


def _adjacent_voiced_pairs(mask):
    return np.flatnonzero(mask[:-1] & mask[1:])


def jitter_local(f0_track):
    """Cycle-to-cycle period perturbation.

    mean |P_k - P_{k-1}| over adjacent voiced frames, divided by the mean
    period over all voiced frames.
    """
    pairs = _adjacent_voiced_pairs(f0_track.voiced_mask)
    if len(pairs) == 0:
        raise InsufficientVoicingError("need >= 2 consecutive voiced frames for jitter")
    periods = np.zeros_like(f0_track.values)
    voiced = f0_track.voiced_mask
    periods[voiced] = 1.0 / f0_track.values[voiced]
    diffs = np.abs(periods[pairs + 1] - periods[pairs])
    return float(diffs.mean() / periods[voiced].mean())


def _frame_peak_amplitudes(clip, frame_ms=audio.DEFAULTS["frame_ms"],
                           hop_ms=audio.DEFAULTS["hop_ms"]):
    frames = audio.frame_signal_raw(clip, frame_ms, hop_ms)
    return np.max(np.abs(frames.data), axis=1)


def shimmer_local(clip, f0_track, frame_ms=audio.DEFAULTS["frame_ms"],
                  hop_ms=audio.DEFAULTS["hop_ms"]):
    """Cycle-to-cycle amplitude perturbation over per-frame peak amplitudes."""
    pairs = _adjacent_voiced_pairs(f0_track.voiced_mask)
    if len(pairs) == 0:
        raise InsufficientVoicingError("need >= 2 consecutive voiced frames for shimmer")
    amps = _frame_peak_amplitudes(clip, frame_ms, hop_ms)
    if len(amps) != len(f0_track.values):
        raise ShapeError("clip framing does not match the F0 track length")
    voiced = f0_track.voiced_mask
    mean_amp = amps[voiced].mean()
    if mean_amp <= 0:
        raise InsufficientVoicingError("voiced frames have zero amplitude")
    diffs = np.abs(amps[pairs + 1] - amps[pairs])
    return float(diffs.mean() / mean_amp)


def hnr_db(clip, f0_track, frame_ms=audio.DEFAULTS["frame_ms"],
           hop_ms=audio.DEFAULTS["hop_ms"]):
    """Harmonics-to-noise ratio in dB, averaged over voiced frames.

    Per voiced frame, r is the normalized autocorrelation at the F0 lag and
    HNR = 10*log10(r / (1 - r)); r is clamped into (0, 1) so silence or
    perfect periodicity stay finite.
    """
    voiced_idx = np.flatnonzero(f0_track.voiced_mask)
    if len(voiced_idx) == 0:
        raise InsufficientVoicingError("no voiced frame for HNR")
    frames = audio.frame_signal_raw(clip, frame_ms, hop_ms)
    if frames.n_frames != len(f0_track.values):
        raise ShapeError("clip framing does not match the F0 track length")
    sr = frames.sample_rate_hz
    frame_len = frames.frame_len_samples

    values = []
    eps = 1e-6
    for t in voiced_idx:
        lag = int(round(sr / f0_track.values[t]))
        lag = min(max(lag, 1), frame_len - 1)
        x = frames.data[t]
        head, tail = x[: frame_len - lag], x[lag:]
        denom = np.sqrt(np.dot(head, head) * np.dot(tail, tail))
        r = np.dot(head, tail) / denom if denom > 0 else 0.0
        r = min(max(r, eps), 1.0 - eps)
        values.append(10.0 * np.log10(r / (1.0 - r)))
    return float(np.mean(values))


# ---------------------------------------------------------------------------
# Spectral descriptors
# ---------------------------------------------------------------------------

SPECTRAL_BANDS_HZ = {
    "band_0_250": (0.0, 250.0),
    "band_250_650": (250.0, 650.0),
    "band_650_1000": (650.0, 1000.0),
    "band_1000_4000": (1000.0, 4000.0),
}


def _band_mask(bin_hz, low, high):
    return (bin_hz >= low) & (bin_hz < high)


def spectral_descriptors(spec):
    """Standard frame-wise spectral descriptors from a power spectrogram.

    Returns a dict of LldTracks: centroid_hz, slope, flux, alpha_ratio,
    hammarberg_db and four fixed band energies.  All-zero frames yield 0 by
    convention.  alpha_ratio is the linear power ratio of 1-5 kHz over
    50 Hz-1 kHz; hammarberg_db is the dB ratio of the strongest bin below
    2 kHz to the strongest bin in 2-5 kHz.
    """
    power = spec.frames
    if power.shape[0] < 1:
        raise ShapeError("empty spectrogram")
    bin_hz = spec.bin_frequencies_hz()
    total = power.sum(axis=1)
    nonzero = total > 0

    centroid = np.zeros(len(total))
    centroid[nonzero] = (power[nonzero] * bin_hz).sum(axis=1) / total[nonzero]

    f_centered = bin_hz - bin_hz.mean()
    slope = (power * f_centered).sum(axis=1) / np.dot(f_centered, f_centered)

    norm = np.divide(power, total[:, None], out=np.zeros_like(power), where=nonzero[:, None])
    flux = np.zeros(len(total))
    flux[1:] = np.linalg.norm(np.diff(norm, axis=0), axis=1)

    def band_energy(low, high):
        return power[:, _band_mask(bin_hz, low, high)].sum(axis=1)

    alpha_num = band_energy(1000.0, 5000.0)
    alpha_den = band_energy(50.0, 1000.0)
    alpha = np.divide(alpha_num, alpha_den, out=np.zeros_like(alpha_num), where=alpha_den > 0)

    floor = audio.LOG_FLOOR
    low_max = power[:, _band_mask(bin_hz, 0.0, 2000.0)].max(axis=1)
    high_max = power[:, _band_mask(bin_hz, 2000.0, 5000.0)].max(axis=1)
    hammarberg = 10.0 * np.log10((low_max + floor) / (high_max + floor))

    all_true = np.ones(len(total), dtype=bool)
    tracks = {
        "centroid_hz": centroid,
        "slope": slope,
        "flux": flux,
        "alpha_ratio": alpha,
        "hammarberg_db": hammarberg,
    }
    for name, (low, high) in SPECTRAL_BANDS_HZ.items():
        tracks[name] = band_energy(low, high)
    return {name: LldTrack(values=v, voiced_mask=all_true) for name, v in tracks.items()}


# ---------------------------------------------------------------------------
# Functionals and the per-recording extractor
# ---------------------------------------------------------------------------


def apply_functionals(tracks, scalars=None, recording_ref=("", "", "")):
    """Collapse LLD tracks to one named FeatureVector.

    Per track: mean, population std, and the 20th/50th/80th percentiles
    (linear interpolation) over valid frames; a track with no valid frames
    contributes zeros.  Scalars (jitter, shimmer, HNR, voiced_fraction) are
    appended as-is; voiced_fraction doubles as the validity flag for the
    voicing-gated scalars.  Names follow "lld.functional" in sorted order so
    every recording in a cohort shares the same layout.
    """
    if not tracks:
        raise ShapeError("apply_functionals needs at least one track")
    names, values = [], []
    for lld_name in sorted(tracks):
        track = tracks[lld_name]
        valid = track.values[track.voiced_mask]
        if len(valid) == 0:
            stats = [0.0] * len(FUNCTIONAL_NAMES)
        else:
            stats = [
                float(valid.mean()),
                float(valid.std()),  # population std
                float(np.percentile(valid, 20)),
                float(np.percentile(valid, 50)),
                float(np.percentile(valid, 80)),
            ]
        for fn_name, stat in zip(FUNCTIONAL_NAMES, stats):
            names.append(f"{lld_name}.{fn_name}")
            values.append(stat)
    for key in sorted(scalars or {}):
        names.append(key)
        values.append(float(scalars[key]))
    return FeatureVector(
        values=np.nan_to_num(np.asarray(values), nan=0.0, posinf=0.0, neginf=0.0),
        names=tuple(names),
        recording_ref=tuple(recording_ref),
    )


def extract_features(clip, recording_ref, n_fft=audio.DEFAULTS["n_fft"]):
    """Full per-recording feature extraction.

    Resamples to the 22,050 Hz canonical rate when needed, computes the F0
    track, frame RMS, spectral descriptors, and the voice-quality scalars,
    then applies the functionals.  Deterministic: identical clips yield
    bit-identical vectors.
    """
    if clip.sample_rate_hz != audio.CANONICAL_RATE_HZ:
        clip = audio.resample_linear(clip, audio.CANONICAL_RATE_HZ)

    f0 = f0_autocorrelation(clip)
    raw = audio.frame_signal_raw(clip)
    rms = np.sqrt(np.mean(raw.data**2, axis=1))
    spec = audio.stft_power(audio.frame_signal(clip), n_fft=n_fft)

    tracks = {"f0": f0, "rms": LldTrack(values=rms, voiced_mask=np.ones(len(rms), bool))}
    tracks.update(spectral_descriptors(spec))

    voiced_fraction = float(f0.voiced_mask.mean())
    scalars = {"voiced_fraction": voiced_fraction}
    for name, fn, args in (
        ("jitter", jitter_local, (f0,)),
        ("shimmer", shimmer_local, (clip, f0)),
        ("hnr_db", hnr_db, (clip, f0)),
    ):
        try:
            scalars[name] = fn(*args)
        except InsufficientVoicingError:
            scalars[name] = 0.0  # voiced_fraction == 0 flags this case
    return apply_functionals(tracks, scalars, recording_ref)


# ---------------------------------------------------------------------------
# Feature CSV interop
# ---------------------------------------------------------------------------


def write_feature_csv(path, vectors):
    """Write vectors as `patient_id,task,condition,<feature...>` rows."""
    if not vectors:
        raise SchemaError("no feature vectors to write")
    names = vectors[0].names
    for vec in vectors:
        if vec.names != names:
            raise SchemaError("feature vectors disagree on feature names")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(CSV_KEY_COLUMNS) + list(names))
        for vec in vectors:
            writer.writerow(list(vec.recording_ref)
                            + [repr(float(v)) for v in vec.values])


def ingest_feature_csv(path, expect_names=None):
    """Read feature vectors from a CSV written by this package or externally.

    Header must start with patient_id,task,condition.  Non-numeric cells
    raise ParseError with the 1-based row number, except NaN/Inf sentinels,
    which are replaced by 0 and counted in a warning.  `expect_names` guards
    against inconsistent headers when ingesting several files.
    """
    with open(path, "r", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file") from None
        if tuple(h.strip() for h in header[:3]) != CSV_KEY_COLUMNS:
            raise SchemaError(
                f"{path}: header must start with {','.join(CSV_KEY_COLUMNS)}"
            )
        names = tuple(h.strip() for h in header[3:])
        if len(set(names)) != len(names) or not names:
            raise SchemaError(f"{path}: feature names missing or not unique")
        if expect_names is not None and names != tuple(expect_names):
            raise SchemaError(f"{path}: header does not match previously seen files")

        vectors = []
        n_sentinels = 0
        for row_num, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3 + len(names):
                raise ParseError(
                    f"{path}: row {row_num} has {len(row)} cells, expected {3 + len(names)}",
                    row=row_num,
                )
            patient_id, task, condition = (c.strip() for c in row[:3])
            condition = condition.lower()
            if condition not in ("wet", "dry"):
                raise ParseError(
                    f"{path}: row {row_num}: condition must be wet or dry", row=row_num
                )
            values = np.empty(len(names))
            for j, cell in enumerate(row[3:]):
                try:
                    value = float(cell)
                except ValueError:
                    raise ParseError(
                        f"{path}: row {row_num}: non-numeric cell {cell!r}", row=row_num
                    ) from None
                if not np.isfinite(value):
                    value = 0.0
                    n_sentinels += 1
                values[j] = value
            vectors.append(
                FeatureVector(values=values, names=names,
                              recording_ref=(patient_id, task.lower(), condition))
            )
    if n_sentinels:
        log.warning("%s: replaced %d NaN/Inf cells with 0", path, n_sentinels)
    return vectors
