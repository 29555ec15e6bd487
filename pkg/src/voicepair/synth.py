"""Synthetic paired cohorts with a controllable speaker confound.

Feature mode draws per-patient offset vectors (the confound) plus a sparse
wet-state effect, cheap enough for CI.  Signal mode renders 2 s harmonic
clips per patient and condition, where the wet state multiplies harmonic
power inside a planted frequency band; this exercises the full audio and
AFF path.  Ground truth is kept alongside so tests can check what must be
recovered or cancelled.
"""

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import audio
from .cohort import MANIFEST_COLUMNS, TASKS, cohort_from_vectors
from .errors import ConfigError, RefusalError
from .features import FeatureVector, write_feature_csv

MODE_FEATURE = "feature"
MODE_SIGNAL = "signal"

F0_RANGE_HZ = (90.0, 230.0)
MAX_HARMONIC_HZ = 4000.0
_MAX_PHASES = 64  # fixed draw count keeps the rng stream independent of F0


@dataclass(frozen=True)
class SynthConfig:
    mode: str = MODE_FEATURE
    n_patients: int = 60
    female_ratio: float = 0.5
    n_features: int = 40
    effect_fraction: float = 0.2
    effect_scale: float = 1.0  # delta: wet-state shift
    confound_scale: float = 0.0  # sigma_s: per-speaker offset std
    noise_scale: float = 0.3  # sigma_n
    planted_band_hz: tuple = (700.0, 900.0)
    tasks: tuple = ("pg",)
    duration_s: float = 2.0
    sample_rate_hz: int = audio.CANONICAL_RATE_HZ
    seed: int = 0

    def __post_init__(self):
        if self.mode not in (MODE_FEATURE, MODE_SIGNAL):
            raise ConfigError(f"unknown synth mode {self.mode!r}")
        if self.n_patients < 2:
            raise ConfigError("n_patients must be >= 2")
        if min(self.effect_scale, self.confound_scale, self.noise_scale) < 0:
            raise ConfigError("scales must be >= 0")
        if not 0.0 <= self.female_ratio <= 1.0:
            raise ConfigError("female_ratio must be in [0, 1]")
        if not 0.0 < self.effect_fraction <= 1.0:
            raise ConfigError("effect_fraction must be in (0, 1]")
        low, high = self.planted_band_hz
        if not 0.0 <= low < high:
            raise ConfigError("planted band must satisfy 0 <= low < high")
        if high > self.sample_rate_hz / 2:
            raise ConfigError(
                f"planted band {self.planted_band_hz} exceeds Nyquist "
                f"{self.sample_rate_hz / 2}"
            )
        bad = set(self.tasks) - set(TASKS)
        if bad or not self.tasks:
            raise ConfigError(f"tasks must be a non-empty subset of {TASKS}")
        object.__setattr__(self, "tasks", tuple(self.tasks))
        object.__setattr__(self, "planted_band_hz",
                           (float(low), float(high)))

    def to_dict(self):
        return {
            "mode": self.mode, "n_patients": self.n_patients,
            "female_ratio": self.female_ratio, "n_features": self.n_features,
            "effect_fraction": self.effect_fraction,
            "effect_scale": self.effect_scale,
            "confound_scale": self.confound_scale,
            "noise_scale": self.noise_scale,
            "planted_band_hz": list(self.planted_band_hz),
            "tasks": list(self.tasks), "duration_s": self.duration_s,
            "sample_rate_hz": self.sample_rate_hz, "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d):
        kwargs = dict(d)
        if "planted_band_hz" in kwargs:
            kwargs["planted_band_hz"] = tuple(kwargs["planted_band_hz"])
        if "tasks" in kwargs:
            kwargs["tasks"] = tuple(kwargs["tasks"])
        return cls(**kwargs)


@dataclass(frozen=True)
class GroundTruth:
    """What the generator planted, for oracle checks."""

    mode: str
    planted_band_hz: tuple
    speaker_offsets: dict  # pid -> offset vector (feature) or voice params (signal)
    effect: object = None  # per-feature wet shift (feature mode)

    def to_dict(self):
        offsets = {
            pid: (v.tolist() if isinstance(v, np.ndarray) else v)
            for pid, v in self.speaker_offsets.items()
        }
        return {
            "mode": self.mode,
            "planted_band_hz": list(self.planted_band_hz),
            "speaker_offsets": offsets,
            "effect": self.effect.tolist() if self.effect is not None else None,
        }


def _patient_ids(n):
    return [f"p{i:03d}" for i in range(n)]


def _sex_of(pid_index, cfg):
    return "female" if pid_index < round(cfg.female_ratio * cfg.n_patients) else "male"


# ---------------------------------------------------------------------------
# Feature mode
# ---------------------------------------------------------------------------


def gen_feature_cohort(cfg):
    """Paired feature vectors: dry = base + speaker + noise, wet adds effect.

    The speaker offset is drawn once per patient and shared by both
    conditions and all tasks, which is exactly what pair-wise differencing
    must cancel.  The effect shifts a fixed random subset of features by
    effect_scale.
    """
    if cfg.mode != MODE_FEATURE:
        raise ConfigError("gen_feature_cohort needs mode='feature'")
    rng = np.random.default_rng(cfg.seed)
    pids = _patient_ids(cfg.n_patients)
    names = tuple(f"f{j:03d}" for j in range(cfg.n_features))

    base = rng.normal(0.0, 1.0, cfg.n_features)
    n_effect = max(1, int(round(cfg.effect_fraction * cfg.n_features)))
    support = np.sort(rng.choice(cfg.n_features, size=n_effect, replace=False))
    effect = np.zeros(cfg.n_features)
    effect[support] = cfg.effect_scale

    offsets = {
        pid: rng.normal(0.0, cfg.confound_scale, cfg.n_features) for pid in pids
    }

    vectors = []
    sex_by_pid = {}
    for task in cfg.tasks:
        for i, pid in enumerate(pids):
            sex_by_pid[pid] = _sex_of(i, cfg)
            dry = base + offsets[pid] + rng.normal(0.0, cfg.noise_scale, cfg.n_features)
            wet = dry + effect + rng.normal(0.0, cfg.noise_scale, cfg.n_features)
            vectors.append(FeatureVector(values=wet, names=names,
                                         recording_ref=(pid, task, "wet")))
            vectors.append(FeatureVector(values=dry, names=names,
                                         recording_ref=(pid, task, "dry")))
    truth = GroundTruth(mode=MODE_FEATURE, planted_band_hz=cfg.planted_band_hz,
                        speaker_offsets=offsets, effect=effect)
    return cohort_from_vectors(vectors, sex_by_pid), truth


# ---------------------------------------------------------------------------
# Signal mode
# ---------------------------------------------------------------------------


def harmonic_clip(f0_hz, duration_s=2.0, sample_rate_hz=audio.CANONICAL_RATE_HZ,
                  band_hz=None, band_power_multiplier=1.0, formants=(),
                  phases=None, noise_scale=0.0, rng=None):
    """Harmonic source with 1/h tilt, resonant gains, and a band boost.

    Harmonics inside band_hz get their power multiplied, i.e. amplitude is
    scaled by sqrt(band_power_multiplier).  formants is a sequence of
    (center_hz, bandwidth_hz, gain) adding Gaussian-shaped resonance bumps.
    """
    sr = float(sample_rate_hz)
    if not 0 < f0_hz < sr / 2:
        raise ConfigError(f"f0 {f0_hz} outside (0, Nyquist)")
    n = int(round(duration_s * sr))
    t = np.arange(n) / sr
    x = np.zeros(n)
    n_harmonics = int(MAX_HARMONIC_HZ // f0_hz)
    for h in range(1, n_harmonics + 1):
        f = h * f0_hz
        amp = 1.0 / h
        for center, bandwidth, gain in formants:
            amp *= 1.0 + gain * np.exp(-0.5 * ((f - center) / bandwidth) ** 2)
        if band_hz is not None and band_hz[0] <= f < band_hz[1]:
            amp *= np.sqrt(band_power_multiplier)
        phase = 0.0 if phases is None else phases[h - 1]
        x += amp * np.sin(2.0 * np.pi * f * t + phase)
    if noise_scale > 0:
        if rng is None:
            rng = np.random.default_rng(0)
        x = x + rng.normal(0.0, noise_scale, n)
    return audio.AudioClip(samples=x, sample_rate_hz=sr)


def gen_signal_cohort(cfg):
    """Per patient and condition: a 2 s harmonic clip.

    Speaker identity = F0 drawn from 90-230 Hz plus formant-like resonances
    whose gains scale with confound_scale; both are constant across that
    patient's conditions and tasks.  The wet condition multiplies planted
    band power by (1 + effect_scale).  Returns (clips, manifest_rows,
    truth); clips keyed by (patient_id, task, condition).
    """
    if cfg.mode != MODE_SIGNAL:
        raise ConfigError("gen_signal_cohort needs mode='signal'")
    rng = np.random.default_rng(cfg.seed)
    pids = _patient_ids(cfg.n_patients)

    voices = {}
    for pid in pids:
        f0 = float(rng.uniform(*F0_RANGE_HZ))
        formants = [
            [float(rng.uniform(300.0, 900.0)), float(rng.uniform(60.0, 120.0)),
             float(cfg.confound_scale * rng.uniform(0.5, 1.5))],
            [float(rng.uniform(1200.0, 2500.0)), float(rng.uniform(80.0, 160.0)),
             float(cfg.confound_scale * rng.uniform(0.5, 1.5))],
        ]
        phases = rng.uniform(0.0, 2.0 * np.pi, _MAX_PHASES)
        voices[pid] = {"f0_hz": f0, "formants": formants, "phases": phases}

    clips = {}
    manifest_rows = []
    for task in cfg.tasks:
        for i, pid in enumerate(pids):
            voice = voices[pid]
            pair = {}
            for condition in ("wet", "dry"):
                mult = 1.0 + cfg.effect_scale if condition == "wet" else 1.0
                pair[condition] = harmonic_clip(
                    voice["f0_hz"], duration_s=cfg.duration_s,
                    sample_rate_hz=cfg.sample_rate_hz,
                    band_hz=cfg.planted_band_hz, band_power_multiplier=mult,
                    formants=voice["formants"], phases=voice["phases"],
                    noise_scale=cfg.noise_scale, rng=rng,
                )
            # one scale per patient pair keeps the wet/dry energy ratio intact
            peak = max(np.abs(pair["wet"].samples).max(),
                       np.abs(pair["dry"].samples).max())
            scale = 0.95 / peak if peak > 0.95 else 1.0
            for condition in ("wet", "dry"):
                clip = pair[condition]
                clips[(pid, task, condition)] = audio.AudioClip(
                    samples=clip.samples * scale, sample_rate_hz=clip.sample_rate_hz
                )
                manifest_rows.append({
                    "patient_id": pid, "sex": _sex_of(i, cfg), "task": task,
                    "condition": condition,
                    "source": f"wav/{pid}_{task}_{condition}.wav",
                })
    truth = GroundTruth(
        mode=MODE_SIGNAL, planted_band_hz=cfg.planted_band_hz,
        speaker_offsets={
            pid: {"f0_hz": v["f0_hz"], "formants": v["formants"]}
            for pid, v in voices.items()
        },
    )
    return clips, manifest_rows, truth


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------


def _write_manifest(path, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(MANIFEST_COLUMNS))
        writer.writeheader()
        writer.writerows(rows)


def write_cohort(cfg, out_dir, force=False):
    """Materialize a synthetic cohort: manifest, data, ground-truth sidecar.

    Refuses to write into a non-empty directory unless force is set.
    Byte-identical output for identical configs.
    """
    out = Path(out_dir)
    if out.exists() and any(out.iterdir()) and not force:
        raise RefusalError(f"{out} is not empty; pass force to overwrite")
    out.mkdir(parents=True, exist_ok=True)

    if cfg.mode == MODE_FEATURE:
        cohort, truth = gen_feature_cohort(cfg)
        vectors = []
        for patient in cohort:
            for key in sorted(patient.recordings):
                vectors.append(patient.recordings[key].features)
        write_feature_csv(out / "features.csv", vectors)
        rows = [
            {"patient_id": p.patient_id, "sex": p.sex, "task": task,
             "condition": condition, "source": "features.csv"}
            for p in cohort for task, condition in sorted(p.recordings)
        ]
        _write_manifest(out / "manifest.csv", rows)
    else:
        clips, rows, truth = gen_signal_cohort(cfg)
        (out / "wav").mkdir(exist_ok=True)
        for (pid, task, condition), clip in sorted(clips.items()):
            audio.write_wav(out / "wav" / f"{pid}_{task}_{condition}.wav", clip)
        _write_manifest(out / "manifest.csv", rows)

    sidecar = {"config": cfg.to_dict(), "truth": truth.to_dict()}
    with open(out / "truth.json", "w", encoding="utf-8") as fh:
        json.dump(sidecar, fh, sort_keys=True, indent=2)
        fh.write("\n")
    return {"manifest": out / "manifest.csv", "truth": out / "truth.json"}
