import numpy as np
import pytest

from voicepair.audio import CANONICAL_RATE_HZ, AudioClip
from voicepair.cohort import cohort_from_vectors
from voicepair.features import FeatureVector


def sine_clip(freq_hz, duration_s=0.5, sample_rate_hz=CANONICAL_RATE_HZ, amp=0.5):
    t = np.arange(int(duration_s * sample_rate_hz)) / sample_rate_hz
    return AudioClip(samples=amp * np.sin(2 * np.pi * freq_hz * t),
                     sample_rate_hz=sample_rate_hz)


def noise_clip(duration_s=0.5, sample_rate_hz=CANONICAL_RATE_HZ, amp=0.1, seed=0):
    rng = np.random.default_rng(seed)
    n = int(duration_s * sample_rate_hz)
    return AudioClip(samples=amp * rng.standard_normal(n),
                     sample_rate_hz=sample_rate_hz)


def paired_vectors(values_by_pid, names=("a", "b"), task="pg"):
    """FeatureVector pairs from {pid: (wet_values, dry_values)}."""
    vectors = []
    for pid, (wet, dry) in values_by_pid.items():
        vectors.append(FeatureVector(values=np.asarray(wet, dtype=float),
                                     names=tuple(names),
                                     recording_ref=(pid, task, "wet")))
        vectors.append(FeatureVector(values=np.asarray(dry, dtype=float),
                                     names=tuple(names),
                                     recording_ref=(pid, task, "dry")))
    return vectors


def paired_cohort(values_by_pid, names=("a", "b"), task="pg", sexes=None):
    vectors = paired_vectors(values_by_pid, names=names, task=task)
    if sexes is None:
        sexes = {pid: ("female" if i % 2 == 0 else "male")
                 for i, pid in enumerate(sorted(values_by_pid))}
    return cohort_from_vectors(vectors, sexes)


@pytest.fixture
def rng():
    return np.random.default_rng(0)
