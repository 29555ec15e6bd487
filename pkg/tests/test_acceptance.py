"""Product-level acceptance checks.

Each test prints one PASS/FAIL verdict line; run with

    pytest tests/test_acceptance.py -v -s

to see them.  Thresholds are the shipped contract: do not loosen them to
make a failing build green.
"""

import math
from time import perf_counter

import numpy as np
import pytest

from voicepair import audio, features, stats
from voicepair.audio import CANONICAL_RATE_HZ, AudioClip
from voicepair.cohort import (
    TASKS,
    build_pairwise,
    cohort_from_vectors,
    split_by_patient,
)
from voicepair.estimators import AffNetClassifier, DenseNetClassifier
from voicepair.experiment import (
    ExperimentConfig,
    compute_selection,
    run_experiment,
    write_report,
)
from voicepair.features import FeatureVector
from voicepair.nn import (
    AffNet,
    DenseNet3,
    gradient_check,
    load_model,
    save_model,
    trimmed_weights,
)
from voicepair.synth import SynthConfig, gen_feature_cohort, gen_signal_cohort


def verdict(ok, label):
    print(f"\n[{'PASS' if ok else 'FAIL'}] {label}")
    assert ok, label


# ---------------------------------------------------------------------------
# shared cohorts
# ---------------------------------------------------------------------------


@pytest.fixture(scope="module")
def confounded_cohort():
    # speaker offsets 3x the wet effect: the regime where per-patient
    # differencing should matter most
    cfg = SynthConfig(mode="feature", n_patients=60, effect_scale=1.0,
                      confound_scale=3.0, noise_scale=0.3, tasks=TASKS, seed=7)
    return gen_feature_cohort(cfg)[0]


@pytest.fixture(scope="module")
def confounded_run(confounded_cohort):
    cfg = ExperimentConfig(tasks=("pg",), seeds=(0, 1, 2, 3, 4))
    start = perf_counter()
    report = run_experiment(confounded_cohort, cfg)
    return report, perf_counter() - start


@pytest.fixture(scope="module")
def signal_data():
    cfg = SynthConfig(mode="signal", n_patients=32, effect_scale=3.0,
                      confound_scale=0.3, noise_scale=0.005, tasks=("pg",),
                      seed=0)
    clips, _, truth = gen_signal_cohort(cfg)
    X, y = [], []
    for (_, _, condition), clip in sorted(clips.items()):
        X.append(audio.stft_power(audio.frame_signal(clip), n_fft=1024).frames)
        y.append(1 if condition == "wet" else 0)
    return X, np.array(y), truth.planted_band_hz


# ---------------------------------------------------------------------------
# 1-2: classification schemes
# ---------------------------------------------------------------------------


def test_01_pairwise_beats_patientwise_under_confound(confounded_run):
    report, elapsed = confounded_run
    agg = report["aggregates"]["mean_f1_percent"]
    pair = agg["pairwise"] / 100.0
    patient = agg["patientwise"] / 100.0
    gap = pair - patient
    ok = report["failures"] == [] and gap >= 0.10 and elapsed < 120.0
    verdict(ok, f"1. scheme gap under speaker confound: pairwise F1 {pair:.3f} "
                f"vs patientwise {patient:.3f}, gap {gap:.3f} (need >= 0.10), "
                f"{elapsed:.1f}s (need < 120s)")


def test_02_confound_free_ceiling():
    # effect 5x the noise, no speaker offsets: both schemes must saturate
    cfg = SynthConfig(mode="feature", n_patients=60, effect_scale=1.5,
                      confound_scale=0.0, noise_scale=0.3, tasks=("pg",),
                      seed=7)
    cohort, _ = gen_feature_cohort(cfg)
    report = run_experiment(cohort,
                            ExperimentConfig(tasks=("pg",), seeds=(0, 1, 2, 3, 4)))
    agg = report["aggregates"]["mean_f1_percent"]
    pair = agg["pairwise"] / 100.0
    patient = agg["patientwise"] / 100.0
    ok = report["failures"] == [] and pair >= 0.95 and patient >= 0.95
    verdict(ok, f"2. confound-free ceiling: pairwise F1 {pair:.3f}, "
                f"patientwise {patient:.3f} (both need >= 0.95)")


# ---------------------------------------------------------------------------
# 3: feature selection
# ---------------------------------------------------------------------------


def test_03_paired_selection_never_trails_independent(confounded_cohort):
    cells = []
    for task in confounded_cohort.tasks():
        for group in ("female", "male", "all"):
            n_paired = int(compute_selection(
                confounded_cohort, task, group, stats.KIND_PAIRED
            ).selected.sum())
            n_indep = int(compute_selection(
                confounded_cohort, task, group, stats.KIND_INDEPENDENT
            ).selected.sum())
            cells.append((task, group, n_paired, n_indep))
    bad = [c for c in cells if c[2] < c[3]]
    verdict(not bad, f"3. paired t-test selects >= independent in all "
                     f"{len(cells)} task/sex cells (violations: {bad})")


# ---------------------------------------------------------------------------
# 4: statistical kernel
# ---------------------------------------------------------------------------


def _t_density(x, dof):
    c = math.gamma((dof + 1) / 2.0) / (math.sqrt(dof * math.pi)
                                       * math.gamma(dof / 2.0))
    return c * (1.0 + x**2 / dof) ** (-(dof + 1) / 2.0)


def _p_by_quadrature(t, dof, n_grid=400001):
    if t == 0.0:
        return 1.0
    x = np.linspace(-abs(t), abs(t), n_grid)
    return 1.0 - float(np.trapezoid(_t_density(x, dof), x))


def test_04_t_distribution_tail_accuracy():
    worst = 0.0
    for dof in (1, 2, 5, 10, 30):
        for t in np.linspace(-5.0, 5.0, 41):
            err = abs(stats.student_t_p(float(t), dof) - _p_by_quadrature(float(t), dof))
            worst = max(worst, err)
    cauchy_err = abs(stats.student_t_p(1.0, 1.0) - 0.5)
    ok = worst <= 1e-6 and cauchy_err <= 1e-9
    verdict(ok, f"4. two-sided p vs quadrature: worst |err| {worst:.2e} "
                f"(need <= 1e-6); p(t=1, dof=1) off 0.5 by {cauchy_err:.2e} "
                f"(need <= 1e-9)")


# ---------------------------------------------------------------------------
# 5: gradient correctness
# ---------------------------------------------------------------------------


def test_05_gradients_match_finite_differences():
    worst = {"dense": 0.0, "aff": 0.0, "attention": 0.0}
    for seed in (0, 1, 2):
        rng = np.random.default_rng(seed)
        n_in = int(rng.integers(4, 9))
        net = DenseNet3(n_in, hidden_dims=(int(rng.integers(5, 9)),
                                           int(rng.integers(4, 7))), seed=seed)
        X = rng.normal(0.0, 1.0, (6, n_in))
        y = rng.integers(0, 2, 6)
        _, grads = net.loss_and_grads(X, y)
        worst["dense"] = max(worst["dense"], gradient_check(
            lambda: net.loss(X, y), net.params, grads,
            rng=np.random.default_rng(seed), n_samples=30))

        d_freq = int(rng.integers(10, 18))
        specs = [rng.random((int(rng.integers(4, 8)), d_freq)) + 0.05
                 for _ in range(3)]
        labels = np.array([0, 1, 1])
        for variant in ("mean", "attention"):
            aff = AffNet(d_freq=d_freq, d_new=5, sample_rate_hz=22050,
                         encoder_variant=variant, d_ff=8, head_hidden=(8, 4),
                         seed=seed)
            _, grads = aff.loss_and_grads(specs, labels)
            err = gradient_check(
                lambda: aff.loss_and_grads(specs, labels)[0], aff.params,
                grads, rng=np.random.default_rng(seed), n_samples=25)
            key = "aff" if variant == "mean" else "attention"
            worst[key] = max(worst[key], err)
    ok = (worst["dense"] <= 1e-5 and worst["aff"] <= 1e-5
          and worst["attention"] <= 1e-4)
    verdict(ok, f"5. finite-difference gradient errors over 3 seeds: "
                f"dense {worst['dense']:.2e}, aff {worst['aff']:.2e} "
                f"(need <= 1e-5), attention {worst['attention']:.2e} "
                f"(need <= 1e-4)")


# ---------------------------------------------------------------------------
# 6: trimming contract
# ---------------------------------------------------------------------------


def test_06_trim_window_and_idempotence():
    violations = []
    bitexact = True
    for seed in (0, 1, 2):
        rng = np.random.default_rng(seed)
        w = rng.normal(0.0, 1.0, (int(rng.integers(20, 60)),
                                  int(rng.integers(3, 9))))
        halfwidth = int(rng.integers(1, 11))
        out = trimmed_weights(w, halfwidth)
        for j in range(w.shape[1]):
            peak = int(np.argmax(w[:, j]))
            support = np.flatnonzero(out[:, j])
            if support.size and (support.min() < peak - halfwidth
                                 or support.max() > peak + halfwidth):
                violations.append((seed, j))
        again = trimmed_weights(out, halfwidth)
        bitexact = bitexact and out.tobytes() == again.tobytes()
    ok = not violations and bitexact
    verdict(ok, f"6. trim keeps support within +/-W of each column peak "
                f"(violations: {violations}) and re-trimming is bit-exact: "
                f"{bitexact}")


# ---------------------------------------------------------------------------
# 7: planted-band recovery
# ---------------------------------------------------------------------------


def test_07_trained_filters_find_planted_band(signal_data):
    X, y, (lo, hi) = signal_data
    d_freq = X[0].shape[1]
    bin_hz = np.arange(d_freq) * CANONICAL_RATE_HZ / 1024
    in_band = (bin_hz >= lo) & (bin_hz < hi)
    margins = []
    for seed in (0, 1, 2):
        clf = AffNetClassifier(d_new=26, lr=2e-2, epochs=60, seed=seed)
        clf.fit(X, y, sample_rate_hz=CANONICAL_RATE_HZ)
        curve = clf.importance_curve()
        band_mass = float(curve[in_band].sum())
        rival = 0.0
        for start in np.arange(0.0, CANONICAL_RATE_HZ / 2 - 200.0, 200.0):
            if start + 200.0 <= lo or start >= hi:
                window = (bin_hz >= start) & (bin_hz < start + 200.0)
                rival = max(rival, float(curve[window].sum()))
        margins.append(band_mass / max(rival, 1e-12))
    ok = all(m > 1.0 for m in margins)
    verdict(ok, f"7. importance mass in the planted {lo:.0f}-{hi:.0f} Hz band "
                f"exceeds every disjoint 200 Hz window on 3 seeds "
                f"(band/rival ratios: {[f'{m:.2f}' for m in margins]})")


# ---------------------------------------------------------------------------
# 8: F0 extraction
# ---------------------------------------------------------------------------


def test_08_f0_recovered_from_harmonic_source():
    t = np.arange(CANONICAL_RATE_HZ) / CANONICAL_RATE_HZ
    samples = sum((0.5 / k) * np.sin(2 * np.pi * 200.0 * k * t)
                  for k in (1, 2, 3))
    track = features.f0_autocorrelation(
        AudioClip(samples=samples, sample_rate_hz=CANONICAL_RATE_HZ))
    voiced_fraction = float(track.voiced_mask.mean())
    mean_f0 = float(track.values[track.voiced_mask].mean())
    ok = voiced_fraction >= 0.9 and abs(mean_f0 - 200.0) <= 2.0
    verdict(ok, f"8. 200 Hz harmonic source: mean F0 {mean_f0:.2f} Hz "
                f"(need within +/-2), voiced fraction {voiced_fraction:.2f} "
                f"(need >= 0.9)")


# ---------------------------------------------------------------------------
# 9: speaker decoupling
# ---------------------------------------------------------------------------


def test_09_pair_vectors_unchanged_by_per_patient_offsets():
    rng = np.random.default_rng(99)
    names = tuple(f"f{j:02d}" for j in range(12))
    pids = [f"p{i:02d}" for i in range(16)]
    sexes = {pid: ("female" if i % 2 else "male") for i, pid in enumerate(pids)}

    def dyadic(n):
        # values on a 2^-10 grid stay exactly representable through the
        # offset addition, so cancellation can be checked bit-for-bit
        return rng.integers(-2**20, 2**20, n) / 2**10

    def build(vals):
        vectors = []
        for pid, (wet, dry) in vals.items():
            vectors.append(FeatureVector(values=wet, names=names,
                                         recording_ref=(pid, "pg", "wet")))
            vectors.append(FeatureVector(values=dry, names=names,
                                         recording_ref=(pid, "pg", "dry")))
        return cohort_from_vectors(vectors, sexes)

    base = {pid: (dyadic(12), dyadic(12)) for pid in pids}
    split = split_by_patient(build(base), test_ratio=0.3, seed=0)
    ref_train, ref_test, _ = build_pairwise(build(base), split, names, seed=5)
    reference = ref_train + ref_test

    mismatches = 0
    for _ in range(1000):
        offsets = {pid: dyadic(12) for pid in pids}
        shifted = {pid: (base[pid][0] + offsets[pid],
                         base[pid][1] + offsets[pid]) for pid in pids}
        train, test, _ = build_pairwise(build(shifted), split, names, seed=5)
        for ref, got in zip(reference, train + test):
            if (ref.x.tobytes() != got.x.tobytes() or ref.label != got.label
                    or ref.patient_id != got.patient_id):
                mismatches += 1
    verdict(mismatches == 0,
            f"9. adding per-patient offsets to both conditions left every "
            f"pair vector bit-identical over 1000 randomized trials "
            f"(mismatches: {mismatches})")


# ---------------------------------------------------------------------------
# 10: determinism and round-trip
# ---------------------------------------------------------------------------


def test_10_determinism_and_model_roundtrip(confounded_cohort, tmp_path):
    cfg = ExperimentConfig(tasks=("pg",), seeds=(0, 1), epochs=20)
    paths_a = write_report(run_experiment(confounded_cohort, cfg), tmp_path / "a")
    paths_b = write_report(run_experiment(confounded_cohort, cfg), tmp_path / "b")
    reports_identical = (paths_a["json"].read_bytes()
                         == paths_b["json"].read_bytes())

    rng = np.random.default_rng(0)
    X = rng.normal(0.0, 1.0, (24, 6))
    y = (X[:, 0] > 0).astype(int)
    clf = DenseNetClassifier(hidden_dims=(8, 4), epochs=15, seed=1).fit(X, y)
    save_model(clf.net_, tmp_path / "dense.json")
    dense_same = np.array_equal(load_model(tmp_path / "dense.json").predict_proba(X),
                                clf.net_.predict_proba(X))

    specs = [rng.random((5, 10)) + 0.05 for _ in range(6)]
    labels = np.array([0, 1, 0, 1, 0, 1])
    aff = AffNetClassifier(d_new=4, d_ff=8, head_hidden=(8, 4), epochs=3,
                           seed=2).fit(specs, labels)
    save_model(aff.net_, tmp_path / "aff.json")
    aff_same = np.array_equal(load_model(tmp_path / "aff.json").predict_proba(specs),
                              aff.net_.predict_proba(specs))

    ok = reports_identical and dense_same and aff_same
    verdict(ok, f"10. same seeds give byte-identical reports "
                f"({reports_identical}) and saved models reproduce "
                f"predictions bit-exactly (dense {dense_same}, aff {aff_same})")
