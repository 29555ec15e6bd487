"""Cohort data model, manifest ingestion, and dataset construction.

Two classification schemes are built here.  Patient-wise treats every
recording as a standalone sample (label 1 = wet).  Pair-wise classifies the
signed difference of one patient's wet and dry vectors: with a coin-flip
label, x = wet - dry for label 1 and x = dry - wet for label 0, so any
constant per-speaker offset cancels exactly and the classifier cannot key
on speaker identity.  Splits are always by patient id so test speakers are
unseen.
"""

import csv
import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DuplicateError,
    InsufficientDataError,
    SchemaError,
    ShapeError,
)

log = logging.getLogger(__name__)

TASKS = ("pg", "mm", "mlh", "c")
CONDITIONS = ("wet", "dry")
SEXES = ("female", "male")
GROUPS = ("female", "male", "all")

MANIFEST_COLUMNS = ("patient_id", "sex", "task", "condition", "source")

_SEX_TOKENS = {"m": "male", "male": "male", "f": "female", "female": "female"}


@dataclass(frozen=True)
class Recording:
    """One manifest row, optionally with its extracted feature vector."""

    patient_id: str
    sex: str
    task: str
    condition: str
    source: str
    features: object = None  # FeatureVector once attached


@dataclass(frozen=True)
class PatientRecord:
    patient_id: str
    sex: str
    recordings: dict = field(default_factory=dict)  # (task, condition) -> Recording

    def get(self, task, condition):
        return self.recordings.get((task, condition))

    def has_pair(self, task):
        """Both conditions present for the task (features not required)."""
        return (task, "wet") in self.recordings and (task, "dry") in self.recordings

    def has_feature_pair(self, task):
        wet = self.get(task, "wet")
        dry = self.get(task, "dry")
        return wet is not None and dry is not None and \
            wet.features is not None and dry.features is not None

    def tasks(self):
        return tuple(sorted({task for task, _ in self.recordings}))


@dataclass(frozen=True)
class Cohort:
    """Immutable collection of patients, ordered by patient_id."""

    patients: tuple

    def __post_init__(self):
        ids = [p.patient_id for p in self.patients]
        if len(set(ids)) != len(ids):
            raise DuplicateError("patient_id values must be unique in a cohort")
        object.__setattr__(
            self, "patients",
            tuple(sorted(self.patients, key=lambda p: p.patient_id)),
        )

    def __len__(self):
        return len(self.patients)

    def __iter__(self):
        return iter(self.patients)

    def patient_ids(self):
        return tuple(p.patient_id for p in self.patients)

    def by_id(self, patient_id):
        for p in self.patients:
            if p.patient_id == patient_id:
                return p
        raise KeyError(patient_id)

    def tasks(self):
        return tuple(sorted({t for p in self.patients for t in p.tasks()}))

    def incomplete(self, task):
        """Patients lacking one condition for the task (patient-wise only)."""
        return tuple(
            p.patient_id for p in self.patients
            if not p.has_pair(task) and any(t == task for t, _ in p.recordings)
        )


@dataclass(frozen=True)
class PairSample:
    """Signed wet/dry difference vector with its coin-flip label."""

    x: np.ndarray
    label: int
    patient_id: str

    def __post_init__(self):
        if self.label not in (0, 1):
            raise ValueError("PairSample label must be 0 or 1")
        object.__setattr__(self, "x", np.asarray(self.x, dtype=np.float64))


@dataclass(frozen=True)
class SplitPlan:
    train_ids: tuple
    test_ids: tuple
    seed: int
    ratio: float

    def __post_init__(self):
        if set(self.train_ids) & set(self.test_ids):
            raise ValueError("split sides must be disjoint")

    def to_dict(self):
        return {
            "train_ids": list(self.train_ids),
            "test_ids": list(self.test_ids),
            "seed": self.seed,
            "ratio": self.ratio,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(train_ids=tuple(d["train_ids"]), test_ids=tuple(d["test_ids"]),
                   seed=int(d["seed"]), ratio=float(d["ratio"]))


@dataclass(frozen=True)
class LabeledSet:
    """Design matrix plus labels for one side of a split."""

    X: np.ndarray
    y: np.ndarray
    feature_names: tuple
    patient_ids: tuple


# ---------------------------------------------------------------------------
# Manifest ingestion
# ---------------------------------------------------------------------------


def load_manifest(path):
    """Read a `patient_id,sex,task,condition,source` CSV into a Cohort.

    Tokens are case-insensitive; tasks must be one of pg, mm, mlh, c.
    Patients with only one condition for a task are retained (they remain
    usable patient-wise) and reported by Cohort.incomplete().
    """
    rows = []
    with open(path, "r", newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise SchemaError(f"{path}: empty manifest")
        missing = set(MANIFEST_COLUMNS) - {f.strip() for f in reader.fieldnames}
        if missing:
            raise SchemaError(f"{path}: manifest missing columns {sorted(missing)}")
        for raw in reader:
            rows.append({k.strip(): (v or "").strip() for k, v in raw.items()})

    seen = {}
    sex_by_pid = {}
    for row in rows:
        pid = row["patient_id"]
        if not pid:
            raise SchemaError(f"{path}: empty patient_id")
        sex_token = row["sex"].lower()
        if sex_token not in _SEX_TOKENS:
            raise SchemaError(f"{path}: unknown sex token {row['sex']!r}")
        sex = _SEX_TOKENS[sex_token]
        if sex_by_pid.setdefault(pid, sex) != sex:
            raise SchemaError(f"{path}: conflicting sex for patient {pid}")
        task = row["task"].lower()
        if task not in TASKS:
            raise SchemaError(f"{path}: unknown task token {row['task']!r}")
        condition = row["condition"].lower()
        if condition not in CONDITIONS:
            raise SchemaError(f"{path}: unknown condition token {row['condition']!r}")
        key = (pid, task, condition)
        if key in seen:
            raise DuplicateError(f"{path}: duplicate entry for {key}")
        seen[key] = Recording(patient_id=pid, sex=sex, task=task,
                              condition=condition, source=row["source"])

    patients = {}
    for (pid, task, condition), rec in seen.items():
        patients.setdefault(pid, {})[(task, condition)] = rec
    cohort = Cohort(patients=tuple(
        PatientRecord(patient_id=pid, sex=sex_by_pid[pid], recordings=recs)
        for pid, recs in patients.items()
    ))
    for task in cohort.tasks():
        incomplete = cohort.incomplete(task)
        if incomplete:
            log.info("task %s: %d patients lack one condition (pair-wise ineligible)",
                     task, len(incomplete))
    return cohort


def attach_features(cohort, vectors):
    """Bind FeatureVectors to manifest rows by (patient_id, task, condition).

    Returns a new Cohort; rows without a matching vector stay unbound,
    vectors without a manifest row are reported and dropped.
    """
    names = vectors[0].names if vectors else ()
    by_ref = {}
    for vec in vectors:
        if vec.names != names:
            raise SchemaError("feature vectors disagree on feature names")
        if vec.recording_ref in by_ref:
            raise DuplicateError(f"duplicate feature vector for {vec.recording_ref}")
        by_ref[vec.recording_ref] = vec

    matched = 0
    patients = []
    for patient in cohort:
        recs = {}
        for key, rec in patient.recordings.items():
            vec = by_ref.pop((rec.patient_id, rec.task, rec.condition), None)
            if vec is not None:
                rec = Recording(patient_id=rec.patient_id, sex=rec.sex, task=rec.task,
                                condition=rec.condition, source=rec.source, features=vec)
                matched += 1
            recs[key] = rec
        patients.append(PatientRecord(patient_id=patient.patient_id,
                                      sex=patient.sex, recordings=recs))
    if by_ref:
        log.warning("%d feature vectors had no manifest row and were dropped", len(by_ref))
    if matched == 0:
        raise InsufficientDataError("no feature vector matched any manifest row")
    return Cohort(patients=tuple(patients))


def cohort_from_vectors(vectors, sex_by_patient):
    """Build a Cohort directly from FeatureVectors (no manifest on disk)."""
    if not vectors:
        raise InsufficientDataError("no feature vectors")
    names = vectors[0].names
    patients = {}
    for vec in vectors:
        if vec.names != names:
            raise SchemaError("feature vectors disagree on feature names")
        pid, task, condition = vec.recording_ref
        if task not in TASKS or condition not in CONDITIONS:
            raise SchemaError(f"bad recording_ref {vec.recording_ref}")
        sex = sex_by_patient[pid]
        if sex not in SEXES:
            raise SchemaError(f"unknown sex {sex!r} for patient {pid}")
        rec = Recording(patient_id=pid, sex=sex, task=task, condition=condition,
                        source="", features=vec)
        slot = patients.setdefault(pid, {})
        if (task, condition) in slot:
            raise DuplicateError(f"duplicate vector for {vec.recording_ref}")
        slot[(task, condition)] = rec
    return Cohort(patients=tuple(
        PatientRecord(patient_id=pid, sex=sex_by_patient[pid], recordings=recs)
        for pid, recs in patients.items()
    ))


# ---------------------------------------------------------------------------
# Splitting and group filtering
# ---------------------------------------------------------------------------


def filter_group(cohort, sex):
    """Subset the cohort by sex; "all" is the identity."""
    if sex not in GROUPS:
        raise ValueError(f"group must be one of {GROUPS}")
    if sex == "all":
        return cohort
    return Cohort(patients=tuple(p for p in cohort if p.sex == sex))


def split_by_patient(cohort, test_ratio=0.3, seed=0):
    """Deterministic speaker-independent split, stratified by sex.

    The test allocation per sex uses largest-remainder rounding of the
    overall test count, so each side's sex ratio stays within one patient
    of the cohort's.
    """
    n = len(cohort)
    if n < 2:
        raise InsufficientDataError("need at least 2 patients to split")
    if not 0.0 < test_ratio < 1.0:
        raise ValueError("test_ratio must be in (0, 1)")
    n_test = int(round(test_ratio * n))
    n_test = min(max(n_test, 1), n - 1)

    by_sex = {}
    for p in cohort:
        by_sex.setdefault(p.sex, []).append(p.patient_id)
    # largest-remainder allocation of n_test across sexes
    quotas = {sex: n_test * len(ids) / n for sex, ids in by_sex.items()}
    alloc = {sex: int(np.floor(q)) for sex, q in quotas.items()}
    remaining = n_test - sum(alloc.values())
    for sex in sorted(by_sex, key=lambda s: (-(quotas[s] - alloc[s]), s)):
        if remaining <= 0:
            break
        if alloc[sex] < len(by_sex[sex]):
            alloc[sex] += 1
            remaining -= 1

    rng = np.random.default_rng(seed)
    train_ids, test_ids = [], []
    for sex in sorted(by_sex):
        ids = sorted(by_sex[sex])
        perm = rng.permutation(len(ids))
        shuffled = [ids[i] for i in perm]
        test_ids.extend(shuffled[: alloc[sex]])
        train_ids.extend(shuffled[alloc[sex]:])
    if not train_ids or not test_ids:
        raise InsufficientDataError("split left one side empty")
    return SplitPlan(train_ids=tuple(sorted(train_ids)),
                     test_ids=tuple(sorted(test_ids)),
                     seed=seed, ratio=test_ratio)


# ---------------------------------------------------------------------------
# Dataset builders
# ---------------------------------------------------------------------------


def _resolve_task(cohort, task):
    tasks = cohort.tasks()
    if task is None:
        if len(tasks) != 1:
            raise ValueError(f"cohort has tasks {tasks}; pass task= explicitly")
        return tasks[0]
    if task not in TASKS:
        raise ValueError(f"unknown task {task!r}")
    return task


def _selected_columns(feature_names, selection):
    """Map selected feature names to column indices, preserving vector order."""
    if hasattr(selection, "selected_names"):
        wanted = set(selection.selected_names())
    else:
        wanted = set(selection)
    unknown = wanted - set(feature_names)
    if unknown:
        raise SchemaError(f"selection references unknown features {sorted(unknown)[:5]}")
    cols = [i for i, name in enumerate(feature_names) if name in wanted]
    if not cols:
        raise InsufficientDataError("selection is empty for this group")
    return cols


def _assert_disjoint(split):
    if set(split.train_ids) & set(split.test_ids):
        raise ValueError("split sides overlap")


def build_patientwise(cohort, split, selection, group="all", task=None):
    """Standalone-sample datasets: label 1 = wet, 0 = dry.

    Features are mask-filtered then z-scored with training-set statistics
    only; test vectors reuse the train mean/std.
    """
    _assert_disjoint(split)
    cohort = filter_group(cohort, group)
    task = _resolve_task(cohort, task)
    if len(cohort) == 0:
        raise InsufficientDataError(f"no patients in group {group!r}")

    sides = {"train": ([], [], []), "test": ([], [], [])}
    membership = {pid: "train" for pid in split.train_ids}
    membership.update({pid: "test" for pid in split.test_ids})
    names = None
    for patient in cohort:
        side = membership.get(patient.patient_id)
        if side is None:
            continue
        for condition, label in (("wet", 1), ("dry", 0)):
            rec = patient.get(task, condition)
            if rec is None or rec.features is None:
                continue
            if names is None:
                names = rec.features.names
            elif rec.features.names != names:
                raise SchemaError("feature names differ across recordings")
            vectors, labels, pids = sides[side]
            vectors.append(rec.features.values)
            labels.append(label)
            pids.append(patient.patient_id)
    if names is None or not sides["train"][0] or not sides["test"][0]:
        raise InsufficientDataError(f"no usable recordings for task {task!r} in group {group!r}")

    cols = _selected_columns(names, selection)
    sel_names = tuple(names[i] for i in cols)
    X_train = np.stack(sides["train"][0])[:, cols]
    X_test = np.stack(sides["test"][0])[:, cols]
    mean = X_train.mean(axis=0)
    std = X_train.std(axis=0)
    std = np.where(std > 0, std, 1.0)  # constant columns pass through centered
    X_train = (X_train - mean) / std
    X_test = (X_test - mean) / std
    train = LabeledSet(X=X_train, y=np.asarray(sides["train"][1], dtype=np.int64),
                       feature_names=sel_names, patient_ids=tuple(sides["train"][2]))
    test = LabeledSet(X=X_test, y=np.asarray(sides["test"][1], dtype=np.int64),
                      feature_names=sel_names, patient_ids=tuple(sides["test"][2]))
    return train, test


def build_pairwise(cohort, split, selection, seed=0, group="all", task=None):
    """One PairSample per patient with both conditions for the task.

    Labels are drawn i.i.d. uniform over {0, 1} from the seed, iterating
    patients in sorted id order, so a patient's label does not depend on
    which split side it landed on.  x uses raw mask-filtered features; the
    differencing itself removes per-speaker offsets, so no z-scoring.
    """
    _assert_disjoint(split)
    cohort = filter_group(cohort, group)
    task = _resolve_task(cohort, task)

    eligible = [p for p in cohort if p.has_feature_pair(task)]
    if not eligible:
        raise InsufficientDataError(f"no complete pair for task {task!r} in group {group!r}")
    names = eligible[0].get(task, "wet").features.names
    cols = _selected_columns(names, selection)
    sel_names = tuple(names[i] for i in cols)

    rng = np.random.default_rng(seed)
    labels = rng.integers(0, 2, size=len(eligible))
    membership = {pid: "train" for pid in split.train_ids}
    membership.update({pid: "test" for pid in split.test_ids})

    train_pairs, test_pairs = [], []
    for patient, label in zip(eligible, labels):
        side = membership.get(patient.patient_id)
        if side is None:
            continue
        wet = patient.get(task, "wet").features
        dry = patient.get(task, "dry").features
        if wet.names != names or dry.names != names:
            raise SchemaError("feature names differ across recordings")
        a = wet.values[cols]
        b = dry.values[cols]
        x = a - b if label == 1 else b - a
        sample = PairSample(x=x, label=int(label), patient_id=patient.patient_id)
        (train_pairs if side == "train" else test_pairs).append(sample)
    if not train_pairs or not test_pairs:
        raise InsufficientDataError("pair-wise split left one side empty")
    return train_pairs, test_pairs, sel_names


def pairs_to_xy(pairs):
    """Stack PairSamples into a design matrix and label vector."""
    if not pairs:
        raise InsufficientDataError("no pair samples")
    dim = len(pairs[0].x)
    for s in pairs:
        if len(s.x) != dim:
            raise ShapeError("pair samples disagree on dimension")
    X = np.stack([s.x for s in pairs])
    y = np.asarray([s.label for s in pairs], dtype=np.int64)
    return X, y
