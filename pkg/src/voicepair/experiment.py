"""Experiment grid runner: selection, split, build, train, evaluate.

One cell per (task, group, scheme, test kind, seed).  Cell failures are
recorded with their reason and the run continues; the report either holds a
result or an explicit failure for every requested cell.  Reports carry the
fully resolved config and all seeds, so a report suffices to reproduce
itself.
"""

import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import stats
from .cohort import (
    GROUPS,
    TASKS,
    build_pairwise,
    build_patientwise,
    filter_group,
    pairs_to_xy,
    split_by_patient,
)
from .errors import ConfigError, VoicePairError
from .estimators import AffNetClassifier, DenseNetClassifier
from .nn.aff import aggregate_importance, importance_curve
from .nn.train import evaluate

log = logging.getLogger(__name__)

SCHEME_PAIRWISE = "pairwise"
SCHEME_PATIENTWISE = "patientwise"
SCHEMES = (SCHEME_PAIRWISE, SCHEME_PATIENTWISE)

REPORT_SCHEMA_VERSION = 1


@dataclass(frozen=True)
class ExperimentConfig:
    manifest: str = ""
    features: str = ""  # feature CSV; defaults to features.csv next to manifest
    tasks: tuple = ()  # empty = every task present in the cohort
    groups: tuple = ("all",)
    schemes: tuple = SCHEMES
    test_kinds: tuple = (stats.KIND_PAIRED,)
    alpha: float = stats.ALPHA_DEFAULT
    test_ratio: float = 0.3
    hidden_dims: tuple = (128, 32)
    lr: float = 1e-3
    epochs: int = 60
    batch_size: int = 16
    seeds: tuple = (0,)
    out_dir: str = "runs"

    def __post_init__(self):
        for name, value, allowed in (
            ("groups", self.groups, GROUPS),
            ("schemes", self.schemes, SCHEMES),
            ("test_kinds", self.test_kinds,
             (stats.KIND_PAIRED, stats.KIND_INDEPENDENT)),
        ):
            value = tuple(value)
            object.__setattr__(self, name, value)
            if not value or set(value) - set(allowed):
                raise ConfigError(f"{name} must be a non-empty subset of {allowed}")
        tasks = tuple(self.tasks)
        if set(tasks) - set(TASKS):
            raise ConfigError(f"tasks must be a subset of {TASKS}")
        object.__setattr__(self, "tasks", tasks)
        object.__setattr__(self, "hidden_dims", tuple(self.hidden_dims))
        seeds = tuple(int(s) for s in self.seeds)
        if not seeds:
            raise ConfigError("at least one seed is required")
        object.__setattr__(self, "seeds", seeds)

    def to_dict(self):
        return {
            "manifest": self.manifest, "features": self.features,
            "tasks": list(self.tasks), "groups": list(self.groups),
            "schemes": list(self.schemes), "test_kinds": list(self.test_kinds),
            "alpha": self.alpha, "test_ratio": self.test_ratio,
            "hidden_dims": list(self.hidden_dims), "lr": self.lr,
            "epochs": self.epochs, "batch_size": self.batch_size,
            "seeds": list(self.seeds), "out_dir": self.out_dir,
        }

    @classmethod
    def from_dict(cls, d):
        kwargs = dict(d)
        for key in ("tasks", "groups", "schemes", "test_kinds", "hidden_dims", "seeds"):
            if key in kwargs:
                kwargs[key] = tuple(kwargs[key])
        return cls(**kwargs)


def _condition_vectors(cohort, task, complete_pairs_only):
    """Wet and dry FeatureVector lists for one task."""
    wet, dry = [], []
    for patient in cohort:
        if complete_pairs_only and not patient.has_feature_pair(task):
            continue
        for condition, bucket in (("wet", wet), ("dry", dry)):
            rec = patient.get(task, condition)
            if rec is not None and rec.features is not None:
                bucket.append(rec.features)
    return wet, dry


def compute_selection(cohort, task, group, kind, alpha=stats.ALPHA_DEFAULT):
    """Selection mask for one (task, group, kind) cell.

    The paired kind uses complete wet/dry pairs; the independent kind uses
    every recording with features.
    """
    sub = filter_group(cohort, group)
    wet, dry = _condition_vectors(sub, task, kind == stats.KIND_PAIRED)
    return stats.select_features(wet, dry, kind=kind, alpha=alpha)


def _run_cell(cohort, task, group, scheme, mask, split, cfg, seed):
    clf = DenseNetClassifier(hidden_dims=cfg.hidden_dims, lr=cfg.lr,
                             epochs=cfg.epochs, batch_size=cfg.batch_size,
                             seed=seed)
    if scheme == SCHEME_PATIENTWISE:
        train_set, test_set = build_patientwise(cohort, split, mask,
                                                group=group, task=task)
        clf.fit(train_set.X, train_set.y)
        metrics = evaluate(clf.net_, test_set.X, test_set.y)
        n_train, n_test = len(train_set.y), len(test_set.y)
    else:
        train_pairs, test_pairs, _ = build_pairwise(cohort, split, mask,
                                                    seed=seed, group=group, task=task)
        X_train, y_train = pairs_to_xy(train_pairs)
        X_test, y_test = pairs_to_xy(test_pairs)
        clf.fit(X_train, y_train)
        metrics = evaluate(clf.net_, X_test, y_test)
        n_train, n_test = len(y_train), len(y_test)
    return metrics, n_train, n_test


def run_experiment(cohort, cfg):
    """Execute the full grid and return the report as a plain dict."""
    tasks = cfg.tasks or cohort.tasks()
    if not tasks:
        raise ConfigError("cohort has no tasks")
    cells = []
    failures = []
    for task in tasks:
        for group in cfg.groups:
            masks = {}
            for kind in cfg.test_kinds:
                try:
                    masks[kind] = compute_selection(cohort, task, group, kind,
                                                    alpha=cfg.alpha)
                except VoicePairError as exc:
                    masks[kind] = exc
            for seed in cfg.seeds:
                try:
                    split = split_by_patient(filter_group(cohort, group),
                                             test_ratio=cfg.test_ratio, seed=seed)
                except VoicePairError as exc:
                    split = exc
                for scheme in cfg.schemes:
                    for kind in cfg.test_kinds:
                        ref = {"task": task, "group": group, "scheme": scheme,
                               "kind": kind, "seed": seed}
                        problem = None
                        if isinstance(masks[kind], VoicePairError):
                            problem = masks[kind]
                        elif isinstance(split, VoicePairError):
                            problem = split
                        if problem is None:
                            try:
                                metrics, n_train, n_test = _run_cell(
                                    cohort, task, group, scheme, masks[kind],
                                    split, cfg, seed,
                                )
                            except VoicePairError as exc:
                                problem = exc
                        if problem is not None:
                            failures.append({
                                **ref, "error": type(problem).__name__,
                                "message": str(problem),
                            })
                            log.warning("cell %s failed: %s", ref, problem)
                            continue
                        cells.append({
                            **ref,
                            "metrics": metrics.to_dict(),
                            "f1_percent": round(100.0 * metrics.f1, 1),
                            "n_selected": masks[kind].n_selected,
                            "n_train": n_train,
                            "n_test": n_test,
                            "split": split.to_dict(),
                        })
    return {
        "schema_version": REPORT_SCHEMA_VERSION,
        "config": cfg.to_dict(),
        "cells": cells,
        "aggregates": _aggregate(cells),
        "failures": failures,
    }


def _aggregate(cells):
    by_scheme = {}
    for cell in cells:
        by_scheme.setdefault(cell["scheme"], []).append(cell["metrics"]["f1"])
    mean_f1 = {scheme: float(np.mean(v)) for scheme, v in sorted(by_scheme.items())}
    return {
        "mean_f1": mean_f1,
        "mean_f1_percent": {s: round(100.0 * v, 1) for s, v in mean_f1.items()},
        "n_cells": len(cells),
    }


def render_report_csv(report):
    """Per-cell table with F1 as a one-decimal percentage, plus averages."""
    lines = ["task,group,scheme,kind,seed,f1_percent,precision,recall,"
             "accuracy,n_selected,n_train,n_test"]
    for cell in report["cells"]:
        m = cell["metrics"]
        lines.append(
            f"{cell['task']},{cell['group']},{cell['scheme']},{cell['kind']},"
            f"{cell['seed']},{cell['f1_percent']:.1f},{m['precision']:.4f},"
            f"{m['recall']:.4f},{m['accuracy']:.4f},{cell['n_selected']},"
            f"{cell['n_train']},{cell['n_test']}"
        )
    for scheme, pct in sorted(report["aggregates"]["mean_f1_percent"].items()):
        lines.append(f"average,,{scheme},,,{pct:.1f},,,,,,")
    return "\n".join(lines) + "\n"


def write_report(report, out_dir):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    report_json = out / "report.json"
    with open(report_json, "w", encoding="utf-8") as fh:
        json.dump(report, fh, sort_keys=True, indent=2)
        fh.write("\n")
    report_csv = out / "report.csv"
    report_csv.write_text(render_report_csv(report), encoding="utf-8")
    return {"json": report_json, "csv": report_csv}


# ---------------------------------------------------------------------------
# AFF frequency analysis over a signal cohort
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AffAnalysisConfig:
    d_new: int = 26
    encoder_variant: str = "mean"
    lr: float = 2e-2
    epochs: int = 60
    batch_size: int = 16
    seed: int = 0
    trim_halfwidth_bins: int = 12
    trim_period_epochs: int = 5
    n_fft: int = 1024

    def to_dict(self):
        return {
            "d_new": self.d_new, "encoder_variant": self.encoder_variant,
            "lr": self.lr, "epochs": self.epochs, "batch_size": self.batch_size,
            "seed": self.seed, "trim_halfwidth_bins": self.trim_halfwidth_bins,
            "trim_period_epochs": self.trim_period_epochs, "n_fft": self.n_fft,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


def run_aff_analysis(specs_by_task, labels_by_task, sample_rate_hz, cfg):
    """Train one AFF classifier per task; return importance curves.

    specs_by_task: {task: [spectrogram arrays]}, labels_by_task parallel.
    Divergent or failing tasks are recorded, the rest proceed.
    """
    curves = {}
    models = {}
    failures = []
    for task in sorted(specs_by_task):
        clf = AffNetClassifier(
            d_new=cfg.d_new, encoder_variant=cfg.encoder_variant, lr=cfg.lr,
            epochs=cfg.epochs, batch_size=cfg.batch_size, seed=cfg.seed,
            trim_halfwidth_bins=cfg.trim_halfwidth_bins,
            trim_period_epochs=cfg.trim_period_epochs,
        )
        try:
            clf.fit(specs_by_task[task], labels_by_task[task],
                    sample_rate_hz=sample_rate_hz)
            curves[task] = importance_curve(clf.net_.aff)
            models[task] = clf
        except VoicePairError as exc:
            failures.append({"task": task, "error": type(exc).__name__,
                             "message": str(exc)})
            log.warning("AFF analysis for task %s failed: %s", task, exc)
    result = {"config": cfg.to_dict(), "curves": curves, "models": models,
              "failures": failures}
    if curves:
        mean, std = aggregate_importance(list(curves.values()))
        result["mean"] = mean
        result["std"] = std
    return result
