"""Command-line surface: synth, extract, select, run, aff, report.

Config files (JSON) carry the grids; flags override individual fields.
Reports embed their fully resolved config and never include timestamps, so
identical seeds give byte-identical outputs.  Exit code 0 means no cell
failed; partial failures exit 2 after writing a machine-readable failure
list; invalid usage or total failure exits 1.
"""

import argparse
import csv
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import audio, stats
from .cohort import GROUPS, TASKS, attach_features, filter_group, load_manifest
from .errors import VoicePairError
from .experiment import (
    AffAnalysisConfig,
    ExperimentConfig,
    run_aff_analysis,
    run_experiment,
    write_report,
)
from .features import extract_features, ingest_feature_csv, write_feature_csv
from .nn.serialize import save_model
from .stats import selection_report
from .svgplot import line_plot_svg
from .synth import SynthConfig, write_cohort

log = logging.getLogger(__name__)

LOG_ENV_VAR = "VOICEPAIR_LOG"

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_PARTIAL = 2


def _load_config_file(path):
    if path is None:
        return {}
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    if not isinstance(payload, dict):
        raise VoicePairError(f"{path}: config must be a JSON object")
    return payload


def _merged_config(args, flag_map):
    """Config file values overridden by explicitly provided flags."""
    merged = _load_config_file(getattr(args, "config", None))
    for key, attr in flag_map.items():
        value = getattr(args, attr)
        if value is not None:
            merged[key] = value
    return merged


def _csv_list(text):
    return tuple(tok.strip() for tok in text.split(",") if tok.strip())


def _int_list(text):
    return tuple(int(tok) for tok in _csv_list(text))


def _write_json(path, payload):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")


def _fail_exit(failures, out_dir):
    if failures:
        _write_json(Path(out_dir) / "failures.json", {"failures": failures})
        print(json.dumps({"failures": failures}, sort_keys=True))
        return EXIT_PARTIAL
    return EXIT_OK


# ---------------------------------------------------------------------------
# synth
# ---------------------------------------------------------------------------


def cmd_synth(args):
    merged = _merged_config(args, {
        "mode": "mode", "n_patients": "n_patients", "seed": "seed",
        "effect_scale": "effect_scale", "confound_scale": "confound_scale",
        "noise_scale": "noise_scale", "n_features": "n_features",
        "duration_s": "duration_s",
    })
    if args.band is not None:
        merged["planted_band_hz"] = tuple(args.band)
    if args.tasks is not None:
        merged["tasks"] = _csv_list(args.tasks)
    cfg = SynthConfig.from_dict(merged)
    paths = write_cohort(cfg, args.out, force=args.force)
    print(f"wrote {paths['manifest']}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# extract
# ---------------------------------------------------------------------------


def _iter_recordings(cohort):
    for patient in cohort:
        for key in sorted(patient.recordings):
            yield patient.recordings[key]


def cmd_extract(args):
    cohort = load_manifest(args.manifest)
    base = Path(args.manifest).parent
    vectors = []
    failures = []
    for rec in _iter_recordings(cohort):
        source = base / rec.source
        try:
            clip = audio.load_wav(source)
            vectors.append(extract_features(
                clip, (rec.patient_id, rec.task, rec.condition)
            ))
        except (OSError, VoicePairError) as exc:
            failures.append({"patient_id": rec.patient_id, "task": rec.task,
                             "condition": rec.condition, "source": str(source),
                             "error": type(exc).__name__, "message": str(exc)})
            log.warning("skipping %s: %s", source, exc)
    if failures:
        _write_json(Path(str(args.out) + ".failures.json"), {"failures": failures})
    if not vectors:
        print("all extractions failed", file=sys.stderr)
        return EXIT_ERROR
    write_feature_csv(args.out, vectors)
    print(f"wrote {args.out} ({len(vectors)} rows, {len(failures)} failures)")
    return EXIT_OK


# ---------------------------------------------------------------------------
# select
# ---------------------------------------------------------------------------


def _load_cohort_with_features(manifest_path, features_path):
    cohort = load_manifest(manifest_path)
    if features_path is None:
        features_path = Path(manifest_path).parent / "features.csv"
    vectors = ingest_feature_csv(features_path)
    return attach_features(cohort, vectors)


def cmd_select(args):
    from .experiment import compute_selection

    cohort = _load_cohort_with_features(args.manifest, args.features)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    tasks = _csv_list(args.tasks) if args.tasks else cohort.tasks()
    groups = _csv_list(args.groups) if args.groups else ("female", "male", "all")
    kinds = _csv_list(args.kinds) if args.kinds else (stats.KIND_PAIRED,
                                                      stats.KIND_INDEPENDENT)
    masks = {}
    failures = []
    for task in tasks:
        for group in groups:
            for kind in kinds:
                try:
                    mask = compute_selection(cohort, task, group, kind,
                                             alpha=args.alpha)
                except VoicePairError as exc:
                    failures.append({"task": task, "group": group, "kind": kind,
                                     "error": type(exc).__name__,
                                     "message": str(exc)})
                    continue
                masks[(task, group, kind)] = mask
                _write_json(out / f"mask_{task}_{group}_{kind}.json",
                            {"task": task, "group": group, "kind": kind,
                             "alpha": mask.alpha,
                             "selected": list(mask.selected_names())})
    table = selection_report(masks)
    _write_json(out / "selection.json",
                {"alpha": args.alpha, "table": table, "failures": failures})
    with open(out / "selection.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["group", "kind"] + list(table["tasks"]))
        for row in table["rows"]:
            writer.writerow([row["sex"], row["kind"]]
                            + [row["counts"][t] for t in table["tasks"]])
    print(f"wrote {out / 'selection.csv'}")
    return _fail_exit(failures, out)


# ---------------------------------------------------------------------------
# run
# ---------------------------------------------------------------------------


def cmd_run(args):
    merged = _merged_config(args, {
        "manifest": "manifest", "features": "features", "alpha": "alpha",
        "test_ratio": "test_ratio", "lr": "lr", "epochs": "epochs",
        "batch_size": "batch_size", "out_dir": "out",
    })
    for key, attr, conv in (("tasks", "tasks", _csv_list),
                            ("groups", "groups", _csv_list),
                            ("schemes", "schemes", _csv_list),
                            ("test_kinds", "kinds", _csv_list),
                            ("seeds", "seeds", _int_list)):
        value = getattr(args, attr)
        if value is not None:
            merged[key] = conv(value)
    if args.seed is not None:
        merged["seeds"] = (args.seed,)
    cfg = ExperimentConfig.from_dict(merged)
    if not cfg.manifest:
        print("a manifest is required (flag or config file)", file=sys.stderr)
        return EXIT_ERROR
    cohort = _load_cohort_with_features(cfg.manifest, cfg.features or None)
    report = run_experiment(cohort, cfg)
    paths = write_report(report, cfg.out_dir)
    for scheme, pct in sorted(report["aggregates"]["mean_f1_percent"].items()):
        print(f"{scheme}: mean F1 {pct:.1f}%")
    print(f"wrote {paths['json']}")
    return _fail_exit(report["failures"], cfg.out_dir)


# ---------------------------------------------------------------------------
# aff
# ---------------------------------------------------------------------------


def _signal_spectrograms(cohort, base, n_fft):
    """Per task: spectrogram list, labels, in deterministic recording order."""
    specs_by_task = {}
    labels_by_task = {}
    failures = []
    for rec in _iter_recordings(cohort):
        source = base / rec.source
        try:
            clip = audio.load_wav(source)
            if clip.sample_rate_hz != audio.CANONICAL_RATE_HZ:
                clip = audio.resample_linear(clip, audio.CANONICAL_RATE_HZ)
            spec = audio.stft_power(audio.frame_signal(clip), n_fft=n_fft)
        except (OSError, VoicePairError) as exc:
            failures.append({"source": str(source), "error": type(exc).__name__,
                             "message": str(exc)})
            continue
        specs_by_task.setdefault(rec.task, []).append(spec.frames)
        labels_by_task.setdefault(rec.task, []).append(
            1 if rec.condition == "wet" else 0
        )
    return specs_by_task, labels_by_task, failures


def _planted_band_from_sidecar(manifest_path):
    sidecar = Path(manifest_path).parent / "truth.json"
    if sidecar.exists():
        with open(sidecar, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
        band = payload.get("truth", {}).get("planted_band_hz")
        if band:
            return tuple(band)
    return None


def cmd_aff(args):
    merged = _merged_config(args, {
        "d_new": "d_new", "lr": "lr", "epochs": "epochs", "seed": "seed",
        "trim_halfwidth_bins": "trim_halfwidth", "trim_period_epochs": "trim_period",
        "n_fft": "n_fft",
    })
    cfg = AffAnalysisConfig.from_dict(merged)
    cohort = load_manifest(args.manifest)
    base = Path(args.manifest).parent
    specs_by_task, labels_by_task, failures = _signal_spectrograms(
        cohort, base, cfg.n_fft
    )
    if not specs_by_task:
        print("no readable audio", file=sys.stderr)
        return EXIT_ERROR
    result = run_aff_analysis(specs_by_task, labels_by_task,
                              audio.CANONICAL_RATE_HZ, cfg)
    failures.extend(result["failures"])
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    d_freq = cfg.n_fft // 2 + 1
    bin_hz = np.arange(d_freq) * audio.CANONICAL_RATE_HZ / cfg.n_fft
    tasks = sorted(result["curves"])
    if tasks:
        with open(out / "importance.csv", "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["bin_hz"] + tasks + ["mean", "std"])
            for i in range(d_freq):
                row = [repr(float(bin_hz[i]))]
                row += [repr(float(result["curves"][t][i])) for t in tasks]
                row += [repr(float(result["mean"][i])), repr(float(result["std"][i]))]
                writer.writerow(row)
        series = {t: result["curves"][t] for t in tasks}
        series["mean"] = result["mean"]
        band = args.band or _planted_band_from_sidecar(args.manifest)
        svg = line_plot_svg(
            bin_hz, series, title="Learned frequency importance",
            x_label="frequency (Hz)", y_label="importance",
            annotate_peak="mean", band=band,
            band_label="planted band" if band else None,
        )
        (out / "importance.svg").write_text(svg, encoding="utf-8")
        for task in tasks:
            save_model(result["models"][task].net_, out / f"aff_model_{task}.json")
        print(f"wrote {out / 'importance.svg'}")
    _write_json(out / "analysis.json", {
        "config": result["config"],
        "tasks": tasks,
        "failures": failures,
    })
    return _fail_exit(failures, out)


# ---------------------------------------------------------------------------
# report
# ---------------------------------------------------------------------------


def cmd_report(args):
    from .experiment import render_report_csv

    with open(args.report, "r", encoding="utf-8") as fh:
        report = json.load(fh)
    text = render_report_csv(report)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.csv").write_text(text, encoding="utf-8")
        print(f"wrote {out / 'report.csv'}")
    else:
        print(text, end="")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser():
    parser = argparse.ArgumentParser(
        prog="voicepair",
        description="Paired-voice analysis: synthesize cohorts, extract "
                    "features, select by t-test, train and evaluate, and "
                    "analyze learned frequency filters.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic cohort")
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--force", action="store_true",
                   help="overwrite a non-empty output directory")
    p.add_argument("--mode", choices=["feature", "signal"])
    p.add_argument("--n-patients", dest="n_patients", type=int)
    p.add_argument("--n-features", dest="n_features", type=int)
    p.add_argument("--effect-scale", dest="effect_scale", type=float)
    p.add_argument("--confound-scale", dest="confound_scale", type=float)
    p.add_argument("--noise-scale", dest="noise_scale", type=float)
    p.add_argument("--duration-s", dest="duration_s", type=float)
    p.add_argument("--band", nargs=2, type=float, metavar=("LO", "HI"))
    p.add_argument("--tasks", help="comma-separated task subset")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("extract", help="extract features from manifest audio")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True, help="output feature CSV")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("select", help="t-test feature selection tables")
    p.add_argument("--manifest", required=True)
    p.add_argument("--features", help="feature CSV (default: features.csv "
                                      "next to the manifest)")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--tasks")
    p.add_argument("--groups", help=f"comma-separated subset of {GROUPS}")
    p.add_argument("--kinds", help="comma-separated subset of paired,independent")
    p.add_argument("--alpha", type=float, default=stats.ALPHA_DEFAULT)
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("run", help="run the experiment grid")
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--manifest")
    p.add_argument("--features")
    p.add_argument("--out", help="output directory")
    p.add_argument("--tasks")
    p.add_argument("--groups")
    p.add_argument("--schemes")
    p.add_argument("--kinds")
    p.add_argument("--alpha", type=float)
    p.add_argument("--test-ratio", dest="test_ratio", type=float)
    p.add_argument("--lr", type=float)
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", dest="batch_size", type=int)
    p.add_argument("--seeds", help="comma-separated seed list")
    p.add_argument("--seed", type=int, help="single seed (overrides --seeds)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("aff", help="train frequency filters, plot importance")
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--d-new", dest="d_new", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--epochs", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--trim-halfwidth", dest="trim_halfwidth", type=int)
    p.add_argument("--trim-period", dest="trim_period", type=int)
    p.add_argument("--n-fft", dest="n_fft", type=int)
    p.add_argument("--band", nargs=2, type=float, metavar=("LO", "HI"),
                   help="shade this band in the plot")
    p.set_defaults(func=cmd_aff)

    p = sub.add_parser("report", help="re-render a report JSON as CSV")
    p.add_argument("--report", required=True, help="path to report.json")
    p.add_argument("--out", help="output directory (default: stdout)")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None):
    level = os.environ.get(LOG_ENV_VAR, "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except VoicePairError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
