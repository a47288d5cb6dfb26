"""Command-line interface: ``gaitsvm synth|label|train|evaluate|predict|roc``.

Every command writes a manifest (flat ``key=value`` text, values JSON
encoded) with the resolved parameters and SHA-256 digests of its inputs
and outputs.  A manifest can be fed back through ``--config`` to replay
the run; explicit flags override config values.

Exit codes: 0 ok, 1 other failure, 2 usage, 3 labeling, 4 missing phase,
5 non-converged training, 6 too few rows per class, 7 model file error.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

from . import __version__
from .errors import (
    DegenerateSignal,
    EmptyCycle,
    FoldError,
    GaitSvmError,
    InvalidPhaseDistribution,
    MissingPhase,
    ModelFormatError,
    TooFewPeaks,
    TooFewPerClass,
)
from .evaluation import cross_validate, emit_plot_data, pct, roc_one_vs_rest
from .ingestion import (
    IMU_COLUMNS,
    KNEE_COLUMNS,
    AlignmentConfig,
    align,
    csv_text,
    fmt,
    load_channel,
    load_combined,
    load_labeled,
    write_combined,
    write_ground_truth,
    write_labeled,
)
from .labeling import DEFAULT_DISTRIBUTION, PeakDetectorConfig, PhaseDistribution, label_trial, segment_trial
from .svm import KernelParams, TrainConfig, fine_gaussian_gamma, load_model, save_model, train_ovo
from .synth import SynthConfig, default_signatures, generate
from .types import FEATURES, N_FEATURES, PHASES, GaitPhase, LabeledDataset

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_LABEL, EXIT_MISSING, EXIT_NOCONV, EXIT_FEW, EXIT_MODEL = 0, 1, 2, 3, 4, 5, 6, 7

# manifest keys that are bookkeeping rather than replayable parameters
_META_PREFIXES = ("command", "version", "input_sha256.", "output_sha256.", "config")


class CliError(Exception):
    def __init__(self, code, message):
        super().__init__(message)
        self.code = code


def _positive(kind):
    def conv(text):
        v = kind(text)
        if not v > 0:
            raise argparse.ArgumentTypeError(f"must be positive, got {text}")
        return v
    return conv


def _phase(text):
    try:
        return GaitPhase.from_name(text).name
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _phase_dist(text):
    try:
        PhaseDistribution.parse(text)
    except InvalidPhaseDistribution as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None
    return text


def _add_svm_flags(p):
    p.add_argument("--c", type=_positive(float), default=1.0, help="regularization C (default 1.0)")
    p.add_argument("--gamma", type=_positive(float), default=None,
                   help="RBF gamma (default: fine-Gaussian 8/5)")
    p.add_argument("--kkt-tol", type=_positive(float), default=1e-3)
    p.add_argument("--eps-alpha", type=_positive(float), default=1e-8)
    p.add_argument("--max-passes", type=_positive(int), default=200)
    p.add_argument("--jobs", type=_positive(int), default=1, help="worker threads")


def build_parser():
    parser = argparse.ArgumentParser(prog="gaitsvm", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"gaitsvm {__version__}")
    sub = parser.add_subparsers(dest="command")

    def common(p):
        p.add_argument("--config", help="key=value file (e.g. a manifest); flags override it")

    p = sub.add_parser("synth", help="generate a synthetic trial with ground truth")
    common(p)
    p.add_argument("--cycles", type=_positive(int), default=10)
    p.add_argument("--cycle-period", type=_positive(float), default=1.0, help="seconds")
    p.add_argument("--sample-rate", type=_positive(float), default=100.0, help="Hz")
    p.add_argument("--knee-amplitude", type=_positive(float), default=60.0, help="degrees")
    p.add_argument("--noise", type=float, default=0.2, help="IMU noise std")
    p.add_argument("--knee-noise", type=float, default=0.0, help="knee noise std (degrees)")
    p.add_argument("--signature-radius", type=_positive(float), default=1.0)
    p.add_argument("--phase-dist", type=_phase_dist)
    p.add_argument("--subject", default="synthetic")
    p.add_argument("--seed", type=int)
    p.add_argument("-o", "--out-dir")

    p = sub.add_parser("label", help="label trials by knee-angle peaks")
    common(p)
    p.add_argument("--input", action="append", default=[], help="combined CSV (repeatable)")
    p.add_argument("--imu", help="IMU CSV (with --knee)")
    p.add_argument("--knee", help="knee-angle CSV (with --imu)")
    p.add_argument("--subject", help="trial id for --imu/--knee input")
    p.add_argument("--target-rate", type=_positive(float), default=200.0)
    p.add_argument("--max-gap", type=_positive(float), default=0.05)
    p.add_argument("--height-fraction", type=float, default=0.7)
    p.add_argument("--min-distance-s", type=_positive(float), default=0.5)
    p.add_argument("--phase-dist", type=_phase_dist, help="seven percents m,t,l,s,e,p,i")
    p.add_argument("--phase-dist-file", help="file of phase=percent lines")
    p.add_argument("-o", "--out")

    p = sub.add_parser("train", help="train the one-vs-one SVM")
    common(p)
    p.add_argument("--input", action="append", default=[], help="labeled CSV (repeatable)")
    _add_svm_flags(p)
    p.add_argument("--allow-nonconverged", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--out")

    p = sub.add_parser("evaluate", help="k-fold cross-validation and reports")
    common(p)
    p.add_argument("--input", action="append", default=[], help="labeled CSV (repeatable)")
    _add_svm_flags(p)
    p.add_argument("--k", type=_positive(int), default=5)
    p.add_argument("--seed", type=int)
    p.add_argument("--split-by", choices=("row", "subject"), default="row")
    p.add_argument("--roc", action="append", default=[], type=_phase, help="phase name (repeatable)")
    p.add_argument("-o", "--out-dir")

    p = sub.add_parser("predict", help="classify a combined CSV")
    common(p)
    p.add_argument("--model")
    p.add_argument("--input")
    p.add_argument("-o", "--out")

    p = sub.add_parser("roc", help="ROC curve from predictions and true labels")
    common(p)
    p.add_argument("--predictions")
    p.add_argument("--labels", help="labeled CSV with the true phases")
    p.add_argument("--phase", type=_phase)
    p.add_argument("-o", "--out")
    return parser, sub


def read_config(path):
    cfg = {}
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise CliError(EXIT_USAGE, f"{path}: bad config line {raw!r}")
        try:
            cfg[key.strip()] = json.loads(value)
        except json.JSONDecodeError:
            cfg[key.strip()] = value.strip()
    return cfg


_REQUIRED = {
    "synth": ("out_dir", "seed"),
    "label": ("out",),
    "train": ("out",),
    "evaluate": ("out_dir", "seed"),
    "predict": ("model", "input", "out"),
    "roc": ("predictions", "labels", "phase", "out"),
}


def parse_args(argv):
    """Parse flags, filling anything not given explicitly from ``--config``."""
    parser, sub = build_parser()
    args = parser.parse_args(argv)
    sp = sub.choices[args.command]
    if args.config:
        cfg = read_config(args.config)
        if "command" in cfg and cfg["command"] != args.command:
            sp.error(f"config is for command {cfg['command']!r}")
        for action in sp._actions:
            key = action.dest
            if key not in cfg or key.startswith(_META_PREFIXES):
                continue
            if getattr(args, key) == action.default:
                value = cfg[key]
                if action.type is not None and value is not None and not isinstance(value, list):
                    try:
                        value = action.type(str(value))
                    except (argparse.ArgumentTypeError, ValueError) as exc:
                        sp.error(f"config {key}: {exc}")
                setattr(args, key, value)
    for key in _REQUIRED[args.command]:
        if getattr(args, key) in (None, [], ""):
            sp.error(f"--{key.replace('_', '-')} is required")
    return args, sp


def sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_manifest(path, args, inputs, outputs):
    lines = [f"command={json.dumps(args.command)}", f"version={json.dumps(__version__)}"]
    for key in sorted(vars(args)):
        if key in ("command", "config"):
            continue
        lines.append(f"{key}={json.dumps(getattr(args, key))}")
    for p in inputs:
        lines.append(f"input_sha256.{Path(p).name}={json.dumps(sha256(p))}")
    for p in outputs:
        lines.append(f"output_sha256.{Path(p).name}={json.dumps(sha256(p))}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
    return Path(path)


def _distribution(args):
    if getattr(args, "phase_dist_file", None):
        return PhaseDistribution.from_file(args.phase_dist_file)
    if args.phase_dist:
        return PhaseDistribution.parse(args.phase_dist)
    return DEFAULT_DISTRIBUTION


def _load_labeled_inputs(args, sp):
    if not args.input:
        sp.error("at least one --input is required")
    parts = [load_labeled(p) for p in args.input]
    return LabeledDataset.concatenate(parts)


def _kernel_and_cfg(args):
    kernel = KernelParams(args.gamma if args.gamma is not None else fine_gaussian_gamma(N_FEATURES))
    cfg = TrainConfig(c=args.c, kkt_tol=args.kkt_tol, eps_alpha=args.eps_alpha,
                      max_passes=args.max_passes, seed=getattr(args, "seed", 0) or 0)
    return kernel, cfg


def cmd_synth(args, sp, out):
    if args.noise < 0 or args.knee_noise < 0:
        sp.error("noise must be non-negative")
    try:
        dist = _distribution(args)
        cfg = SynthConfig(n_cycles=args.cycles, cycle_period=args.cycle_period,
                          sample_rate=args.sample_rate, knee_amplitude=args.knee_amplitude,
                          noise_std=(args.noise,) * 4 + (args.knee_noise,),
                          phase_signatures=default_signatures(args.signature_radius),
                          distribution=dist, seed=args.seed, subject_id=args.subject)
    except ValueError as exc:
        sp.error(str(exc))
    result = generate(cfg)
    d = Path(args.out_dir)
    d.mkdir(parents=True, exist_ok=True)
    data_path = d / f"{args.subject}.csv"
    truth_path = d / f"{args.subject}_truth.csv"
    write_combined(result.trial, data_path)
    gt = result.ground_truth()
    write_ground_truth(gt.time, gt.labels, truth_path)
    write_manifest(d / "manifest.txt", args, [], [data_path, truth_path])
    print(f"wrote {len(result.trial)} samples, {len(result.crests)} crests to {data_path}", file=out)
    return EXIT_OK


def cmd_label(args, sp, out):
    if not 0 < args.height_fraction <= 1:
        sp.error("--height-fraction must lie in (0, 1]")
    if bool(args.imu) != bool(args.knee):
        sp.error("--imu and --knee must be given together")
    if not args.input and not args.imu:
        sp.error("give --input or --imu/--knee")
    try:
        dist = _distribution(args)
    except InvalidPhaseDistribution as exc:
        sp.error(str(exc))
    trials, inputs = [], []
    for path in args.input:
        trials.append(load_combined(path))
        inputs.append(path)
    if args.imu:
        imu = load_channel(args.imu, IMU_COLUMNS)
        knee = load_channel(args.knee, KNEE_COLUMNS)
        subject = args.subject or Path(args.imu).stem
        trials.append(align(imu, knee, AlignmentConfig(args.target_rate, max_gap=args.max_gap), subject))
        inputs += [args.imu, args.knee]
    parts = []
    for trial in trials:
        pcfg = PeakDetectorConfig.for_rate(trial.sample_rate, args.height_fraction, args.min_distance_s)
        try:
            seg = segment_trial(trial, pcfg, dist)
            ds = label_trial(trial, pcfg, dist)
        except (TooFewPeaks, DegenerateSignal, EmptyCycle) as exc:
            raise CliError(EXIT_LABEL, f"trial {trial.subject_id!r}: {exc}") from None
        counts = ds.counts()
        print(f"trial {trial.subject_id}: peaks={len(seg.peak_indices)} cycles={len(seg.peak_indices) - 1} "
              + " ".join(f"{p.name}={counts[p]}" for p in PHASES), file=out)
        parts.append(ds)
    ds = LabeledDataset.concatenate(parts)
    write_labeled(ds, args.out)
    write_manifest(str(args.out) + ".manifest", args, inputs, [args.out])
    return EXIT_OK


def cmd_train(args, sp, out):
    data = _load_labeled_inputs(args, sp)
    kernel, cfg = _kernel_and_cfg(args)
    try:
        model = train_ovo(data, kernel, cfg, n_jobs=args.jobs)
    except MissingPhase as exc:
        raise CliError(EXIT_MISSING, str(exc)) from None
    for m in model.classifiers:
        a, b = m.class_pair
        print(f"{a.name}/{b.name}: nsv={m.n_support} converged={str(m.converged).lower()} "
              f"kkt={m.kkt_residual:.3g}", file=out)
    if not model.converged and not args.allow_nonconverged:
        raise CliError(EXIT_NOCONV, "training did not converge (use --allow-nonconverged to keep the model)")
    save_model(model, args.out)
    write_manifest(str(args.out) + ".manifest", args, args.input, [args.out])
    return EXIT_OK


def cmd_evaluate(args, sp, out):
    if args.k < 2:
        sp.error("--k must be at least 2")
    data = _load_labeled_inputs(args, sp)
    kernel, cfg = _kernel_and_cfg(args)
    try:
        report = cross_validate(data, kernel, cfg, k=args.k, seed=args.seed,
                                split_by=args.split_by, n_jobs=args.jobs)
    except TooFewPerClass as exc:
        raise CliError(EXIT_FEW, str(exc)) from None
    except FoldError as exc:
        if isinstance(exc.cause, MissingPhase):
            raise CliError(EXIT_MISSING, str(exc)) from None
        raise
    except ValueError as exc:
        sp.error(str(exc))
    d = Path(args.out_dir)
    outputs = emit_plot_data(report, d)
    for name in args.roc:
        phase = GaitPhase.from_name(name)
        curve = roc_one_vs_rest(report.truths, report.scores, phase)
        outputs += emit_plot_data(curve, d / f"roc_{phase.name}.csv", name=phase.name)
        print(f"ROC {phase.name}: AUC={curve.auc:.4f}", file=out)
    print(f"pooled accuracy over {args.k} folds: {report.accuracy:.4f} ({pct(report.accuracy)}%)", file=out)
    for p in PHASES:
        r = report.rates
        print(f"  {p.name:16s} PPV={pct(r.ppv[p])} TPR={pct(r.tpr[p])}", file=out)
    write_manifest(d / "manifest.txt", args, args.input, outputs)
    return EXIT_OK


def cmd_predict(args, sp, out):
    try:
        model = load_model(args.model)
    except ModelFormatError as exc:
        raise CliError(EXIT_MODEL, str(exc)) from None
    raw = load_channel(args.input, FEATURES)
    pred, _, scores = model.predict(raw.values)
    header = ["time", "phase"] + [f"score_{p.name}" for p in PHASES]
    rows = [[fmt(t), PHASES[k].name] + [fmt(v) for v in s] for t, k, s in zip(raw.time, pred, scores)]
    Path(args.out).write_text(csv_text(header, rows), encoding="utf-8")
    write_manifest(str(args.out) + ".manifest", args, [args.model, args.input], [args.out])
    return EXIT_OK


def cmd_roc(args, sp, out):
    raw = load_channel(args.predictions, [f"score_{p.name}" for p in PHASES])
    truth = load_labeled(args.labels)
    if len(truth) != len(raw.time):
        raise CliError(EXIT_USAGE, "predictions and labels differ in row count")
    phase = GaitPhase.from_name(args.phase)
    curve = roc_one_vs_rest(truth.labels, raw.values, phase)
    outputs = emit_plot_data(curve, args.out, name=phase.name)
    print(f"ROC {phase.name}: AUC={curve.auc:.4f}", file=out)
    write_manifest(str(args.out) + ".manifest", args, [args.predictions, args.labels], outputs)
    return EXIT_OK


COMMANDS = {"synth": cmd_synth, "label": cmd_label, "train": cmd_train,
            "evaluate": cmd_evaluate, "predict": cmd_predict, "roc": cmd_roc}


def main(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    try:
        args, sp = parse_args(argv)
        return COMMANDS[args.command](args, sp, out)
    except SystemExit as exc:
        return int(exc.code or 0)
    except CliError as exc:
        print(f"gaitsvm: {exc}", file=err)
        return exc.code
    except (GaitSvmError, ValueError, OSError) as exc:
        print(f"gaitsvm: {exc}", file=err)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
