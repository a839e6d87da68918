"""Command-line pipeline driver.

Subcommands: gen-data, validate-ed, train-qcnn, eval-qcnn, qkmeans,
baseline, flip, fss, report.  Every command is deterministic under a
fixed seed and echoes its effective configuration into the output
directory.  Exit codes: 0 success, 1 usage, 2 data error, 3 numerical
failure.
"""
import argparse
import csv
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import analysis, baselines, datastore, ed, qcnn, qkmeans
from .lattice import build_lattice
from .model import build_hamiltonian, energy, magnetization_per_qubit
from .plgc import VQEConfig

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _output_root() -> Path:
    return Path(os.environ.get("LOOPGAS_OUTPUT_ROOT", "."))


def _write_csv(path: Path, header, rows):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(v) if isinstance(v, float) else v for v in row])


def _echo_config(out: Path, args: argparse.Namespace):
    out.mkdir(parents=True, exist_ok=True)
    effective = {k: v for k, v in sorted(vars(args).items())
                 if k not in ("func", "config")}
    for k, v in effective.items():
        if isinstance(v, Path):
            effective[k] = str(v)
    with open(out / "config.json", "w") as fh:
        json.dump(effective, fh, indent=1)


def _apply_config_file(args: argparse.Namespace, parser_defaults: dict):
    """Config-file values fill in anything left at its parser default."""
    if not getattr(args, "config", None):
        return
    with open(args.config) as fh:
        file_cfg = json.load(fh)
    for key, value in file_cfg.items():
        attr = key.replace("-", "_")
        if hasattr(args, attr) and getattr(args, attr) == parser_defaults.get(attr):
            setattr(args, attr, value)


def _load_dataset(path) -> datastore.PhaseDataset:
    path = Path(path)
    if not (path / "manifest.json").exists():
        raise FileNotFoundError(f"no dataset manifest under {path}")
    return datastore.load_dataset(path)


def _vqe_config(args) -> VQEConfig:
    return VQEConfig(iterations=args.vqe_iterations, trials=args.vqe_trials,
                     learning_rate=args.vqe_learning_rate,
                     perturbation_scale=args.vqe_perturbation, seed=args.seed)


def cmd_gen_data(args) -> int:
    geometry = build_lattice(args.rows, args.cols)
    out = Path(args.out)
    _echo_config(out, args)
    config = _vqe_config(args)
    try:
        dataset = datastore.generate_dataset(
            geometry, config, x_c_ref=args.x_c_ref, per_phase=args.per_phase)
    except RuntimeError as err:
        (out / "FAILED").write_text(str(err))
        print(f"error: dataset generation aborted: {err}", file=sys.stderr)
        return EXIT_NUMERIC
    datastore.save_dataset(dataset, out)
    print(f"wrote {len(dataset.samples)} samples to {out}")
    return EXIT_OK


def cmd_validate_ed(args) -> int:
    dataset = _load_dataset(args.dataset)
    geometry = dataset.geometry
    n = geometry.num_qubits
    out = Path(args.out)
    _echo_config(out, args)
    rows, failures = [], 0
    for sample in sorted(dataset.samples, key=lambda s: s.x):
        ham = build_hamiltonian(geometry, sample.x)
        e_vqe = energy(sample.state, ham) / n
        mz_vqe = magnetization_per_qubit(sample.state)
        try:
            e_ed, psi = ed.ground_state_ed(geometry, sample.x)
        except RuntimeError as err:
            print(f"x={sample.x}: ED failed: {err}", file=sys.stderr)
            failures += 1
            continue
        rows.append((sample.x, e_vqe, e_ed / n, mz_vqe,
                     magnetization_per_qubit(psi)))
    _write_csv(out / "ed_comparison.csv",
               ["x", "e_vqe_per_qubit", "e_ed_per_qubit", "mz_vqe", "mz_ed"], rows)
    arr = np.array([[r[1] - r[2], r[3] - r[4]] for r in rows])
    print(f"max |dE/N| = {np.abs(arr[:, 0]).max():.3e}, "
          f"max |dmz| = {np.abs(arr[:, 1]).max():.3e}")
    return EXIT_NUMERIC if failures else EXIT_OK


def _labels01(samples):
    return [(s.label + 1) // 2 for s in samples]


def _flip_rows(samples, predicted):
    order = np.argsort([s.x for s in samples])
    xs = [samples[i].x for i in order]
    labels = [predicted[i] for i in order]
    return xs, labels


def cmd_train_qcnn(args) -> int:
    dataset = _load_dataset(args.dataset)
    out = Path(args.out)
    _echo_config(out, args)
    if args.split == "random":
        train, test = datastore.split_random(dataset, args.train_fraction, args.seed)
    else:
        train, test = datastore.split_physics_aware(dataset, args.window_lo,
                                                    args.window_hi)
    arch = qcnn.build_architecture(dataset.geometry.num_qubits)
    config = qcnn.TrainConfig(
        epochs=args.epochs, batch_size=args.batch_size,
        learning_rate=args.learning_rate, l2_strength=args.l2_strength,
        lr_decay_factor=args.lr_decay_factor, lr_decay_every=args.lr_decay_every,
        convergence_delta=args.convergence_delta, restarts=args.restarts,
        seed=args.seed)
    params, history = qcnn.train_qcnn([s.state for s in train], _labels01(train),
                                      arch, config)
    qcnn.save_params(out / "qcnn_params.json", arch, params)
    _write_csv(out / "loss_history.csv", ["epoch", "mean_loss"],
               list(enumerate(history)))
    return _evaluate_qcnn(out, arch, params, test)


def cmd_eval_qcnn(args) -> int:
    dataset = _load_dataset(args.dataset)
    out = Path(args.out)
    _echo_config(out, args)
    arch, params = qcnn.load_params(args.params)
    if arch.num_qubits != dataset.geometry.num_qubits:
        raise ValueError("params file does not match the dataset lattice")
    if args.split == "random":
        _, test = datastore.split_random(dataset, args.train_fraction, args.seed)
    elif args.split == "physics":
        _, test = datastore.split_physics_aware(dataset, args.window_lo,
                                                args.window_hi)
    else:
        test = dataset.samples
    return _evaluate_qcnn(out, arch, params, test)


def _evaluate_qcnn(out: Path, arch, params, test) -> int:
    program = qcnn.compile_program(arch)
    rows, predicted = [], []
    for s in sorted(test, key=lambda t: t.x):
        y = qcnn.qcnn_forward(s.state, arch, params, _program=program)
        pred = -1 if y <= 0 else 1
        predicted.append(pred)
        rows.append((s.x, y, pred, s.label))
    _write_csv(out / "qcnn_metrics.csv", ["x", "y_out", "predicted", "label"], rows)
    accuracy = float(np.mean([r[2] == r[3] for r in rows]))
    summary = [("accuracy", accuracy)]
    try:
        est = analysis.flip_interval([r[0] for r in rows], predicted)
        summary += [("flip_center", est.center), ("flip_half_width", est.half_width)]
    except ValueError as err:
        summary += [("flip_error", str(err))]
    _write_csv(out / "summary.csv", ["metric", "value"], summary)
    print(f"accuracy = {accuracy:.4f}" + "".join(
        f", {k} = {v:.4f}" for k, v in summary[1:] if isinstance(v, float)))
    return EXIT_OK


def cmd_qkmeans(args) -> int:
    dataset = _load_dataset(args.dataset)
    out = Path(args.out)
    _echo_config(out, args)
    order = np.argsort(dataset.xs())
    samples = [dataset.samples[i] for i in order]
    fid = qkmeans.fidelity_matrix([s.state for s in samples])
    dist = qkmeans.hs_distance_matrix(fid)
    clustering = qkmeans.kmedoids_two(dist)
    xs = [s.x for s in samples]
    labels = qkmeans.orient_clusters(clustering, xs)
    _write_csv(out / "assignments.csv", ["x", "cluster", "oriented_label"],
               [(s.x, int(clustering.assignments[i]), int(labels[i]))
                for i, s in enumerate(samples)])
    if clustering.degenerate:
        print("error: clustering collapsed to a single cluster", file=sys.stderr)
        return EXIT_NUMERIC
    est = analysis.flip_interval(xs, labels)
    _write_csv(out / "summary.csv", ["metric", "value"],
               [("flip_center", est.center), ("flip_half_width", est.half_width),
                ("loss", clustering.loss)])
    print(f"cluster flip estimate = {est.center:.4f} +- {est.half_width:.4f}")
    return EXIT_OK


def cmd_baseline(args) -> int:
    dataset = _load_dataset(args.dataset)
    out = Path(args.out)
    _echo_config(out, args)
    kind = baselines.AMPLITUDE_SQ if args.input == "amps" else baselines.PLGC_THETA
    train_pool, test = datastore.split_physics_aware(dataset, args.window_lo,
                                                     args.window_hi)
    test = sorted(test, key=lambda s: s.x)
    n_features = (1 << dataset.geometry.num_qubits) \
        if kind == baselines.AMPLITUDE_SQ else dataset.geometry.num_plaquettes
    print(f"feature kind {kind}, dimension {n_features}")
    rows = []
    for size in args.sizes:
        size = min(size, len(train_pool))
        estimates = []
        for rep in range(args.reps):
            rng = np.random.default_rng([args.seed, size, rep])
            subset = [train_pool[i] for i in
                      sorted(rng.choice(len(train_pool), size=size, replace=False))]
            feats = baselines.extract_features(subset, kind)
            stats = (feats.mean, feats.std)
            test_feats = baselines.extract_features(test, kind, stats=stats)
            config = baselines.BaselineConfig(
                epochs=args.epochs, learning_rate=args.learning_rate,
                l2_strength=args.l2_strength, seed=int(rng.integers(2**31)))
            try:
                if args.model == "logreg":
                    model = baselines.train_logreg(feats, _labels01(subset), config)
                else:
                    model = baselines.train_cnn1d(feats, _labels01(subset), config)
            except ValueError as err:
                print(f"error: {err}", file=sys.stderr)
                return EXIT_DATA
            predicted = baselines.predict_labels(model, test_feats)
            try:
                estimates.append(analysis.flip_interval([s.x for s in test],
                                                        predicted))
            except ValueError:
                continue  # no transition in this repetition
        if estimates:
            mean, std = analysis.aggregate_repetitions(estimates)
            rows.append((size, len(estimates), mean, std,
                         float(np.mean([e.half_width for e in estimates]))))
        else:
            rows.append((size, 0, float("nan"), float("nan"), float("nan")))
    _write_csv(out / "baseline_flips.csv",
               ["train_size", "valid_reps", "mean_center", "std_center",
                "mean_half_width"], rows)
    for row in rows:
        print(f"size {row[0]}: mean flip {row[2]:.4f} +- {row[3]:.4f} "
              f"({row[1]} valid reps)")
    return EXIT_OK


def cmd_flip(args) -> int:
    with open(args.predictions) as fh:
        reader = csv.DictReader(fh)
        pairs = [(float(row["x"]), int(row[args.label_column])) for row in reader]
    pairs.sort()
    est = analysis.flip_interval([p[0] for p in pairs], [p[1] for p in pairs])
    print(f"flip interval [{est.x_lo}, {est.x_hi}] "
          f"center {est.center} half_width {est.half_width}")
    return EXIT_OK


def cmd_fss(args) -> int:
    with open(args.estimates) as fh:
        reader = csv.DictReader(fh)
        points = [(float(row["plaquettes"]), float(row["center"])) for row in reader]
    fit = analysis.fit_finite_size(points)
    out = Path(args.out)
    _echo_config(out, args)
    _write_csv(out / "fss_fit.csv", ["metric", "value"],
               [("intercept", fit.intercept), ("slope", fit.slope),
                ("intercept_stderr", fit.intercept_stderr)])
    print(f"x_c(inf) = {fit.intercept:.4f} +- {fit.intercept_stderr:.4f} "
          f"(slope {fit.slope:.4f})")
    return EXIT_OK


def cmd_report(args) -> int:
    out = Path(args.out)
    _echo_config(out, args)
    rows = []
    for run_dir in sorted(Path(p) for p in args.runs):
        summary = run_dir / "summary.csv"
        if not summary.exists():
            raise FileNotFoundError(f"no summary.csv under {run_dir}")
        with open(summary) as fh:
            for row in csv.DictReader(fh):
                rows.append((run_dir.name, row["metric"], row["value"]))
    _write_csv(out / "report.csv", ["run", "metric", "value"], rows)
    for row in rows:
        print(f"{row[0]}: {row[1]} = {row[2]}")
    return EXIT_OK


def _add_common(p, with_out=True):
    p.add_argument("--config", type=Path, help="JSON config file (flags override)")
    p.add_argument("--seed", type=int, default=0)
    if with_out:
        p.add_argument("--out", type=Path,
                       default=None, help="output directory")


def _add_vqe_opts(p):
    p.add_argument("--vqe-iterations", type=int, default=500)
    p.add_argument("--vqe-trials", type=int, default=10)
    p.add_argument("--vqe-learning-rate", type=float, default=0.01)
    p.add_argument("--vqe-perturbation", type=float, default=0.1)


def _add_train_opts(p):
    p.add_argument("--epochs", type=int, default=100)
    p.add_argument("--batch-size", type=int, default=24)
    p.add_argument("--learning-rate", type=float, default=0.01)
    p.add_argument("--l2-strength", type=float, default=1e-4)
    p.add_argument("--lr-decay-factor", type=float, default=0.5)
    p.add_argument("--lr-decay-every", type=int, default=20)
    p.add_argument("--convergence-delta", type=float, default=1e-3)
    p.add_argument("--restarts", type=int, default=3)


def _add_split_opts(p):
    p.add_argument("--train-fraction", type=float, default=0.8)
    p.add_argument("--window-lo", type=float, default=0.2)
    p.add_argument("--window-hi", type=float, default=0.4)


def build_parser() -> _Parser:
    parser = _Parser(prog="loopgas", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="generate a VQE ground-state dataset")
    p.add_argument("--rows", type=int, required=True)
    p.add_argument("--cols", type=int, required=True)
    p.add_argument("--x-c-ref", type=float, default=datastore.DEFAULT_X_C_REF)
    p.add_argument("--per-phase", type=int, default=150)
    _add_common(p)
    _add_vqe_opts(p)
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("validate-ed", help="compare dataset states against ED")
    p.add_argument("--dataset", type=Path, required=True)
    _add_common(p)
    p.set_defaults(func=cmd_validate_ed)

    p = sub.add_parser("train-qcnn", help="train the QCNN classifier")
    p.add_argument("--dataset", type=Path, required=True)
    p.add_argument("--split", choices=["random", "physics"], default="random")
    _add_common(p)
    _add_split_opts(p)
    _add_train_opts(p)
    p.set_defaults(func=cmd_train_qcnn)

    p = sub.add_parser("eval-qcnn", help="evaluate saved QCNN parameters")
    p.add_argument("--dataset", type=Path, required=True)
    p.add_argument("--params", type=Path, required=True)
    p.add_argument("--split", choices=["random", "physics", "all"], default="all")
    _add_common(p)
    _add_split_opts(p)
    p.set_defaults(func=cmd_eval_qcnn)

    p = sub.add_parser("qkmeans", help="unsupervised fidelity clustering")
    p.add_argument("--dataset", type=Path, required=True)
    _add_common(p)
    p.set_defaults(func=cmd_qkmeans)

    p = sub.add_parser("baseline", help="classical baseline sweep")
    p.add_argument("--dataset", type=Path, required=True)
    p.add_argument("--model", choices=["logreg", "cnn"], required=True)
    p.add_argument("--input", choices=["amps", "params"], required=True)
    p.add_argument("--sizes", type=int, nargs="+", default=[50, 100, 200, 300])
    p.add_argument("--reps", type=int, default=10)
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--learning-rate", type=float, default=0.01)
    p.add_argument("--l2-strength", type=float, default=1e-4)
    _add_common(p)
    _add_split_opts(p)
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("flip", help="flip-interval estimate from a predictions CSV")
    p.add_argument("--predictions", type=Path, required=True)
    p.add_argument("--label-column", default="predicted")
    _add_common(p, with_out=False)
    p.set_defaults(func=cmd_flip)

    p = sub.add_parser("fss", help="finite-size scaling fit from an estimates CSV")
    p.add_argument("--estimates", type=Path, required=True)
    _add_common(p)
    p.set_defaults(func=cmd_fss)

    p = sub.add_parser("report", help="concatenate run summaries")
    p.add_argument("--runs", nargs="+", required=True)
    _add_common(p)
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as err:
        print(f"usage error: {err}", file=sys.stderr)
        return EXIT_USAGE
    defaults = {a.dest: a.default
                for a in parser._subparsers._group_actions[0]
                .choices[args.command]._actions}
    try:
        _apply_config_file(args, defaults)
        if getattr(args, "out", None) is None and hasattr(args, "out"):
            args.out = _output_root() / f"loopgas-{args.command}"
        return args.func(args)
    except _UsageError as err:
        print(f"usage error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except (FileNotFoundError, ValueError) as err:
        print(f"data error: {err}", file=sys.stderr)
        return EXIT_DATA
    except (RuntimeError, FloatingPointError) as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
