"""Command-line entry point wiring datasets, models, training and analysis into runs.

Subcommands: gen-data, train, landscape, spectrum.  Every run writes exactly
one manifest next to its artifacts with the full flag echo, seed, artifact
list, wall-clock duration and toolkit version, so any artifact directory is
self-describing and re-runnable.  Exit codes: 0 success, 2 usage/input
error, 3 numerical failure.  All randomness is seeded via flags; identical
command lines produce byte-identical artifacts.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .datasets import (
    DatasetError,
    gen_parity_dataset,
    gen_synthetic_tabular,
    load_csv,
    read_trace,
    write_dataset,
    write_slice,
    write_spectrum,
    write_trace,
)
from .models import PARITY4, TABULAR8, build_model
from .spectral import classify_stationary, descent_path_overlay, eig_symmetric, landscape_slice
from .training import (
    AHLRConfig,
    ClassifierLoss,
    GDConfig,
    TrainingDivergedError,
    train_ahlr,
    train_gd,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERIC = 3


class UsageError(ValueError):
    """Invalid flags or incompatible inputs; maps to exit code 2."""


def _atomic_write_json(path: Path, payload) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(json.dumps(payload, indent=1) + "\n", encoding="utf-8")
    tmp.replace(path)


def _write_manifest(path: Path, command: str, args: argparse.Namespace, seed, artifacts, started: float) -> None:
    config = {k: v for k, v in sorted(vars(args).items()) if k != "func"}
    payload = {
        "command": command,
        "config": config,
        "seed": seed,
        "artifacts": [str(a) for a in artifacts],
        "duration_seconds": time.monotonic() - started,
        "version": __version__,
    }
    _atomic_write_json(path, payload)


def _load_params_file(path, n_params: int) -> np.ndarray:
    path = Path(path)
    if not path.exists():
        raise UsageError(f"no such parameter file: {path}")
    try:
        values = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: not a JSON parameter array: {exc}") from None
    params = np.asarray(values, dtype=float)
    if params.shape != (n_params,):
        raise UsageError(f"{path}: expected {n_params} parameters, got shape {params.shape}")
    return params


def _load_compatible_dataset(args, model):
    dataset = load_csv(args.data, label_column=args.label, header=not args.no_header)
    spec = model.spec
    if dataset.n_features != spec.n_qubits:
        raise UsageError(
            f"{spec.name} needs {spec.n_qubits} feature columns, dataset has {dataset.n_features}"
        )
    if spec.name == PARITY4 and not np.all(np.isin(dataset.features, (0.0, 1.0))):
        raise UsageError(f"{spec.name} needs binary features")
    return dataset


def _cmd_gen_data(args) -> int:
    started = time.monotonic()
    out_path = Path(args.output)
    if args.parity:
        dataset = gen_parity_dataset()
        seed = None
    elif args.synthetic is not None:
        dataset = gen_synthetic_tabular(args.synthetic, args.seed)
        seed = args.seed
    else:
        dataset = load_csv(args.csv, label_column=args.label, header=not args.no_header)
        seed = None
    out_path.parent.mkdir(parents=True, exist_ok=True)
    write_dataset(dataset, out_path)
    manifest = out_path.with_suffix(".manifest.json")
    _write_manifest(manifest, "gen-data", args, seed, [out_path], started)
    print(f"wrote {dataset.n_samples} samples x {dataset.n_features} features to {out_path}")
    return EXIT_OK


def _parse_lr_set(text: str) -> tuple[float, ...]:
    try:
        values = tuple(float(tok) for tok in text.split(",") if tok.strip())
    except ValueError:
        raise UsageError(f"--lr-set expects comma-separated numbers, got {text!r}") from None
    if not values:
        raise UsageError("--lr-set is empty")
    return values


def _cmd_train(args) -> int:
    started = time.monotonic()
    model = build_model(args.model, threshold=args.threshold)
    dataset = _load_compatible_dataset(args, model)
    problem = ClassifierLoss(model, dataset)

    if args.opt == "gd":
        config = GDConfig(
            learning_rate=args.lr,
            max_iters=args.iters,
            seed=args.seed,
            log_spectrum_every=args.spectrum_every,
        )
        trace = train_gd(problem, config)
    else:
        try:
            config = AHLRConfig(
                lr_set=_parse_lr_set(args.lr_set),
                patience=args.patience,
                plateau_tol=args.plateau_tol,
                neg_eig_cut=args.neg_eig_cut,
                neg_eig_threshold=args.neg_eig_threshold,
                max_restarts=args.max_restarts,
                max_iters=args.iters,
                seed=args.seed,
                log_spectrum_every=args.spectrum_every,
            )
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        trace = train_ahlr(problem, config)

    out_dir = Path(args.output)
    out_dir.mkdir(parents=True, exist_ok=True)
    artifacts = []

    trace_path = out_dir / "trace.csv"
    write_trace(trace, trace_path)
    artifacts.append(trace_path)

    params_path = out_dir / "params.json"
    _atomic_write_json(params_path, [float(v) for v in trace.trained_params])
    artifacts.append(params_path)

    spectra = trace.spectra()
    if spectra:
        spectrum_path = out_dir / "spectrum.csv"
        write_spectrum(spectra, spectrum_path)
        artifacts.append(spectrum_path)

    manifest = out_dir / "manifest.json"
    _write_manifest(manifest, "train", args, args.seed, artifacts, started)

    final_cost = trace.records[-1].cost
    accuracy = problem.accuracy(trace.trained_params)
    correct = int(round(accuracy * problem.n_samples))
    print(f"final cost: {final_cost:.6f}")
    print(f"accuracy: {correct}/{problem.n_samples} ({accuracy:.3f})")
    if trace.verdict is not None:
        print(f"verdict: {trace.verdict}")
    return EXIT_OK


def _cmd_landscape(args) -> int:
    started = time.monotonic()
    model = build_model(args.model, threshold=args.threshold)
    dataset = _load_compatible_dataset(args, model)
    problem = ClassifierLoss(model, dataset)
    params = _load_params_file(args.params, model.spec.n_params)

    axis_i, axis_j = args.axes
    if axis_i == axis_j:
        raise UsageError("slice axes must be distinct")
    if not all(0 <= a < model.spec.n_params for a in (axis_i, axis_j)):
        raise UsageError(f"axes must lie in 0..{model.spec.n_params - 1}")
    lo, hi = args.range
    if not hi > lo:
        raise UsageError(f"range upper bound must exceed lower bound, got ({lo}, {hi})")
    if args.grid < 2:
        raise UsageError(f"--grid must be at least 2, got {args.grid}")

    slc = landscape_slice(problem.cost, params, axis_i, axis_j, resolution=args.grid, axis_range=(lo, hi))

    out_dir = Path(args.output)
    out_dir.mkdir(parents=True, exist_ok=True)
    artifacts = []
    slice_path = out_dir / "slice.csv"
    write_slice(slc, slice_path)
    artifacts.append(slice_path)

    if args.trace is not None:
        records = read_trace(args.trace)
        path = descent_path_overlay(records, axis_i, axis_j)
        overlay_path = out_dir / "path.csv"
        lines = ["iter,theta_i,theta_j,cost"]
        for record, (ti, tj, cost) in zip(records, path):
            lines.append(f"{record.iteration},{ti:.17g},{tj:.17g},{cost:.17g}")
        tmp = overlay_path.with_name(overlay_path.name + ".tmp")
        tmp.write_text("\n".join(lines) + "\n", encoding="utf-8")
        tmp.replace(overlay_path)
        artifacts.append(overlay_path)

    manifest = out_dir / "manifest.json"
    _write_manifest(manifest, "landscape", args, None, artifacts, started)
    print(f"wrote {args.grid}x{args.grid} slice over axes ({axis_i}, {axis_j}) to {slice_path}")
    return EXIT_OK


def _cmd_spectrum(args) -> int:
    started = time.monotonic()
    model = build_model(args.model, threshold=args.threshold)
    dataset = _load_compatible_dataset(args, model)
    problem = ClassifierLoss(model, dataset)
    params = _load_params_file(args.params, model.spec.n_params)

    hessian = problem.hessian(params)
    spectrum = eig_symmetric(hessian, zero_band=args.zero_band)
    verdict = classify_stationary(spectrum)

    out_dir = Path(args.output)
    out_dir.mkdir(parents=True, exist_ok=True)
    spectrum_path = out_dir / "spectrum.csv"
    write_spectrum([(0, spectrum.eigenvalues)], spectrum_path)
    manifest = out_dir / "manifest.json"
    _write_manifest(manifest, "spectrum", args, None, [spectrum_path], started)

    print("eigenvalues (ascending):")
    print("  " + " ".join(f"{v:.6g}" for v in spectrum.eigenvalues))
    print(
        f"counts: negative={spectrum.n_negative} zero={spectrum.n_zero} "
        f"positive={spectrum.n_positive} (zero band {spectrum.zero_band:g})"
    )
    print(f"stationary-point verdict: {verdict}")
    return EXIT_OK


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vqckit",
        description="Train small variational quantum classifiers and analyze their loss curvature.",
    )
    parser.add_argument("--version", action="version", version=f"vqckit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen-data", help="generate or re-export a dataset CSV")
    source = gen.add_mutually_exclusive_group(required=True)
    source.add_argument("--parity", action="store_true", help="all 16 four-bit parity rows")
    source.add_argument("--synthetic", type=int, metavar="N", help="N synthetic 8-feature samples")
    source.add_argument("--csv", metavar="PATH", help="re-export an existing CSV")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--label", default="label", help="label column name or index for --csv")
    gen.add_argument("--no-header", action="store_true", help="input CSV has no header row")
    gen.add_argument("-o", "--output", required=True, metavar="FILE")
    gen.set_defaults(func=_cmd_gen_data)

    def add_model_data_flags(p):
        p.add_argument("--model", required=True, choices=[PARITY4, TABULAR8])
        p.add_argument("--data", required=True, metavar="FILE")
        p.add_argument("--label", default="label")
        p.add_argument("--no-header", action="store_true")
        p.add_argument("--threshold", type=float, default=0.0, help="decision threshold on <Z>")

    train = sub.add_parser("train", help="train a model and write trace/spectra artifacts")
    add_model_data_flags(train)
    train.add_argument("--opt", choices=["gd", "ahlr"], default="gd")
    train.add_argument("--lr", type=float, default=0.5, help="fixed learning rate for gd")
    train.add_argument("--lr-set", default="0.5,0.25,0.1,0.05,0.01", help="decreasing rates for ahlr")
    train.add_argument("--iters", type=int, default=100)
    train.add_argument("--seed", type=int, default=0)
    train.add_argument("--spectrum-every", type=int, default=0, metavar="K",
                       help="log the Hessian spectrum every K iterations (0 = off)")
    train.add_argument("--patience", type=int, default=5)
    train.add_argument("--plateau-tol", type=float, default=1e-4)
    train.add_argument("--neg-eig-cut", type=float, default=1e-6)
    train.add_argument("--neg-eig-threshold", type=int, default=2)
    train.add_argument("--max-restarts", type=int, default=3)
    train.add_argument("-o", "--output", required=True, metavar="DIR")
    train.set_defaults(func=_cmd_train)

    land = sub.add_parser("landscape", help="evaluate a 2-D loss slice around given parameters")
    add_model_data_flags(land)
    land.add_argument("--params", required=True, metavar="FILE", help="JSON parameter array")
    land.add_argument("--axes", type=int, nargs=2, required=True, metavar=("I", "J"))
    land.add_argument("--grid", type=int, default=50)
    land.add_argument("--range", type=float, nargs=2, default=(-3.141592653589793, 3.141592653589793),
                      metavar=("LO", "HI"))
    land.add_argument("--trace", metavar="FILE", help="trace.csv to project as a descent path")
    land.add_argument("-o", "--output", required=True, metavar="DIR")
    land.set_defaults(func=_cmd_landscape)

    spect = sub.add_parser("spectrum", help="Hessian spectrum and stationary-point verdict")
    add_model_data_flags(spect)
    spect.add_argument("--params", required=True, metavar="FILE")
    spect.add_argument("--zero-band", type=float, default=1e-6)
    spect.add_argument("-o", "--output", required=True, metavar="DIR")
    spect.set_defaults(func=_cmd_spectrum)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DatasetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except TrainingDivergedError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
