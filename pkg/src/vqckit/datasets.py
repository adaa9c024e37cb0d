"""Dataset generation and ingestion, plus serialization of traces, spectra and slices.

Numeric serialization uses 17 significant decimal digits so doubles
round-trip exactly; write->read is the identity for every artifact type in
both CSV and JSON.  CSV output uses comma separators, LF line endings and a
mandatory header row.  All writers go through a temp-file-plus-rename so
artifacts are replaced atomically.
"""

from __future__ import annotations

import csv
import io
import json
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .spectral import LandscapeSlice, Spectrum
from .training import TraceRecord


class DatasetError(ValueError):
    """Raised for malformed dataset files or invalid dataset construction."""


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _atomic_write_text(path, text: str) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


@dataclass(frozen=True)
class Dataset:
    """Feature matrix with binary labels and per-feature min/max statistics."""

    features: np.ndarray
    labels: np.ndarray
    feature_min: np.ndarray
    feature_max: np.ndarray
    provenance: str

    def __post_init__(self):
        features = np.asarray(self.features, dtype=float)
        labels = np.asarray(self.labels, dtype=int)
        lo = np.asarray(self.feature_min, dtype=float)
        hi = np.asarray(self.feature_max, dtype=float)
        if features.ndim != 2:
            raise DatasetError(f"features must be a 2-D matrix, got shape {features.shape}")
        n_samples, n_features = features.shape
        if n_samples < 1:
            raise DatasetError("dataset must contain at least one sample")
        if n_features < 1:
            raise DatasetError("dataset must contain at least one feature column")
        if labels.shape != (n_samples,):
            raise DatasetError(f"labels shape {labels.shape} does not match {n_samples} samples")
        if not np.all((labels == 0) | (labels == 1)):
            raise DatasetError("labels must be binary")
        if lo.shape != (n_features,) or hi.shape != (n_features,):
            raise DatasetError("feature stats must have one entry per column")
        if np.any(features.min(axis=0) < lo) or np.any(features.max(axis=0) > hi):
            raise DatasetError("feature stats are inconsistent with the feature matrix")
        for name, arr in (("features", features), ("labels", labels), ("feature_min", lo), ("feature_max", hi)):
            arr = arr.copy()
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def from_arrays(cls, features, labels, provenance: str) -> "Dataset":
        features = np.asarray(features, dtype=float)
        return cls(
            features=features,
            labels=np.asarray(labels, dtype=int),
            feature_min=features.min(axis=0),
            feature_max=features.max(axis=0),
            provenance=provenance,
        )

    @property
    def n_samples(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]


def gen_parity_dataset() -> Dataset:
    """All 16 four-bit inputs in lexicographic order with XOR labels."""
    rows = []
    labels = []
    for index in range(16):
        bits = [(index >> shift) & 1 for shift in (3, 2, 1, 0)]
        rows.append([float(b) for b in bits])
        label = 0
        for b in bits:
            label ^= b
        labels.append(label)
    return Dataset.from_arrays(np.array(rows), np.array(labels), "generated_parity")


def load_csv(path, label_column="label", header: bool = True) -> Dataset:
    """Load a numeric CSV with one binary label column; remaining columns become features.

    `label_column` is a column index or, when a header is present, a column
    name.  Rows with non-numeric fields and non-binary labels are rejected
    with the offending file line number.
    """
    path = Path(path)
    if not path.exists():
        raise DatasetError(f"no such file: {path}")
    with path.open("r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        rows = list(reader)
    rows = [row for row in rows if row and any(cell.strip() for cell in row)]
    if not rows:
        raise DatasetError(f"{path}: file is empty")

    start = 0
    if header:
        names = [cell.strip() for cell in rows[0]]
        start = 1
        if isinstance(label_column, str):
            if label_column not in names:
                raise DatasetError(f"{path}: no column named {label_column!r} in header {names}")
            label_index = names.index(label_column)
        else:
            label_index = int(label_column)
    else:
        if isinstance(label_column, str):
            raise DatasetError("label column by name requires a header row")
        label_index = int(label_column)

    data_rows = rows[start:]
    if not data_rows:
        raise DatasetError(f"{path}: no data rows")
    width = len(data_rows[0])
    if not (0 <= label_index < width):
        raise DatasetError(f"{path}: label column {label_index} out of range for {width} columns")
    if width < 2:
        raise DatasetError(f"{path}: need at least one feature column besides the label")

    features = []
    labels = []
    for offset, row in enumerate(data_rows):
        line_no = start + offset + 1
        if len(row) != width:
            raise DatasetError(f"{path}: row at line {line_no} has {len(row)} fields, expected {width}")
        try:
            values = [float(cell) for cell in row]
        except ValueError as exc:
            raise DatasetError(f"{path}: non-numeric field at line {line_no}: {exc}") from None
        label = values[label_index]
        if label not in (0.0, 1.0):
            raise DatasetError(f"{path}: non-binary label {label!r} at line {line_no}")
        labels.append(int(label))
        features.append([v for col, v in enumerate(values) if col != label_index])
    return Dataset.from_arrays(np.array(features), np.array(labels), f"csv({path})")


# Fixed linear rule behind the synthetic tabular generator.  Tests verify the
# injected label noise against this same rule, so it must stay importable.
_SYNTH_CENTER = np.array([3.8, 120.0, 69.0, 20.5, 80.0, 32.0, 0.47, 33.0])
_SYNTH_SCALE = np.array([3.4, 32.0, 19.0, 16.0, 115.0, 7.9, 0.33, 11.8])
_SYNTH_WEIGHTS = np.array([0.25, 1.0, -0.2, 0.1, 0.4, 0.7, 0.55, 0.35])
_SYNTH_NOISE_RATE = 0.1


def synthetic_clean_labels(features) -> np.ndarray:
    """Noise-free labels of the synthetic generator's fixed linear rule."""
    features = np.asarray(features, dtype=float)
    z = (features - _SYNTH_CENTER) / _SYNTH_SCALE
    return (z @ _SYNTH_WEIGHTS > 0).astype(int)


def gen_synthetic_tabular(n_samples: int, seed: int) -> Dataset:
    """Seeded 8-feature stand-in dataset with 10% label noise on a linear rule."""
    if n_samples < 2:
        raise DatasetError(f"need at least 2 samples, got {n_samples}")
    rng = np.random.default_rng(seed)
    columns = [
        rng.poisson(3.8, n_samples).astype(float),
        rng.normal(120.0, 32.0, n_samples),
        rng.normal(69.0, 19.0, n_samples),
        rng.normal(20.5, 16.0, n_samples),
        rng.gamma(0.9, 90.0, n_samples),
        rng.normal(32.0, 7.9, n_samples),
        rng.gamma(2.0, 0.24, n_samples),
        rng.integers(21, 70, n_samples).astype(float),
    ]
    features = np.column_stack(columns)
    labels = synthetic_clean_labels(features)
    flips = rng.random(n_samples) < _SYNTH_NOISE_RATE
    labels = labels ^ flips
    return Dataset.from_arrays(features, labels.astype(int), f"synthetic_tabular(seed={seed})")


def split_dataset(dataset: Dataset, test_fraction: float = 0.2, seed: int = 0) -> tuple[Dataset, Dataset]:
    """Deterministic seeded shuffle-and-split into (train, test)."""
    if not (0.0 < test_fraction < 1.0):
        raise DatasetError(f"test_fraction must be in (0, 1), got {test_fraction}")
    n = dataset.n_samples
    n_test = max(1, int(round(n * test_fraction)))
    if n_test >= n:
        raise DatasetError("split would leave an empty training set")
    order = np.random.default_rng(seed).permutation(n)
    test_idx, train_idx = order[:n_test], order[n_test:]
    make = lambda idx, tag: Dataset.from_arrays(  # noqa: E731
        dataset.features[idx], dataset.labels[idx], f"{dataset.provenance}|{tag}"
    )
    return make(train_idx, f"split(train,seed={seed})"), make(test_idx, f"split(test,seed={seed})")


def write_dataset(dataset: Dataset, path) -> None:
    """Dataset as CSV with header f0..f{F-1},label; loadable by load_csv."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([f"f{i}" for i in range(dataset.n_features)] + ["label"])
    for row, label in zip(dataset.features, dataset.labels):
        writer.writerow([_fmt(v) for v in row] + [str(int(label))])
    _atomic_write_text(path, buf.getvalue())


# --- training trace -------------------------------------------------------------


def _trace_records(trace) -> list:
    return list(getattr(trace, "records", trace))


def write_trace(trace, path, fmt: str = "csv") -> None:
    """Trace rows as iter,cost,lr,restarts,params (spectra are serialized separately)."""
    records = _trace_records(trace)
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["iter", "cost", "lr", "restarts", "params_json"])
        for r in records:
            params_json = "[" + ",".join(_fmt(v) for v in np.asarray(r.params, dtype=float)) + "]"
            writer.writerow([r.iteration, _fmt(r.cost), _fmt(r.learning_rate), r.restarts, params_json])
        _atomic_write_text(path, buf.getvalue())
    elif fmt == "json":
        payload = [
            {
                "iter": int(r.iteration),
                "cost": float(r.cost),
                "lr": float(r.learning_rate),
                "restarts": int(r.restarts),
                "params": [float(v) for v in np.asarray(r.params, dtype=float)],
            }
            for r in records
        ]
        _atomic_write_text(path, json.dumps(payload, indent=1) + "\n")
    else:
        raise ValueError(f"unsupported format {fmt!r}")


def read_trace(path, fmt: str = "csv") -> list[TraceRecord]:
    path = Path(path)
    if fmt == "csv":
        with path.open("r", encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if header != ["iter", "cost", "lr", "restarts", "params_json"]:
                raise DatasetError(f"{path}: unexpected trace header {header}")
            records = []
            for row in reader:
                if not row:
                    continue
                records.append(
                    TraceRecord(
                        iteration=int(row[0]),
                        cost=float(row[1]),
                        learning_rate=float(row[2]),
                        params=np.array(json.loads(row[4]), dtype=float),
                        spectrum=None,
                        restarts=int(row[3]),
                    )
                )
            return records
    if fmt == "json":
        payload = json.loads(path.read_text(encoding="utf-8"))
        return [
            TraceRecord(
                iteration=int(item["iter"]),
                cost=float(item["cost"]),
                learning_rate=float(item["lr"]),
                params=np.array(item["params"], dtype=float),
                spectrum=None,
                restarts=int(item["restarts"]),
            )
            for item in payload
        ]
    raise ValueError(f"unsupported format {fmt!r}")


# --- eigenvalue spectra -----------------------------------------------------------


def _spectrum_entries(spectra) -> list[tuple[int, list[float]]]:
    if isinstance(spectra, Spectrum):
        return [(0, [float(v) for v in spectra.eigenvalues])]
    entries = []
    for iteration, values in spectra:
        if isinstance(values, Spectrum):
            values = values.eigenvalues
        entries.append((int(iteration), [float(v) for v in values]))
    return entries


def write_spectrum(spectra, path, fmt: str = "csv") -> None:
    """Spectra as iter,rank,eigenvalue rows; accepts a Spectrum or (iter, eigenvalues) pairs."""
    entries = _spectrum_entries(spectra)
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["iter", "rank", "eigenvalue"])
        for iteration, values in entries:
            for rank, value in enumerate(values):
                writer.writerow([iteration, rank, _fmt(value)])
        _atomic_write_text(path, buf.getvalue())
    elif fmt == "json":
        payload = [
            {"iter": iteration, "rank": rank, "eigenvalue": float(value)}
            for iteration, values in entries
            for rank, value in enumerate(values)
        ]
        _atomic_write_text(path, json.dumps(payload, indent=1) + "\n")
    else:
        raise ValueError(f"unsupported format {fmt!r}")


def read_spectrum(path, fmt: str = "csv") -> list[tuple[int, list[float]]]:
    path = Path(path)
    rows: list[tuple[int, int, float]] = []
    if fmt == "csv":
        with path.open("r", encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if header != ["iter", "rank", "eigenvalue"]:
                raise DatasetError(f"{path}: unexpected spectrum header {header}")
            for row in reader:
                if not row:
                    continue
                rows.append((int(row[0]), int(row[1]), float(row[2])))
    elif fmt == "json":
        payload = json.loads(path.read_text(encoding="utf-8"))
        rows = [(int(item["iter"]), int(item["rank"]), float(item["eigenvalue"])) for item in payload]
    else:
        raise ValueError(f"unsupported format {fmt!r}")
    out: list[tuple[int, list[float]]] = []
    for iteration, _rank, value in rows:
        if not out or out[-1][0] != iteration:
            out.append((iteration, []))
        out[-1][1].append(value)
    return out


# --- landscape slices ---------------------------------------------------------------


def write_slice(slc: LandscapeSlice, path, fmt: str = "csv") -> None:
    """Slice header + G x G grid.  The file schema carries one shared axis range."""
    (lo_i, hi_i), (lo_j, hi_j) = slc.ranges
    if (lo_i, hi_i) != (lo_j, hi_j):
        raise ValueError("serialized slices need one shared axis range")
    g = slc.resolution
    if fmt == "csv":
        lines = [f"#axes,{slc.axis_i},{slc.axis_j},{_fmt(lo_i)},{_fmt(hi_i)},{g}"]
        for row in slc.grid:
            lines.append(",".join(_fmt(v) for v in row))
        _atomic_write_text(path, "\n".join(lines) + "\n")
    elif fmt == "json":
        payload = {
            "i": slc.axis_i,
            "j": slc.axis_j,
            "range_lo": float(lo_i),
            "range_hi": float(hi_i),
            "G": g,
            "grid": [[float(v) for v in row] for row in slc.grid],
        }
        _atomic_write_text(path, json.dumps(payload, indent=1) + "\n")
    else:
        raise ValueError(f"unsupported format {fmt!r}")


def read_slice(path, fmt: str = "csv") -> LandscapeSlice:
    """Read a slice back; frozen parameters are not part of the schema and come back as None."""
    path = Path(path)
    if fmt == "csv":
        lines = [ln for ln in path.read_text(encoding="utf-8").splitlines() if ln]
        if not lines or not lines[0].startswith("#axes,"):
            raise DatasetError(f"{path}: missing #axes header")
        tokens = lines[0].split(",")
        if len(tokens) != 6:
            raise DatasetError(f"{path}: malformed #axes header {lines[0]!r}")
        axis_i, axis_j = int(tokens[1]), int(tokens[2])
        lo, hi = float(tokens[3]), float(tokens[4])
        g = int(tokens[5])
        if len(lines) - 1 != g:
            raise DatasetError(f"{path}: expected {g} grid rows, found {len(lines) - 1}")
        grid = np.array([[float(cell) for cell in line.split(",")] for line in lines[1:]])
        if grid.shape != (g, g):
            raise DatasetError(f"{path}: grid shape {grid.shape} does not match G={g}")
        return LandscapeSlice(axis_i, axis_j, grid, ((lo, hi), (lo, hi)), frozen_params=None)
    if fmt == "json":
        payload = json.loads(path.read_text(encoding="utf-8"))
        lo, hi = float(payload["range_lo"]), float(payload["range_hi"])
        grid = np.array(payload["grid"], dtype=float)
        if grid.shape != (int(payload["G"]), int(payload["G"])):
            raise DatasetError(f"{path}: grid shape {grid.shape} does not match G={payload['G']}")
        return LandscapeSlice(int(payload["i"]), int(payload["j"]), grid, ((lo, hi), (lo, hi)), None)
    raise ValueError(f"unsupported format {fmt!r}")
