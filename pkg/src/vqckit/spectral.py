"""Symmetric eigendecomposition and 2-D loss-landscape slicing.

The eigensolver is a self-contained cyclic Jacobi iteration: parameter
counts here never exceed ~50, so O(n^3) sweeps are trivial and no external
linear-algebra dependency is needed.  Eigenvectors are accumulated for
residual checks but only eigenvalues are ever serialized.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

LOCAL_MIN = "local_min"
LOCAL_MAX = "local_max"
SADDLE = "saddle"
DEGENERATE = "degenerate"

DEFAULT_ZERO_BAND = 1e-6


class ConvergenceError(RuntimeError):
    """Raised when the Jacobi sweep limit is hit before the off-diagonal norm target."""


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues sorted ascending, matching eigenvector columns, and sign counts.

    Counts partition the eigenvalue list under the zero band: an eigenvalue
    counts as zero when |lambda| <= zero_band.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    zero_band: float
    n_negative: int
    n_zero: int
    n_positive: int


def count_signs(eigenvalues, zero_band: float) -> tuple[int, int, int]:
    values = np.asarray(eigenvalues, dtype=float)
    negative = int(np.sum(values < -zero_band))
    positive = int(np.sum(values > zero_band))
    zero = values.size - negative - positive
    return negative, zero, positive


def _offdiag_norm(a: np.ndarray) -> float:
    strict_upper = np.triu(a, 1)
    return math.sqrt(2.0 * float(np.sum(strict_upper * strict_upper)))


def _rotate(a: np.ndarray, q: np.ndarray, p: int, r: int, c: float, s: float) -> None:
    row_p = a[p, :].copy()
    row_r = a[r, :].copy()
    a[p, :] = c * row_p - s * row_r
    a[r, :] = s * row_p + c * row_r
    col_p = a[:, p].copy()
    col_r = a[:, r].copy()
    a[:, p] = c * col_p - s * col_r
    a[:, r] = s * col_p + c * col_r
    a[p, r] = 0.0
    a[r, p] = 0.0
    vec_p = q[:, p].copy()
    vec_r = q[:, r].copy()
    q[:, p] = c * vec_p - s * vec_r
    q[:, r] = s * vec_p + c * vec_r


def eig_symmetric(
    matrix,
    zero_band: float = DEFAULT_ZERO_BAND,
    off_tol: float = 1e-12,
    max_sweeps: int = 100,
) -> Spectrum:
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    The input must be symmetric within 1e-8; it is symmetrized as
    (H + H^T)/2 before iterating.  Sweeps run until the off-diagonal
    Frobenius norm drops below `off_tol` or `max_sweeps` is exhausted (the
    latter raises ConvergenceError reporting the residual).
    """
    a = np.array(matrix, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    n = a.shape[0]
    if n == 0:
        return Spectrum(np.zeros(0), np.zeros((0, 0)), zero_band, 0, 0, 0)
    asymmetry = float(np.max(np.abs(a - a.T)))
    if asymmetry > 1e-8:
        raise ValueError(f"matrix is not symmetric within 1e-8 (max |H - H^T| = {asymmetry:.3e})")
    a = 0.5 * (a + a.T)
    q = np.eye(n)

    sweeps = 0
    off = _offdiag_norm(a)
    while off >= off_tol:
        if sweeps >= max_sweeps:
            raise ConvergenceError(
                f"Jacobi iteration did not converge in {max_sweeps} sweeps "
                f"(off-diagonal residual {off:.3e})"
            )
        for p in range(n - 1):
            for r in range(p + 1, n):
                apr = a[p, r]
                if apr == 0.0:
                    continue
                tau = (a[r, r] - a[p, p]) / (2.0 * apr)
                sign = 1.0 if tau >= 0.0 else -1.0
                t = sign / (abs(tau) + math.sqrt(1.0 + tau * tau))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                _rotate(a, q, p, r, c, s)
        sweeps += 1
        off = _offdiag_norm(a)

    eigenvalues = np.diag(a).copy()
    order = np.argsort(eigenvalues, kind="stable")
    eigenvalues = eigenvalues[order]
    eigenvectors = q[:, order]
    negative, zero, positive = count_signs(eigenvalues, zero_band)
    eigenvalues.setflags(write=False)
    eigenvectors.setflags(write=False)
    return Spectrum(eigenvalues, eigenvectors, zero_band, negative, zero, positive)


def classify_stationary(spectrum: Spectrum, zero_band: float | None = None) -> str:
    """Classify a stationary point from its Hessian eigenvalue signs.

    All eigenvalues above the zero band: local minimum; all below: local
    maximum; both signs present: saddle; anything else (zeros plus at most
    one sign): degenerate.
    """
    values = spectrum.eigenvalues
    if values.size == 0:
        raise ValueError("empty spectrum")
    band = spectrum.zero_band if zero_band is None else zero_band
    negative, _zero, positive = count_signs(values, band)
    if negative == 0 and positive == values.size:
        return LOCAL_MIN
    if positive == 0 and negative == values.size:
        return LOCAL_MAX
    if negative > 0 and positive > 0:
        return SADDLE
    return DEGENERATE


@dataclass(frozen=True)
class LandscapeSlice:
    """Mean loss over a G x G grid of two parameters, all others frozen."""

    axis_i: int
    axis_j: int
    grid: np.ndarray
    ranges: tuple[tuple[float, float], tuple[float, float]]
    frozen_params: np.ndarray | None = None

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        if grid.ndim != 2 or grid.shape[0] != grid.shape[1]:
            raise ValueError(f"grid must be square, got shape {grid.shape}")
        grid = grid.copy()
        grid.setflags(write=False)
        object.__setattr__(self, "grid", grid)
        if self.frozen_params is not None:
            frozen = np.asarray(self.frozen_params, dtype=float).copy()
            frozen.setflags(write=False)
            object.__setattr__(self, "frozen_params", frozen)

    @property
    def resolution(self) -> int:
        return self.grid.shape[0]


def _normalize_ranges(axis_range) -> tuple[tuple[float, float], tuple[float, float]]:
    first = axis_range[0]
    if np.isscalar(first):
        lo, hi = float(axis_range[0]), float(axis_range[1])
        pairs = ((lo, hi), (lo, hi))
    else:
        (lo_i, hi_i), (lo_j, hi_j) = axis_range
        pairs = ((float(lo_i), float(hi_i)), (float(lo_j), float(hi_j)))
    for lo, hi in pairs:
        if not hi > lo:
            raise ValueError(f"range upper bound must exceed lower bound, got ({lo}, {hi})")
    return pairs


def landscape_slice(
    cost_fn,
    frozen_params,
    axis_i: int,
    axis_j: int,
    resolution: int = 50,
    axis_range=(-math.pi, math.pi),
) -> LandscapeSlice:
    """Evaluate `cost_fn` on a grid over two chosen parameters.

    Row r of the grid varies parameter `axis_i`, column c varies `axis_j`;
    every other coordinate comes from `frozen_params`.  `axis_range` is one
    (lo, hi) interval shared by both axes, or a pair of per-axis intervals.
    """
    frozen = np.asarray(frozen_params, dtype=float)
    if axis_i == axis_j:
        raise ValueError("slice axes must be distinct")
    for axis in (axis_i, axis_j):
        if not (0 <= axis < frozen.size):
            raise ValueError(f"axis {axis} out of range for {frozen.size} parameters")
    if resolution < 2:
        raise ValueError(f"resolution must be at least 2, got {resolution}")
    (lo_i, hi_i), (lo_j, hi_j) = _normalize_ranges(axis_range)
    ticks_i = np.linspace(lo_i, hi_i, resolution)
    ticks_j = np.linspace(lo_j, hi_j, resolution)
    grid = np.empty((resolution, resolution))
    point = frozen.copy()
    for r, vi in enumerate(ticks_i):
        point[axis_i] = vi
        for c, vj in enumerate(ticks_j):
            point[axis_j] = vj
            grid[r, c] = float(cost_fn(point))
    return LandscapeSlice(axis_i, axis_j, grid, ((lo_i, hi_i), (lo_j, hi_j)), frozen)


def descent_path_overlay(trace, axis_i: int, axis_j: int) -> list[tuple[float, float, float]]:
    """Project each iteration's parameter snapshot onto two axes with its cost.

    Accepts a TrainingTrace or any sequence of records carrying `params`
    and `cost`; iteration order is preserved and costs pass through
    unmodified.
    """
    records = getattr(trace, "records", trace)
    if not records:
        raise ValueError("trace has no records to project")
    path = []
    for record in records:
        params = getattr(record, "params", None)
        if params is None:
            raise ValueError("trace records lack parameter snapshots")
        params = np.asarray(params, dtype=float)
        for axis in (axis_i, axis_j):
            if not (0 <= axis < params.size):
                raise ValueError(f"axis {axis} out of range for {params.size} parameters")
        path.append((float(params[axis_i]), float(params[axis_j]), float(record.cost)))
    return path
