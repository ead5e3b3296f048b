"""Sampled paths on uniform grids, differencing and structure functions."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Optional, Sequence

import numpy as np
from scipy.special import comb

from .errors import AlignmentError, PathLengthError, ValidationError
from .measure import Measure

GRID_TOL = 1e-9


@dataclass(frozen=True)
class SampledPath:
    """A realization ``X(t0 + j*dt)``, ``j = 0..n-1``, on a uniform grid."""

    t0: float
    dt: float
    values: np.ndarray
    order_d: int = 0
    seed: Optional[int] = None
    model_id: Optional[str] = None

    def __post_init__(self):
        v = np.array(self.values, dtype=float).ravel()
        if v.size < 1:
            raise ValidationError("a path needs at least one value")
        if not np.all(np.isfinite(v)):
            raise ValidationError("path values must be finite")
        if not (np.isfinite(self.dt) and self.dt > 0):
            raise ValidationError("grid step dt must be positive")
        if not np.isfinite(self.t0):
            raise ValidationError("grid origin t0 must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "t0", float(self.t0))
        object.__setattr__(self, "dt", float(self.dt))
        object.__setattr__(self, "order_d", int(self.order_d))

    @property
    def n(self):
        return self.values.size

    @property
    def t(self):
        return self.t0 + self.dt * np.arange(self.n)

    def index_of(self, x: float) -> int:
        """Grid index of location ``x``; raises when ``x`` is off the grid."""
        k = (float(x) - self.t0) / self.dt
        j = int(round(k))
        if abs(k - j) > GRID_TOL or not 0 <= j < self.n:
            raise AlignmentError(
                f"location {x!r} is not a grid point of t0={self.t0}, dt={self.dt}, n={self.n}"
            )
        return j


@dataclass(frozen=True)
class PolynomialTrend:
    """Deterministic polynomial ``sum_i a_i t**i``."""

    coefficients: tuple = field(default=(0.0,))

    def __post_init__(self):
        c = tuple(float(a) for a in np.atleast_1d(self.coefficients))
        object.__setattr__(self, "coefficients", c or (0.0,))

    @property
    def degree(self):
        nz = np.flatnonzero(self.coefficients)
        return int(nz[-1]) if nz.size else 0

    def __call__(self, t):
        return eval_trend(self, t)


def eval_trend(p: PolynomialTrend, t):
    """Horner evaluation of ``p`` at ``t`` (scalar or array)."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    for a in reversed(p.coefficients):
        out = out * t + a
    return float(out) if out.ndim == 0 else out


def sample_trend(p: PolynomialTrend, t0: float, dt: float, n: int) -> SampledPath:
    """Path holding the values of ``p`` on a grid."""
    t = t0 + dt * np.arange(n)
    return SampledPath(t0, dt, eval_trend(p, t), 0)


def difference_values(values: np.ndarray, d: int, m: int) -> np.ndarray:
    """d-th backward difference with lag ``m`` samples along the last axis."""
    values = np.asarray(values, dtype=float)
    n = values.shape[-1]
    span = d * m
    if n <= span:
        raise PathLengthError(f"need more than {span} samples, got {n}")
    out = np.zeros(values.shape[:-1] + (n - span,))
    for k in range(d + 1):
        c = (-1) ** k * comb(d, k, exact=True)
        out += c * values[..., span - k * m : n - k * m]
    return out


def difference(path: SampledPath, d: int, m: int = 1) -> SampledPath:
    """Apply the d-th difference with lag ``iota = m*dt``.

    Output index ``j`` holds ``sum_k (-1)**k C(d,k) X(t_{j+dm} - k*iota)``; the
    new grid starts at ``t0 + d*m*dt``.
    """
    d, m = int(d), int(m)
    if d < 0:
        raise ValidationError("difference order must be nonnegative")
    if m < 1:
        raise ValidationError("lag multiple m must be positive")
    if d == 0:
        return path
    return replace(
        path,
        t0=path.t0 + d * m * path.dt,
        values=difference_values(path.values, d, m),
        order_d=max(path.order_d - d, 0),
    )


def apply_measure_to_path(m: Measure, path: SampledPath) -> float:
    """``X(lambda) = sum_i w_i X(x_i)``; every atom must lie on the grid."""
    idx = [path.index_of(x) for x in m.locations]
    return float(np.dot(m.weights, path.values[idx]))


class StructureEstimate(NamedTuple):
    """Empirical structure function: lags in time units, estimates, SEs."""

    lags: np.ndarray
    estimate: np.ndarray
    se: np.ndarray

    def rows(self):
        return list(zip(self.lags.tolist(), self.estimate.tolist(), self.se.tolist()))


def _stack(paths: Sequence[SampledPath]):
    if len(paths) == 0:
        raise ValidationError("empty path set")
    first = paths[0]
    for p in paths[1:]:
        if p.n != first.n or not np.isclose(p.dt, first.dt, rtol=GRID_TOL, atol=0):
            raise ValidationError("all paths must share dt and length")
    return np.vstack([p.values for p in paths]), first.dt


def lagged_products(z: np.ndarray, lags: Sequence[int]) -> np.ndarray:
    """Per-row time averages of ``z[t+u] * z[t]`` for each lag ``u``.

    Returns an array of shape ``(rows, len(lags))``.  Negative lags give the
    same average as their absolute value.
    """
    z = np.atleast_2d(z)
    length = z.shape[1]
    out = np.empty((z.shape[0], len(lags)))
    for j, u in enumerate(lags):
        u = abs(int(u))
        if u >= length:
            raise PathLengthError(f"lag {u} exceeds differenced length {length}")
        out[:, j] = np.mean(z[:, u:] * z[:, : length - u], axis=1)
    return out


def empirical_structure_function(
    paths: Sequence[SampledPath], d: int, m: int, lags: Sequence[int]
) -> StructureEstimate:
    """Estimate ``D^d(h; iota, iota)`` with ``iota = m*dt`` at ``h = lag*dt``.

    Each replicate contributes its time average of
    ``Delta^d X(t+h) * Delta^d X(t)``; the estimate is the mean over
    replicates and the standard error comes from the spread of those
    replicate means alone.
    """
    values, dt = _stack(paths)
    lags = [int(u) for u in lags]
    z = difference_values(values, int(d), int(m))
    per_rep = lagged_products(z, lags)
    est = per_rep.mean(axis=0)
    r = per_rep.shape[0]
    se = per_rep.std(axis=0, ddof=1) / np.sqrt(r) if r > 1 else np.full(len(lags), np.nan)
    return StructureEstimate(np.asarray(lags) * dt, est, se)


# -- CSV ------------------------------------------------------------------

def _fmt(x):
    return format(float(x), ".17g")


def _check_uniform(t):
    t = np.asarray(t, dtype=float)
    if t.size < 2:
        return 1.0
    steps = np.diff(t)
    dt = (t[-1] - t[0]) / (t.size - 1)
    if not dt > 0 or np.max(np.abs(steps - dt)) > GRID_TOL * max(abs(dt), np.max(np.abs(t))):
        raise ValidationError("time column is not a uniform increasing grid")
    return float(dt)


def write_path_csv(path: SampledPath, fh=None) -> str:
    """Write ``t,value`` rows; returns the text when ``fh`` is None."""
    buf = fh if fh is not None else io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "value"])
    for t, v in zip(path.t, path.values):
        w.writerow([_fmt(t), _fmt(v)])
    return buf.getvalue() if fh is None else ""


def write_paths_csv(paths: Sequence[SampledPath], fh=None) -> str:
    """Write ``replicate,t,value`` rows for several paths."""
    buf = fh if fh is not None else io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["replicate", "t", "value"])
    for r, p in enumerate(paths):
        for t, v in zip(p.t, p.values):
            w.writerow([r, _fmt(t), _fmt(v)])
    return buf.getvalue() if fh is None else ""


def _rows(fh):
    reader = csv.reader(fh)
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise ValidationError("empty CSV") from None
    return header, [row for row in reader if row]


def read_paths_csv(fh, order_d: int = 0) -> list:
    """Read a ``t,value`` or ``replicate,t,value`` file into paths."""
    header, rows = _rows(fh)
    try:
        if header == ["t", "value"]:
            groups = {0: [(float(t), float(v)) for t, v in rows]}
        elif header == ["replicate", "t", "value"]:
            groups = {}
            for r, t, v in rows:
                groups.setdefault(int(r), []).append((float(t), float(v)))
        else:
            raise ValidationError(f"unexpected CSV header {header}")
    except ValueError as exc:
        if isinstance(exc, ValidationError):
            raise
        raise ValidationError(f"malformed CSV row: {exc}") from None
    paths = []
    for r in sorted(groups):
        tv = np.array(groups[r])
        if tv.size == 0:
            raise ValidationError(f"replicate {r} has no rows")
        dt = _check_uniform(tv[:, 0])
        paths.append(SampledPath(tv[0, 0], dt, tv[:, 1], order_d))
    return paths
