"""Monte Carlo checks that I(d) processes behave as IRF(d) and vice versa.

Every check simulates independent replicates, computes a per-replicate
statistic for several positions (shifts of a measure, or windows along a
differenced path) and compares positions pairwise.  Because the positions
share replicates, each comparison uses the paired differences across
replicates, whose mean over standard error is the reported ``z``.  A
report passes when the largest ``|z|`` stays at or below the threshold.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .errors import OrderError, PathLengthError, ValidationError
from .measure import Measure, is_allowable, shift_measure
from .process import PolynomialTrend, difference_values, eval_trend
from .spectral import DEFAULT_GRID, FrequencyGrid, SpectralModel, TimeGrid, simulate_id_paths

Z_THRESHOLD = 4.0
SEED_STRIDE = 2**32


def replicate_seeds(seed: int, n_reps: int) -> list:
    """Per-replicate seeds ``seed * 2**32 + r``; distinct masters never share a stream."""
    return [int(seed) * SEED_STRIDE + r for r in range(int(n_reps))]


class Group(NamedTuple):
    statistic: str
    shift: float
    lag: Optional[float]
    estimate: float
    se: float


@dataclass(frozen=True)
class InvarianceReport:
    statistic: str
    groups: tuple
    max_z: float
    threshold: float
    passed: bool
    n_replicates: int
    seed: Optional[int] = None
    config: dict = field(default_factory=dict)

    def __bool__(self):
        return self.passed

    def to_dict(self):
        return {
            "statistic": self.statistic,
            "groups": [g._asdict() for g in self.groups],
            "max_z": _finite_or_str(self.max_z),
            "threshold": self.threshold,
            "pass": self.passed,
            "n_replicates": self.n_replicates,
            "seed": self.seed,
            "config": self.config,
        }

    def to_json(self, **kwargs):
        return json.dumps(self.to_dict(), **kwargs)


def _finite_or_str(x):
    return x if math.isfinite(x) else str(x)


def paired_max_z(values: np.ndarray) -> float:
    """Largest ``|mean / se|`` of paired column differences of a replicates x positions array."""
    values = np.asarray(values, dtype=float)
    r = values.shape[0]
    scale = float(np.max(np.abs(values))) if values.size else 0.0
    worst = 0.0
    for i, j in combinations(range(values.shape[1]), 2):
        diff = values[:, i] - values[:, j]
        mean = float(diff.mean())
        sd = float(diff.std(ddof=1))
        if sd > 0:
            z = abs(mean) / (sd / math.sqrt(r))
        elif abs(mean) <= 1e-12 * max(scale, 1e-300):
            z = 0.0
        else:
            z = math.inf
        worst = max(worst, z)
    return worst


def _summaries(values):
    r = values.shape[0]
    return values.mean(axis=0), values.std(axis=0, ddof=1) / math.sqrt(r)


def _check_reps(n_reps):
    if int(n_reps) < 2:
        raise ValidationError("need at least two replicates")
    return int(n_reps)


def _covering_grid(locations, dt):
    lo, hi = float(np.min(locations)), float(np.max(locations))
    n = int(round((hi - lo) / dt)) + 1
    return TimeGrid(lo, float(dt), n)


def _measure_matrix(paths, measures):
    """Replicates x measures array of ``X(lambda)``; atoms must sit on the grid."""
    ref = paths[0]
    x = np.vstack([p.values for p in paths])
    cols = []
    for m in measures:
        idx = [ref.index_of(a) for a in m.locations]
        cols.append(x[:, idx] @ m.weights)
    return np.column_stack(cols)


def _invariance_from_values(mean_vals, prods, shifts, lags, threshold, n_reps, seed, config, stats):
    groups, z = [], 0.0
    if "mean" in stats:
        est, se = _summaries(mean_vals)
        groups += [Group("mean", h, None, e, s) for h, e, s in zip(shifts, est, se)]
        z = max(z, paired_max_z(mean_vals))
    if "lag-cov" in stats:
        for k, u in enumerate(lags):
            vals = prods[:, :, k]
            est, se = _summaries(vals)
            groups += [Group("lag-cov", h, u, e, s) for h, e, s in zip(shifts, est, se)]
            z = max(z, paired_max_z(vals))
    return InvarianceReport(
        ",".join(stats), tuple(groups), z, float(threshold), z <= threshold, n_reps, seed, config
    )


def shift_invariance_test(
    model: SpectralModel,
    lam: Measure,
    shifts: Sequence[float],
    lags: Sequence[float] = (0.0,),
    n_reps: int = 400,
    seed: int = 0,
    dt: float = 1.0,
    fgrid: FrequencyGrid = DEFAULT_GRID,
    z_threshold: float = Z_THRESHOLD,
    trend: Optional[PolynomialTrend] = None,
    statistics: Sequence[str] = ("mean", "lag-cov"),
    jobs: int = 1,
) -> InvarianceReport:
    """Compare moments of ``X(tau_h lam)`` across shifts ``h``.

    ``mean`` compares ``X(tau_h lam)`` itself; ``lag-cov`` compares the
    replicate-level products ``X(tau_h lam) X(tau_{h+u} lam)`` for each lag
    ``u``.  Shifts, lags and atoms must land on a grid of step ``dt``.
    """
    n_reps = _check_reps(n_reps)
    d = model.order_d
    if d >= 1 and not is_allowable(lam, d).allowable:
        raise OrderError(f"measure is not allowable at order {d}; use negative_control instead")
    shifts = [float(h) for h in shifts]
    lags = [float(u) for u in lags]
    if len(shifts) < 2:
        raise ValidationError("need at least two shifts to compare")
    stats = tuple(statistics)
    offsets = sorted({h + u for h in shifts for u in [0.0] + lags})
    grid = _covering_grid(np.add.outer(offsets, lam.locations), dt)
    paths = simulate_id_paths(model, grid, fgrid, replicate_seeds(seed, n_reps), trend, jobs)
    at = {o: j for j, o in enumerate(offsets)}
    vals = _measure_matrix(paths, [shift_measure(lam, o) for o in offsets])
    mean_vals = vals[:, [at[h] for h in shifts]]
    prods = np.stack(
        [mean_vals * vals[:, [at[h + u] for h in shifts]] for u in lags], axis=2
    )
    config = {
        "test": "shift_invariance",
        "model": model.to_dict(),
        "measure": lam.to_dict(),
        "shifts": shifts,
        "lags": lags,
        "dt": dt,
        "grid": fgrid.to_dict(),
        "trend": list(trend.coefficients) if trend is not None else None,
    }
    return _invariance_from_values(mean_vals, prods, shifts, lags, z_threshold, n_reps, seed, config, stats)


def differenced_stationarity_test(
    model: SpectralModel,
    d: int,
    iota: float,
    n_reps: int = 200,
    seed: int = 0,
    n: int = 1000,
    dt: float = 1.0,
    n_windows: int = 4,
    lags: Optional[Sequence[float]] = None,
    fgrid: FrequencyGrid = DEFAULT_GRID,
    z_threshold: float = Z_THRESHOLD,
    trend: Optional[PolynomialTrend] = None,
    jobs: int = 1,
) -> InvarianceReport:
    """Compare window means and lagged second moments of ``Delta^d_iota X``.

    The differenced path is cut into ``n_windows`` disjoint windows; for each
    replicate and window the window mean of ``Z(t)`` and of
    ``Z(t+u) Z(t)`` are computed, then windows are compared pairwise across
    replicates.  Second moments are not centred per window, so growth of the
    variance along the path is visible even without differencing.
    """
    n_reps = _check_reps(n_reps)
    d = int(d)
    m = int(round(iota / dt))
    if m < 1 or abs(m * dt - iota) > 1e-9 * dt:
        raise ValidationError("iota must be a positive multiple of dt")
    lags = [0.0, float(iota), 2.0 * float(iota)] if lags is None else [float(u) for u in lags]
    k_lags = [int(round(u / dt)) for u in lags]
    if n_windows < 3:
        raise ValidationError("need at least three windows")
    length = int(n) - d * m
    win = length // n_windows if length > 0 else 0
    if win <= max(k_lags, default=0) + 1:
        raise PathLengthError(f"path of {n} points is too short for {n_windows} windows")
    grid = TimeGrid(0.0, float(dt), int(n))
    paths = simulate_id_paths(model, grid, fgrid, replicate_seeds(seed, n_reps), trend, jobs)
    z = difference_values(np.vstack([p.values for p in paths]), d, m)
    starts = [j * win for j in range(n_windows)]
    means = np.column_stack([z[:, s : s + win].mean(axis=1) for s in starts])
    prods = np.empty((n_reps, n_windows, len(lags)))
    for k, u in enumerate(k_lags):
        for j, s in enumerate(starts):
            seg = z[:, s : s + win]
            prods[:, j, k] = np.mean(seg[:, u:] * seg[:, : win - u], axis=1)
    positions = [float(grid.t0 + (d * m + s) * dt) for s in starts]
    config = {
        "test": "differenced_stationarity",
        "model": model.to_dict(),
        "d": d,
        "iota": float(iota),
        "n": int(n),
        "dt": float(dt),
        "n_windows": int(n_windows),
        "lags": lags,
        "grid": fgrid.to_dict(),
    }
    return _invariance_from_values(
        means, prods, positions, lags, z_threshold, n_reps, seed, config, ("mean", "lag-cov")
    )


def negative_control(
    model: SpectralModel,
    lam_bad: Measure,
    shifts: Sequence[float],
    n_reps: int = 400,
    seed: int = 0,
    trend: Optional[PolynomialTrend] = None,
    target_z: float = 8.0,
    dt: float = 1.0,
    fgrid: FrequencyGrid = DEFAULT_GRID,
    z_threshold: float = Z_THRESHOLD,
    jobs: int = 1,
) -> InvarianceReport:
    """Mean comparison of ``X(tau_h lam_bad)`` with a polynomial trend injected.

    Without an explicit ``trend`` a monomial ``a t^k`` with
    ``k = max(d - 1, 1)`` is used, ``a`` chosen so the deterministic spread of
    the means across shifts is ``target_z`` paired standard errors of the
    trend-free run with the same seeds.  A measure that leaves the trend
    unannihilated must then fail; the caller asserts the failure.
    """
    n_reps = _check_reps(n_reps)
    shifts = [float(h) for h in shifts]
    if len(shifts) < 2:
        raise ValidationError("need at least two shifts to compare")
    grid = _covering_grid(np.add.outer(shifts, lam_bad.locations), dt)
    seeds = replicate_seeds(seed, n_reps)
    shifted = [shift_measure(lam_bad, h) for h in shifts]
    if trend is None:
        k = max(model.order_d - 1, 1)
        unit = PolynomialTrend((0.0,) * k + (1.0,))
        means = [float(lam_bad.weights @ eval_trend(unit, m.locations)) for m in shifted]
        lo, hi = int(np.argmin(means)), int(np.argmax(means))
        gap = means[hi] - means[lo]
        coef = 1.0
        if gap > 0:
            noise = _measure_matrix(simulate_id_paths(model, grid, fgrid, seeds, None, jobs), shifted)
            se = float(np.std(noise[:, hi] - noise[:, lo], ddof=1)) / math.sqrt(n_reps)
            coef = target_z * se / gap if se > 0 else 1.0
        trend = PolynomialTrend((0.0,) * k + (coef,))
    paths = simulate_id_paths(model, grid, fgrid, seeds, trend, jobs)
    vals = _measure_matrix(paths, shifted)
    config = {
        "test": "negative_control",
        "model": model.to_dict(),
        "measure": lam_bad.to_dict(),
        "shifts": shifts,
        "dt": dt,
        "grid": fgrid.to_dict(),
        "trend": list(trend.coefficients),
    }
    return _invariance_from_values(vals, None, shifts, [], z_threshold, n_reps, seed, config, ("mean",))
