"""Intrinsic (generalized) covariance functions and their structure functions."""

from __future__ import annotations

import json
from typing import Callable, Sequence

import numpy as np
from scipy.special import comb

from .errors import OrderError, RangeError, ValidationError
from .measure import Measure, is_allowable
from .spectral import DEFAULT_GRID, FrequencyGrid, SpectralModel, theoretical_stationary_cov

KINDS = ("brownian", "from-spectral", "tabulated")


class IntrinsicCovariance:
    """A stationary kernel ``K(h)`` together with the order it is valid for.

    ``K`` only determines covariances of ``X(lambda)`` for measures that are
    allowable at ``order``; :func:`cov_between_measures` enforces this.  Use
    the constructors :meth:`brownian`, :meth:`from_spectral` and
    :meth:`tabulated` rather than the raw initializer.
    """

    def __init__(self, kind: str, params: dict, evaluator: Callable, order: int):
        if kind not in KINDS:
            raise ValidationError(f"unknown ICF kind {kind!r}")
        self.kind = kind
        self.params = params
        self._evaluator = evaluator
        self.order = int(order)

    def __call__(self, h):
        return icf_eval(self, h)

    def __repr__(self):
        return f"IntrinsicCovariance(kind={self.kind!r}, order={self.order})"

    @classmethod
    def brownian(cls, C: float = 1.0):
        """``K(h) = -C |h| / 2``, order 1.

        Any allowable ``lambda`` of order 1 then has
        ``Var X(lambda) = sum w_i w_j K(x_i - x_j)`` equal to the Brownian
        value; in particular ``2K(0) - 2K(iota) = C |iota|``.
        """
        C = float(C)
        if not C > 0:
            raise ValidationError("Brownian constant C must be positive")
        return cls("brownian", {"C": C}, lambda h: -0.5 * C * np.abs(h), 1)

    @classmethod
    def from_spectral(cls, model: SpectralModel, fgrid: FrequencyGrid = DEFAULT_GRID):
        """``K(h) = int e^{iwh} f(w) dw`` with ``f = f_y / w^{2d}`` on ``fgrid``.

        For ``d >= 1`` the grid value carries a large constant of order
        ``eps^{1-2d}`` that allowable measures cancel; only increments are
        meaningful.
        """
        return cls(
            "from-spectral",
            {"model": model, "fgrid": fgrid},
            lambda h: theoretical_stationary_cov(model.density, fgrid, h),
            model.order_d,
        )

    @classmethod
    def tabulated(cls, h: Sequence[float], K: Sequence[float], order: int = 0):
        """Piecewise-linear kernel through ``(h_j, K_j)`` with ``h_0 = 0``.

        Knots are nonnegative lags; evaluation uses ``|h|`` and refuses
        anything beyond the last knot.
        """
        hk = np.asarray(h, dtype=float).ravel()
        kk = np.asarray(K, dtype=float).ravel()
        if hk.shape != kk.shape or hk.size < 2:
            raise ValidationError("tabulated ICF needs matching h and K with at least two knots")
        if hk[0] != 0 or np.any(np.diff(hk) <= 0):
            raise ValidationError("tabulated lags must start at 0 and increase strictly")
        if not (np.all(np.isfinite(hk)) and np.all(np.isfinite(kk))):
            raise ValidationError("tabulated values must be finite")
        hmax = hk[-1]

        def evaluate(x):
            a = np.abs(x)
            if np.any(a > hmax * (1 + 1e-12)):
                raise RangeError(f"lag beyond tabulated range [0, {hmax}]")
            return np.interp(a, hk, kk)

        return cls("tabulated", {"h": hk.tolist(), "K": kk.tolist()}, evaluate, order)

    def to_dict(self):
        if self.kind == "brownian":
            return {"kind": "brownian", "C": self.params["C"]}
        if self.kind == "tabulated":
            return {"kind": "tabulated", "h": self.params["h"], "K": self.params["K"], "order": self.order}
        return {
            "kind": "from-spectral",
            "model": self.params["model"].to_dict(),
            "grid": self.params["fgrid"].to_dict(),
        }

    @classmethod
    def from_dict(cls, data):
        try:
            kind = data["kind"]
            if kind == "brownian":
                return cls.brownian(float(data["C"]))
            if kind == "tabulated":
                return cls.tabulated(data["h"], data["K"], int(data.get("order", 0)))
            if kind == "from-spectral":
                grid = FrequencyGrid.from_dict(data["grid"]) if "grid" in data else DEFAULT_GRID
                return cls.from_spectral(SpectralModel.from_dict(data["model"]), grid)
        except (KeyError, TypeError, AttributeError) as exc:
            raise ValidationError(f"malformed ICF record: {exc}") from None
        raise ValidationError(f"unknown ICF kind {data.get('kind')!r}")

    def to_json(self, **kwargs):
        return json.dumps(self.to_dict(), **kwargs)


def icf_eval(K: IntrinsicCovariance, h):
    """Evaluate ``K`` at scalar or array ``h``."""
    out = np.asarray(K._evaluator(np.asarray(h, dtype=float)), dtype=float)
    if not np.all(np.isfinite(out)):
        raise ValidationError("ICF produced a non-finite value")
    return float(out) if out.ndim == 0 else out


def _check_order(K, m, name):
    if K.order >= 1:
        rep = is_allowable(m, K.order)
        if not rep.allowable:
            raise OrderError(
                f"{name} is not allowable at order {K.order} "
                f"(normalized defects {rep.normalized}); its covariance is not drift-free"
            )


def cov_between_measures(K: IntrinsicCovariance, lam1: Measure, lam2: Measure) -> float:
    """``Cov(X(lam1), X(lam2)) = sum_i sum_j w1_i w2_j K(x1_i - x2_j)``."""
    _check_order(K, lam1, "lambda1")
    _check_order(K, lam2, "lambda2")
    kmat = icf_eval(K, np.subtract.outer(lam1.locations, lam2.locations))
    return float(lam1.weights @ np.atleast_2d(kmat) @ lam2.weights)


def gram_matrix(K: IntrinsicCovariance, measures: Sequence[Measure]) -> np.ndarray:
    """Matrix of :func:`cov_between_measures` over a family of measures."""
    n = len(measures)
    out = np.empty((n, n))
    for i in range(n):
        for j in range(i, n):
            out[i, j] = out[j, i] = cov_between_measures(K, measures[i], measures[j])
    return out


def brownian_cov(t, s, C: float = 1.0):
    """Covariance of Brownian motion pinned at 0: ``C min(|t|,|s|)`` if ``ts >= 0`` else 0."""
    if not C > 0:
        raise ValidationError("Brownian constant C must be positive")
    t = np.asarray(t, dtype=float)
    s = np.asarray(s, dtype=float)
    out = np.where(t * s >= 0, C * np.minimum(np.abs(t), np.abs(s)), 0.0)
    return float(out) if out.ndim == 0 else out


def variogram_brownian(iota, C: float = 1.0):
    """``E[(X(t) - X(t - iota))^2] = C |iota|``."""
    if not C > 0:
        raise ValidationError("Brownian constant C must be positive")
    out = C * np.abs(np.asarray(iota, dtype=float))
    return float(out) if out.ndim == 0 else out


def _binomial_weights(d):
    k = np.arange(d + 1)
    return k, (-1.0) ** k * comb(d, k)


def structure_from_icf(K: IntrinsicCovariance, d: int, iota1: float, iota2: float, tau):
    """``E[Delta^d_{iota1} X(t) Delta^d_{iota2} X(s)]`` from ``K`` with ``tau = t - s``.

    Double binomial sum of ``K(tau - k1 iota1 + k2 iota2)``.
    """
    d = int(d)
    if d < 1:
        raise ValidationError("order d must be at least 1")
    k, c = _binomial_weights(d)
    tau = np.asarray(tau, dtype=float)
    offsets = -k[:, None] * float(iota1) + k[None, :] * float(iota2)
    vals = icf_eval(K, tau[..., None, None] + offsets)
    out = np.einsum("i,...ij,j->...", c, vals, c)
    return float(out) if out.ndim == 0 else out


def psd_check(values, sym_tol: float = 1e-10, eig_tol: float = 1e-8):
    """Return ``(is_psd, min_eigenvalue)`` for a symmetric matrix.

    Passes when the smallest eigenvalue is at least ``-eig_tol`` times the
    largest.  Asymmetry beyond ``sym_tol`` (relative to the largest entry)
    raises :class:`ValidationError`.
    """
    a = np.atleast_2d(np.asarray(values, dtype=float))
    if a.shape[0] != a.shape[1]:
        raise ValidationError("PSD check needs a square matrix")
    scale = max(1.0, float(np.max(np.abs(a)))) if a.size else 1.0
    if np.max(np.abs(a - a.T)) > sym_tol * scale:
        raise ValidationError("matrix is not symmetric")
    ev = np.linalg.eigvalsh(0.5 * (a + a.T))
    lo, hi = float(ev[0]), float(ev[-1])
    return lo >= -eig_tol * max(hi, 0.0), lo
