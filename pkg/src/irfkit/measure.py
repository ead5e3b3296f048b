"""Finite discrete signed measures on the real line.

A measure ``sum_i w_i delta_{x_i}`` is *allowable of order d* when it
annihilates every polynomial of degree below ``d``, i.e.
``sum_i w_i x_i**l == 0`` for ``l = 0, ..., d-1``.  Such measures are the
linear combinations under which an intrinsic random function of order ``d``
has shift-invariant moments.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.special import comb

from .errors import EvaluationError, InfeasibleSupportError, OrderError, ValidationError

TOL_ANNIHILATION = 1e-10
MERGE_TOL = 1e-12


@dataclass(frozen=True)
class AllowabilityReport:
    """Outcome of :func:`is_allowable`.

    ``defects[l]`` is the raw moment ``sum_i w_i x_i**l`` and
    ``normalized[l]`` the same value divided by :func:`moment_scale`.
    """

    allowable: bool
    order: int
    tol: float
    defects: tuple
    normalized: tuple

    def __bool__(self):
        return self.allowable

    def to_dict(self):
        return {
            "allowable": self.allowable,
            "order": self.order,
            "tol": self.tol,
            "defects": list(self.defects),
            "normalized": list(self.normalized),
        }


@dataclass(frozen=True)
class Measure:
    """Immutable finite discrete measure.

    Parameters
    ----------
    locations : array_like
        Strictly increasing, finite atom locations.
    weights : array_like
        Finite weights, at least one nonzero.
    order : int
        Claimed annihilation order ``d``; ``0`` means no claim.  A positive
        claim is checked at construction with tolerance ``TOL_ANNIHILATION``.

    Use :meth:`from_atoms` to build a measure from unsorted atoms with
    merging of coincident locations.
    """

    locations: np.ndarray
    weights: np.ndarray
    order: int = 0

    def __post_init__(self):
        x = np.array(self.locations, dtype=float).ravel()
        w = np.array(self.weights, dtype=float).ravel()
        if x.shape != w.shape:
            raise ValidationError("locations and weights must have the same length")
        if x.size == 0:
            raise ValidationError("a measure needs at least one atom")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(w))):
            raise ValidationError("atom locations and weights must be finite")
        if np.any(np.diff(x) <= 0):
            raise ValidationError("atom locations must be strictly increasing")
        if not np.any(w != 0):
            raise ValidationError("at least one weight must be nonzero")
        order = int(self.order)
        if order < 0:
            raise ValidationError("order must be nonnegative")
        x.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "locations", x)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "order", order)
        if order >= 1:
            report = is_allowable(self, order)
            if not report.allowable:
                raise OrderError(
                    f"measure does not annihilate polynomials of degree < {order}: "
                    f"normalized defects {report.normalized}"
                )

    @classmethod
    def from_atoms(cls, atoms, order=0):
        """Build a measure from ``(location, weight)`` pairs in any order.

        Atoms closer than ``MERGE_TOL`` are summed into one atom placed at
        the first location of the run.
        """
        atoms = [(float(x), float(w)) for x, w in atoms]
        if not atoms:
            raise ValidationError("a measure needs at least one atom")
        atoms.sort(key=lambda a: a[0])
        xs, ws = [atoms[0][0]], [atoms[0][1]]
        for x, w in atoms[1:]:
            if abs(x - xs[-1]) < MERGE_TOL:
                ws[-1] += w
            else:
                xs.append(x)
                ws.append(w)
        return cls(np.array(xs), np.array(ws), order)

    @property
    def atoms(self):
        return list(zip(self.locations.tolist(), self.weights.tolist()))

    def __len__(self):
        return self.locations.size

    def __eq__(self, other):
        if not isinstance(other, Measure):
            return NotImplemented
        return (
            self.order == other.order
            and np.array_equal(self.locations, other.locations)
            and np.array_equal(self.weights, other.weights)
        )

    def __hash__(self):
        return hash((self.order, self.locations.tobytes(), self.weights.tobytes()))

    def scaled(self, factor):
        """Measure with every weight multiplied by ``factor``."""
        return Measure(self.locations, self.weights * float(factor), self.order)

    def to_dict(self):
        return {"order": self.order, "atoms": [[x, w] for x, w in self.atoms]}

    def to_json(self, **kwargs):
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, data):
        try:
            atoms = data["atoms"]
            order = int(data.get("order", 0))
        except (KeyError, TypeError, AttributeError) as exc:
            raise ValidationError(f"malformed measure record: {exc}") from None
        if any(len(a) != 2 for a in atoms):
            raise ValidationError("each atom must be a [location, weight] pair")
        return cls.from_atoms(atoms, order)

    @classmethod
    def from_json(cls, text):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"invalid measure JSON: {exc}") from None
        return cls.from_dict(data)


def apply_measure(m: Measure, f: Callable[[float], float]) -> float:
    """Integrate ``f`` against ``m``: ``sum_i w_i f(x_i)``."""
    total = 0.0
    for x, w in zip(m.locations, m.weights):
        fx = float(f(float(x)))
        if not math.isfinite(fx):
            raise EvaluationError(f"f is not finite at location {x!r}")
        total += w * fx
    return total


def _power(x, ell):
    with np.errstate(over="raise", invalid="raise"):
        try:
            return np.power(x, ell)
        except FloatingPointError:
            raise EvaluationError(
                f"overflow evaluating |x|**{ell} on the support"
            ) from None


def annihilation_defect(m: Measure, ell: int) -> float:
    """Raw moment ``sum_i w_i x_i**ell`` (with ``0**0 == 1``)."""
    ell = int(ell)
    if ell < 0:
        raise ValidationError("moment degree must be nonnegative")
    powers = _power(m.locations, ell) if ell else np.ones_like(m.locations)
    value = float(np.dot(m.weights, powers))
    if not math.isfinite(value):
        raise EvaluationError(f"moment of degree {ell} overflowed")
    return value


def moment_scale(m: Measure, ell: int) -> float:
    """Natural size of the degree-``ell`` moment: ``sum |w_i| max(1,|x_i|)**ell``."""
    base = np.maximum(1.0, np.abs(m.locations))
    return float(np.dot(np.abs(m.weights), _power(base, int(ell))))


def is_allowable(m: Measure, d: int, tol: float = TOL_ANNIHILATION) -> AllowabilityReport:
    """Check that ``m`` annihilates the monomials ``1, x, ..., x**(d-1)``."""
    d = int(d)
    if d < 1:
        raise ValidationError("order d must be at least 1")
    if not tol > 0:
        raise ValidationError("tolerance must be positive")
    defects = tuple(annihilation_defect(m, ell) for ell in range(d))
    normalized = tuple(abs(v) / moment_scale(m, ell) for ell, v in enumerate(defects))
    ok = all(v <= tol for v in normalized)
    return AllowabilityReport(ok, d, float(tol), defects, normalized)


def max_order(m: Measure, tol: float = TOL_ANNIHILATION) -> int:
    """Largest ``d`` for which ``m`` is allowable (0 when not even of order 1).

    A nonzero measure on ``n`` atoms cannot annihilate ``1, ..., x**(n-1)``
    simultaneously, so the search stops at ``n - 1``.
    """
    d = 0
    while d < len(m) - 1 and is_allowable(m, d + 1, tol).allowable:
        d += 1
    return d


def shift_measure(m: Measure, h: float) -> Measure:
    """Translate every atom by ``h``; weights and order are unchanged."""
    return Measure(m.locations + float(h), m.weights, m.order)


def finite_difference_measure(d: int, iota: float, t: float = 0.0) -> Measure:
    """Measure of the d-th backward difference with lag ``iota`` at ``t``.

    Atoms sit at ``t - k*iota`` with weights ``(-1)**k * C(d, k)``.
    """
    d = int(d)
    if d < 0:
        raise ValidationError("difference order must be nonnegative")
    if not iota > 0:
        raise ValidationError("lag iota must be positive")
    k = np.arange(d + 1)
    weights = (-1.0) ** k * comb(d, k, exact=False)
    locations = float(t) - k * float(iota)
    return Measure(locations[::-1], weights[::-1], d)


def construct_allowable(points: Sequence[float], d: int) -> Measure:
    """Canonical allowable measure of order ``d`` supported on ``points``.

    The weight vector lies in the null space of the moment system
    ``sum_i w_i x_i**l = 0`` (``l < d``).  Among null-space vectors it is the
    projection of the unit vector on the largest point, normalized to unit
    Euclidean length; its last weight is therefore positive, matching the
    orientation of :func:`finite_difference_measure`.  Moments are formed
    on affinely rescaled points, which leaves the null space unchanged and
    keeps the Vandermonde block well conditioned.
    """
    d = int(d)
    if d < 1:
        raise ValidationError("order d must be at least 1")
    x = np.sort(np.asarray(points, dtype=float).ravel())
    if not np.all(np.isfinite(x)):
        raise ValidationError("support points must be finite")
    if np.any(np.diff(x) < MERGE_TOL):
        raise ValidationError("support points must be distinct")
    n = x.size
    if n <= d:
        raise InfeasibleSupportError(
            f"{n} points cannot carry a nonzero measure of order {d}; need at least {d + 1}"
        )
    center = 0.5 * (x[0] + x[-1])
    half = 0.5 * (x[-1] - x[0]) or 1.0
    u = (x - center) / half
    moments = np.vander(u, d, increasing=True).T  # d x n
    _, _, vt = np.linalg.svd(moments)
    null = vt[d:].T  # n x (n - d), orthonormal
    w = null @ null[-1]
    w /= np.linalg.norm(w)
    if w[-1] < 0:
        w = -w
    m = Measure(x, w, 0)
    if not is_allowable(m, d).allowable:
        raise EvaluationError("null-space weights failed the annihilation check")
    return Measure(x, w, d)


def kriging_measure(weights: Sequence[float], obs: Sequence[float], t0: float) -> Measure:
    """The prediction-error measure ``sum_i eta_i delta_{t_i} - delta_{t0}``.

    Its ``order`` is the largest drift order the weights satisfy.  When the
    weights cancel the target atom exactly (exact interpolation at an
    observation) the error is the zero measure, which is not representable;
    a :class:`ValidationError` says so.
    """
    eta = np.asarray(weights, dtype=float).ravel()
    t = np.asarray(obs, dtype=float).ravel()
    if eta.shape != t.shape:
        raise ValidationError("weights and observation locations differ in length")
    atoms = list(zip(t.tolist(), eta.tolist())) + [(float(t0), -1.0)]
    if not (np.all(np.isfinite(eta)) and np.all(np.isfinite(t)) and np.isfinite(t0)):
        raise ValidationError("weights and locations must be finite")
    try:
        m = Measure.from_atoms(atoms, 0)
    except ValidationError:
        # finite, merged and sorted atoms can only fail by cancelling out
        raise ValidationError("prediction error measure is identically zero (t0 is an observation)") from None
    return Measure(m.locations, m.weights, max_order(m))
