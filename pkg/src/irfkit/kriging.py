"""Universal kriging on the real line with polynomial drift.

The predictor ``sum_i eta_i X(t_i)`` of ``X(t0)`` is unbiased for every
drift of degree below ``d`` exactly when the error measure
``sum_i eta_i delta_{t_i} - delta_{t0}`` is allowable of order ``d``, i.e.
``Q^T eta = q0`` with ``Q[i] = (1, t_i, ..., t_i^{d-1})`` and
``q0 = (1, t0, ..., t0^{d-1})``.  Minimizing

    M(eta) = s2 eta^T eta + eta^T Psi eta - 2 eta^T phi + K(0)

under that constraint gives the kriging weights.
"""

from __future__ import annotations

import json
import logging
import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
import scipy.linalg as spl
from scipy.special import comb

from .covariance import IntrinsicCovariance, icf_eval
from .errors import SingularSystemError, ValidationError

log = logging.getLogger(__name__)

JITTER = 1e-10
# reciprocal-condition floor below which a factorization counts as failed
RCOND_MIN = 1e3 * np.finfo(float).eps
COINCIDE_TOL = 1e-12


@dataclass(frozen=True)
class KrigingProblem:
    obs_t: np.ndarray
    obs_x: np.ndarray
    d: int
    K: IntrinsicCovariance
    nugget: float = 0.0

    def __post_init__(self):
        t = np.array(self.obs_t, dtype=float).ravel()
        x = np.array(self.obs_x, dtype=float).ravel()
        d = int(self.d)
        if t.shape != x.shape:
            raise ValidationError("obs_t and obs_x differ in length")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(x))):
            raise ValidationError("observations must be finite")
        if np.any(np.diff(t) <= 0):
            raise ValidationError("observation locations must be strictly increasing (no duplicates)")
        if d < 1:
            raise ValidationError("drift order d must be at least 1")
        if t.size < d:
            raise ValidationError(f"{t.size} observations cannot satisfy {d} drift constraints")
        if not (math.isfinite(self.nugget) and self.nugget >= 0):
            raise ValidationError("nugget must be a finite nonnegative variance")
        t.setflags(write=False)
        x.setflags(write=False)
        object.__setattr__(self, "obs_t", t)
        object.__setattr__(self, "obs_x", x)
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "nugget", float(self.nugget))

    @property
    def n(self):
        return self.obs_t.size

    def to_dict(self):
        return {
            "t": self.obs_t.tolist(),
            "x": self.obs_x.tolist(),
            "d": self.d,
            "icf": self.K.to_dict(),
            "nugget": self.nugget,
        }

    @classmethod
    def from_dict(cls, data):
        try:
            K = IntrinsicCovariance.from_dict(data["icf"])
            return cls(data["t"], data["x"], int(data["d"]), K, float(data.get("nugget", 0.0)))
        except (KeyError, TypeError, AttributeError) as exc:
            raise ValidationError(f"malformed kriging problem: {exc}") from None

    @classmethod
    def from_json(cls, text):
        try:
            return cls.from_dict(json.loads(text))
        except json.JSONDecodeError as exc:
            raise ValidationError(f"invalid problem JSON: {exc}") from None


class KrigingSystem(NamedTuple):
    Psi: np.ndarray
    phi: np.ndarray
    Q: np.ndarray
    q0: np.ndarray
    k0: float


@dataclass(frozen=True)
class KrigingSolution:
    weights: np.ndarray
    multipliers: np.ndarray
    prediction: float
    kriging_variance: float
    t0: float = math.nan


def drift_basis(t, d, center=0.0, scale=1.0):
    """Rows ``(1, u, ..., u^{d-1})`` with ``u = (t - center) / scale``."""
    u = (np.atleast_1d(np.asarray(t, dtype=float)) - center) / scale
    return np.vander(u, int(d), increasing=True)


def build_system(p: KrigingProblem, t0: float, center: float = 0.0, scale: float = 1.0) -> KrigingSystem:
    """Assemble ``Psi = K(t_i - t_j)``, ``phi = K(t_i - t0)``, ``Q`` and ``q0``.

    ``center``/``scale`` re-express the drift monomials in ``(t - center) / scale``;
    this changes ``Q`` and ``q0`` by the same invertible map and leaves the
    weights unchanged.
    """
    t = p.obs_t
    Psi = np.atleast_2d(icf_eval(p.K, np.subtract.outer(t, t)))
    phi = np.atleast_1d(icf_eval(p.K, t - float(t0)))
    Q = drift_basis(t, p.d, center, scale)
    q0 = drift_basis(float(t0), p.d, center, scale)[0]
    return KrigingSystem(Psi, phi, Q, q0, float(icf_eval(p.K, 0.0)))


def _scale_of(system):
    return max(abs(system.k0), float(np.max(np.abs(system.Psi))) if system.Psi.size else 0.0)


def _lu(a):
    with np.errstate(all="ignore"), warnings.catch_warnings():
        warnings.simplefilter("ignore", spl.LinAlgWarning)
        try:
            lu, piv = spl.lu_factor(a, check_finite=True)
        except (ValueError, spl.LinAlgError):
            return None
    diag = np.abs(np.diag(lu))
    if diag.size and (diag.min() == 0 or diag.min() / diag.max() < RCOND_MIN):
        return None
    return lu, piv


def _factor_covariance(system, nugget):
    n = system.phi.size
    a = system.Psi + nugget * np.eye(n)
    f = _lu(a)
    if f is None:
        jitter = JITTER * _scale_of(system)
        if jitter == 0:
            raise SingularSystemError("covariance", "Psi + nugget*I vanishes identically")
        log.warning("covariance block factorization failed; retrying with jitter %.3g", jitter)
        f = _lu(a + jitter * np.eye(n))
        if f is None:
            raise SingularSystemError("covariance", "Psi + nugget*I is singular even after jitter")
    return f


def solve_closed_form(system: KrigingSystem, nugget: float = 0.0) -> np.ndarray:
    """Weights ``A^{-1}[phi + Q (Q^T A^{-1} Q)^{-1} (q0 - Q^T A^{-1} phi)]`` with ``A = Psi + s2 I``.

    Uses an LU factorization of ``A`` and one of the ``d x d`` drift block; no
    explicit inverse is formed.
    """
    fa = _factor_covariance(system, nugget)
    ainv_phi = spl.lu_solve(fa, system.phi)
    ainv_q = spl.lu_solve(fa, system.Q)
    drift = system.Q.T @ ainv_q
    fd = _lu(drift)
    if fd is None:
        raise SingularSystemError("drift", "Q^T A^{-1} Q is singular; drift design is rank deficient")
    mu = spl.lu_solve(fd, system.q0 - system.Q.T @ ainv_phi)
    return ainv_phi + ainv_q @ mu


def solve_kkt(system: KrigingSystem, nugget: float = 0.0):
    """Solve ``[[Psi + s2 I, Q], [Q^T, 0]] (eta, rho) = (phi, q0)`` directly."""
    n, d = system.Q.shape
    aug = np.zeros((n + d, n + d))
    aug[:n, :n] = system.Psi + nugget * np.eye(n)
    aug[:n, n:] = system.Q
    aug[n:, :n] = system.Q.T
    rhs = np.concatenate([system.phi, system.q0])
    f = _lu(aug)
    if f is None:
        raise SingularSystemError("augmented", "augmented KKT matrix is singular")
    sol = spl.lu_solve(f, rhs)
    return sol[:n], sol[n:]


def objective(system: KrigingSystem, nugget: float, eta, rho=None) -> float:
    """``M(eta) = s2 eta.eta + eta^T Psi eta - 2 eta.phi + K(0) + 2 (eta^T Q - q0^T) rho``."""
    eta = np.asarray(eta, dtype=float)
    val = nugget * eta @ eta + eta @ system.Psi @ eta - 2.0 * eta @ system.phi + system.k0
    if rho is not None:
        val += 2.0 * (eta @ system.Q - system.q0) @ np.asarray(rho, dtype=float)
    return float(val)


def _basis_change(d, center, scale):
    # B[i, j] = coefficient of t^i in ((t - center)/scale)^j; Q_raw B = Q_centered
    B = np.zeros((d, d))
    for j in range(d):
        for i in range(j + 1):
            B[i, j] = comb(j, i, exact=True) * (-center) ** (j - i) / scale**j
    return B


def predict(p: KrigingProblem, t0: float) -> KrigingSolution:
    """Kriging prediction at ``t0`` with weights, multipliers and variance.

    Multipliers are reported for the raw monomial basis ``1, t, ..., t^{d-1}``.
    """
    t0 = float(t0)
    t = p.obs_t
    if p.nugget == 0:
        hit = np.flatnonzero(np.abs(t - t0) <= COINCIDE_TOL * max(1.0, abs(t0)))
        if hit.size:
            eta = np.zeros(p.n)
            eta[hit[0]] = 1.0
            return KrigingSolution(eta, np.zeros(p.d), float(p.obs_x[hit[0]]), 0.0, t0)
    center = float(np.mean(np.append(t, t0)))
    scale = float(np.max(np.abs(np.append(t, t0) - center))) or 1.0
    system = build_system(p, t0, center, scale)
    eta = solve_closed_form(system, p.nugget)
    # multipliers from the stationarity condition A eta + Q rho = phi
    resid = system.phi - (system.Psi + p.nugget * np.eye(p.n)) @ eta
    rho_c, *_ = np.linalg.lstsq(system.Q, resid, rcond=None)
    B = _basis_change(p.d, center, scale)
    rho = B @ rho_c
    variance = objective(system, p.nugget, eta)
    return KrigingSolution(eta, rho, float(eta @ p.obs_x), variance, t0)


def predict_many(p: KrigingProblem, targets: Sequence[float]) -> list:
    return [predict(p, t0) for t0 in targets]
