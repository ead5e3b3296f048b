"""Random kriging problems and feasible perturbations shared by the tests."""

import numpy as np
from scipy.linalg import null_space

from irfkit.covariance import IntrinsicCovariance
from irfkit.kriging import KrigingProblem
from irfkit.spectral import FrequencyGrid, SpectralModel

NUGGETS = (0.0, 0.1, 1.0)

# a cosine sum with positive weights, so exactly positive semidefinite
EXP_K = IntrinsicCovariance.from_spectral(SpectralModel(0, "exponential-cov", {"scale": 2.0}), FrequencyGrid(1e-3, 200.0, 1024))


def random_problem(rng, kernel=None):
    d = int(rng.integers(1, 4))
    n = int(rng.integers(max(d, 2), 13))
    while True:
        t = np.sort(rng.uniform(0.0, 10.0, n))
        if n == 1 or np.min(np.diff(t)) > 0.05:
            break
    x = rng.standard_normal(n)
    K = kernel or (IntrinsicCovariance.brownian(float(rng.uniform(0.5, 2.0))) if rng.random() < 0.5 else EXP_K)
    nugget = float(rng.choice(NUGGETS))
    t0 = float(rng.uniform(-1.0, 11.0))
    return KrigingProblem(t, x, d, K, nugget), t0


def feasible_perturbations(Q, rng, count, size=1.0):
    """Random ``delta`` with ``Q^T delta = 0``."""
    N = null_space(Q.T)
    if N.shape[1] == 0:
        return np.zeros((count, Q.shape[0]))
    return (N @ rng.standard_normal((N.shape[1], count))).T * size
