"""Universal kriging with a generalized covariance and polynomial drift.

The predictor is the minimum-variance linear combination of observations
whose weights, together with a -1 at the target, form an allowable measure.
That constraint is what makes the prediction blind to the unknown drift.
"""

import numpy as np

from irfkit import (
    IntrinsicCovariance,
    KrigingProblem,
    SpectralModel,
    is_allowable,
    kriging_measure,
    predict,
    solve_kkt,
)
from irfkit.kriging import build_system

rng = np.random.default_rng(3)
t = np.sort(rng.uniform(0, 10, 9))
drift = 5.0 - 2.0 * t + 0.3 * t**2
x = drift + 0.2 * rng.standard_normal(t.size)

K = IntrinsicCovariance.from_spectral(SpectralModel(1, "exponential-cov", {"scale": 2.0}))
problem = KrigingProblem(t, x, d=3, K=K, nugget=0.0)

print("observations:", np.round(t, 2).tolist())
for t0 in (2.7, 6.1, 11.0):
    sol = predict(problem, t0)
    # drift monomials in a centered, scaled variable keep the KKT matrix well conditioned
    u = np.append(t, t0)
    eta, _ = solve_kkt(build_system(problem, t0, u.mean(), np.abs(u - u.mean()).max()), problem.nugget)
    m = kriging_measure(sol.weights, t, t0)
    print(f"t0={t0:6.3f}  prediction {sol.prediction:8.4f}  variance {sol.kriging_variance:8.5f}  "
          f"allowable {is_allowable(m, 3, tol=1e-8).allowable}  closed form vs KKT (relative) {np.abs(eta - sol.weights).max() / np.abs(eta).max():.1e}")

# at an observation the predictor returns the datum and the error vanishes
print(f"t0={t[4]:6.3f}  prediction {predict(problem, t[4]).prediction:8.4f}  observed {x[4]:8.4f}")

# a nugget turns the interpolator into a smoother
noisy = KrigingProblem(t, x, d=3, K=K, nugget=0.5)
print(f"\nat an observation: exact {predict(problem, t[4]).prediction:.4f}, "
      f"with nugget {predict(noisy, t[4]).prediction:.4f}, observed {x[4]:.4f}")

# Brownian motion with d = 1 gives piecewise-linear interpolation
bm = KrigingProblem([1.0, 2.0, 3.0], [0.4, -1.0, 2.0], d=1, K=IntrinsicCovariance.brownian(1.0))
print("Brownian, t0 = 2.5:", round(predict(bm, 2.5).prediction, 12), "(midpoint of -1 and 2)")
