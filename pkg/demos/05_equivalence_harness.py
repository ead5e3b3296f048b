"""Checking stationarity of increments on simulated data.

Three seeded experiments.  Shifting an allowable measure along the axis
should leave the moments of X(lambda) unchanged; d-th differences should
look stationary across windows; a measure that does not annihilate the
drift should break down once a trend is added.
"""

from irfkit import (
    Measure,
    brownian_model,
    differenced_stationarity_test,
    finite_difference_measure,
    negative_control,
    shift_invariance_test,
)

model = brownian_model(1.0)
lam = finite_difference_measure(1, 1.0)
bad = Measure([0.0, 1.0], [1.0, 1.0])

runs = {
    "shift invariance of the first difference": shift_invariance_test(model, lam, [0, 5, 20], [0, 1, 2], 400, seed=1),
    "first differences across windows": differenced_stationarity_test(model, 1, 1.0, n_reps=200, seed=1),
    "raw Brownian values across windows": differenced_stationarity_test(model, 0, 1.0, n_reps=200, seed=1),
    "non-allowable measure plus trend": negative_control(model, bad, [0, 5, 20], 400, seed=1),
}
for name, rep in runs.items():
    print(f"{name:45s} max z = {rep.max_z:7.2f}  -> {'pass' if rep.passed else 'FAIL'}")
