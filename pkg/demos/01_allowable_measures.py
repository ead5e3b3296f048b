"""Allowable measures: which weighted point sets kill low-degree polynomials.

A measure with atoms (x_i, w_i) is allowable of order d when
sum_i w_i x_i^l = 0 for every l < d.  Applying such a measure to a process
cancels any polynomial drift of degree below d.
"""

import numpy as np

from irfkit import (
    construct_allowable,
    finite_difference_measure,
    is_allowable,
    max_order,
    shift_measure,
)

# the d-th difference with lag iota is the canonical allowable measure
for d in (1, 2, 3):
    m = finite_difference_measure(d, 0.5, t=2.0)
    print(f"difference of order {d}: atoms {m.atoms}  highest annihilated order {max_order(m)}")

# arbitrary points work too, as long as there are more than d of them
pts = [0.0, 0.3, 1.1, 2.0, 4.5]
m = construct_allowable(pts, 3)
rep = is_allowable(m, 3)
print("\nconstructed on", pts)
print("  weights        ", np.round(m.weights, 6).tolist())
print("  normalized defects", [f"{x:.1e}" for x in rep.normalized])

# allowability survives shifts and is nested: order 3 implies orders 2 and 1
moved = shift_measure(m, 17.25)
print("\nshifted by 17.25, still order 3:", is_allowable(moved, 3).allowable)
print("orders 1, 2, 3 allowable:", [is_allowable(m, k).allowable for k in (1, 2, 3)])
print("but not order 4:", is_allowable(m, 4).allowable)
