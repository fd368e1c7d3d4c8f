"""Test a basis for projection adequacy and refine it until it passes.

The diagnostic compares total sample variance against its projection onto
the basis span; the studentized statistic rejects when the basis misses a
non-negligible share. A one-knot spline cannot carry six narrow bumps, so
the test rejects; doubling interior knots (k -> 2k + 1) fixes it.
"""

import numpy as np

from gridpcr import (
    AmbientSpace,
    BasisSet,
    bspline_tensor_basis,
    diagnose_projection,
    kl_sample,
    make_family,
    refine_knots,
)
from gridpcr.util import replicate_rng

space = AmbientSpace.unit_domain((20, 24))
family = make_family(space, "synthetic2d", 6)
rng = replicate_rng(2025, 1)
sample = kl_sample(family, np.array([3.5, 3.0, 2.5, 2.0, 1.5, 1.0]), 500, rng)

knots = [1, 1]
print("knots   rank   delta_hat     t_stat   decision")
for step in range(5):
    basis = bspline_tensor_basis(space, 3, knots)
    report = diagnose_projection(space, basis, sample, alpha=0.05)
    print(
        f"{str(knots):7s} {report.basis_rank:5d}   {report.delta_hat:.3e}"
        f"   {report.t_stat:8.2f}   {'REJECT' if report.reject else 'ok'}"
    )
    if not report.reject:
        break
    knots = refine_knots(knots)

# the construction's own functions span the sample exactly, so the
# residual collapses to rounding noise and the test never rejects
exact = BasisSet(functions=family.phis, provenance={})
report = diagnose_projection(space, exact, sample, alpha=0.05)
print()
print(
    f"spanning basis: delta_hat={report.delta_hat:.3e}, "
    f"t={report.t_stat:.3e}, reject={report.reject}"
)
