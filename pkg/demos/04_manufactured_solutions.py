"""Manufactured-solution verification: forcing, refinement, observed order.

Chooses a closed-form potential, computes the forcing that makes it an
exact solution of the forced problem, then solves on a refinement ladder
and measures the empirical convergence order of the recovered potential.
"""

from rankmfp import HamiltonianModel, bump_manufactured, mms_source, mms_study
from rankmfp.grid import BoundaryDensities, GridSpec, build_reference_potential
from rankmfp.verify import empirical_orders

model = HamiltonianModel.quadratic()

print("== Forcing for the trivial manufactured potential ==")
spec = GridSpec(T=1.0, Nt=8, Nx=8)
bd = BoundaryDensities.from_specs(spec, "uniform", "uniform")
ref = build_reference_potential(spec, bd)
source, star = mms_source(model, ref, bump_manufactured(1.0, 0.0))
print(f"  phi* = x (alpha = 0): source is the pure ranking term, "
      f"g = {source.values[0, 0]:.1f} on every cell")

print("\n== Refinement ladder with a genuine space-time bump (alpha = 0.1) ==")
levels = mms_study(model, levels=(8, 16, 32), T=1.0, alpha=0.1,
                   schedule=(0.05, 1e-2, 1e-3, 1e-4, 1e-5), tol=1e-9)
print(f"  {'N':>4}  {'|psi err|_L1':>14}  {'HJ res L1':>12}  {'transport L1':>13}")
for lv in levels:
    print(f"  {lv.n:>4}  {lv.psi_error_l1:>14.4e}  {lv.hj_l1:>12.4e}  {lv.ct_l1:>13.4e}")
orders = empirical_orders([lv.psi_error_l1 for lv in levels])
print(f"  observed orders between levels: {['%.2f' % o for o in orders]}")
print("  (the potential converges at second order; residuals at first or better)")
