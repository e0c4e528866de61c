"""Full pipeline: regularized solve, continuation, and solution recovery.

Solves the uniform-endpoint baseline, drives the regularization down by
continuation with warm starts, reconstructs (u, m, phi), and inspects the
planning-system residuals and the transient density the ranking coupling
induces.
"""

import numpy as np

from rankmfp import (
    BoundaryDensities,
    GridSpec,
    HamiltonianModel,
    OperatorConfig,
    build_reference_potential,
    continuation,
    mfp_residuals,
    reconstruct_solution,
    solve_vi,
)

spec = GridSpec(T=1.0, Nt=32, Nx=32)
bd = BoundaryDensities.from_specs(spec, "uniform", "uniform")
ref = build_reference_potential(spec, bd)
model = HamiltonianModel.quadratic()
cfg = OperatorConfig(model=model, ref=ref, q=3.0, eps=0.05)

print("== Single regularized solve (eps = 0.05) ==")
psi, rep = solve_vi(cfg, tol=1e-7, max_iter=200_000)
print(f"  converged: {rep.converged} in {rep.iterations} iterations, "
      f"residual {rep.final_residual:.2e}")
print(f"  row mass error {rep.row_mass_error:.1e}, min cell density "
      f"{rep.min_cell_mass:.4f}")

print("\n== Continuation toward the unregularized problem ==")
schedule = (0.5, 0.25, 0.1, 0.05, 0.02, 0.01)
result = continuation(cfg, schedule=schedule, tol_per_stage=1e-7, max_iter=200_000)
print(f"  stages converged: {result.failed_stage is None}")
for eps, r in zip(schedule, result.stage_reports):
    print(f"  eps={eps:<5}: {r.iterations:>6} iters, kappa energy {r.kappa_energy:.4f}, "
          f"|Dpsi|_L1 {r.bv_bound:.4f}")

print("\n== Reconstruction via the potential formulas ==")
sol = reconstruct_solution(model, ref, result.psi)
print(f"  u(0,0) = {sol.u.values[0, 0]} (normalized)")
print(f"  density range: [{np.min(sol.m.values):.4f}, {np.max(sol.m.values):.4f}]")
print(f"  masked cells: {sol.masked_fraction:.1%}")

res = mfp_residuals(model, sol, bd)
print("\n== Planning-system residuals of the regularized solution ==")
print(f"  HJ residual:        L1 {res.hj_l1:.3e}, sup {res.hj_linf:.3e}")
print(f"  transport residual: L1 {res.ct_l1:.3e}, sup {res.ct_linf:.3e}")
print(f"  max lateral flux:   {np.max(np.abs(res.flux_bc)):.3e}")
print("  (finite-eps solutions solve a perturbed system; residuals here are")
print("   reported for inspection and shrink with the schedule and the mesh)")

# The ranking coupling pushes mass toward x = 0 transiently.
mid_row = sol.m.values[spec.Nt // 2]
print(f"\n  density at t = T/2: m(0+) = {mid_row[0]:.4f} vs m(1-) = {mid_row[-1]:.4f}")
print("  (agents crowd the low-rank end midway through the horizon)")
