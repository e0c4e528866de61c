"""Hamiltonians, Lagrangians and the perspective function.

Walks through the convex-duality toolkit: evaluating a Hamiltonian,
taking its Legendre transform, checking the roundtrip identities, and
exploring the perspective function that couples flux and density.
"""

import numpy as np

from rankmfp import (
    HamiltonianModel,
    check_subgradient,
    eval_hamiltonian,
    legendre_lagrangian,
    perspective,
)

quad = HamiltonianModel.quadratic()
power = HamiltonianModel.power_law(3.0)

print("== Hamiltonian evaluations ==")
for model, name in ((quad, "quadratic"), (power, "power-law(3)")):
    h, dph = eval_hamiltonian(model, 0.5, 2.0)
    print(f"  {name}: H(x=0.5, p=2) = {h:.6f}, D_pH = {dph:.6f}")

print("\n== Legendre transform: L(x,v) = sup_p(-v p - H(x,p)) ==")
for v in (-2.0, 0.0, 3.0):
    le = legendre_lagrangian(quad, 0.0, v)
    print(f"  v={v:+.1f}: L={le.L:.4f}  D_vL={le.DvL:+.4f}  maximizer p*={le.argmax_p:+.4f}")

print("\n== Roundtrip identities on a velocity grid ==")
v = np.linspace(-10, 10, 200)
for model, name in ((quad, "quadratic"), (power, "power-law(3)")):
    le = legendre_lagrangian(model, 0.0, v)
    h, dph = eval_hamiltonian(model, 0.0, -np.asarray(le.DvL))
    print(f"  {name}: max |D_pH(-D_vL(v)) + v| = {np.max(np.abs(dph + v)):.2e}")
    print(f"  {name}: max |H(-D_vL) - (v D_vL - L)| = {np.max(np.abs(h - (v * le.DvL - le.L))):.2e}")

print("\n== Perspective function F(x, j, m) = m L(x, j/m) ==")
pe = perspective(quad, 0.0, 2.0, 1.0)
print(f"  F(j=2, m=1) = {pe.F:.4f}, F_j = {pe.Fj:.4f}, F_m = {pe.Fm:.4f}")
pe0 = perspective(quad, 0.0, 0.0, 0.0)
print(f"  zero mass, zero flux: F = {pe0.F} (finite), derivatives undefined")
pe_inf = perspective(quad, 0.0, 1.0, 0.0)
print(f"  zero mass, unit flux: F = {pe_inf.F} (extended value)")

print("\n== One-homogeneity and the subgradient inequality ==")
rng = np.random.default_rng(0)
j, m = rng.uniform(-2, 2, 5), rng.uniform(0.2, 2, 5)
lam = 3.0
base = perspective(quad, 0.0, j, m)
scaled = perspective(quad, 0.0, lam * j, lam * m)
print(f"  max |F(3j, 3m) - 3 F(j, m)| = {np.max(np.abs(scaled.F - lam * base.F)):.2e}")
slack = check_subgradient(quad, 0.0, 1.0, 1.0, 0.0, 1.0)
print(f"  subgradient slack at ((1,1) -> (0,1)) = {slack:.4f}  (exact value 1/2)")
