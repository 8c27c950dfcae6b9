"""Spectral groundwork: closed-form eigenpairs, the finite-difference
eigensolver as an oracle, and the tail-summability diagnostic.

Run:  python3 demos/01_spectral_basis.py
"""

import numpy as np

from parobs import SLProblem, analytic_eigensystem, check_h1, numeric_eigensystem, project
from parobs import profiles as pf

problem = SLProblem(p=1.0, q=0.0, a0=0.0, b0=1.0, a1=0.0, b1=1.0)

print("== closed-form eigenpairs (Neumann ends, zero reaction) ==")
basis = analytic_eigensystem(problem, J=8, nodes=1001)
for n, lam in enumerate(basis.eigenvalues, start=1):
    print(f"  lambda_{n} = {lam:.6f}")

print("\n== finite-difference oracle at the same resolution ==")
numeric = numeric_eigensystem(problem, J=8, nodes=1001)
rel = np.abs(numeric.eigenvalues[1:] - basis.eigenvalues[1:]) / basis.eigenvalues[1:]
print(f"  worst relative eigenvalue error (modes 2..8): {np.max(rel):.2e}")
print(f"  orthonormality defect (trapezoid pairing):    {numeric.orthonormality_defect():.2e}")

print("\n== mesh-halving convergence (second-order scheme) ==")
an = analytic_eigensystem(problem, 4, 1001)
for nodes in (251, 501, 1001):
    nu = numeric_eigensystem(problem, 4, nodes)
    err = np.max(np.abs(nu.eigenvalues[1:] - an.eigenvalues[1:]))
    print(f"  nodes = {nodes:5d}: worst eigenvalue error = {err:.3e}")

print("\n== tail-summability diagnostic ==")
big = analytic_eigensystem(problem, 240, 2001)
rep = check_h1(problem, big, M=2, J_tail=200)
print(f"  sign-pattern sufficient condition: {rep.sufficient_condition}")
print(f"  partial sum over modes 2..202:     {rep.partial_sum:.6f}")
print(f"  fitted tail decay exponent:        {rep.decay_exponent:.3f}  "
      f"(convergent: {rep.convergent})")

print("\n== modal projections ==")
coeffs = project(pf.constant(0.5), basis, 5)
print(f"  <1/2, phi_n> = {np.round(coeffs, 12)}")
coeffs = project(pf.polynomial([0.0, 1.0]), basis, 5)
print(f"  <x, phi_n>   = {np.round(coeffs, 6)}")
