"""Reducing a variable-coefficient operator to constant-diffusion normal
form, and checking the reduction preserves the spectrum.

Run:  python3 demos/02_variable_coefficients.py
"""

import numpy as np

from parobs import GeneralSLProblem, liouville_transform, numeric_eigensystem
from parobs import profiles as pf

general = GeneralSLProblem(
    p=pf.polynomial([1.0, 0.4]),        # p(x) = 1 + 0.4 x
    r=pf.polynomial([1.0, 0.2]),        # r(x) = 1 + 0.2 x
    q=pf.cosine_series(0.5, [0.3]),     # q(x) = 0.5 + 0.3 cos(pi x)
    a0=1.0, b0=0.0, a1=1.0, b1=0.0,
)

normal, cmap = liouville_transform(general, nodes=2001)
print("== normal form ==")
print(f"  constant diffusion eps = {normal.p:.8f}")
print(f"  transformed Robin data: a0={normal.a0:.4f} b0={normal.b0:.4f} "
      f"a1={normal.a1:.4f} b1={normal.b1:.4f}")

x = np.linspace(0.0, 1.0, 5)
print(f"  coordinate map xi(x) at {x}: {np.round(cmap.forward(x), 5)}")
print(f"  amplitude factor at the ends: {cmap.amplitude(0.0):.5f}, {cmap.amplitude(1.0):.5f}")

print("\n== spectrum before vs after ==")
lam_normal = numeric_eigensystem(normal, 4, 2001).eigenvalues
print(f"  eigenvalues of the normal form: {np.round(lam_normal, 4)}")

# independent check: generalized finite-difference eigenproblem of the
# original divergence-form operator
n = 2001
xs = np.linspace(0.0, 1.0, n)
dx = xs[1] - xs[0]
pv, rv, qv = general.p.values(xs), general.r.values(xs), general.q.values(xs)
p_half = 0.5 * (pv[:-1] + pv[1:])
main = (p_half[:-1] + p_half[1:]) / dx**2 + qv[1:-1]
off = -p_half[1:-1] / dx**2
from scipy.linalg import eigh_tridiagonal

w = rv[1:-1]
lam_ref = eigh_tridiagonal(main / w, off / np.sqrt(w[:-1] * w[1:]),
                           select="i", select_range=(0, 3))[0]
print(f"  eigenvalues of the original:    {np.round(lam_ref, 4)}")
print(f"  worst relative gap:             "
      f"{np.max(np.abs(lam_normal - lam_ref) / lam_ref):.2e}")
