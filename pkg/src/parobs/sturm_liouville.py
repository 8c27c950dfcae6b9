"""Sturm-Liouville operators -p u'' + q(x) u with separated Robin ends.

Provides the spectral machinery the observer designs rest on: closed-form
eigenpairs for the four standard constant-reaction cases, a second-order
finite-difference eigensolver acting as oracle and generalization, the
reduction of variable-coefficient operators to constant-diffusion normal
form, the tail-summability diagnostic, and modal projections.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.linalg import eigh_tridiagonal

from . import profiles as pf
from .errors import (
    GridMismatch,
    InvalidM,
    NonPositiveCoefficient,
    ResolutionTooCoarse,
    UnsupportedAnalyticCase,
)
from .grids import end_derivatives, trapezoid_weights, uniform_grid

__all__ = [
    "SLProblem",
    "GeneralSLProblem",
    "SpectralBasis",
    "DiscreteSLOperator",
    "CoordinateMap",
    "H1Report",
    "analytic_eigensystem",
    "numeric_eigensystem",
    "check_h1",
    "liouville_transform",
    "project",
    "basis_to_csv",
    "basis_from_csv",
]


@dataclass(frozen=True)
class SLProblem:
    """Constant-diffusion operator B u = -p u'' + q(x) u on [0, 1] with
    Robin ends a0 u(0) + b0 u'(0) = 0, a1 u(1) + b1 u'(1) = 0."""

    p: float
    q: object  # spatial profile; numbers are coerced
    a0: float
    b0: float
    a1: float
    b1: float

    def __post_init__(self):
        object.__setattr__(self, "q", pf.as_profile(self.q))
        if not self.p > 0:
            raise ValueError(f"diffusion constant must be positive, got {self.p}")
        if self.a0**2 + self.b0**2 <= 0 or self.a1**2 + self.b1**2 <= 0:
            raise ValueError("each boundary condition needs a nonzero coefficient pair")

    @property
    def dirichlet_left(self) -> bool:
        return self.b0 == 0.0

    @property
    def dirichlet_right(self) -> bool:
        return self.b1 == 0.0

    def constant_q(self) -> float | None:
        """Reaction value when q is a constant closed-form profile, else None."""
        q = self.q
        if isinstance(q, pf.Profile) and not q.trig and len(q.poly) <= 1:
            return q.poly[0] if q.poly else 0.0
        return None

    def boundary_residual(self, u: np.ndarray, du0: float, du1: float) -> float:
        scale = max(np.max(np.abs(u)), abs(du0), abs(du1), 1e-300)
        r0 = abs(self.a0 * u[0] + self.b0 * du0) / (abs(self.a0) + abs(self.b0)) / scale
        r1 = abs(self.a1 * u[-1] + self.b1 * du1) / (abs(self.a1) + abs(self.b1)) / scale
        return max(r0, r1)


@dataclass(frozen=True)
class GeneralSLProblem:
    """Variable-coefficient operator -(p(x) u')'/r(x) + q(x) u / r(x)."""

    p: object
    r: object
    q: object
    a0: float
    b0: float
    a1: float
    b1: float

    def __post_init__(self):
        object.__setattr__(self, "p", pf.as_profile(self.p))
        object.__setattr__(self, "r", pf.as_profile(self.r))
        object.__setattr__(self, "q", pf.as_profile(self.q))
        if self.a0**2 + self.b0**2 <= 0 or self.a1**2 + self.b1**2 <= 0:
            raise ValueError("each boundary condition needs a nonzero coefficient pair")


class DiscreteSLOperator:
    """Second-order central-difference matrix of B with ghost-node Robin rows.

    The matrix is self-adjoint with respect to the trapezoid weights, so
    ``<c, B_h u>_h == <B_h c, u>_h`` holds to roundoff; the inter-sample
    predictor relies on this identity.
    """

    def __init__(self, problem: SLProblem, nodes: int):
        self.problem = problem
        self.grid = uniform_grid(nodes)
        self.dx = self.grid[1] - self.grid[0]
        self.weights = trapezoid_weights(self.grid)
        n = self.grid.size
        dx, p = self.dx, problem.p
        qv = pf.as_profile(problem.q).values(self.grid)

        diag = np.full(n, 2.0 * p / dx**2) + qv
        sub = np.full(n - 1, -p / dx**2)
        sup = np.full(n - 1, -p / dx**2)

        if problem.dirichlet_left:
            diag[0] = 0.0
            sup[0] = 0.0
        else:
            diag[0] = 2.0 * p / dx**2 - 2.0 * p * problem.a0 / (problem.b0 * dx) + qv[0]
            sup[0] = -2.0 * p / dx**2
        if problem.dirichlet_right:
            diag[-1] = 0.0
            sub[-1] = 0.0
        else:
            diag[-1] = 2.0 * p / dx**2 + 2.0 * p * problem.a1 / (problem.b1 * dx) + qv[-1]
            sub[-1] = -2.0 * p / dx**2

        self.diag, self.sub, self.sup = diag, sub, sup
        self.i0 = 1 if problem.dirichlet_left else 0
        self.i1 = n - 1 if problem.dirichlet_right else n

    @property
    def free(self) -> slice:
        return slice(self.i0, self.i1)

    def apply(self, u: np.ndarray) -> np.ndarray:
        """B_h u with pinned entries mapped to zero."""
        out = self.diag * u
        out[:-1] += self.sup * u[1:]
        out[1:] += self.sub * u[:-1]
        if self.problem.dirichlet_left:
            out[0] = 0.0
        if self.problem.dirichlet_right:
            out[-1] = 0.0
        return out

    def pin(self, u: np.ndarray) -> np.ndarray:
        if self.problem.dirichlet_left:
            u[0] = 0.0
        if self.problem.dirichlet_right:
            u[-1] = 0.0
        return u

    def free_tridiagonals(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(sub, diag, sup) restricted to non-pinned nodes."""
        s = self.free
        return self.sub[s.start : s.stop - 1], self.diag[s], self.sup[s.start : s.stop - 1]


@dataclass(frozen=True)
class SpectralBasis:
    """First J eigenpairs sampled on a uniform grid, unit L2 norm,
    eigenvalues strictly ascending."""

    grid: np.ndarray
    eigenvalues: np.ndarray
    functions: np.ndarray  # shape (J, nodes)
    end_derivs: np.ndarray  # shape (J, 2)
    problem: SLProblem | None = None
    mode_profiles: tuple | None = field(default=None, repr=False)

    @property
    def size(self) -> int:
        return int(self.eigenvalues.size)

    @property
    def weights(self) -> np.ndarray:
        return trapezoid_weights(self.grid)

    def orthonormality_defect(self) -> float:
        g = self.functions * self.weights
        gram = g @ self.functions.T
        return float(np.max(np.abs(gram - np.eye(self.size))))

    def boundary_defect(self) -> float:
        if self.problem is None:
            return math.nan
        worst = 0.0
        for k in range(self.size):
            worst = max(
                worst,
                self.problem.boundary_residual(
                    self.functions[k], self.end_derivs[k, 0], self.end_derivs[k, 1]
                ),
            )
        return worst

    def resample(self, nodes: int) -> "SpectralBasis":
        """Same modes on a different uniform grid; closed forms re-evaluate
        exactly, numeric modes interpolate."""
        if nodes == self.grid.size:
            return self
        grid = uniform_grid(nodes)
        if self.mode_profiles is not None:
            funcs = np.array([p.values(grid) for p in self.mode_profiles])
        else:
            funcs = np.array([np.interp(grid, self.grid, f) for f in self.functions])
            w = trapezoid_weights(grid)
            funcs /= np.sqrt(np.sum(w * funcs**2, axis=1))[:, None]
        return SpectralBasis(
            grid=grid,
            eigenvalues=self.eigenvalues.copy(),
            functions=funcs,
            end_derivs=self.end_derivs.copy(),
            problem=self.problem,
            mode_profiles=self.mode_profiles,
        )


def _standard_modes(problem: SLProblem, qc: float, J: int):
    """Closed-form (eigenvalue, profile, d/dx at ends) for the four
    Neumann/Dirichlet corner cases."""
    p = problem.p
    left_n, right_n = not problem.dirichlet_left, not problem.dirichlet_right
    modes = []
    for n in range(1, J + 1):
        if left_n and right_n:  # Neumann-Neumann
            k = (n - 1) * math.pi
            prof = pf.constant(1.0) if n == 1 else pf.cosine(math.sqrt(2.0), k)
        elif left_n and not right_n:  # Neumann-Dirichlet
            k = (2 * n - 1) * math.pi / 2.0
            prof = pf.cosine(math.sqrt(2.0), k)
        elif not left_n and right_n:  # Dirichlet-Neumann
            k = (2 * n - 1) * math.pi / 2.0
            prof = pf.sine(math.sqrt(2.0), k)
        else:  # Dirichlet-Dirichlet
            k = n * math.pi
            prof = pf.sine(math.sqrt(2.0), k)
        lam = p * k**2 + qc
        dprof = prof.derivative()
        modes.append((lam, prof, float(dprof.values(0.0)), float(dprof.values(1.0))))
    return modes


def analytic_eigensystem(problem: SLProblem, J: int, nodes: int = 1001) -> SpectralBasis:
    """Exact eigenpairs for constant q and pure Neumann/Dirichlet ends.

    Raises UnsupportedAnalyticCase when q is non-constant or an end is
    genuinely Robin; callers fall back to :func:`numeric_eigensystem`.
    """
    if J < 1:
        raise ValueError("need at least one mode")
    qc = problem.constant_q()
    if qc is None:
        raise UnsupportedAnalyticCase("closed-form eigenpairs need constant q")
    for a, b in ((problem.a0, problem.b0), (problem.a1, problem.b1)):
        if a != 0.0 and b != 0.0:
            raise UnsupportedAnalyticCase("genuinely Robin ends have no standard closed form")
    grid = uniform_grid(nodes)
    modes = _standard_modes(problem, qc, J)
    lams = np.array([m[0] for m in modes])
    funcs = np.array([m[1].values(grid) for m in modes])
    ders = np.array([[m[2], m[3]] for m in modes])
    return SpectralBasis(
        grid=grid,
        eigenvalues=lams,
        functions=funcs,
        end_derivs=ders,
        problem=problem,
        mode_profiles=tuple(m[1] for m in modes),
    )


def numeric_eigensystem(problem: SLProblem, J: int, nodes: int) -> SpectralBasis:
    """First J eigenpairs of the central-difference discretization.

    Eigenfunctions are orthonormal in the trapezoid inner product and carry
    the deterministic sign convention (first nonzero value or derivative at
    x = 0 is positive). Raises ResolutionTooCoarse when the estimated
    discretization error is too large to separate adjacent modes.
    """
    if J < 1:
        raise ValueError("need at least one mode")
    if nodes < 8 * J:
        raise ValueError(f"need nodes >= 8*J = {8 * J}, got {nodes}")
    op = DiscreteSLOperator(problem, nodes)
    sub, diag, sup = op.free_tridiagonals()
    w = op.weights[op.free]
    e_sym = sup * np.sqrt(w[:-1] / w[1:])
    lams, vecs = eigh_tridiagonal(diag, e_sym, select="i", select_range=(0, J - 1))
    funcs = np.zeros((J, nodes))
    funcs[:, op.free] = (vecs / np.sqrt(w)[:, None]).T

    dx = op.dx
    ders = np.zeros((J, 2))
    for k in range(J):
        f = funcs[k]
        d0, d1 = end_derivatives(f, dx)
        scale = np.max(np.abs(f))
        anchor = f[0] if abs(f[0]) > 1e-8 * scale else d0
        if anchor < 0:
            f *= -1.0
            d0, d1 = -d0, -d1
        ders[k] = (d0, d1)

    qmin = float(np.min(pf.as_profile(problem.q).values(op.grid)))
    est_err = (np.maximum(lams - qmin, 0.0) ** 2) * dx**2 / (12.0 * problem.p)
    gaps = np.diff(lams)
    bad = gaps < 10.0 * np.maximum(est_err[:-1], est_err[1:])
    if np.any(bad):
        n_bad = int(np.argmax(bad)) + 1
        raise ResolutionTooCoarse(
            f"modes {n_bad} and {n_bad + 1} are separated by {gaps[n_bad - 1]:.3g} "
            f"but the discretization error estimate is {est_err[n_bad]:.3g}"
        )
    return SpectralBasis(
        grid=op.grid,
        eigenvalues=lams,
        functions=funcs,
        end_derivs=ders,
        problem=problem,
    )


@dataclass(frozen=True)
class H1Report:
    """Summability diagnostic for sum_n lambda_n^{-1} max|phi_n|."""

    sufficient_condition: bool
    terms: np.ndarray
    partial_sum: float
    decay_exponent: float
    convergent: bool
    M: int
    J_tail: int


def check_h1(problem: SLProblem, basis: SpectralBasis, M: int, J_tail: int) -> H1Report:
    """Certificate of the sign-pattern sufficient condition plus a tail-decay
    diagnostic over modes M..M+J_tail (1-based).

    The sufficient condition (b0, a1, b1 >= 0 and a0 <= 0) is checked up to
    the per-end sign normalization of the Robin pairs, which leaves the
    boundary condition unchanged.
    """
    if basis.size < M + J_tail:
        raise ValueError(f"basis has {basis.size} modes, need {M + J_tail}")
    if M < 1 or basis.eigenvalues[M - 1] <= 0.0:
        raise InvalidM(f"lambda_M must be positive, got index M={M}")
    sufficient = (problem.a0 * problem.b0 <= 0.0) and (problem.a1 * problem.b1 >= 0.0)
    idx = np.arange(M, M + J_tail + 1)
    lams = basis.eigenvalues[idx - 1]
    sups = np.max(np.abs(basis.functions[idx - 1]), axis=1)
    terms = sups / lams
    slope, _ = np.polyfit(np.log(idx.astype(float)), np.log(terms), 1)
    convergent = bool(slope <= -1.8)  # "at least like n^-2", with fit slack
    return H1Report(
        sufficient_condition=bool(sufficient),
        terms=terms,
        partial_sum=float(np.sum(terms)),
        decay_exponent=float(slope),
        convergent=convergent,
        M=M,
        J_tail=J_tail,
    )


@dataclass(frozen=True)
class CoordinateMap:
    """Monotone change of variable x -> xi with amplitude factor (r p)^{1/4}."""

    x_nodes: np.ndarray
    xi_nodes: np.ndarray
    amplitude_samples: np.ndarray
    epsilon: float

    def forward(self, x) -> np.ndarray:
        return np.interp(x, self.x_nodes, self.xi_nodes)

    def inverse(self, xi) -> np.ndarray:
        return np.interp(xi, self.xi_nodes, self.x_nodes)

    def amplitude(self, x) -> np.ndarray:
        return np.interp(x, self.x_nodes, self.amplitude_samples)

    def push_profile(self, u_samples: np.ndarray, xi_grid: np.ndarray) -> np.ndarray:
        """U(xi) = amplitude(x) u(x) resampled on xi_grid."""
        if u_samples.shape != self.x_nodes.shape:
            raise GridMismatch("profile must be sampled on the map's x grid")
        return np.interp(xi_grid, self.xi_nodes, self.amplitude_samples * u_samples)

    def pull_profile(self, U_samples: np.ndarray, xi_grid: np.ndarray) -> np.ndarray:
        """u(x) = U(xi(x)) / amplitude(x) on the map's x grid."""
        return np.interp(self.xi_nodes, xi_grid, U_samples) / self.amplitude_samples


def liouville_transform(
    gproblem: GeneralSLProblem, nodes: int = 1001
) -> tuple[SLProblem, CoordinateMap]:
    """Reduce -(p u')'/r + (q/r) u to constant-diffusion normal form.

    New coordinate xi = sqrt(eps) * int_0^x sqrt(r/p), eps =
    (int_0^1 sqrt(r/p))^{-2}; amplitude factor (r p)^{1/4}. The transformed
    reaction profile and Robin coefficients come out on a uniform xi grid.
    """
    x = uniform_grid(nodes)
    pv = pf.as_profile(gproblem.p).values(x)
    rv = pf.as_profile(gproblem.r).values(x)
    qv = pf.as_profile(gproblem.q).values(x)
    if np.min(pv) <= 0.0 or np.min(rv) <= 0.0:
        raise NonPositiveCoefficient("p and r must be strictly positive on the grid")

    s = np.sqrt(rv / pv)
    from scipy.integrate import cumulative_trapezoid

    integral = cumulative_trapezoid(s, x, initial=0.0)
    total = integral[-1]
    eps = total**-2
    xi = integral / total

    mu = (rv * pv) ** 0.25
    dmu = np.gradient(mu, x, edge_order=2)
    inner = pv * dmu / mu**2
    q_normal = qv / rv + (pv / mu**3) * np.gradient(inner, x, edge_order=2)

    xi_grid = uniform_grid(nodes)
    q_uniform = np.interp(xi_grid, xi, q_normal)

    sqrt_eps = 1.0 / total
    a0 = gproblem.a0 - gproblem.b0 * dmu[0] / mu[0]
    b0 = gproblem.b0 * sqrt_eps * s[0]
    a1 = gproblem.a1 - gproblem.b1 * dmu[-1] / mu[-1]
    b1 = gproblem.b1 * sqrt_eps * s[-1]

    normal = SLProblem(
        p=eps, q=pf.SampledProfile(xi_grid, q_uniform), a0=a0, b0=b0, a1=a1, b1=b1
    )
    cmap = CoordinateMap(x_nodes=x, xi_nodes=xi, amplitude_samples=mu, epsilon=eps)
    return normal, cmap


def project(f, basis: SpectralBasis, J: int | None = None) -> np.ndarray:
    """Trapezoid inner products <f, phi_1..J> on the basis grid."""
    J = basis.size if J is None else J
    if J > basis.size:
        raise ValueError(f"basis holds {basis.size} modes, asked for {J}")
    if isinstance(f, np.ndarray) or (
        isinstance(f, (list, tuple)) and f and isinstance(f[0], (int, float))
    ):
        vals = np.asarray(f, dtype=float)
        if vals.shape != basis.grid.shape:
            raise GridMismatch(
                f"samples have {vals.size} points, basis grid has {basis.grid.size}"
            )
    else:
        vals = pf.as_profile(f).values(basis.grid)
    return (basis.functions[:J] * basis.weights) @ vals


# -- CSV interchange ----------------------------------------------------------

def basis_to_csv(basis: SpectralBasis, path) -> None:
    """One row per node, columns x, phi_1..phi_J; eigenvalues and endpoint
    derivatives in the leading comment block."""
    fmt = lambda v: format(float(v), ".17g")  # noqa: E731
    lines = [
        "# parobs-basis-version: 1",
        "# eigenvalues: " + ",".join(fmt(v) for v in basis.eigenvalues),
        "# end_derivatives_left: " + ",".join(fmt(v) for v in basis.end_derivs[:, 0]),
        "# end_derivatives_right: " + ",".join(fmt(v) for v in basis.end_derivs[:, 1]),
        "x," + ",".join(f"phi_{k + 1}" for k in range(basis.size)),
    ]
    for i, xv in enumerate(basis.grid):
        lines.append(fmt(xv) + "," + ",".join(fmt(v) for v in basis.functions[:, i]))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def basis_from_csv(path, problem: SLProblem | None = None) -> SpectralBasis:
    meta: dict[str, np.ndarray] = {}
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, payload = line[1:].partition(":")
                meta[key.strip()] = np.array(
                    [float(v) for v in payload.split(",")] if "," in payload or payload.strip() else []
                )
            elif line.startswith("x,"):
                continue
            else:
                rows.append([float(v) for v in line.split(",")])
    data = np.asarray(rows)
    lams = meta["eigenvalues"]
    ders = np.column_stack([meta["end_derivatives_left"], meta["end_derivatives_right"]])
    return SpectralBasis(
        grid=data[:, 0],
        eigenvalues=lams,
        functions=data[:, 1:].T,
        end_derivs=ders,
        problem=problem,
    )
