"""Finite-dimensional observer data and small-gain certificates.

Builds the mode-block matrix A, the injection kernels, the Lyapunov pair
(P, sigma), the tail-coupling constant K, and evaluates the small-gain
value Omega for both observer variants (with inter-sample predictor, and
zero-order-hold innovation) together with the coefficients of the
corresponding input-to-output stability bounds.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np
from scipy.linalg import solve_continuous_lyapunov
from scipy.optimize import brentq

from . import profiles as pf
from .errors import (
    DimensionMismatch,
    InfeasibleAtZero,
    KappaOutOfRange,
    NearSingular,
    NoFeasibleQ,
    NotHurwitz,
    PlacementImpossible,
    QInfeasible,
)
from .grids import trapezoid_weights
from .sturm_liouville import SLProblem, SpectralBasis

__all__ = [
    "OutputChannel",
    "ObserverDesign",
    "SmallGainReport",
    "BoundCoefficients",
    "CouplingReport",
    "build_A",
    "injection_kernels",
    "coupling_constant_K",
    "lyapunov_certificate",
    "place_gain",
    "make_design",
    "small_gain_predictor",
    "small_gain_zoh",
    "max_diameter",
    "select_Q",
    "certificate_defects",
    "design_to_json",
    "design_from_json",
    "certificate_summary",
]


@dataclass(frozen=True)
class OutputChannel:
    """Measured-output kernel k and its domain-compatible approximant c.

    The approximant must satisfy the Robin end conditions (membership in the
    operator domain is what makes the integration-by-parts boundary terms
    vanish); the kernel only needs to be square integrable.
    """

    kernel: object
    approximant: object
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "kernel", pf.as_profile(self.kernel))
        object.__setattr__(self, "approximant", pf.as_profile(self.approximant))

    def boundary_residual(self, problem: SLProblem, grid: np.ndarray) -> float:
        c = self.approximant
        if getattr(c, "closed_form", False):
            vals = c.values(np.array([0.0, 1.0]))
            dvals = c.derivative().values(np.array([0.0, 1.0]))
            u = np.array([vals[0], vals[1]])
            d0, d1 = float(dvals[0]), float(dvals[1])
        else:
            samples = c.values(grid)
            d = c.derivative().values(grid)
            u = np.array([samples[0], samples[-1]])
            d0, d1 = float(d[0]), float(d[-1])
        return problem.boundary_residual(u, d0, d1)


def build_A(eigenvalues: Sequence[float], L: np.ndarray, c_coeffs: np.ndarray) -> np.ndarray:
    """A[i, j] = -lambda_i delta_ij + sum_r L[i, r] c_coeffs[r, j]."""
    lam = np.asarray(eigenvalues, dtype=float)
    L = np.atleast_2d(np.asarray(L, dtype=float))
    C = np.atleast_2d(np.asarray(c_coeffs, dtype=float))
    N = lam.size
    if L.shape[0] != N:
        raise DimensionMismatch(f"L has {L.shape[0]} rows, need {N}")
    if C.shape[0] != L.shape[1]:
        raise DimensionMismatch(
            f"c_coeffs covers {C.shape[0]} channels, L has {L.shape[1]}"
        )
    if C.shape[1] < N:
        raise DimensionMismatch(f"c_coeffs covers {C.shape[1]} modes, need {N}")
    return -np.diag(lam) + L @ C[:, :N]


def injection_kernels(L: np.ndarray, basis: SpectralBasis) -> tuple[np.ndarray, np.ndarray]:
    """Grid samples and L2 norms of l_i = sum_n phi_n L[n, i].

    Each l_i is a finite combination of the first N modes, hence lies in the
    operator domain; by orthonormality its norm is the Euclidean norm of the
    corresponding column of L.
    """
    L = np.atleast_2d(np.asarray(L, dtype=float))
    N = L.shape[0]
    if basis.size < N:
        raise DimensionMismatch(f"basis holds {basis.size} modes, L uses {N}")
    samples = L.T @ basis.functions[:N]
    norms = np.linalg.norm(L, axis=0)
    return samples, norms


@dataclass(frozen=True)
class CouplingReport:
    """Truncated tail-coupling constant with a truncation diagnostic."""

    value: float
    modes_used: int
    last_block_fraction: float  # share of K^2 carried by the last 50 modes


def coupling_constant_K(
    c_coeffs: np.ndarray, N: int, j_max: int | None = None
) -> CouplingReport:
    """K = sqrt(sum_i sum_{j>N} c_coeffs[i, j]^2), truncated at j_max modes."""
    C = np.atleast_2d(np.asarray(c_coeffs, dtype=float))
    stop = C.shape[1] if j_max is None else min(j_max, C.shape[1])
    tail = C[:, N:stop]
    total = float(np.sum(tail**2))
    # a tail that is pure projection roundoff carries no truncation risk
    floor = (1e-13 * max(float(np.max(np.abs(C))), 1.0)) ** 2
    if tail.shape[1] > 50 and total > floor:
        last = float(np.sum(tail[:, -50:] ** 2))
        frac = last / total
    else:
        frac = 0.0
    return CouplingReport(value=math.sqrt(total), modes_used=stop, last_block_fraction=frac)


def lyapunov_certificate(A: np.ndarray, sigma_fraction: float = 0.9) -> tuple[np.ndarray, float]:
    """Certificate pair (P, sigma) with P >= I and P A + A' P <= -2 sigma P.

    sigma is sigma_fraction times the spectral abscissa magnitude; P solves
    the shifted Lyapunov equation and is rescaled so its smallest eigenvalue
    is one. The scalar case returns P = [1] exactly, so sigma_fraction -> 1
    reproduces the worked designs where sigma equals |A11|.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if not 0.0 < sigma_fraction <= 1.0:
        raise ValueError("sigma_fraction must lie in (0, 1]")
    abscissa = float(np.max(np.linalg.eigvals(A).real))
    if abscissa >= 0.0:
        raise NotHurwitz(f"spectral abscissa {abscissa:.3g} is nonnegative")
    sigma = sigma_fraction * (-abscissa)
    N = A.shape[0]
    if N == 1:
        return np.array([[1.0]]), sigma
    shifted = A + sigma * np.eye(N)
    P0 = solve_continuous_lyapunov(shifted.T, -np.eye(N))
    P0 = 0.5 * (P0 + P0.T)
    pmin = float(np.min(np.linalg.eigvalsh(P0)))
    if pmin < 1e-12:
        raise NearSingular(
            f"Lyapunov factor has smallest eigenvalue {pmin:.3g}; lower sigma_fraction"
        )
    return P0 / pmin, sigma


def place_gain(
    eigenvalues: Sequence[float], c_row: Sequence[float], targets: Sequence[float]
) -> np.ndarray:
    """Single-channel diagonal synthesis: choose L so diag(A) hits targets.

    Exact pole placement for N = 1; for larger N only the diagonal is set
    and the caller must re-check that A is Hurwitz.
    """
    lam = np.asarray(eigenvalues, dtype=float)
    c = np.asarray(c_row, dtype=float)
    t = np.asarray(targets, dtype=float)
    if not lam.shape == c.shape == t.shape:
        raise DimensionMismatch("eigenvalues, c_row and targets must share a length")
    scale = float(np.max(np.abs(c))) or 1.0
    if np.any(np.abs(c) < 1e-12 * scale):
        raise PlacementImpossible("a diagonal output coefficient vanishes")
    return ((t + lam) / c).reshape(-1, 1)


def _q_lower_bound(ltpl_norm: float, K: float, sigma: float, lam_next: float) -> float:
    return 2.0 * ltpl_norm * K**2 / (sigma * lam_next)


def _derived_constants(
    sigma: float, lam_next: float, P_norm: float, ltpl_norm: float, K: float, Q: float
) -> tuple[float, float, float]:
    """(H(Q), mu, g_tilde) for given certificate data."""
    root = math.sqrt((2.0 * sigma - lam_next) ** 2 + 16.0 * ltpl_norm * K**2 / Q)
    H = 2.0 * sigma - lam_next - root
    mu = (H + 2.0 * lam_next) / 4.0
    g_tilde = max(4.0 * P_norm / (4.0 * sigma + H), Q / (2.0 * lam_next))
    return H, mu, g_tilde


@dataclass(frozen=True)
class ObserverDesign:
    """Everything the small-gain certificates consume.

    Grid functions (injection kernels, channel samples) are derived from the
    stored basis and channel profiles on demand; all certificate scalars are
    precomputed here.
    """

    problem: SLProblem
    basis: SpectralBasis
    channels: tuple[OutputChannel, ...]
    N: int
    L: np.ndarray
    c_coeffs: np.ndarray
    A: np.ndarray
    P: np.ndarray
    sigma: float
    K: float
    Q: float
    lipschitz_R: float
    lipschitz_sup: float
    # derived certificate scalars
    lam_next: float
    P_norm: float
    ltpl_norm: float
    H_Q: float
    mu: float
    g_tilde: float
    # per-channel constants
    norm_l: np.ndarray
    norm_c: np.ndarray
    norm_k: np.ndarray
    norm_gap: np.ndarray  # ||k_i - c_i||
    norm_stiff: np.ndarray  # ||p c_i'' - q c_i||
    cl: np.ndarray  # cl[i, r] = int c_i l_r
    k_tail: CouplingReport

    @property
    def m(self) -> int:
        return len(self.channels)

    @property
    def eigenvalues(self) -> np.ndarray:
        return self.basis.eigenvalues[: self.N]

    def with_Q(self, Q: float) -> "ObserverDesign":
        _check_Q(Q, self.ltpl_norm, self.K, self.sigma, self.lam_next)
        H, mu, g = _derived_constants(
            self.sigma, self.lam_next, self.P_norm, self.ltpl_norm, self.K, Q
        )
        return replace(self, Q=Q, H_Q=H, mu=mu, g_tilde=g)

    def with_certificate(self, P: np.ndarray, sigma: float) -> "ObserverDesign":
        P = np.atleast_2d(np.asarray(P, dtype=float))
        _validate_certificate(self.A, P, sigma)
        P_norm = float(np.linalg.norm(P, 2))
        ltpl = float(np.linalg.norm(self.L.T @ P @ self.L, 2))
        _check_Q(self.Q, ltpl, self.K, sigma, self.lam_next)
        H, mu, g = _derived_constants(sigma, self.lam_next, P_norm, ltpl, self.K, self.Q)
        return replace(
            self, P=P, sigma=sigma, P_norm=P_norm, ltpl_norm=ltpl, H_Q=H, mu=mu, g_tilde=g
        )


def _check_Q(Q: float, ltpl_norm: float, K: float, sigma: float, lam_next: float) -> None:
    if Q < 2.0:
        raise QInfeasible(f"Q must be at least 2, got {Q}")
    bound = _q_lower_bound(ltpl_norm, K, sigma, lam_next)
    if Q <= bound:
        raise QInfeasible(f"Q = {Q} does not exceed the tail-coupling bound {bound:.6g}")


def _validate_certificate(A: np.ndarray, P: np.ndarray, sigma: float, tol: float = 1e-9) -> None:
    defects = certificate_defects(A, P, sigma)
    if defects["abscissa"] >= 0.0:
        raise NotHurwitz(f"spectral abscissa {defects['abscissa']:.3g} is nonnegative")
    if defects["p_min"] < 1.0 - tol:
        raise ValueError(f"P is not bounded below by the identity: min eig {defects['p_min']}")
    if defects["decay_slack"] > tol * max(1.0, defects["p_norm"]):
        raise ValueError(
            f"P A + A'P + 2 sigma P has positive part {defects['decay_slack']:.3g}"
        )


def certificate_defects(A: np.ndarray, P: np.ndarray, sigma: float) -> dict:
    """Eigenvalue-level re-check of the three certificate inequalities."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    P = np.atleast_2d(np.asarray(P, dtype=float))
    M = P @ A + A.T @ P + 2.0 * sigma * P
    return {
        "abscissa": float(np.max(np.linalg.eigvals(A).real)),
        "p_min": float(np.min(np.linalg.eigvalsh(P))),
        "decay_slack": float(np.max(np.linalg.eigvalsh(0.5 * (M + M.T)))),
        "p_norm": float(np.linalg.norm(P, 2)),
    }


_FD4_INTERIOR = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0
_FD4_EDGE0 = np.array([45.0, -154.0, 214.0, -156.0, 61.0, -10.0]) / 12.0
_FD4_EDGE1 = np.array([10.0, -15.0, -4.0, 14.0, -6.0, 1.0]) / 12.0


def _second_derivative_fd4(values: np.ndarray, dx: float) -> np.ndarray:
    """Fourth-order second derivative on a uniform grid (one-sided ends)."""
    n = values.size
    if n < 6:
        raise ValueError("need at least 6 nodes for the fourth-order stencil")
    out = np.empty(n)
    out[2:-2] = (
        -values[:-4] + 16.0 * values[1:-3] - 30.0 * values[2:-2]
        + 16.0 * values[3:-1] - values[4:]
    ) / 12.0
    out[0] = np.dot(_FD4_EDGE0, values[:6])
    out[1] = np.dot(_FD4_EDGE1, values[:6])
    out[-1] = np.dot(_FD4_EDGE0, values[-6:][::-1])
    out[-2] = np.dot(_FD4_EDGE1, values[-6:][::-1])
    return out / dx**2


def _channel_constants(problem: SLProblem, channels, grid: np.ndarray):
    """Per-channel norms; exact closed forms where the profiles allow it."""
    w = trapezoid_weights(grid)
    qc = problem.constant_q()
    q_vals = pf.as_profile(problem.q).values(grid)
    dx = grid[1] - grid[0]
    m = len(channels)
    norm_c = np.empty(m)
    norm_k = np.empty(m)
    norm_gap = np.empty(m)
    norm_stiff = np.empty(m)
    for i, ch in enumerate(channels):
        k, c = ch.kernel, ch.approximant
        norm_c[i] = pf.norm_l2(c, grid)
        norm_k[i] = pf.norm_l2(k, grid)
        if getattr(k, "closed_form", False) and getattr(c, "closed_form", False):
            norm_gap[i] = (k - c).norm()
        else:
            diff = k.values(grid) - c.values(grid)
            norm_gap[i] = float(np.sqrt(np.dot(w, diff**2)))
        if getattr(c, "closed_form", False):
            if qc is not None:
                norm_stiff[i] = (problem.p * c.derivative(2) - qc * c).norm()
            else:
                stiff = problem.p * c.derivative(2).values(grid) - q_vals * c.values(grid)
                norm_stiff[i] = float(np.sqrt(np.dot(w, stiff**2)))
        else:
            d2 = _second_derivative_fd4(c.values(grid), dx)
            stiff = problem.p * d2 - q_vals * c.values(grid)
            norm_stiff[i] = float(np.sqrt(np.dot(w, stiff**2)))
    return norm_c, norm_k, norm_gap, norm_stiff


def make_design(
    problem: SLProblem,
    basis: SpectralBasis,
    channels: Sequence[OutputChannel],
    L: np.ndarray,
    N: int,
    *,
    Q: float | None = None,
    sigma_fraction: float = 0.9,
    P: np.ndarray | None = None,
    sigma: float | None = None,
    lipschitz_R: float = 0.0,
    lipschitz_sup: float = 0.0,
    j_max: int = 200,
    bc_tol: float = 1e-6,
) -> ObserverDesign:
    """Assemble and validate the full observer design.

    The Lyapunov pair is synthesized from A unless (P, sigma) are supplied;
    either way the certificate inequalities are re-checked by eigenvalue
    computation before the design is emitted.
    """
    channels = tuple(channels)
    if not channels:
        raise ValueError("need at least one output channel")
    if not 1 <= N < basis.size:
        raise ValueError(f"need 1 <= N < basis.size = {basis.size}, got N = {N}")
    lam_next = float(basis.eigenvalues[N])
    if lam_next <= 0.0:
        raise ValueError(f"lambda_(N+1) must be positive, got {lam_next}")
    L = np.asarray(L, dtype=float).reshape(N, len(channels))

    for ch in channels:
        res = ch.boundary_residual(problem, basis.grid)
        if res > bc_tol:
            raise ValueError(
                f"channel {ch.label or '?'}: approximant violates the Robin "
                f"conditions (relative residual {res:.3g})"
            )

    from .sturm_liouville import project

    c_coeffs = np.vstack([project(ch.approximant, basis) for ch in channels])
    A = build_A(basis.eigenvalues[:N], L, c_coeffs)
    if P is None or sigma is None:
        P, sigma = lyapunov_certificate(A, sigma_fraction)
    else:
        P = np.atleast_2d(np.asarray(P, dtype=float))
    _validate_certificate(A, P, sigma)

    k_tail = coupling_constant_K(c_coeffs, N, j_max)
    if k_tail.last_block_fraction > 0.01:
        warnings.warn(
            f"tail-coupling constant truncated at {k_tail.modes_used} modes; the "
            f"last 50 carry {100 * k_tail.last_block_fraction:.1f}% of K^2",
            stacklevel=2,
        )
    K = k_tail.value
    P_norm = float(np.linalg.norm(P, 2))
    ltpl = float(np.linalg.norm(L.T @ P @ L, 2))
    if Q is None:
        bound = _q_lower_bound(ltpl, K, sigma, lam_next)
        Q = 2.0 if bound < 2.0 else 2.0 * bound
    _check_Q(Q, ltpl, K, sigma, lam_next)
    H, mu, g_tilde = _derived_constants(sigma, lam_next, P_norm, ltpl, K, Q)

    norm_c, norm_k, norm_gap, norm_stiff = _channel_constants(problem, channels, basis.grid)
    _, norm_l = injection_kernels(L, basis)
    cl = c_coeffs[:, :N] @ L  # cl[i, r] = int c_i l_r, exact given the coefficients

    return ObserverDesign(
        problem=problem,
        basis=basis,
        channels=channels,
        N=N,
        L=L,
        c_coeffs=c_coeffs,
        A=A,
        P=P,
        sigma=float(sigma),
        K=K,
        Q=float(Q),
        lipschitz_R=float(lipschitz_R),
        lipschitz_sup=float(lipschitz_sup),
        lam_next=lam_next,
        P_norm=P_norm,
        ltpl_norm=ltpl,
        H_Q=H,
        mu=mu,
        g_tilde=g_tilde,
        norm_l=norm_l,
        norm_c=norm_c,
        norm_k=norm_k,
        norm_gap=norm_gap,
        norm_stiff=norm_stiff,
        cl=cl,
        k_tail=k_tail,
    )


@dataclass(frozen=True)
class BoundCoefficients:
    """The three coefficients of the IOS estimate: decaying initial-error
    factor, per-channel measurement-noise gains, and modeling-error gain."""

    initial: float
    noise: np.ndarray
    mismatch: float


@dataclass(frozen=True)
class SmallGainReport:
    variant: str
    h: float
    kappa: float
    gamma: float
    omega: float
    feasible: bool
    coefficients: BoundCoefficients
    mu: float
    g_tilde: float


def _gamma(design: ObserverDesign, kappa: float) -> float:
    if not 0.0 <= kappa < design.mu:
        raise KappaOutOfRange(f"kappa must lie in [0, {design.mu:.6g}), got {kappa}")
    return math.sqrt(design.g_tilde / (2.0 * (design.mu - kappa)))


def _omega_value(design: ObserverDesign, h: float, kappa: float, variant: str) -> tuple[float, float]:
    gamma = _gamma(design, kappa)
    R = design.lipschitz_R
    slope = design.norm_stiff + R * design.norm_c
    if variant == "zoh":
        slope = slope + np.abs(design.cl) @ design.norm_k
    growth = math.exp(kappa * h)
    omega = gamma * (R + growth * float(np.dot(design.norm_l, slope * h + design.norm_gap)))
    return omega, gamma


def _report(design: ObserverDesign, h: float, kappa: float, variant: str,
            include_mismatch: bool = True) -> SmallGainReport:
    _check_Q(design.Q, design.ltpl_norm, design.K, design.sigma, design.lam_next)
    omega, gamma = _omega_value(design, h, kappa, variant)
    feasible = omega < 1.0
    growth = math.exp(kappa * h)
    if feasible:
        inv = 1.0 / (1.0 - omega)
        initial = inv * math.sqrt(max(design.P_norm, design.Q / 2.0))
        if variant == "zoh":
            per = design.norm_l + h * (np.abs(design.cl).T @ design.norm_l)
        else:
            per = design.norm_l
        noise = growth * inv * gamma * per
        mismatch = inv * gamma * (
            1.0 + h * growth * float(np.dot(design.norm_l, design.norm_c))
        )
        if not include_mismatch:
            mismatch = 0.0
    else:
        initial = math.inf
        noise = np.full(design.m, math.inf)
        mismatch = math.inf
    return SmallGainReport(
        variant=variant,
        h=h,
        kappa=kappa,
        gamma=gamma,
        omega=omega,
        feasible=feasible,
        coefficients=BoundCoefficients(initial=initial, noise=noise, mismatch=mismatch),
        mu=design.mu,
        g_tilde=design.g_tilde,
    )


def small_gain_predictor(
    design: ObserverDesign, h: float, kappa: float, v_mismatch_supported: bool = True
) -> SmallGainReport:
    """Small-gain value and IOS coefficients for the predictor observer.

    Omega = gamma (R + e^{kappa h} sum_i ||l_i|| ((||p c_i'' - q c_i|| +
    R ||c_i||) h + ||k_i - c_i||)); feasibility means Omega < 1.
    """
    if h <= 0.0:
        raise ValueError("sampling diameter h must be positive")
    return _report(design, h, kappa, "predictor", include_mismatch=v_mismatch_supported)


def small_gain_zoh(design: ObserverDesign, h: float, kappa: float) -> SmallGainReport:
    """Small-gain value for the zero-order-hold observer; the h-proportional
    bracket gains the extra nonnegative term sum_r |int c_i l_r| ||k_r||, so
    this value always dominates the predictor one."""
    if h <= 0.0:
        raise ValueError("sampling diameter h must be positive")
    return _report(design, h, kappa, "zoh")


def recompute_omega(design: ObserverDesign, report: SmallGainReport) -> float:
    """Re-evaluate Omega from a report's stored inputs (determinism check)."""
    omega, _ = _omega_value(design, report.h, report.kappa, report.variant)
    return omega


def max_diameter(design: ObserverDesign, kappa: float, variant: str) -> float:
    """Largest sampling diameter with Omega(h) = 1, by bisection to 1e-12.

    Returns math.inf when Omega is h-independent and below one (possible only
    when the h-proportional bracket vanishes and, for kappa > 0, nothing
    multiplies the exponential growth).
    """
    omega0, gamma = _omega_value(design, 0.0, kappa, variant)
    if omega0 >= 1.0:
        raise InfeasibleAtZero(f"Omega({0:+.0e}) = {omega0:.6g} already >= 1")
    R = design.lipschitz_R
    slope = design.norm_stiff + R * design.norm_c
    if variant == "zoh":
        slope = slope + np.abs(design.cl) @ design.norm_k
    h_weight = float(np.dot(design.norm_l, slope))
    exp_weight = float(np.dot(design.norm_l, design.norm_gap))
    if h_weight == 0.0 and (kappa == 0.0 or exp_weight == 0.0):
        return math.inf

    def gap(h: float) -> float:
        return _omega_value(design, h, kappa, variant)[0] - 1.0

    hi = 1.0
    while gap(hi) < 0.0:
        hi *= 2.0
        if hi > 2.0**60:
            return math.inf
    return float(brentq(gap, 0.0, hi, xtol=1e-300, rtol=1e-12, maxiter=400))


def select_Q(
    design: ObserverDesign, q_candidates: Sequence[float], h: float, kappa: float, variant: str
) -> tuple[float, float]:
    """Pick the candidate Q minimizing Omega (ties toward smaller Q).

    Returns (Q, Omega). Candidates violating Q >= 2, the tail-coupling bound,
    kappa < mu(Q) or Omega < 1 are skipped; NoFeasibleQ if none survive.
    """
    best: tuple[float, float] | None = None
    for Q in sorted(float(q) for q in q_candidates):
        try:
            trial = design.with_Q(Q)
            omega, _ = _omega_value(trial, h, kappa, variant)
        except (QInfeasible, KappaOutOfRange):
            continue
        if omega >= 1.0:
            continue
        # ties (to relative roundoff) break toward the smaller, earlier Q
        if best is None or omega < best[1] * (1.0 - 1e-12):
            best = (Q, omega)
    if best is None:
        raise NoFeasibleQ("no candidate Q yields Omega < 1")
    return best


# -- interchange ---------------------------------------------------------------

def design_to_json(design: ObserverDesign, basis_ref: str | None = None) -> dict:
    """JSON document with all scalars and row-major matrices; grid functions
    are carried by profile specs plus an optional basis CSV reference."""
    d = design
    return {
        "schema_version": 1,
        "N": d.N,
        "m": d.m,
        "L": d.L.tolist(),
        "A": d.A.tolist(),
        "P": d.P.tolist(),
        "sigma": d.sigma,
        "K": d.K,
        "Q": d.Q,
        "lipschitz_R": d.lipschitz_R,
        "lipschitz_sup": d.lipschitz_sup,
        "lambda_next": d.lam_next,
        "H_Q": d.H_Q,
        "mu": d.mu,
        "g_tilde": d.g_tilde,
        "eigenvalues": d.basis.eigenvalues.tolist(),
        "c_coeffs": d.c_coeffs.tolist(),
        "channel_constants": {
            "norm_l": d.norm_l.tolist(),
            "norm_c": d.norm_c.tolist(),
            "norm_k": d.norm_k.tolist(),
            "norm_k_minus_c": d.norm_gap.tolist(),
            "norm_stiffness": d.norm_stiff.tolist(),
            "cl": d.cl.tolist(),
        },
        "channels": [
            {
                "label": ch.label,
                "kernel": ch.kernel.spec(),
                "approximant": ch.approximant.spec(),
            }
            for ch in d.channels
        ],
        "problem": {
            "p": d.problem.p,
            "q": d.problem.q.spec(),
            "bc": {
                "a0": d.problem.a0,
                "b0": d.problem.b0,
                "a1": d.problem.a1,
                "b1": d.problem.b1,
            },
        },
        "basis": {
            "modes": d.basis.size,
            "nodes": int(d.basis.grid.size),
            "ref": basis_ref,
        },
    }


def design_from_json(doc: dict, basis: SpectralBasis | None = None) -> ObserverDesign:
    """Rebuild a design from its JSON document.

    The basis is re-created analytically when possible, loaded from the CSV
    reference otherwise, or taken from the caller.
    """
    from .sturm_liouville import analytic_eigensystem, basis_from_csv

    bc = doc["problem"]["bc"]
    problem = SLProblem(
        p=doc["problem"]["p"],
        q=pf.profile_from_spec(doc["problem"]["q"]),
        a0=bc["a0"],
        b0=bc["b0"],
        a1=bc["a1"],
        b1=bc["b1"],
    )
    if basis is None:
        ref = doc["basis"].get("ref")
        if ref:
            basis = basis_from_csv(ref, problem)
        else:
            basis = analytic_eigensystem(problem, doc["basis"]["modes"], doc["basis"]["nodes"])
    grid = basis.grid
    channels = [
        OutputChannel(
            kernel=pf.profile_from_spec(c["kernel"], grid),
            approximant=pf.profile_from_spec(c["approximant"], grid),
            label=c.get("label", ""),
        )
        for c in doc["channels"]
    ]
    return make_design(
        problem,
        basis,
        channels,
        np.asarray(doc["L"], dtype=float),
        doc["N"],
        Q=doc["Q"],
        P=np.asarray(doc["P"], dtype=float),
        sigma=doc["sigma"],
        lipschitz_R=doc.get("lipschitz_R", 0.0),
        lipschitz_sup=doc.get("lipschitz_sup", 0.0),
    )


def certificate_summary(design: ObserverDesign, reports: Sequence[SmallGainReport] = ()) -> str:
    """Human-readable certificate block, including the per-channel
    approximation trade-off table."""
    d = design
    lines = [
        "observer design certificate",
        "---------------------------",
        f"modes N = {d.N}, channels m = {d.m}, lambda_(N+1) = {d.lam_next:.12g}",
        f"A spectral abscissa = {certificate_defects(d.A, d.P, d.sigma)['abscissa']:.12g}",
        f"sigma = {d.sigma:.12g}, |P| = {d.P_norm:.12g}, min eig P = "
        f"{float(np.min(np.linalg.eigvalsh(d.P))):.12g}",
        f"K = {d.K:.12g} (truncated at {d.k_tail.modes_used} modes, "
        f"last-block share {d.k_tail.last_block_fraction:.2e})",
        f"Q = {d.Q:.12g}, H(Q) = {d.H_Q:.12g}, mu = {d.mu:.12g}, g~ = {d.g_tilde:.12g}",
        f"Lipschitz bound R = {d.lipschitz_R:.12g}",
        "",
        "channel   ||k||        ||c||        ||k-c||      ||p c''-q c||  ||l||",
    ]
    for i, ch in enumerate(d.channels):
        lines.append(
            f"{ch.label or i:>7}   {d.norm_k[i]:<12.6g} {d.norm_c[i]:<12.6g} "
            f"{d.norm_gap[i]:<12.6g} {d.norm_stiff[i]:<14.6g} {d.norm_l[i]:<.6g}"
        )
    if reports:
        lines.append("")
        lines.append("variant     h            kappa        Omega        feasible")
        for r in reports:
            lines.append(
                f"{r.variant:<9}   {r.h:<12.6g} {r.kappa:<12.6g} {r.omega:<12.6g} {r.feasible}"
            )
    return "\n".join(lines)
