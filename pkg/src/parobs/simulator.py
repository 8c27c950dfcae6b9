"""Method-of-lines co-simulation of plant and sampled-data observers.

Time integration is IMEX Crank-Nicolson: diffusion-reaction implicit,
the nonlinear/non-local/injection part explicit through a trapezoidal
corrector iteration. Every sampling time lands exactly on a step boundary,
and all discrete inner products share the trapezoid weights of the grid,
so the matched run (same initial state, same inputs, no noise) keeps the
observer error at roundoff level.

The inter-sample predictor integrates the coupled (w, zeta) system; the
rate of zeta uses the discrete operator applied to the approximant, which
makes the discrete integration-by-parts identity exact. The zero-order-hold
variant freezes the innovation between samples instead.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.linalg import solve_banded

from . import profiles as pf
from .errors import ScheduleHorizonMismatch, StepRejected
from .grids import l2_norm, sup_norm, trapezoid_weights, uniform_grid
from .nonlinear import NonlinearTerm, ZeroTerm
from .observer_design import ObserverDesign, injection_kernels, small_gain_predictor, small_gain_zoh
from .schedule import SamplingSchedule
from .signals import Disturbances, SpaceTimeSignal
from .sturm_liouville import DiscreteSLOperator, SLProblem

__all__ = [
    "Scenario",
    "Trajectory",
    "SampleEvent",
    "simulate",
    "measure",
    "reset_predictor",
    "step_plant",
    "step_observer_predictor",
    "step_observer_zoh",
    "bc_residual",
]

_CORRECTOR_RTOL = 1e-13
_CORRECTOR_MAXITER = 40


def measure(u: np.ndarray, kernel_rows: np.ndarray, xi: np.ndarray) -> np.ndarray:
    """y_i = xi_i + <k_i, u> with trapezoid quadrature rows."""
    return kernel_rows @ u + xi


def reset_predictor(y: np.ndarray, w: np.ndarray, gap_rows: np.ndarray) -> np.ndarray:
    """zeta_i(t_j) = y_i(t_j) - <k_i - c_i, w(t_j)>."""
    return y - gap_rows @ w


def bc_residual(u: np.ndarray, problem: SLProblem) -> float:
    """Scheme-consistent boundary residual, relative to the state scale.

    Dirichlet ends must be pinned exactly; Robin ends are built into the
    ghost-node stencil, so their scheme residual vanishes by construction.
    """
    scale = max(float(np.max(np.abs(u))), 1e-300)
    res = 0.0
    if problem.dirichlet_left:
        res = max(res, abs(u[0]) / scale)
    if problem.dirichlet_right:
        res = max(res, abs(u[-1]) / scale)
    return res


class _CNCore:
    """Crank-Nicolson solve/apply over the non-pinned nodes."""

    def __init__(self, op: DiscreteSLOperator):
        self.op = op
        self.free = op.free
        self._cache: dict[float, tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]] = {}

    def _matrices(self, dt: float):
        try:
            return self._cache[dt]
        except KeyError:
            pass
        sub, diag, sup = self.op.free_tridiagonals()
        n = diag.size
        # M1 = I + dt/2 B_h (implicit), M0 = I - dt/2 B_h (explicit)
        ab = np.zeros((3, n))
        ab[0, 1:] = 0.5 * dt * sup
        ab[1, :] = 1.0 + 0.5 * dt * diag
        ab[2, :-1] = 0.5 * dt * sub
        m0 = (-0.5 * dt * sub, 1.0 - 0.5 * dt * diag, -0.5 * dt * sup)
        out = (ab, *m0)
        self._cache[dt] = out
        return out

    def explicit_rhs(self, u: np.ndarray, dt: float) -> np.ndarray:
        ab, sub0, diag0, sup0 = self._matrices(dt)
        uf = u[self.free]
        rhs = diag0 * uf
        rhs[:-1] += sup0 * uf[1:]
        rhs[1:] += sub0 * uf[:-1]
        return rhs

    def solve(self, rhs_free: np.ndarray, dt: float, out: np.ndarray) -> np.ndarray:
        ab = self._matrices(dt)[0]
        out[:] = 0.0
        out[self.free] = solve_banded((1, 1), ab, rhs_free)
        return out


def _iterate_corrector(core: _CNCore, rhs0, g0, forcing, t, dt, template, zeta_pack=None):
    """Trapezoidal corrector: solve with the current guess of the end-of-step
    explicit part, refresh the guess, repeat until the iterates contract to
    roundoff. Returns the converged state (and zeta for coupled systems)."""
    free = core.free
    g1 = g0
    coupled = zeta_pack is not None
    if coupled:
        zeta0, zr0 = zeta_pack
        zr1 = zr0
    u_new = np.zeros_like(template)
    zeta_new = None
    prev = None
    prev_diff = math.inf
    grew = 0
    for _ in range(_CORRECTOR_MAXITER):
        core.solve(rhs0 + 0.5 * dt * (g0 + g1), dt, u_new)
        if coupled:
            zeta_new = zeta0 + 0.5 * dt * (zr0 + zr1)
        if prev is not None:
            diff = float(np.max(np.abs(u_new - prev[0])))
            if coupled and zeta_new.size:
                diff = max(diff, float(np.max(np.abs(zeta_new - prev[1]))))
            scale = max(float(np.max(np.abs(u_new))), 1.0)
            if diff <= _CORRECTOR_RTOL * scale:
                return u_new, zeta_new
            if diff >= prev_diff:
                grew += 1
                if grew >= 3:
                    raise StepRejected(
                        f"corrector diverging at t={t:.6g} (dt={dt:.3g}); "
                        "the explicit part is too stiff for this step"
                    )
            prev_diff = diff
        prev = (u_new.copy(), None if not coupled else zeta_new.copy())
        if not coupled:
            g1 = forcing(t + dt, u_new)[free]
        else:
            g1, zr1 = forcing(t + dt, u_new, zeta_new)
            g1 = g1[free]
    raise StepRejected(f"corrector failed to contract within {_CORRECTOR_MAXITER} iterations")


class PlantStepper:
    """One IMEX step of u_t = p u_xx - q u + f(u) + v."""

    def __init__(self, op: DiscreteSLOperator, nonlinearity: NonlinearTerm, v: SpaceTimeSignal):
        self.op = op
        self.core = _CNCore(op)
        self.nl = nonlinearity
        self.v = v

    def forcing(self, t: float, u: np.ndarray) -> np.ndarray:
        out = self.nl.apply(u)
        if not self.v.is_zero:
            out = out + self.v.field(t, self.op.grid)
        return out

    def step(self, u: np.ndarray, t: float, dt: float) -> np.ndarray:
        rhs0 = self.core.explicit_rhs(u, dt)
        g0 = self.forcing(t, u)[self.op.free]
        u_new, _ = _iterate_corrector(
            self.core, rhs0, g0, lambda tt, uu: self.forcing(tt, uu), t, dt, u
        )
        return u_new


class PredictorObserverStepper:
    """Coupled (w, zeta) step of the observer with inter-sample predictor.

    zeta receives the same trapezoidal-in-time treatment as w, and its rate
    uses <L_h c_i, w> with the discrete operator, so the pair (w, zeta)
    tracks (u, <c_i, u>) exactly on matched runs.
    """

    def __init__(
        self,
        op: DiscreteSLOperator,
        nonlinearity: NonlinearTerm,
        v_tilde: SpaceTimeSignal,
        c_rows: np.ndarray,
        l_cols: np.ndarray,
        stiff_rows: np.ndarray,
    ):
        self.op = op
        self.core = _CNCore(op)
        self.nl = nonlinearity
        self.vt = v_tilde
        self.c_rows = c_rows  # (m, n): weights * c_i
        self.l_cols = l_cols  # (n, m)
        self.stiff_rows = stiff_rows  # (m, n): weights * (L_h c_i)

    def _vt_field(self, t: float) -> np.ndarray:
        if self.vt.is_zero:
            return np.zeros_like(self.op.grid)
        return self.vt.field(t, self.op.grid)

    def rates(self, t: float, w: np.ndarray, zeta: np.ndarray):
        fw = self.nl.apply(w)
        vt = self._vt_field(t)
        gw = fw + vt + self.l_cols @ (self.c_rows @ w - zeta)
        zr = self.stiff_rows @ w + self.c_rows @ (fw + vt)
        return gw, zr

    def step(self, w: np.ndarray, zeta: np.ndarray, t: float, dt: float):
        rhs0 = self.core.explicit_rhs(w, dt)
        gw0, zr0 = self.rates(t, w, zeta)
        w_new, zeta_new = _iterate_corrector(
            self.core,
            rhs0,
            gw0[self.op.free],
            self.rates,
            t,
            dt,
            w,
            zeta_pack=(zeta, zr0),
        )
        return w_new, zeta_new


class ZohObserverStepper:
    """Observer step with the innovation held constant between samples."""

    def __init__(
        self,
        op: DiscreteSLOperator,
        nonlinearity: NonlinearTerm,
        v_tilde: SpaceTimeSignal,
        l_cols: np.ndarray,
    ):
        self.op = op
        self.core = _CNCore(op)
        self.nl = nonlinearity
        self.vt = v_tilde
        self.l_cols = l_cols
        self.held = np.zeros(l_cols.shape[1])

    def forcing(self, t: float, w: np.ndarray) -> np.ndarray:
        out = self.nl.apply(w) + self.l_cols @ self.held
        if not self.vt.is_zero:
            out = out + self.vt.field(t, self.op.grid)
        return out

    def step(self, w: np.ndarray, t: float, dt: float) -> np.ndarray:
        rhs0 = self.core.explicit_rhs(w, dt)
        g0 = self.forcing(t, w)[self.op.free]
        w_new, _ = _iterate_corrector(
            self.core, rhs0, g0, lambda tt, ww: self.forcing(tt, ww), t, dt, w
        )
        return w_new


# -- spec-level single-step entry points ---------------------------------------

def step_plant(u, t, dt, problem: SLProblem, nonlinearity: NonlinearTerm | None, v) -> np.ndarray:
    """Single IMEX plant step on the grid implied by len(u)."""
    op = DiscreteSLOperator(problem, len(u))
    stepper = PlantStepper(op, nonlinearity or ZeroTerm(), _as_field_signal(v))
    return stepper.step(np.asarray(u, dtype=float), t, dt)


def step_observer_predictor(w, zeta, t, dt, design: ObserverDesign, nonlinearity, v_tilde):
    """Single coupled (w, zeta) step for the predictor observer."""
    pieces = _observer_pieces(design, len(w))
    stepper = PredictorObserverStepper(
        pieces["op"], nonlinearity or ZeroTerm(), _as_field_signal(v_tilde),
        pieces["c_rows"], pieces["l_cols"], pieces["stiff_rows"],
    )
    return stepper.step(np.asarray(w, dtype=float), np.asarray(zeta, dtype=float), t, dt)


def step_observer_zoh(w, held, t, dt, design: ObserverDesign, nonlinearity, v_tilde):
    """Single observer step with held innovation."""
    pieces = _observer_pieces(design, len(w))
    stepper = ZohObserverStepper(
        pieces["op"], nonlinearity or ZeroTerm(), _as_field_signal(v_tilde), pieces["l_cols"]
    )
    stepper.held = np.asarray(held, dtype=float)
    return stepper.step(np.asarray(w, dtype=float), t, dt)


def _as_field_signal(v) -> SpaceTimeSignal:
    if v is None:
        return SpaceTimeSignal()
    if isinstance(v, SpaceTimeSignal):
        return v
    from .signals import field_signal_from_spec

    return field_signal_from_spec(v)


def _observer_pieces(design: ObserverDesign, nodes: int) -> dict:
    op = DiscreteSLOperator(design.problem, nodes)
    basis = design.basis.resample(nodes)
    w = op.weights
    l_samples, _ = injection_kernels(design.L, basis)
    c_samples = np.vstack([ch.approximant.values(op.grid) for ch in design.channels])
    k_samples = np.vstack([ch.kernel.values(op.grid) for ch in design.channels])
    return {
        "op": op,
        "l_cols": l_samples.T,
        "c_rows": c_samples * w,
        "k_rows": k_samples * w,
        "gap_rows": (k_samples - c_samples) * w,
        "stiff_rows": (-np.vstack([op.apply(c) for c in c_samples])) * w,
        "c_samples": c_samples,
        "k_samples": k_samples,
    }


# -- scenario and trajectory ----------------------------------------------------

@dataclass(frozen=True)
class SampleEvent:
    index: int
    t: float
    y: np.ndarray
    xi: np.ndarray | None = None
    zeta_before: np.ndarray | None = None
    zeta_after: np.ndarray | None = None
    held: np.ndarray | None = None


@dataclass(frozen=True)
class Scenario:
    """Everything one co-simulation run needs, bound to one grid size."""

    design: ObserverDesign
    variant: str  # "predictor" or "zoh"
    schedule: SamplingSchedule
    nodes: int
    u0: object
    w0: object
    nonlinearity: NonlinearTerm = field(default_factory=ZeroTerm)
    disturbances: Disturbances = field(default_factory=Disturbances)
    dt: float | None = None  # None -> min(dx, h/20)
    snapshot_every: float | None = None
    horizon: float | None = None  # None -> schedule horizon
    label: str = ""

    def __post_init__(self):
        if self.variant not in ("predictor", "zoh"):
            raise ValueError(f"unknown observer variant {self.variant!r}")
        if len(self.disturbances.xi) not in (0, self.design.m):
            raise ValueError("need one noise channel per output channel")


@dataclass
class Trajectory:
    """Snapshots of plant and observer fields plus per-sample events.

    For the predictor variant ``zeta`` holds the predictor states; for the
    zero-order-hold variant it holds the held innovation values.
    """

    times: np.ndarray
    u: np.ndarray
    w: np.ndarray
    zeta: np.ndarray
    sample_flag: np.ndarray
    events: list[SampleEvent]
    grid: np.ndarray
    error_l2: np.ndarray
    error_sup: np.ndarray
    metadata: dict

    @property
    def weights(self) -> np.ndarray:
        return trapezoid_weights(self.grid)

    def error_fields(self) -> np.ndarray:
        return self.w - self.u

    def validate(self) -> None:
        if np.any(np.diff(self.times) <= 0.0):
            raise ValueError("snapshot times must be strictly increasing")
        sample_times = {e.t for e in self.events}
        recorded = set(self.times[self.sample_flag].tolist())
        if not sample_times <= recorded:
            raise ValueError("sample events must be a subset of snapshot times")


def simulate(scenario: Scenario) -> Trajectory:
    """Run the co-simulation; deterministic given the scenario seeds.

    Sub-steps subdivide each sampling interval exactly, so every sampling
    time is an integrator step boundary and no interpolation happens at
    predictor resets. Designs whose small-gain value exceeds one still run
    (divergence studies are legitimate) but emit a warning.
    """
    design = scenario.design
    sch = scenario.schedule
    horizon = scenario.horizon if scenario.horizon is not None else sch.horizon
    if horizon > sch.horizon + 1e-12:
        raise ScheduleHorizonMismatch(
            f"schedule covers {sch.horizon:.6g}, simulation wants {horizon:.6g}"
        )

    pieces = _observer_pieces(design, scenario.nodes)
    op: DiscreteSLOperator = pieces["op"]
    grid, weights = op.grid, op.weights
    nl = scenario.nonlinearity
    dist = scenario.disturbances
    xi = dist.xi if dist.xi else tuple(None for _ in range(design.m))

    gain_fn = small_gain_predictor if scenario.variant == "predictor" else small_gain_zoh
    try:
        report = gain_fn(design, sch.diameter, 0.0)
        if not report.feasible:
            warnings.warn(
                f"small-gain value {report.omega:.4g} >= 1 at diameter "
                f"{sch.diameter:.4g}; convergence is not certified",
                stacklevel=2,
            )
    except Exception:
        pass

    u = _initial_field(scenario.u0, op)
    w = _initial_field(scenario.w0, op)

    plant = PlantStepper(op, nl, dist.v)
    if scenario.variant == "predictor":
        obs = PredictorObserverStepper(
            op, nl, dist.v_tilde, pieces["c_rows"], pieces["l_cols"], pieces["stiff_rows"]
        )
        zeta = np.zeros(design.m)
    else:
        obs = ZohObserverStepper(op, nl, dist.v_tilde, pieces["l_cols"])
        zeta = obs.held

    dx = grid[1] - grid[0]
    dt_target = scenario.dt if scenario.dt is not None else min(dx, sch.diameter / 20.0)
    snap_every = (
        scenario.snapshot_every if scenario.snapshot_every is not None else horizon / 512.0
    )

    times, u_snap, w_snap, z_snap, flags = [], [], [], [], []
    events: list[SampleEvent] = []

    def record(t: float, is_sample: bool):
        if times and t <= times[-1] + 1e-14:
            if is_sample:
                flags[-1] = True
                z_snap[-1] = zeta.copy()
            return
        times.append(t)
        u_snap.append(u.copy())
        w_snap.append(w.copy())
        z_snap.append(zeta.copy())
        flags.append(is_sample)

    sample_times = sch.times[sch.times <= horizon + 1e-12]
    next_snap = 0.0
    for j, t_j in enumerate(sample_times):
        xi_vals = np.array(
            [0.0 if s is None else s.value(t_j, j) for s in xi]
        )
        y = measure(u, pieces["k_rows"], xi_vals)
        if scenario.variant == "predictor":
            before = zeta.copy()
            zeta = reset_predictor(y, w, pieces["gap_rows"])
            events.append(
                SampleEvent(
                    index=j, t=float(t_j), y=y, xi=xi_vals,
                    zeta_before=before, zeta_after=zeta.copy(),
                )
            )
        else:
            obs.held = pieces["k_rows"] @ w - y
            zeta = obs.held
            events.append(SampleEvent(index=j, t=float(t_j), y=y, xi=xi_vals, held=obs.held.copy()))
        record(float(t_j), True)
        next_snap = max(next_snap, float(t_j)) + snap_every

        t_next = sample_times[j + 1] if j + 1 < len(sample_times) else horizon
        gap = float(t_next - t_j)
        if gap <= 1e-14:
            continue
        n_sub = max(1, math.ceil(gap / dt_target - 1e-9))
        dt = gap / n_sub
        for step in range(n_sub):
            t = float(t_j) + step * dt
            u = plant.step(u, t, dt)
            if scenario.variant == "predictor":
                w, zeta = obs.step(w, zeta, t, dt)
            else:
                w = obs.step(w, t, dt)
            t_new = float(t_j) + (step + 1) * dt
            is_last = step == n_sub - 1
            if is_last and (j + 1 >= len(sample_times)):
                record(horizon, False)
            elif not is_last and t_new >= next_snap - 1e-12:
                record(t_new, False)
                next_snap += snap_every

    times_arr = np.asarray(times)
    u_arr = np.asarray(u_snap)
    w_arr = np.asarray(w_snap)
    e_arr = w_arr - u_arr
    err_l2 = np.sqrt(np.maximum((e_arr**2) @ weights, 0.0))
    err_sup = np.max(np.abs(e_arr), axis=1)
    traj = Trajectory(
        times=times_arr,
        u=u_arr,
        w=w_arr,
        zeta=np.asarray(z_snap),
        sample_flag=np.asarray(flags, dtype=bool),
        events=events,
        grid=grid,
        error_l2=err_l2,
        error_sup=err_sup,
        metadata={
            "variant": scenario.variant,
            "nodes": scenario.nodes,
            "dt_target": dt_target,
            "scheme": "imex-crank-nicolson",
            "diameter": sch.diameter,
            "horizon": horizon,
            "label": scenario.label,
        },
    )
    traj.validate()
    return traj


def _initial_field(profile_like, op: DiscreteSLOperator) -> np.ndarray:
    vals = pf.as_profile(profile_like, op.grid).values(op.grid)
    vals = np.array(vals, dtype=float)
    scale = max(float(np.max(np.abs(vals))), 1e-300)
    if op.problem.dirichlet_left and abs(vals[0]) > 1e-8 * scale:
        raise ValueError("initial field violates the Dirichlet condition at x = 0")
    if op.problem.dirichlet_right and abs(vals[-1]) > 1e-8 * scale:
        raise ValueError("initial field violates the Dirichlet condition at x = 1")
    return op.pin(vals)
