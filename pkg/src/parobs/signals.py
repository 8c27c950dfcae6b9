"""Disturbance and noise signal library.

Distributed inputs are closed-form in time and space (zero, separable
a(t) b(x), or sums of separable terms), so they are evaluable at arbitrary
(t, x) and smooth by construction. Measurement noise is per-channel:
zero, constant, sinusoid, or seeded bounded random values drawn per sample
index, deterministically reproducible from the seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import profiles as pf
from .errors import InvalidSpec

__all__ = [
    "TimeSignal",
    "SpaceTimeSignal",
    "NoiseSignal",
    "Disturbances",
    "time_signal_from_spec",
    "field_signal_from_spec",
    "noise_from_spec",
    "disturbances_from_spec",
]


@dataclass(frozen=True)
class TimeSignal:
    """value(t) = offset + amplitude * sin(omega t + phase)."""

    offset: float = 0.0
    amplitude: float = 0.0
    omega: float = 0.0
    phase: float = 0.0

    def value(self, t: float) -> float:
        return self.offset + self.amplitude * np.sin(self.omega * t + self.phase)

    def spec(self) -> dict:
        return {
            "kind": "time",
            "offset": self.offset,
            "amplitude": self.amplitude,
            "omega": self.omega,
            "phase": self.phase,
        }


def time_signal_from_spec(spec) -> TimeSignal:
    if isinstance(spec, TimeSignal):
        return spec
    if isinstance(spec, (int, float)):
        return TimeSignal(offset=float(spec))
    kind = spec.get("kind", "time")
    if kind == "zero":
        return TimeSignal()
    if kind == "constant":
        return TimeSignal(offset=float(spec["value"]))
    if kind in ("sinusoid", "time"):
        return TimeSignal(
            offset=float(spec.get("offset", 0.0)),
            amplitude=float(spec.get("amplitude", 0.0)),
            omega=float(spec.get("omega", 1.0)),
            phase=float(spec.get("phase", 0.0)),
        )
    raise InvalidSpec(f"unknown time-signal kind {kind!r}")


@dataclass(frozen=True)
class SpaceTimeSignal:
    """Sum of separable terms a_k(t) b_k(x); empty sum is the zero input."""

    terms: tuple[tuple[TimeSignal, object], ...] = ()

    @property
    def is_zero(self) -> bool:
        return not self.terms

    def field(self, t: float, grid: np.ndarray) -> np.ndarray:
        out = np.zeros_like(grid)
        for ts, prof in self.terms:
            out += ts.value(t) * prof.values(grid)
        return out

    def value(self, t: float, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for ts, prof in self.terms:
            out += ts.value(t) * prof.values(x)
        return out

    def spec(self) -> dict:
        if self.is_zero:
            return {"kind": "zero"}
        return {
            "kind": "sum",
            "terms": [
                {"time": ts.spec(), "space": prof.spec()} for ts, prof in self.terms
            ],
        }


def field_signal_from_spec(spec, grid: np.ndarray | None = None) -> SpaceTimeSignal:
    if isinstance(spec, SpaceTimeSignal):
        return spec
    if spec is None:
        return SpaceTimeSignal()
    kind = spec.get("kind")
    if kind == "zero":
        return SpaceTimeSignal()
    if kind == "separable":
        return SpaceTimeSignal(
            terms=(
                (time_signal_from_spec(spec["time"]), pf.as_profile(spec["space"], grid)),
            )
        )
    if kind == "sum":
        terms = tuple(
            (time_signal_from_spec(t["time"]), pf.as_profile(t["space"], grid))
            for t in spec["terms"]
        )
        return SpaceTimeSignal(terms=terms)
    if kind == "cosine_series":
        # sum_k coeffs[k-1] cos(k pi x), all modulated by one time signal
        prof = pf.cosine_series(spec.get("mean", 0.0), spec.get("coeffs", ()))
        return SpaceTimeSignal(terms=((time_signal_from_spec(spec.get("time", 1.0)), prof),))
    raise InvalidSpec(f"unknown field-signal kind {kind!r}")


@dataclass(frozen=True)
class NoiseSignal:
    """Bounded per-channel measurement error with a declared amplitude."""

    kind: str = "zero"
    amplitude: float = 0.0
    omega: float = 1.0
    phase: float = 0.0
    seed: int = 0
    channel: int = 0

    def value(self, t: float, sample_index: int | None = None) -> float:
        if self.kind == "zero":
            return 0.0
        if self.kind == "constant":
            return self.amplitude
        if self.kind == "sinusoid":
            return self.amplitude * float(np.sin(self.omega * t + self.phase))
        if self.kind == "random":
            if sample_index is None:
                return 0.0  # random noise is defined only at sample instants
            rng = np.random.default_rng([self.seed, self.channel, int(sample_index)])
            return float(rng.uniform(-self.amplitude, self.amplitude))
        raise InvalidSpec(f"unknown noise kind {self.kind!r}")

    @property
    def bound(self) -> float:
        return abs(self.amplitude)

    def spec(self) -> dict:
        out = {"kind": self.kind, "amplitude": self.amplitude}
        if self.kind == "sinusoid":
            out.update(omega=self.omega, phase=self.phase)
        if self.kind == "random":
            out.update(seed=self.seed)
        return out


def noise_from_spec(spec, channel: int = 0) -> NoiseSignal:
    if isinstance(spec, NoiseSignal):
        return spec
    if spec is None:
        return NoiseSignal(channel=channel)
    kind = spec.get("kind", "zero")
    if kind not in ("zero", "constant", "sinusoid", "random"):
        raise InvalidSpec(f"unknown noise kind {kind!r}")
    return NoiseSignal(
        kind=kind,
        amplitude=float(spec.get("amplitude", spec.get("value", 0.0))),
        omega=float(spec.get("omega", 1.0)),
        phase=float(spec.get("phase", 0.0)),
        seed=int(spec.get("seed", 0)),
        channel=channel,
    )


@dataclass(frozen=True)
class Disturbances:
    """Plant input v, the observer's copy of it, and measurement noise."""

    v: SpaceTimeSignal = field(default_factory=SpaceTimeSignal)
    v_tilde: SpaceTimeSignal = field(default_factory=SpaceTimeSignal)
    xi: tuple[NoiseSignal, ...] = ()

    def mismatch_field(self, t: float, grid: np.ndarray) -> np.ndarray:
        return self.v.field(t, grid) - self.v_tilde.field(t, grid)

    def xi_values(self, t: float, sample_index: int | None = None) -> np.ndarray:
        return np.array([n.value(t, sample_index) for n in self.xi])


def disturbances_from_spec(spec: dict | None, m: int, grid: np.ndarray | None = None) -> Disturbances:
    spec = spec or {}
    xi_spec = spec.get("xi")
    if xi_spec is None:
        xi = tuple(NoiseSignal(channel=i) for i in range(m))
    elif isinstance(xi_spec, dict):
        xi = tuple(noise_from_spec(xi_spec, channel=i) for i in range(m))
    else:
        if len(xi_spec) != m:
            raise InvalidSpec(f"need {m} noise channels, got {len(xi_spec)}")
        xi = tuple(noise_from_spec(s, channel=i) for i, s in enumerate(xi_spec))
    return Disturbances(
        v=field_signal_from_spec(spec.get("v"), grid),
        v_tilde=field_signal_from_spec(spec.get("v_tilde"), grid),
        xi=xi,
    )
