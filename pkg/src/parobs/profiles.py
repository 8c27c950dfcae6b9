"""Spatial profiles on [0, 1] with exact L2 pairings where closed forms exist.

A :class:`Profile` is a polynomial plus a sum of cosine terms
``a * cos(omega * x + phase)``.  Sums, differences, scalar multiples and
derivatives stay inside the class, and pairwise inner products
``int_0^1 f g dx`` evaluate in closed form.  Certificate constants built
from such profiles are therefore exact to float roundoff instead of being
limited by quadrature error.  Grid data without a closed form goes through
:class:`SampledProfile` and falls back to trapezoid quadrature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import GridMismatch

__all__ = [
    "Profile",
    "SampledProfile",
    "FunctionProfile",
    "constant",
    "polynomial",
    "cosine",
    "sine",
    "cosine_series",
    "as_profile",
    "profile_from_spec",
    "inner_l2",
    "norm_l2",
]

_OMEGA_TINY = 1e-14


def _cos_moment(n: int, omega: float, phase: float) -> float:
    """Exact ``int_0^1 x**n cos(omega x + phase) dx``."""
    if abs(omega) < _OMEGA_TINY:
        return math.cos(phase) / (n + 1)
    if n == 0:
        return (math.sin(omega + phase) - math.sin(phase)) / omega
    return math.sin(omega + phase) / omega - (n / omega) * _sin_moment(n - 1, omega, phase)


def _sin_moment(n: int, omega: float, phase: float) -> float:
    """Exact ``int_0^1 x**n sin(omega x + phase) dx``."""
    if abs(omega) < _OMEGA_TINY:
        return math.sin(phase) / (n + 1)
    if n == 0:
        return (math.cos(phase) - math.cos(omega + phase)) / omega
    return -math.cos(omega + phase) / omega + (n / omega) * _cos_moment(n - 1, omega, phase)


@dataclass(frozen=True)
class Profile:
    """Closed-form profile: polynomial (ascending coeffs) + cosine terms."""

    poly: tuple[float, ...] = ()
    trig: tuple[tuple[float, float, float], ...] = ()  # (amp, omega, phase)

    closed_form = True

    def values(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        if self.poly:
            out += np.polynomial.polynomial.polyval(x, np.asarray(self.poly))
        for amp, omega, phase in self.trig:
            out += amp * np.cos(omega * x + phase)
        return out

    __call__ = values

    def derivative(self, order: int = 1) -> "Profile":
        poly = np.asarray(self.poly, dtype=float)
        for _ in range(order):
            poly = np.polynomial.polynomial.polyder(poly) if poly.size else poly
        trig = tuple(
            (amp * omega**order, omega, phase + order * math.pi / 2.0)
            for amp, omega, phase in self.trig
        )
        return Profile(tuple(np.atleast_1d(poly).tolist()) if poly.size else (), trig)

    def inner(self, other: "Profile") -> float:
        """Exact ``int_0^1 self * other dx``."""
        total = 0.0
        a, b = self.poly, other.poly
        for i, ai in enumerate(a):
            for j, bj in enumerate(b):
                total += ai * bj / (i + j + 1)
        for coeffs, terms in ((a, other.trig), (b, self.trig)):
            for n, cn in enumerate(coeffs):
                if cn == 0.0:
                    continue
                for amp, omega, phase in terms:
                    total += cn * amp * _cos_moment(n, omega, phase)
        for amp1, om1, ph1 in self.trig:
            for amp2, om2, ph2 in other.trig:
                # product-to-sum: cos(u)cos(v) = (cos(u-v) + cos(u+v)) / 2
                total += 0.5 * amp1 * amp2 * (
                    _cos_moment(0, om1 - om2, ph1 - ph2)
                    + _cos_moment(0, om1 + om2, ph1 + ph2)
                )
        return total

    def norm(self) -> float:
        return math.sqrt(max(self.inner(self), 0.0))

    def __add__(self, other: "Profile") -> "Profile":
        if not isinstance(other, Profile):
            return NotImplemented
        n = max(len(self.poly), len(other.poly))
        poly = tuple(
            (self.poly[i] if i < len(self.poly) else 0.0)
            + (other.poly[i] if i < len(other.poly) else 0.0)
            for i in range(n)
        )
        return Profile(poly, self.trig + other.trig)

    def __sub__(self, other: "Profile") -> "Profile":
        return self + (-1.0) * other

    def __rmul__(self, scalar: float) -> "Profile":
        s = float(scalar)
        return Profile(
            tuple(s * c for c in self.poly),
            tuple((s * amp, omega, phase) for amp, omega, phase in self.trig),
        )

    __mul__ = __rmul__

    def __neg__(self) -> "Profile":
        return (-1.0) * self

    def spec(self) -> dict:
        return {
            "kind": "closed_form",
            "poly": list(self.poly),
            "trig": [list(t) for t in self.trig],
        }


class SampledProfile:
    """Profile given only by samples on a fixed uniform grid."""

    closed_form = False

    def __init__(self, grid: np.ndarray, samples: Sequence[float]):
        self.grid = np.asarray(grid, dtype=float)
        self.samples = np.asarray(samples, dtype=float)
        if self.grid.shape != self.samples.shape:
            raise GridMismatch(
                f"grid has {self.grid.size} nodes, samples have {self.samples.size}"
            )

    def values(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape == self.grid.shape and np.allclose(x, self.grid, atol=1e-12):
            return self.samples.copy()
        return np.interp(x, self.grid, self.samples)

    __call__ = values

    def derivative(self, order: int = 1) -> "SampledProfile":
        vals = self.samples
        for _ in range(order):
            vals = np.gradient(vals, self.grid, edge_order=2)
        return SampledProfile(self.grid, vals)

    def spec(self) -> dict:
        return {"kind": "samples", "values": self.samples.tolist()}


class FunctionProfile:
    """Profile backed by an arbitrary callable; quadrature-only pairings."""

    closed_form = False

    def __init__(self, fn: Callable[[np.ndarray], np.ndarray]):
        self.fn = fn

    def values(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(np.asarray(self.fn(x), dtype=float), x.shape).copy()

    __call__ = values

    def derivative(self, order: int = 1):
        raise NotImplementedError("sample a FunctionProfile before differentiating")

    def spec(self) -> dict:
        raise NotImplementedError("FunctionProfile is not serializable")


def constant(value: float) -> Profile:
    return Profile((float(value),), ())


def polynomial(coeffs: Sequence[float]) -> Profile:
    """Ascending coefficients: coeffs[k] multiplies x**k."""
    return Profile(tuple(float(c) for c in coeffs), ())


def cosine(amplitude: float, omega: float, phase: float = 0.0) -> Profile:
    return Profile((), ((float(amplitude), float(omega), float(phase)),))


def sine(amplitude: float, omega: float, phase: float = 0.0) -> Profile:
    return cosine(amplitude, omega, phase - math.pi / 2.0)


def cosine_series(mean: float = 0.0, coeffs: Sequence[float] = ()) -> Profile:
    """mean + sum_k coeffs[k-1] * cos(k pi x); Neumann-compatible."""
    trig = tuple(
        (float(a), (k + 1) * math.pi, 0.0) for k, a in enumerate(coeffs) if a != 0.0
    )
    poly = (float(mean),) if mean != 0.0 else ()
    return Profile(poly, trig)


def as_profile(obj, grid: np.ndarray | None = None):
    """Coerce numbers, callables, arrays or specs into a profile object."""
    if isinstance(obj, (Profile, SampledProfile, FunctionProfile)):
        return obj
    if isinstance(obj, (int, float)):
        return constant(obj)
    if isinstance(obj, dict):
        return profile_from_spec(obj, grid)
    if isinstance(obj, np.ndarray) or (
        isinstance(obj, (list, tuple)) and obj and isinstance(obj[0], (int, float))
    ):
        if grid is None:
            raise GridMismatch("sample arrays need an explicit grid")
        return SampledProfile(grid, np.asarray(obj, dtype=float))
    if callable(obj):
        return FunctionProfile(obj)
    raise TypeError(f"cannot interpret {obj!r} as a spatial profile")


def profile_from_spec(spec: dict, grid: np.ndarray | None = None):
    """Build a profile from its JSON-friendly description."""
    kind = spec.get("kind")
    if kind == "constant":
        return constant(spec["value"])
    if kind == "polynomial":
        return polynomial(spec["coeffs"])
    if kind == "cosine":
        return cosine(spec["amplitude"], spec["omega"], spec.get("phase", 0.0))
    if kind == "sine":
        return sine(spec["amplitude"], spec["omega"], spec.get("phase", 0.0))
    if kind == "cosine_series":
        return cosine_series(spec.get("mean", 0.0), spec.get("coeffs", ()))
    if kind == "closed_form":
        return Profile(
            tuple(spec.get("poly", ())),
            tuple(tuple(t) for t in spec.get("trig", ())),
        )
    if kind == "samples":
        if grid is None:
            raise GridMismatch("'samples' profile needs a grid")
        return SampledProfile(grid, spec["values"])
    if kind == "sum":
        parts = [profile_from_spec(p, grid) for p in spec["parts"]]
        total = parts[0]
        for p in parts[1:]:
            total = total + p
        return total
    raise ValueError(f"unknown profile kind {kind!r}")


def inner_l2(f, g, grid: np.ndarray | None = None) -> float:
    """``int_0^1 f g dx``: exact for two closed-form profiles, else trapezoid."""
    if getattr(f, "closed_form", False) and getattr(g, "closed_form", False):
        return f.inner(g)
    if grid is None:
        raise GridMismatch("quadrature pairing needs a grid")
    return float(np.trapezoid(f.values(grid) * g.values(grid), grid))


def norm_l2(f, grid: np.ndarray | None = None) -> float:
    return math.sqrt(max(inner_l2(f, f, grid), 0.0))
