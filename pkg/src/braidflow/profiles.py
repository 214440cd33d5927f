"""Radial rotation profiles and the radial Hamiltonians they generate.

A profile ``prof(r)`` is the number of counterclockwise turns that the time-1
map makes on the circle of radius ``r`` about a center.  Profiles are C1
piecewise cubic Hermite curves through a list of knots; the generating
Hamiltonian is

    H(r) = 2*pi * integral_r^{r_max} s * prof(s) ds,

which vanishes at the edge of the support and gives angular speed
``2*pi*prof(r)`` for the symplectic gradient with respect to dx^dy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import integrate
from scipy.interpolate import CubicHermiteSpline

from .errors import DomainError, NumericError, ValidationError

TWO_PI = 2.0 * math.pi

# Tuned so that the action spectrum of the paper scenario is as widely
# separated as the constraints allow (see scenarios.tune_profiles).
DEFAULT_ALPHA0 = 2.5
DEFAULT_BETA0 = 3.5

_GAUSS_X, _GAUSS_W = np.polynomial.legendre.leggauss(4)


def hermite_slopes(knots: Sequence[float], values: Sequence[float]) -> np.ndarray:
    """Shape-preserving knot slopes (Fritsch-Butland weighted harmonic mean).

    End slopes are zero, which keeps the rotation smooth at the center and
    flush with the zero tail.  A knot adjacent to a flat segment or at a local
    extremum also gets slope zero, so plateaus join with C1 contact.
    """
    x = np.asarray(knots, dtype=float)
    y = np.asarray(values, dtype=float)
    h = np.diff(x)
    d = np.diff(y) / h
    m = np.zeros_like(x)
    for i in range(1, len(x) - 1):
        if d[i - 1] == 0.0 or d[i] == 0.0 or np.sign(d[i - 1]) != np.sign(d[i]):
            continue
        w1 = 2.0 * h[i] + h[i - 1]
        w2 = h[i] + 2.0 * h[i - 1]
        with np.errstate(over="ignore"):  # tiny secants: the harmonic mean tends to 0
            m[i] = (w1 + w2) / (w1 / d[i - 1] + w2 / d[i])
    return m


@dataclass(frozen=True)
class RadialProfile:
    """Piecewise cubic Hermite turn-count profile on ``[0, r_max]``.

    ``prof(r) = 0`` for ``r >= r_max``; the last knot value must be zero so the
    extension is continuous.
    """

    knots: tuple
    values: tuple
    slopes: tuple
    name: str = "profile"
    _spline: CubicHermiteSpline = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        knots = tuple(float(k) for k in self.knots)
        values = tuple(float(v) for v in self.values)
        slopes = tuple(float(s) for s in self.slopes)
        if not (len(knots) == len(values) == len(slopes)) or len(knots) < 2:
            raise ValidationError("knots, values and slopes must have equal length >= 2")
        if knots[0] != 0.0:
            raise ValidationError("first knot must be at r = 0")
        if any(b <= a for a, b in zip(knots, knots[1:])):
            raise ValidationError("knots must be strictly increasing")
        if values[-1] != 0.0 or slopes[-1] != 0.0:
            raise ValidationError("profile must end at value 0 with slope 0")
        if not all(map(math.isfinite, values + slopes)):
            raise ValidationError("profile values and slopes must be finite")
        object.__setattr__(self, "knots", knots)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "slopes", slopes)
        spline = CubicHermiteSpline(knots, values, slopes)
        object.__setattr__(self, "_spline", spline)
        object.__setattr__(self, "_breaks", np.asarray(knots[:-1]))
        object.__setattr__(self, "_coef", np.ascontiguousarray(spline.c.T))  # (pieces, 4), highest power first

    @classmethod
    def from_knots(cls, knots, values, slopes=None, name="profile"):
        if slopes is None:
            slopes = hermite_slopes(knots, values)
        return cls(tuple(knots), tuple(values), tuple(slopes), name)

    @property
    def r_max(self) -> float:
        return self.knots[-1]

    @property
    def support_radius(self) -> float:
        """Smallest radius beyond which the profile vanishes identically."""
        idx = len(self.values) - 1
        while idx > 0 and self.values[idx - 1] == 0.0 and self.slopes[idx - 1] == 0.0:
            idx -= 1
        return self.knots[idx]

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        if r.size and r.min() < 0:
            raise DomainError("profile evaluated at negative radius")
        return self._eval(r)

    def _eval(self, r):
        # Horner on the spline's local polynomials; r >= 0 assumed
        r = np.minimum(r, self.knots[-1])
        i = np.maximum(np.searchsorted(self._breaks, r, side="right") - 1, 0)
        d = r - self._breaks[i]
        c = self._coef[i]
        return ((c[..., 0] * d + c[..., 1]) * d + c[..., 2]) * d + c[..., 3]

    def derivative(self, r):
        r = np.asarray(r, dtype=float)
        inside = r < self.r_max
        return np.where(inside, self._spline(np.minimum(r, self.r_max), 1), 0.0)

    def pieces(self):
        """Yield ``(a, b, constant_value_or_None)`` for each knot interval."""
        for i in range(len(self.knots) - 1):
            flat = (
                self.values[i] == self.values[i + 1]
                and self.slopes[i] == 0.0
                and self.slopes[i + 1] == 0.0
            )
            yield self.knots[i], self.knots[i + 1], (self.values[i] if flat else None)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "knots": list(self.knots),
            "values": list(self.values),
            "slopes": list(self.slopes),
        }


def eval_profile(profile: RadialProfile, r):
    """Turn count at radius ``r``; zero beyond ``r_max``."""
    out = profile(r)
    return float(out) if np.ndim(out) == 0 else out


def alpha_profile(alpha0: float = DEFAULT_ALPHA0, slope_at_01: float | None = None) -> RadialProfile:
    """Default rotation profile about the origin.

    Value ``alpha0`` at the center, 2 at r = 0.1, plateau 1 on [0.2, 0.8],
    zero from 0.9 on.
    """
    knots = (0.0, 0.1, 0.2, 0.8, 0.9, 1.0)
    values = (alpha0, 2.0, 1.0, 1.0, 0.0, 0.0)
    slopes = hermite_slopes(knots, values)
    if slope_at_01 is not None:
        slopes[1] = slope_at_01
    return RadialProfile(knots, values, tuple(slopes), "alpha")


def beta_profile(beta0: float = DEFAULT_BETA0, slope_at_01: float | None = None) -> RadialProfile:
    """Default rotation profile inside the small disk of radius 0.3."""
    knots = (0.0, 0.1, 0.2, 0.3)
    values = (beta0, 3.0, 0.0, 0.0)
    slopes = hermite_slopes(knots, values)
    if slope_at_01 is not None:
        slopes[1] = slope_at_01
    return RadialProfile(knots, values, tuple(slopes), "beta")


# --------------------------------------------------------------------------
# constraint checking


@dataclass(frozen=True)
class ProfileSpec:
    """Constraint block for one profile family."""

    name: str
    r_max: float
    top_range: tuple  # value at 0 must lie in (lo, hi]
    pinned: tuple  # ((r, value), ...)
    plateaus: tuple  # ((a, b, value), ...)
    zero_from: float
    decreasing: tuple  # ((a, b), ...)


ALPHA_SPEC = ProfileSpec(
    name="alpha",
    r_max=1.0,
    top_range=(2.0, 2.5),
    pinned=((0.1, 2.0),),
    plateaus=((0.2, 0.8, 1.0),),
    zero_from=0.9,
    decreasing=((0.0, 0.2), (0.8, 0.9)),
)

BETA_SPEC = ProfileSpec(
    name="beta",
    r_max=0.3,
    top_range=(3.0, 3.5),
    pinned=((0.1, 3.0),),
    plateaus=(),
    zero_from=0.2,
    decreasing=((0.0, 0.2),),
)

_SPECS = {"alpha": ALPHA_SPEC, "beta": BETA_SPEC}


@dataclass(frozen=True)
class Constraint:
    id: str
    satisfied: bool
    measured: float
    detail: str = ""


@dataclass(frozen=True)
class ConstraintReport:
    spec: str
    constraints: tuple

    @property
    def violations(self) -> list:
        return [c for c in self.constraints if not c.satisfied]

    @property
    def ok(self) -> bool:
        return not self.violations

    def __getitem__(self, cid: str) -> Constraint:
        for c in self.constraints:
            if c.id == cid:
                return c
        raise KeyError(cid)


def _fmt(r: float) -> str:
    return f"{r:g}"


def validate_profile(
    profile: RadialProfile,
    spec: str | ProfileSpec,
    *,
    threshold: float = 0.1,
    join_margin: float = 0.1,
    atol: float = 1e-12,
) -> ConstraintReport:
    """Check a profile against a constraint block; violations are reported, not raised.

    "Strongly decreasing" on ``[a, b]`` means: strictly decreasing on the
    closed interval, and derivative at most ``-threshold`` once a fraction
    ``join_margin`` of the interval is trimmed from each end (a C1 profile must
    have zero slope where it meets a plateau or the center).
    """
    if isinstance(spec, str):
        spec = _SPECS[spec]
    n = spec.name
    rs = np.union1d(np.linspace(0.0, profile.r_max, 4001), profile.knots)
    vals = profile(rs)
    out = []

    out.append(Constraint(f"{n}-domain", abs(profile.r_max - spec.r_max) <= atol, profile.r_max,
                          f"r_max = {_fmt(spec.r_max)}"))
    lo, hi = spec.top_range
    v0 = float(profile(0.0))
    out.append(Constraint(f"{n}-at-0", lo < v0 <= hi + atol, v0, f"{_fmt(lo)} < value <= {_fmt(hi)}"))
    vmin, vmax = float(vals.min()), float(vals.max())
    out.append(Constraint(f"{n}-range", vmin >= -atol and vmax <= hi + atol, vmax,
                          f"values within [0, {_fmt(hi)}]"))
    for r, v in spec.pinned:
        got = float(profile(r))
        out.append(Constraint(f"{n}-at-{_fmt(r)}", abs(got - v) <= atol, got, f"value = {_fmt(v)}"))
    for a, b, v in spec.plateaus:
        sel = (rs >= a) & (rs <= b)
        dev = float(np.max(np.abs(vals[sel] - v)))
        out.append(Constraint(f"{n}-plateau-{_fmt(a)}-{_fmt(b)}", dev <= atol, dev,
                              f"value = {_fmt(v)} on [{_fmt(a)}, {_fmt(b)}]"))
    sel = rs >= spec.zero_from
    dev = float(np.max(np.abs(vals[sel])))
    out.append(Constraint(f"{n}-zero-from-{_fmt(spec.zero_from)}", dev <= atol, dev,
                          f"value = 0 for r >= {_fmt(spec.zero_from)}"))
    for a, b in spec.decreasing:
        sel = (rs >= a) & (rs <= b)
        strict = bool(np.all(np.diff(vals[sel]) < 0))
        trim = join_margin * (b - a)
        inner = np.linspace(a + trim, b - trim, 1001)
        worst = float(np.max(profile.derivative(inner)))
        out.append(Constraint(f"{n}-decreasing-{_fmt(a)}-{_fmt(b)}", strict and worst <= -threshold, worst,
                              f"strictly decreasing, slope <= -{_fmt(threshold)} inside"))
    rise = float(np.max(np.diff(vals), initial=0.0))
    out.append(Constraint(f"{n}-monotone", rise <= atol, rise, "non-increasing on [0, r_max]"))
    return ConstraintReport(n, tuple(out))


# --------------------------------------------------------------------------
# radial Hamiltonians


@dataclass(frozen=True)
class RadialHamiltonian:
    """Autonomous Hamiltonian ``H(|x - center|)`` generated by a profile."""

    center: tuple
    profile: RadialProfile
    _table: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        c = tuple(float(v) for v in self.center)
        if len(c) != 2:
            raise ValidationError("center must be a point in the plane")
        object.__setattr__(self, "center", c)
        # _table[i] = 2*pi * int_{knot_i}^{r_max} s*prof(s) ds
        knots = self.profile.knots
        table = np.zeros(len(knots))
        for i in range(len(knots) - 2, -1, -1):
            val, err = self._piece_integral_quad(knots[i], knots[i + 1])
            table[i] = table[i + 1] + val
        object.__setattr__(self, "_table", table)

    def _piece_integral_quad(self, a, b):
        prof = self.profile
        val, err, info = integrate.quad(lambda s: s * float(prof(s)), a, b,
                                        epsabs=1e-15, epsrel=1e-13, full_output=1)[:3]
        if err > 1e-11 or not math.isfinite(val):
            raise NumericError(f"quadrature did not converge on [{a}, {b}] (error estimate {err:.3g})")
        return TWO_PI * val, err

    def value_at_radius(self, r):
        r = np.asarray(r, dtype=float)
        if np.any(r < 0):
            raise DomainError("negative radius")
        knots = np.asarray(self.profile.knots)
        rc = np.minimum(r, self.profile.r_max)
        idx = np.clip(np.searchsorted(knots, rc, side="right") - 1, 0, len(knots) - 2)
        upper = knots[idx + 1]
        # Gauss-Legendre on [r, knot_{i+1}]: exact for the quartic s*prof(s)
        half = 0.5 * (upper - rc)
        mid = 0.5 * (upper + rc)
        nodes = mid[..., None] + half[..., None] * _GAUSS_X
        integrand = nodes * self.profile(nodes)
        partial = TWO_PI * half * (integrand @ _GAUSS_W)
        return self._table[idx + 1] + partial

    def radius(self, x):
        x = np.asarray(x, dtype=float)
        return np.hypot(x[..., 0] - self.center[0], x[..., 1] - self.center[1])

    def value(self, x):
        return self.value_at_radius(self.radius(x))

    def field(self, x):
        x = np.asarray(x, dtype=float)
        dx = x[..., 0] - self.center[0]
        dy = x[..., 1] - self.center[1]
        omega = TWO_PI * self.profile._eval(np.hypot(dx, dy))
        out = np.empty(x.shape)
        out[..., 0] = -omega * dy
        out[..., 1] = omega * dx
        return out

    def rotation_angle(self, r):
        return TWO_PI * self.profile(r)


def hamiltonian_from_profile(profile: RadialProfile, center=(0.0, 0.0)) -> RadialHamiltonian:
    return RadialHamiltonian(tuple(center), profile)
