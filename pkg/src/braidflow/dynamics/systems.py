"""Composable time-dependent Hamiltonians on the unit disk.

Every system evaluates ``F(t, x)`` and its symplectic gradient ``X_F(t, x)``
for arrays of points ``x`` of shape ``(..., 2)``.  With the area form
``dx ^ dy`` and ``dF = omega(X_F, .)`` the gradient is ``(dF/dy, -dF/dx)``.

Time-concatenation introduces jumps in ``t``; ``segments()`` splits ``[0, 1]``
at those jumps and hands back a piece that is smooth on each closed
sub-interval, which is what the integrator and the quadratures consume.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from ..errors import ValidationError
from ..profiles import RadialHamiltonian

DISK_RADIUS = 1.0


class HamiltonianSystem:
    autonomous = True

    def value(self, t, x):
        raise NotImplementedError

    def field(self, t, x):
        raise NotImplementedError

    @property
    def breakpoints(self) -> tuple:
        """Interior times in (0, 1) where the generator may jump."""
        return ()

    def segments(self):
        """List of ``(a, b, piece)`` with ``piece`` smooth on ``[a, b]``."""
        return [(0.0, 1.0, self)]

    def radials(self):
        """Radial primitives in this tree, in evaluation order."""
        return []


class Zero(HamiltonianSystem):
    def value(self, t, x):
        return np.zeros(np.shape(x)[:-1])

    def field(self, t, x):
        return np.zeros(np.shape(x))

    def __repr__(self):
        return "Zero()"


class Radial(HamiltonianSystem):
    def __init__(self, ham: RadialHamiltonian):
        self.ham = ham

    def value(self, t, x):
        return self.ham.value(x)

    def field(self, t, x):
        return self.ham.field(x)

    def radials(self):
        return [self.ham]

    def __repr__(self):
        return f"Radial({self.ham.profile.name} @ {self.ham.center})"


class Sum(HamiltonianSystem):
    def __init__(self, terms):
        self.terms = tuple(terms)
        if not self.terms:
            raise ValidationError("Sum needs at least one term")

    @property
    def autonomous(self):
        return all(t.autonomous for t in self.terms)

    def value(self, t, x):
        return sum(term.value(t, x) for term in self.terms)

    def field(self, t, x):
        out = self.terms[0].field(t, x)
        for term in self.terms[1:]:
            out = out + term.field(t, x)
        return out

    @property
    def breakpoints(self):
        return tuple(sorted({b for term in self.terms for b in term.breakpoints}))

    def segments(self):
        if not self.breakpoints:
            return [(0.0, 1.0, self)]
        edges = (0.0,) + self.breakpoints + (1.0,)
        per_term = [term.segments() for term in self.terms]
        out = []
        for a, b in zip(edges, edges[1:]):
            mid = 0.5 * (a + b)
            pieces = [next(p for lo, hi, p in segs if lo <= mid <= hi) for segs in per_term]
            out.append((a, b, Sum(pieces)))
        return out

    def radials(self):
        return [r for term in self.terms for r in term.radials()]

    def __repr__(self):
        return f"Sum({list(self.terms)})"


class _Rescaled(HamiltonianSystem):
    """Leg of a concatenation: ``(1/w) * F((t - t0)/w, x)``."""

    def __init__(self, inner, t0, w):
        self.inner, self.t0, self.w = inner, t0, w

    @property
    def autonomous(self):
        return self.inner.autonomous

    def value(self, t, x):
        return self.inner.value((t - self.t0) / self.w, x) / self.w

    def field(self, t, x):
        return self.inner.field((t - self.t0) / self.w, x) / self.w


class Concat(HamiltonianSystem):
    """Run the legs one after another; the time-1 map is their composition.

    ``legs`` is a sequence of ``(system, duration)`` with durations summing
    to one.  The first leg acts first.
    """

    autonomous = False

    def __init__(self, legs):
        legs = [(s, float(w)) for s, w in legs]
        if not legs:
            raise ValidationError("Concat needs at least one leg")
        if any(w <= 0 for _, w in legs):
            raise ValidationError("Concat durations must be positive")
        if abs(sum(w for _, w in legs) - 1.0) > 1e-12:
            raise ValidationError("Concat durations must sum to 1")
        self.legs = tuple(legs)
        starts = np.concatenate(([0.0], np.cumsum([w for _, w in legs])[:-1]))
        self._starts = tuple(float(s) for s in starts)

    @classmethod
    def equal(cls, systems):
        systems = list(systems)
        return cls([(s, 1.0 / len(systems)) for s in systems])

    def _leg(self, t):
        idx = int(np.searchsorted(self._starts, t, side="right") - 1)
        return max(0, min(idx, len(self.legs) - 1))

    def value(self, t, x):
        i = self._leg(t)
        sys, w = self.legs[i]
        return sys.value((t - self._starts[i]) / w, x) / w

    def field(self, t, x):
        i = self._leg(t)
        sys, w = self.legs[i]
        return sys.field((t - self._starts[i]) / w, x) / w

    @property
    def breakpoints(self):
        out = set(self._starts[1:])
        for (sys, w), t0 in zip(self.legs, self._starts):
            out.update(t0 + w * b for b in sys.breakpoints)
        return tuple(sorted(out))

    def segments(self):
        out = []
        for (sys, w), t0 in zip(self.legs, self._starts):
            for a, b, piece in sys.segments():
                out.append((t0 + w * a, t0 + w * b, _Rescaled(piece, t0, w)))
        # the final edge must be exactly 1 so step grids line up
        a, _, p = out[-1]
        out[-1] = (a, 1.0, p)
        return out

    def radials(self):
        return [r for sys, _ in self.legs for r in sys.radials()]

    def __repr__(self):
        return f"Concat({[(s, w) for s, w in self.legs]})"


def smooth_bump(r2):
    """exp(1 - 1/(1 - r2)) on r2 < 1, zero outside; peak value 1."""
    r2 = np.asarray(r2, dtype=float)
    inside = r2 < 1.0
    safe = np.where(inside, r2, 0.0)
    return np.where(inside, np.exp(1.0 - 1.0 / (1.0 - safe)), 0.0)


def raised_cosine(t):
    """Time envelope 1 - cos(2 pi t): non-negative, unit integral over [0, 1]."""
    return 1.0 - np.cos(2.0 * math.pi * t)


class Bump(HamiltonianSystem):
    """Localized perturbation ``amplitude * envelope(t) * b(|x - c| / radius)``.

    ``b`` peaks at 1 and is >= 0, so with a unit-mass envelope the time
    integral of the oscillation equals ``amplitude``.
    """

    def __init__(self, center, radius, amplitude, envelope: Callable | None = raised_cosine):
        self.center = (float(center[0]), float(center[1]))
        self.radius = float(radius)
        self.amplitude = float(amplitude)
        self.envelope = envelope
        if self.radius <= 0:
            raise ValidationError("bump radius must be positive")

    @property
    def autonomous(self):
        return self.envelope is None

    def _env(self, t):
        return 1.0 if self.envelope is None else float(self.envelope(t))

    def value(self, t, x):
        x = np.asarray(x, dtype=float)
        dx = (x[..., 0] - self.center[0]) / self.radius
        dy = (x[..., 1] - self.center[1]) / self.radius
        return self.amplitude * self._env(t) * smooth_bump(dx * dx + dy * dy)

    def field(self, t, x):
        x = np.asarray(x, dtype=float)
        dx = (x[..., 0] - self.center[0]) / self.radius
        dy = (x[..., 1] - self.center[1]) / self.radius
        r2 = dx * dx + dy * dy
        inside = r2 < 1.0
        q = np.where(inside, 1.0 - r2, 1.0)
        # d/dr2 of exp(1 - 1/(1 - r2)) = -b / (1 - r2)^2
        g = np.where(inside, -np.exp(1.0 - 1.0 / q) / (q * q), 0.0)
        scale = (self.amplitude * self._env(t) * 2.0 / self.radius) * g
        out = np.empty(x.shape)
        out[..., 0] = scale * dy
        out[..., 1] = -scale * dx
        return out

    def __repr__(self):
        return f"Bump(center={self.center}, radius={self.radius}, amplitude={self.amplitude})"


class Reparametrized(HamiltonianSystem):
    """``tau'(t) * F(tau(t), x)`` for a monotone ``tau`` of [0, 1] onto itself.

    Same time-1 map and same oscillation integral as the original generator.
    """

    autonomous = False

    def __init__(self, inner, tau, dtau):
        self.inner, self.tau, self.dtau = inner, tau, dtau

    def value(self, t, x):
        return self.dtau(t) * self.inner.value(self.tau(t), x)

    def field(self, t, x):
        return self.dtau(t) * self.inner.field(self.tau(t), x)

    @property
    def breakpoints(self):
        return tuple(brentq(lambda s, b=b: self.tau(s) - b, 0.0, 1.0, xtol=1e-15) for b in self.inner.breakpoints)

    def segments(self):
        inner = {(a, b): p for a, b, p in self.inner.segments()}
        edges = (0.0,) + self.breakpoints + (1.0,)
        out = []
        for (a, b), (ia, ib) in zip(zip(edges, edges[1:]), inner):
            out.append((a, b, Reparametrized(inner[(ia, ib)], self.tau, self.dtau)))
        return out

    def radials(self):
        return self.inner.radials()


@dataclass(frozen=True)
class Smoothstep:
    """Monotone reparametrization ``t + a * sin(2 pi t) / (2 pi)`` with |a| < 1."""

    a: float = 0.5

    def __call__(self, t):
        return t + self.a * np.sin(2 * math.pi * t) / (2 * math.pi)

    def derivative(self, t):
        return 1.0 + self.a * np.cos(2 * math.pi * t)
