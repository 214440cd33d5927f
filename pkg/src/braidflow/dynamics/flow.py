"""Fixed-step RK4 integration of Hamiltonian flows."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DomainError, IntegrationError, ValidationError
from .systems import DISK_RADIUS, HamiltonianSystem

DEFAULT_STEPS = 4096


@dataclass(frozen=True)
class Trajectory:
    label: str
    times: np.ndarray
    positions: np.ndarray  # (N + 1, 2)

    @property
    def closure_defect(self) -> float:
        return float(np.hypot(*(self.positions[-1] - self.positions[0])))

    @property
    def start(self):
        return self.positions[0]

    def resampled(self, factor: int) -> "Trajectory":
        """Linear refinement of the sample grid by an integer factor."""
        n = len(self.times) - 1
        t_new = np.linspace(0.0, 1.0, n * factor + 1)
        pos = np.stack([np.interp(t_new, self.times, self.positions[:, k]) for k in range(2)], axis=1)
        return Trajectory(self.label, t_new, pos)


def check_in_model(x, radius: float = DISK_RADIUS):
    x = np.asarray(x, dtype=float)
    if x.shape[-1:] != (2,):
        raise DomainError("points must have shape (..., 2)")
    if not np.all(np.isfinite(x)):
        raise DomainError("non-finite point")
    if np.any(np.hypot(x[..., 0], x[..., 1]) > radius * (1 + 1e-12)):
        raise DomainError(f"point outside the disk of radius {radius}")
    return x


def vector_field(system: HamiltonianSystem, t: float, x):
    if not 0.0 <= t <= 1.0:
        raise DomainError(f"time {t} outside [0, 1]")
    return system.field(t, check_in_model(x))


def _step_counts(segments, steps):
    lengths = np.array([b - a for a, b, _ in segments])
    raw = lengths * steps
    counts = np.maximum(1, np.floor(raw).astype(int))
    # hand leftover steps to the segments that lost the most to rounding
    for idx in np.argsort(-(raw - counts), kind="stable")[: max(0, steps - counts.sum())]:
        counts[idx] += 1
    return counts


def _rk4(field, x, a, b, n, record=None, offset=0):
    h = (b - a) / n
    for i in range(n):
        t = a + i * h
        k1 = field(t, x)
        k2 = field(t + 0.5 * h, x + 0.5 * h * k1)
        k3 = field(t + 0.5 * h, x + 0.5 * h * k2)
        k4 = field(t + h if i < n - 1 else b, x + h * k3)
        x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.isfinite(x).all():
            bad = int(np.flatnonzero(~np.isfinite(x).all(axis=-1))[0])
            raise IntegrationError(f"non-finite state for point {bad} at t={t + h:.6g}", bad, t + h)
        if record is not None:
            record[offset + i + 1] = x
    return x


def _clip_segments(system, t0, t1):
    out = []
    for a, b, piece in system.segments():
        lo, hi = max(a, t0), min(b, t1)
        if hi > lo:
            out.append((lo, hi, piece))
    return out


def flow_map(system: HamiltonianSystem, points, t0: float = 0.0, t1: float = 1.0, steps: int = DEFAULT_STEPS):
    """Push a batch of points from ``t0`` to ``t1``.

    ``steps`` is the number of RK4 steps for the whole unit interval; a
    sub-interval gets its proportional share.
    """
    x = np.array(points, dtype=float)
    segs = _clip_segments(system, t0, t1)
    if not segs:
        return x
    counts = _step_counts(segs, max(1, round(steps * (t1 - t0))))
    for (a, b, piece), n in zip(segs, counts):
        x = _rk4(piece.field, x, a, b, int(n))
    return x


def time_one_map(system: HamiltonianSystem, x, steps: int = DEFAULT_STEPS):
    return flow_map(system, x, 0.0, 1.0, steps)


def integrate_flow(system: HamiltonianSystem, points, steps: int = DEFAULT_STEPS, labels=None):
    """Sampled trajectories over t in [0, 1], one per starting point."""
    if steps < 100:
        raise ValidationError("steps must be >= 100")
    x = check_in_model(np.array(points, dtype=float).reshape(-1, 2))
    if labels is None:
        labels = [str(i) for i in range(len(x))]
    segs = system.segments()
    counts = _step_counts(segs, steps)
    total = int(counts.sum())
    record = np.empty((total + 1,) + x.shape)
    record[0] = x
    times = np.empty(total + 1)
    offset = 0
    for (a, b, piece), n in zip(segs, counts):
        times[offset: offset + n + 1] = a + (b - a) * np.arange(n + 1) / n
        x = _rk4(piece.field, x, a, b, int(n), record, offset)
        offset += int(n)
    times[-1] = 1.0
    return [Trajectory(lab, times, record[:, k].copy()) for k, lab in enumerate(labels)]
