"""Actions of capped periodic orbits, action spectra and Hofer lengths.

The action of a closed orbit ``gamma`` of the flow of ``F`` is

    A(gamma) = int_0^1 F(t, gamma(t)) dt + (1/2) oint (x dy - y dx),

the second term being the signed area of the capping disk (counterclockwise
loops count positively).  With this sign the action is constant along every
family of fixed points of a radial rotation: on a plateau where the profile
equals ``n`` it reads ``H(r) + n*pi*r**2`` and ``H'(r) = -2*pi*n*r``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import trapezoid
from scipy.optimize import minimize
from scipy.spatial import cKDTree

from .dynamics.fixed import FixedSetComponent
from .dynamics.flow import DEFAULT_STEPS, Trajectory, integrate_flow
from .dynamics.systems import DISK_RADIUS, HamiltonianSystem
from .errors import ClosureError, LocallyConstantError

CLOSURE_TOL = 1e-6
SPREAD_TOL = 1e-6


def _segment_slices(times, system):
    for a, b, piece in system.segments():
        lo = int(np.searchsorted(times, a - 1e-13, side="left"))
        hi = int(np.searchsorted(times, b + 1e-13, side="right"))
        yield slice(lo, hi), piece


def loop_actions(trajs, system: HamiltonianSystem, closure_tol: float = CLOSURE_TOL) -> np.ndarray:
    """Actions of several closed trajectories sharing one sample grid."""
    trajs = list(trajs)
    for tr in trajs:
        if tr.closure_defect > closure_tol:
            raise ClosureError(f"trajectory {tr.label} does not close (defect {tr.closure_defect:.3g})")
    times = trajs[0].times
    pos = np.stack([tr.positions for tr in trajs], axis=1)  # (N + 1, K, 2)
    total = np.zeros(len(trajs))
    for sl, piece in _segment_slices(times, system):
        t = times[sl]
        x = pos[sl]
        if len(t) < 2:
            continue
        if piece.autonomous:
            f = piece.value(t[0], x)
            v = piece.field(t[0], x)
        else:
            f = np.stack([piece.value(ti, xi) for ti, xi in zip(t, x)])
            v = np.stack([piece.field(ti, xi) for ti, xi in zip(t, x)])
        area_rate = 0.5 * (x[..., 0] * v[..., 1] - x[..., 1] * v[..., 0])
        total += trapezoid(f + area_rate, t, axis=0)
    return total


def loop_action(traj: Trajectory, system: HamiltonianSystem, closure_tol: float = CLOSURE_TOL) -> float:
    return float(loop_actions([traj], system, closure_tol)[0])


@dataclass(frozen=True)
class ActionValue:
    component: str
    value: float
    spread: float


@dataclass(frozen=True)
class ActionSpectrum:
    values: tuple

    @property
    def epsilon(self) -> float | None:
        """Smallest gap between the actions of two distinct components."""
        if len(self.values) < 2:
            return None
        vals = sorted(v.value for v in self.values)
        return float(min(b - a for a, b in zip(vals, vals[1:])))

    def __getitem__(self, component_id) -> ActionValue:
        for v in self.values:
            if v.component == component_id:
                return v
        raise KeyError(component_id)

    def as_dict(self) -> dict:
        return {v.component: v.value for v in self.values}


def action_spectrum(components, system: HamiltonianSystem, *, steps: int = DEFAULT_STEPS,
                    spread_tol: float = SPREAD_TOL) -> ActionSpectrum:
    comps = list(components)
    if not comps:
        return ActionSpectrum(())
    reps = np.concatenate([c.representatives for c in comps])
    all_acts = loop_actions(integrate_flow(system, reps, steps), system)
    out = []
    pos = 0
    for c in comps:
        n = len(c.representatives)
        acts = all_acts[pos:pos + n]
        pos += n
        spread = float(acts.max() - acts.min())
        if spread > spread_tol:
            raise LocallyConstantError(f"action varies by {spread:.3g} on component {c.id}")
        out.append(ActionValue(c.id, float(acts.mean()), spread))
    return ActionSpectrum(tuple(out))


# --------------------------------------------------------------------------
# admissibility


@dataclass(frozen=True)
class Clause:
    id: str
    status: str  # pass | fail | not-evaluated
    witness: str


@dataclass(frozen=True)
class AdmissibilityReport:
    clauses: tuple
    epsilon: float | None

    @property
    def passed(self) -> bool:
        return all(c.status != "fail" for c in self.clauses)

    def __getitem__(self, cid) -> Clause:
        for c in self.clauses:
            if c.id == cid:
                return c
        raise KeyError(cid)


def _component_samples(c: FixedSetComponent, n: int = 720):
    if c.kind == "circle":
        th = 2 * math.pi * np.arange(n) / n
        return np.stack([c.center[0] + c.radius * np.cos(th), c.center[1] + c.radius * np.sin(th)], axis=1)
    if c.kind == "planar-region" and c.cells is not None:
        return c.cells
    return np.atleast_2d(c.representatives)


def admissibility_check(components, spectrum: ActionSpectrum, marked: dict, *,
                        value_tol: float = 1e-6, isolation: float = 0.02) -> AdmissibilityReport:
    """Evaluate the numerically checkable admissibility clauses.

    ``marked`` maps strand labels to points.  Clauses about Floer
    trajectories are reported as not evaluated.
    """
    comps = list(components)
    clauses = []

    # (a) isolated components, locally constant action
    trees = [cKDTree(_component_samples(c)) for c in comps]
    gap = math.inf
    closest = ("", "")
    for (i, ci), (j, cj) in itertools.combinations(enumerate(comps), 2):
        d, _ = trees[i].query(_component_samples(cj))
        if d.min() < gap:
            gap, closest = float(d.min()), (ci.id, cj.id)
    spread = max((v.spread for v in spectrum.values), default=0.0)
    ok = gap > isolation and spread < value_tol
    clauses.append(Clause("isolated-locally-constant", "pass" if ok else "fail",
                          f"min gap {gap:.6g} between {closest[0]} and {closest[1]}; max action spread {spread:.3g}"))

    # (b) finite spectrum, one component per value
    vals = [(v.component, v.value) for v in spectrum.values]
    clash = [(a, b) for (a, va), (b, vb) in itertools.combinations(vals, 2) if abs(va - vb) <= value_tol]
    ok = len(vals) == len(comps) and not clash
    clauses.append(Clause("one-component-per-value", "pass" if ok else "fail",
                          f"{len(vals)} values for {len(comps)} components"
                          + (f"; shared values: {clash}" if clash else "")))

    # (c) marked strands on distinct point or circle components
    owner = {}
    problems = []
    for lab, p in marked.items():
        hits = [c for c in comps if c.contains(np.asarray(p, dtype=float))]
        if not hits:
            problems.append(f"{lab} is not on any fixed component")
            continue
        c = hits[0]
        owner[lab] = c.id
        if c.kind == "planar-region":
            problems.append(f"{lab} lies on two-dimensional family {c.id}")
    seen: dict = {}
    for lab, cid in owner.items():
        if cid in seen:
            problems.append(f"{seen[cid]} and {lab} share component {cid}")
        seen.setdefault(cid, lab)
    clauses.append(Clause("marked-distinct-points-or-circles", "fail" if problems else "pass",
                          "; ".join(problems) or ", ".join(f"{k}->{v}" for k, v in owner.items())))

    # (d) epsilon separation
    eps = spectrum.epsilon
    ok = eps is None or eps > 0
    clauses.append(Clause("epsilon-separated", "pass" if ok else "fail",
                          "single value" if eps is None else f"epsilon = {eps:.12g}"))

    clauses.append(Clause("floer-non-interaction", "not-evaluated", "requires Floer theory; out of scope"))
    clauses.append(Clause("all-orbits-of-braid-actions-in-braid", "not-evaluated",
                          "implied by one-component-per-value for isolated components; not checked separately"))
    return AdmissibilityReport(tuple(clauses), eps)


# --------------------------------------------------------------------------
# Hofer length


def _disk_grid(n):
    xs = np.linspace(-DISK_RADIUS, DISK_RADIUS, n)
    gx, gy = np.meshgrid(xs, xs, indexing="ij")
    pts = np.stack([gx.ravel(), gy.ravel()], axis=1)
    return pts[np.hypot(pts[:, 0], pts[:, 1]) <= DISK_RADIUS]


def _project(x):
    r = math.hypot(x[0], x[1])
    return x if r <= DISK_RADIUS else x * (DISK_RADIUS / r)


def _extreme(f, grid_pts, vals, sign):
    k = int(np.argmax(sign * vals))
    x0 = grid_pts[k]
    res = minimize(lambda x: -sign * float(f(_project(x))), x0, method="Nelder-Mead",
                   options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 400})
    refined = float(f(_project(res.x)))
    return max(sign * vals[k], sign * refined) * sign


def oscillation(piece: HamiltonianSystem, t: float, grid_pts) -> float:
    vals = piece.value(t, grid_pts)
    f = lambda x: piece.value(t, np.asarray(x)[None, :])[0]  # noqa: E731
    return _extreme(f, grid_pts, vals, 1.0) - _extreme(f, grid_pts, vals, -1.0)


def hofer_length(system: HamiltonianSystem, *, time_nodes: int = 8, grid: int = 101) -> float:
    """Upper bound for the Hofer norm: time integral of max F - min F for this generator."""
    pts = _disk_grid(grid)
    xg, wg = np.polynomial.legendre.leggauss(time_nodes)
    total = 0.0
    for a, b, piece in system.segments():
        if piece.autonomous:
            total += (b - a) * oscillation(piece, 0.5 * (a + b), pts)
            continue
        ts = 0.5 * (a + b) + 0.5 * (b - a) * xg
        osc = np.array([oscillation(piece, t, pts) for t in ts])
        total += 0.5 * (b - a) * float(osc @ wg)
    return total
