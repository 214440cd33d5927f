"""Fixed points of time-1 maps: Newton search and analytic classification."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import ndimage
from scipy.optimize import brentq
from scipy.spatial import cKDTree

from ..errors import NumericError, UnsupportedStructureError, ValidationError
from .flow import DEFAULT_STEPS, time_one_map
from .systems import DISK_RADIUS, Concat, HamiltonianSystem, Radial, Sum, Zero

FIXED_TOL = 1e-8
MERGE_RADIUS = 1e-5


@dataclass(frozen=True)
class FixedPointSet:
    points: np.ndarray
    planar_region: bool
    seeds: int
    converged: int

    def __len__(self):
        return len(self.points)


def _map_with_jacobian(system, x, steps, h):
    n = len(x)
    e1 = np.array([h, 0.0])
    e2 = np.array([0.0, h])
    batch = np.concatenate([x, x + e1, x - e1, x + e2, x - e2])
    out = time_one_map(system, batch, steps)
    fx = out[:n]
    jac = np.empty((n, 2, 2))
    jac[:, :, 0] = (out[n:2 * n] - out[2 * n:3 * n]) / (2 * h)
    jac[:, :, 1] = (out[3 * n:4 * n] - out[4 * n:]) / (2 * h)
    return fx, jac


def newton_fixed_points(system, seeds, *, steps=DEFAULT_STEPS, tol=FIXED_TOL, max_iter=30,
                        fd_step=1e-6, max_step=0.05, rcond=1e-6):
    """Minimum-norm Newton on ``phi(x) - x`` from each seed.

    The pseudo-inverse handles degenerate families: on a circle of fixed
    points the Jacobian has a tangential kernel and the step is radial.
    Returns ``(points, converged_mask, initial_residual)``.
    """
    x = np.array(seeds, dtype=float).reshape(-1, 2)
    n = len(x)
    active = np.ones(n, dtype=bool)
    done = np.zeros(n, dtype=bool)
    best = np.full(n, np.inf)
    stall = np.zeros(n, dtype=int)
    initial = None
    eye = np.eye(2)
    for _ in range(max_iter + 1):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        fx, jac = _map_with_jacobian(system, x[idx], steps, fd_step)
        g = fx - x[idx]
        res = np.hypot(g[:, 0], g[:, 1])
        if initial is None:
            initial = res.copy()
        conv = res < tol
        done[idx[conv]] = True
        active[idx[conv]] = False
        improving = res < 0.5 * best[idx]
        stall[idx] = np.where(improving, 0, stall[idx] + 1)
        best[idx] = np.minimum(best[idx], res)
        live = ~conv & (stall[idx] < 4)
        active[idx[~live]] = False
        if not live.any():
            break
        sub = idx[live]
        step = -np.einsum("nij,nj->ni", np.linalg.pinv(jac[live] - eye, rcond=rcond), g[live])
        length = np.hypot(step[:, 0], step[:, 1])
        step *= np.minimum(1.0, max_step / np.maximum(length, 1e-300))[:, None]
        x[sub] = x[sub] + step
        off = np.hypot(x[sub, 0], x[sub, 1]) > DISK_RADIUS
        active[sub[off]] = False
    return x, done, initial


def find_fixed_points(system: HamiltonianSystem, region=(-1.0, 1.0, -1.0, 1.0), resolution=(32, 32), *,
                      steps=DEFAULT_STEPS, tol=FIXED_TOL, merge_radius=MERGE_RADIUS,
                      displacement=0.137, max_iter=30) -> FixedPointSet:
    """Grid-seeded Newton search for fixed points of the time-1 map.

    Seeds sit on a ``resolution`` grid over ``region = (xmin, xmax, ymin, ymax)``,
    shifted by ``displacement`` grid spacings.  Seeds that diverge are dropped.
    ``planar_region`` is set when a 2x2 block of neighbouring seeds is already
    fixed, i.e. the search sits inside a two-dimensional fixed family.
    """
    nx, ny = resolution
    if nx < 32 or ny < 32:
        raise ValidationError("resolution must be at least 32 x 32")
    x0, x1, y0, y1 = region
    hx, hy = (x1 - x0) / nx, (y1 - y0) / ny
    xs = x0 + (np.arange(nx) + displacement) * hx
    ys = y0 + (np.arange(ny) + displacement) * hy
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    seeds = np.stack([gx.ravel(), gy.ravel()], axis=1)
    inside = np.hypot(seeds[:, 0], seeds[:, 1]) <= DISK_RADIUS
    pts, ok, initial = newton_fixed_points(system, seeds[inside], steps=steps, tol=tol, max_iter=max_iter)

    fixed0 = np.zeros(nx * ny, dtype=bool)
    fixed0[np.flatnonzero(inside)] = initial < tol
    f = fixed0.reshape(nx, ny)
    planar = bool(np.any(f[:-1, :-1] & f[1:, :-1] & f[:-1, 1:] & f[1:, 1:]))

    eps = 1e-12
    in_region = (pts[:, 0] >= x0 - eps) & (pts[:, 0] <= x1 + eps) & (pts[:, 1] >= y0 - eps) & (pts[:, 1] <= y1 + eps)
    cand = pts[ok & in_region]
    kept: list = []
    if len(cand):
        tree = cKDTree(cand)
        taken = np.zeros(len(cand), dtype=bool)
        for i in range(len(cand)):
            if taken[i]:
                continue
            kept.append(cand[i])
            taken[tree.query_ball_point(cand[i], merge_radius)] = True
    return FixedPointSet(np.array(kept).reshape(-1, 2), planar, int(inside.sum()), int(ok.sum()))


# --------------------------------------------------------------------------
# analytic classification for layered radial systems


@dataclass
class FixedSetComponent:
    id: str
    kind: str  # nondegenerate-point | degenerate-point | circle | planar-region
    representatives: np.ndarray
    center: tuple | None = None
    radius: float | None = None
    turns: float | None = None
    near_boundary: bool = False
    residual: float = 0.0
    cells: np.ndarray | None = field(default=None, repr=False, compare=False)
    _contains: Callable | None = field(default=None, repr=False, compare=False)

    def contains(self, x, tol: float = 1e-7) -> bool:
        x = np.asarray(x, dtype=float)
        if self.kind.endswith("point"):
            return float(np.hypot(*(x - np.asarray(self.center)))) < tol
        if self.kind == "circle":
            return abs(float(np.hypot(*(x - np.asarray(self.center)))) - self.radius) < tol
        return bool(self._contains(x))

    def to_dict(self) -> dict:
        d = {"id": self.id, "kind": self.kind, "representatives": len(self.representatives),
             "near_boundary": self.near_boundary, "residual": self.residual}
        if self.center is not None:
            d["center"] = list(self.center)
        if self.radius is not None:
            d["radius"] = self.radius
        if self.turns is not None:
            d["turns"] = self.turns
        return d


class _Group:
    """Concentric radial primitives acting as one rotation profile."""

    def __init__(self, center, hams):
        self.center = center
        self.hams = list(hams)
        self.support = max(h.profile.support_radius for h in self.hams)
        self._plateaus = None

    def __call__(self, r):
        return sum(h.profile(r) for h in self.hams)

    def pieces(self):
        knots = sorted({k for h in self.hams for k in h.profile.knots if k <= self.support} | {0.0, self.support})
        for a, b in zip(knots, knots[1:]):
            mid = 0.5 * (a + b)
            flat = True
            for h in self.hams:
                prof = h.profile
                if mid >= prof.r_max:
                    continue
                i = int(np.searchsorted(prof.knots, mid) - 1)
                lo, hi, const = list(prof.pieces())[i]
                if const is None:
                    flat = False
                    break
            yield a, b, flat

    def plateaus(self):
        """Closed intervals inside the support where the total turn count is constant."""
        if self._plateaus is None:
            out = []
            for a, b, flat in self.pieces():
                if not flat:
                    continue
                v = float(self(0.5 * (a + b)))
                if out and out[-1][1] == a and out[-1][2] == v:
                    out[-1] = (out[-1][0], b, v)
                else:
                    out.append((a, b, v))
            self._plateaus = out
        return self._plateaus

    def integer_plateaus(self):
        return [(a, b, v) for a, b, v in self.plateaus() if _is_int(v)]

    def levels(self):
        """Isolated radii where the turn count is an integer: ``[(r, k)]``."""
        roots = []
        for a, b, flat in self.pieces():
            if flat:
                continue
            rs = np.linspace(a, b, 65)
            if np.any(np.diff(self(rs)) > 1e-12):
                raise UnsupportedStructureError("classification needs non-increasing rotation profiles")
            va, vb = float(self(a)), float(self(b))
            for k in range(math.ceil(vb - 1e-12), math.floor(va + 1e-12) + 1):
                if abs(va - k) <= 1e-12:
                    r = a
                elif abs(vb - k) <= 1e-12:
                    r = b
                else:
                    r = brentq(lambda s: float(self(s)) - k, a, b, xtol=1e-15, rtol=1e-15, maxiter=200)
                roots.append((r, k))
        out = []
        for r, k in sorted(roots):
            if r == 0.0 or r >= self.support:
                continue
            if any(a <= r <= b for a, b, _ in self.plateaus()):
                continue
            if out and abs(out[-1][0] - r) < 1e-13:
                continue
            out.append((r, k))
        return out

    def in_integer_plateau(self, rho):
        rho = np.asarray(rho)
        hit = np.zeros(rho.shape, dtype=bool)
        for a, b, _ in self.integer_plateaus():
            hit |= (rho >= a - 1e-12) & (rho <= b + 1e-12)
        return hit


def _is_int(v, tol=1e-12):
    return abs(v - round(v)) <= tol


def _blocks(system):
    """Radial primitives per simultaneous block (one block per concat leg)."""
    def flat(s):
        if isinstance(s, Zero):
            return []
        if isinstance(s, Radial):
            return [s.ham]
        if isinstance(s, Sum):
            return [h for t in s.terms for h in flat(t)]
        raise UnsupportedStructureError(f"cannot classify fixed sets of {type(s).__name__} terms")

    if isinstance(system, Concat):
        return [flat(leg) for leg, _ in system.legs]
    return [flat(system)]


def _structure(system):
    blocks = _blocks(system)
    groups: dict = {}
    member: dict = {}
    for b, hams in enumerate(blocks):
        for h in hams:
            key = h.center
            groups.setdefault(key, []).append(h)
            member.setdefault(key, set()).add(b)
    gs = [_Group(c, hs) for c, hs in groups.items()]
    parent = {}
    for g1, g2 in itertools.permutations(gs, 2):
        d = math.dist(g1.center, g2.center)
        if d >= g1.support + g2.support:
            continue
        if g2.support >= g1.support:
            continue
        # g2 must sit inside an integer plateau of g1, in a different concat leg
        if not any(d - g2.support >= a - 1e-12 and d + g2.support <= b + 1e-12
                   for a, b, _ in g1.integer_plateaus()):
            raise UnsupportedStructureError(
                f"rotation about {g2.center} overlaps rotation about {g1.center} outside an integer plateau")
        if member[g1.center] & member[g2.center]:
            raise UnsupportedStructureError("nested rotations must act in different concatenation legs")
        if g2.center not in parent or parent[g2.center].support > g1.support:
            parent[g2.center] = g1
    for g1, g2 in itertools.combinations(gs, 2):
        d = math.dist(g1.center, g2.center)
        if d < g1.support + g2.support and g1.support == g2.support:
            raise UnsupportedStructureError("overlapping rotations of equal support")
    return gs


def _innermost(groups, pts):
    """Index of the smallest support disk containing each point, or -1."""
    best = np.full(len(pts), -1)
    best_r = np.full(len(pts), np.inf)
    for k, g in enumerate(groups):
        rho = np.hypot(pts[:, 0] - g.center[0], pts[:, 1] - g.center[1])
        hit = (rho < g.support) & (g.support < best_r)
        best[hit] = k
        best_r[hit] = g.support
    return best


def _region_predicate(groups):
    def pred(pts):
        pts = np.atleast_2d(pts)
        inner = _innermost(groups, pts)
        ok = inner < 0
        for k, g in enumerate(groups):
            sel = inner == k
            if sel.any():
                rho = np.hypot(pts[sel, 0] - g.center[0], pts[sel, 1] - g.center[1])
                ok[sel] = g.in_integer_plateau(rho)
        return ok
    return pred


def classify_fixed_sets(system: HamiltonianSystem, *, grid: int = 201, steps: int = DEFAULT_STEPS,
                        tol: float = FIXED_TOL, region_reps: int = 20, circle_reps: int = 8,
                        check: bool = True) -> list:
    """Enumerate the connected components of the fixed set of the time-1 map.

    Supported systems are layered radial rotations: concentric terms add,
    distinct centers either have disjoint supports or the smaller support lies
    in an integer plateau of the larger one (and acts in another concat leg).
    Points and circles come from the profiles' integer levels; two-dimensional
    families are found by flood fill on a ``grid x grid`` sampling of the disk.
    Every representative is checked against the integrated time-1 map.
    """
    groups = _structure(system)
    comps: list = []

    pts_comp = []
    circ_comp = []
    for g in sorted(groups, key=lambda g: g.center):
        v0 = float(g(0.0))
        on_plateau = any(a == 0.0 for a, _, _ in g.integer_plateaus())
        if not on_plateau:
            kind = "degenerate-point" if _is_int(v0) else "nondegenerate-point"
            pts_comp.append((g.center, kind, v0))
        for r, k in g.levels():
            circ_comp.append((g.center, r, k))

    for n, (c, kind, v0) in enumerate(pts_comp):
        comps.append(FixedSetComponent(f"point-{n}", kind, np.array([c], dtype=float), center=c, turns=v0))
    for n, (c, r, k) in enumerate(sorted(circ_comp)):
        th = 2 * math.pi * (np.arange(circle_reps) + 0.25) / circle_reps
        reps = np.stack([c[0] + r * np.cos(th), c[1] + r * np.sin(th)], axis=1)
        comps.append(FixedSetComponent(f"circle-{n}", "circle", reps, center=c, radius=r, turns=float(k)))

    pred = _region_predicate(groups)
    xs = np.linspace(-DISK_RADIUS, DISK_RADIUS, grid)
    gx, gy = np.meshgrid(xs, xs, indexing="ij")
    cells = np.stack([gx.ravel(), gy.ravel()], axis=1)
    in_disk = np.hypot(cells[:, 0], cells[:, 1]) <= DISK_RADIUS
    mask = np.zeros(len(cells), dtype=bool)
    mask[in_disk] = pred(cells[in_disk])
    labels, nlab = ndimage.label(mask.reshape(grid, grid), structure=np.ones((3, 3)))
    flat_labels = labels.ravel()
    masked_idx = np.flatnonzero(mask)
    tree = cKDTree(cells[masked_idx]) if masked_idx.size else None
    spacing = xs[1] - xs[0]
    for lab in range(1, nlab + 1):
        members = np.flatnonzero(flat_labels == lab)
        pick = members[np.linspace(0, len(members) - 1, min(region_reps, len(members))).round().astype(int)]
        reps = cells[pick]
        boundary = bool(np.any(np.hypot(cells[members, 0], cells[members, 1]) > DISK_RADIUS - 2 * spacing))

        def contains(x, lab=lab):
            x = np.atleast_2d(x)
            if not pred(x)[0]:
                return False
            dist, j = tree.query(x[0])
            return dist <= 2 * spacing and flat_labels[masked_idx[j]] == lab

        comps.append(FixedSetComponent(f"region-{lab - 1}", "planar-region", reps,
                                       near_boundary=boundary, cells=cells[members],
                                       _contains=contains))

    if check and comps:
        allreps = np.concatenate([c.representatives for c in comps])
        moved = time_one_map(system, allreps, steps) - allreps
        res = np.hypot(moved[:, 0], moved[:, 1])
        pos = 0
        for c in comps:
            n = len(c.representatives)
            c.residual = float(res[pos:pos + n].max())
            pos += n
            if c.residual > tol:
                raise NumericError(f"component {c.id} representative moves by {c.residual:.3g} under the time-1 map")
    return comps


# --------------------------------------------------------------------------
# survivors of a perturbed circle of fixed points


def _tangential_solve(system, center, theta, rho, steps, h=1e-6, iters=8, tol=1e-12):
    """Radius along each ray where the time-1 displacement is normal to the circle.

    Returns ``(rho, radial displacement, |displacement|, converged)``.
    """
    c = np.asarray(center, dtype=float)
    u = np.stack([np.cos(theta), np.sin(theta)], axis=1)
    v = np.stack([-np.sin(theta), np.cos(theta)], axis=1)
    rho = np.array(rho, dtype=float)
    n = len(theta)
    vv = np.vstack([v, v, v])
    for _ in range(iters):
        pts = c + np.concatenate([rho, rho + h, rho - h])[:, None] * np.vstack([u, u, u])
        disp = time_one_map(system, pts, steps) - pts
        ft = np.einsum("ij,ij->i", disp, vv).reshape(3, n)
        d = (ft[1] - ft[2]) / (2 * h)
        step = np.where(np.abs(d) > 1e-14, ft[0] / np.where(d == 0, 1.0, d), 0.0)
        step = np.clip(step, -0.01, 0.01)
        rho = rho - step
        if np.all((np.abs(ft[0]) < tol) | (np.abs(step) < 1e-14)):
            break
    pts = c + rho[:, None] * u
    disp = time_one_map(system, pts, steps) - pts
    ft = np.einsum("ij,ij->i", disp, v)
    fr = np.einsum("ij,ij->i", disp, u)
    return rho, fr, np.hypot(disp[:, 0], disp[:, 1]), np.abs(ft) < 1e3 * tol


def circle_survivors(system, center, radius, *, steps=DEFAULT_STEPS, n=32, tol=FIXED_TOL, max_iter=30,
                     max_shift=0.02):
    """Fixed points of a perturbed map near a circle of fixed points of the unperturbed one.

    The turn count must vary across the circle (a Morse-Bott circle): then
    for each angle one radius makes the displacement purely radial, and the
    survivors are the sign changes of that radial displacement in the angle,
    refined by the Illinois variant of regula falsi.  Rays where that radius
    cannot be found within ``max_shift`` of the circle are skipped.  Returns
    the points whose displacement is below ``tol``.
    """
    theta = 2 * math.pi * np.arange(n) / n
    rho, fr, _, ok = _tangential_solve(system, center, theta, np.full(n, float(radius)), steps)
    ok &= np.abs(rho - radius) <= max_shift
    nxt = np.roll(np.arange(n), -1)
    idx = np.flatnonzero(ok & ok[nxt] & (np.sign(fr) != np.sign(fr[nxt])))
    if idx.size == 0:
        return np.empty((0, 2))
    a, b = theta[idx], theta[nxt[idx]] + np.where(nxt[idx] == 0, 2 * math.pi, 0.0)
    fa, fb = fr[idx], fr[nxt[idx]]
    ra, rb = rho[idx], rho[nxt[idx]]
    side = np.zeros(len(a), dtype=int)
    live = np.ones(len(a), dtype=bool)
    found = np.zeros(len(a), dtype=bool)
    out = np.zeros((len(a), 2))
    for _ in range(max_iter):
        k = np.flatnonzero(live)
        if k.size == 0:
            break
        den = fb[k] - fa[k]
        m = np.where(den != 0, (a[k] * fb[k] - b[k] * fa[k]) / np.where(den != 0, den, 1.0), 0.5 * (a[k] + b[k]))
        rm, fm, res, good = _tangential_solve(system, center, m, 0.5 * (ra[k] + rb[k]), steps)
        good &= np.abs(rm - radius) <= max_shift
        out[k] = np.asarray(center) + rm[:, None] * np.stack([np.cos(m), np.sin(m)], axis=1)
        hit = good & (res < tol)
        found[k[hit]] = True
        live[k[hit | ~good | (np.abs(b[k] - a[k]) < 1e-13)]] = False
        left = np.sign(fm) == np.sign(fa[k])
        # Illinois: halve the stale endpoint value when the same side repeats
        fb[k] = np.where(left & (side[k] == 1), 0.5 * fb[k], fb[k])
        fa[k] = np.where(~left & (side[k] == -1), 0.5 * fa[k], fa[k])
        a[k], fa[k], ra[k] = np.where(left, m, a[k]), np.where(left, fm, fa[k]), np.where(left, rm, ra[k])
        b[k], fb[k], rb[k] = np.where(left, b[k], m), np.where(left, fb[k], fm), np.where(left, rb[k], rm)
        side[k] = np.where(left, 1, -1)
    return out[found]
