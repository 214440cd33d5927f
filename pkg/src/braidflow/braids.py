"""Winding matrices, nesting orders and set-valued windings of periodic strands."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import directed_hausdorff

from .dynamics.flow import Trajectory
from .errors import (
    ClosureError,
    CollisionError,
    NotAutonomousShapeError,
    ResolutionError,
    UnsupportedStructureError,
    ValidationError,
)

COLLISION_TOL = 1e-4
CLOSURE_TOL = 1e-6
RESOLUTION_TOL = 0.05
DECK_WINDOW = 3


@dataclass(frozen=True)
class StrandSet:
    strands: tuple

    def __post_init__(self):
        strands = tuple(self.strands)
        labels = [s.label for s in strands]
        if len(set(labels)) != len(labels):
            raise ValidationError(f"duplicate strand labels: {labels}")
        for s in strands[1:]:
            if len(s.times) != len(strands[0].times) or not np.array_equal(s.times, strands[0].times):
                raise ValidationError("strands must share a common sample grid")
        object.__setattr__(self, "strands", strands)

    @property
    def labels(self) -> list:
        return [s.label for s in self.strands]

    def __getitem__(self, label):
        for s in self.strands:
            if s.label == label:
                return s
        raise KeyError(label)

    def __len__(self):
        return len(self.strands)

    def __iter__(self):
        return iter(self.strands)


@dataclass(frozen=True)
class WindingMatrix:
    labels: tuple
    values: np.ndarray  # int, diagonal zero and masked

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.shape != (len(self.labels), len(self.labels)):
            raise ValidationError("matrix shape does not match labels")
        if not np.array_equal(v, v.T):
            raise ValidationError("winding matrix must be symmetric")
        object.__setattr__(self, "labels", tuple(self.labels))
        object.__setattr__(self, "values", v.astype(int))

    def __getitem__(self, pair):
        i, j = (self.labels.index(p) for p in pair)
        if i == j:
            raise KeyError("winding of a strand with itself is undefined")
        return int(self.values[i, j])

    def __eq__(self, other):
        return (
            isinstance(other, WindingMatrix)
            and self.labels == other.labels
            and np.array_equal(self.values, other.values)
        )

    def submatrix(self, labels) -> "WindingMatrix":
        idx = [self.labels.index(lab) for lab in labels]
        return WindingMatrix(tuple(labels), self.values[np.ix_(idx, idx)])

    def as_rows(self) -> list:
        """Rows with ``None`` on the diagonal, for reports."""
        return [[None if i == j else int(self.values[i, j]) for j in range(len(self.labels))]
                for i in range(len(self.labels))]

    @classmethod
    def from_pairs(cls, labels, pairs: dict) -> "WindingMatrix":
        labels = tuple(labels)
        v = np.zeros((len(labels), len(labels)), dtype=int)
        for (a, b), w in pairs.items():
            i, j = labels.index(a), labels.index(b)
            v[i, j] = v[j, i] = w
        return cls(labels, v)


def _check_closed(s: Trajectory, tol: float):
    if s.closure_defect > tol:
        raise ClosureError(f"strand {s.label} is not closed (defect {s.closure_defect:.3g})")


def winding_degree(strand_p: Trajectory, strand_q: Trajectory, collision_tol: float = COLLISION_TOL) -> float:
    """Real-valued total turning of ``p(t) - q(t)`` in units of full turns."""
    d = strand_p.positions - strand_q.positions
    dist = np.hypot(d[:, 0], d[:, 1])
    if dist.min() < collision_tol:
        k = int(dist.argmin())
        raise CollisionError(
            f"strands {strand_p.label} and {strand_q.label} collide near t={strand_p.times[k]:.6g}")
    ang = np.unwrap(np.arctan2(d[:, 1], d[:, 0]))
    return (ang[-1] - ang[0]) / (2 * math.pi)


def winding_number(strand_p: Trajectory, strand_q: Trajectory, *,
                   collision_tol: float = COLLISION_TOL, closure_tol: float = CLOSURE_TOL) -> int:
    """Degree of the angle of ``p(t) - q(t)`` over one period."""
    _check_closed(strand_p, closure_tol)
    _check_closed(strand_q, closure_tol)
    deg = winding_degree(strand_p, strand_q, collision_tol)
    w = round(deg)
    if abs(deg - w) > RESOLUTION_TOL:
        raise ResolutionError(
            f"winding of ({strand_p.label}, {strand_q.label}) is {deg:.4f} turns; refine the sample grid")
    return int(w)


def winding_matrix(strands, **kw) -> WindingMatrix:
    strands = strands if isinstance(strands, StrandSet) else StrandSet(tuple(strands))
    k = len(strands)
    v = np.zeros((k, k), dtype=int)
    for i, j in itertools.combinations(range(k), 2):
        a, b = strands.strands[i], strands.strands[j]
        try:
            v[i, j] = winding_number(a, b, **kw)
            v[j, i] = winding_number(b, a, **kw)
        except Exception as exc:
            exc.args = (f"pair ({a.label}, {b.label}): {exc}",) + exc.args[1:]
            raise
    return WindingMatrix(tuple(strands.labels), v)


# --------------------------------------------------------------------------
# nesting order of autonomous trajectories


@dataclass(frozen=True)
class _Image:
    """Trajectory image: a point or a single-cover closed polygon."""

    point: np.ndarray | None
    loop: np.ndarray | None
    turns: int


def _single_cover(s: Trajectory, const_tol: float, max_turns: int = 64) -> _Image:
    pos = s.positions
    spread = np.max(np.hypot(*(pos - pos[0]).T))
    if spread < const_tol:
        return _Image(pos[0].copy(), None, 0)
    t = s.times
    scale = max(spread, 1e-12)
    turns = 1
    for n in range(max_turns, 1, -1):
        shifted = np.stack([np.interp((t + 1.0 / n) % 1.0, t, pos[:, k]) for k in range(2)], axis=1)
        if np.max(np.hypot(*(shifted - pos).T)) < 1e-3 * scale:
            turns = n
            break
    end = int(np.searchsorted(t, 1.0 / turns, side="right"))
    loop = pos[: max(end, 4)]
    return _Image(None, loop, turns)


def curve_winding_around(loop: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Winding number of a closed polygon around each of ``points``."""
    pts = np.atleast_2d(points)
    closed = np.vstack([loop, loop[:1]])
    a = closed[None, :-1, :] - pts[:, None, :]
    b = closed[None, 1:, :] - pts[:, None, :]
    cross = a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]
    dot = (a * b).sum(-1)
    total = np.arctan2(cross, dot).sum(axis=1)
    return np.rint(total / (2 * math.pi)).astype(int)


def _segments_intersect(p: np.ndarray) -> bool:
    """True if a closed polygon has two non-adjacent intersecting edges."""
    q = np.vstack([p, p[:1]])
    a, b = q[:-1], q[1:]
    n = len(a)
    i, j = np.triu_indices(n, k=2)
    keep = ~((i == 0) & (j == n - 1))
    i, j = i[keep], j[keep]

    def orient(u, v, w):
        return (v[..., 0] - u[..., 0]) * (w[..., 1] - u[..., 1]) - (v[..., 1] - u[..., 1]) * (w[..., 0] - u[..., 0])

    o1 = orient(a[i], b[i], a[j])
    o2 = orient(a[i], b[i], b[j])
    o3 = orient(a[j], b[j], a[i])
    o4 = orient(a[j], b[j], b[i])
    return bool(np.any((o1 * o2 < 0) & (o3 * o4 < 0)))


def _is_simple(loop: np.ndarray, max_vertices: int = 256) -> bool:
    stride = max(1, len(loop) // max_vertices)
    return not _segments_intersect(loop[::stride])


@dataclass
class NestingOrder:
    """Weak partial order on strand labels by containment of bounded disks."""

    labels: tuple
    classes: list  # list of tuples of labels sharing one trajectory
    strict: set = field(default_factory=set)  # (inner_class, outer_class) index pairs, transitively closed

    def class_of(self, label) -> int:
        for k, cls in enumerate(self.classes):
            if label in cls:
                return k
        raise KeyError(label)

    def leq(self, a, b) -> bool:
        ca, cb = self.class_of(a), self.class_of(b)
        return ca == cb or (ca, cb) in self.strict

    def comparable(self, a, b) -> bool:
        return self.leq(a, b) or self.leq(b, a)

    @classmethod
    def chain(cls, labels) -> "NestingOrder":
        """Total order, innermost first."""
        labels = tuple(labels)
        strict = {(i, j) for i in range(len(labels)) for j in range(i + 1, len(labels))}
        return cls(labels, [(lab,) for lab in labels], strict)

    @classmethod
    def antichain(cls, labels) -> "NestingOrder":
        labels = tuple(labels)
        return cls(labels, [(lab,) for lab in labels], set())


def nesting_order(strands, *, const_tol: float = 1e-7, same_tol: float = 1e-3, probes: int = 32) -> NestingOrder:
    """Containment order of the disks bounded by autonomous trajectories.

    Constant strands bound singletons.  Two strands with the same image
    (Hausdorff distance below ``same_tol``) form one class.
    """
    strands = strands if isinstance(strands, StrandSet) else StrandSet(tuple(strands))
    images = {}
    for s in strands:
        img = _single_cover(s, const_tol)
        if img.loop is not None and not _is_simple(img.loop):
            raise NotAutonomousShapeError(f"strand {s.label} is not a simple closed loop")
        images[s.label] = img

    labels = strands.labels
    classes: list = []
    reps: list = []
    for lab in labels:
        img = images[lab]
        for k, rep in enumerate(reps):
            other = images[rep]
            if _same_image(img, other, same_tol):
                classes[k] = classes[k] + (lab,)
                break
        else:
            classes.append((lab,))
            reps.append(lab)

    def inside(inner: _Image, outer: _Image) -> bool:
        if outer.loop is None:
            return False
        pts = inner.point[None, :] if inner.loop is None else \
            inner.loop[:: max(1, len(inner.loop) // probes)]
        w = curve_winding_around(outer.loop, pts) != 0
        if w.any() and not w.all():
            raise NotAutonomousShapeError("trajectories cross; not an autonomous configuration")
        return bool(w.all())

    strict = set()
    for i, j in itertools.permutations(range(len(classes)), 2):
        if inside(images[reps[i]], images[reps[j]]):
            strict.add((i, j))
    return NestingOrder(tuple(labels), classes, strict)


def _same_image(a: _Image, b: _Image, tol: float) -> bool:
    if (a.loop is None) != (b.loop is None):
        return False
    if a.loop is None:
        return float(np.hypot(*(a.point - b.point))) < tol
    # two samplings of one curve differ by up to half an edge in Hausdorff distance
    edge = max(float(np.max(np.hypot(*np.diff(lp, axis=0).T))) for lp in (a.loop, b.loop))
    h = max(directed_hausdorff(a.loop, b.loop)[0], directed_hausdorff(b.loop, a.loop)[0])
    return h < max(tol, edge)


# --------------------------------------------------------------------------
# set-valued windings on the annulus and flat torus


def _lift(positions: np.ndarray, periodic: tuple) -> np.ndarray:
    """Continuous lift of a path in a chart with unit periods on the flagged axes."""
    lifted = positions.astype(float).copy()
    for k, per in enumerate(periodic):
        if per:
            steps = np.diff(positions[:, k])
            steps -= np.round(steps)
            lifted[1:, k] = positions[0, k] + np.cumsum(steps)
    return lifted


def set_valued_winding(model: str, strand_p: Trajectory, strand_q: Trajectory,
                       window: int | tuple = DECK_WINDOW, *, closure_tol: float = CLOSURE_TOL) -> set:
    """Windings of all lift pairs whose relative deck translation lies in the window.

    ``model`` is ``"disk"``, ``"annulus"`` (x periodic with period 1, 0 < y < 1)
    or ``"torus"`` (both coordinates periodic with period 1).  ``window`` is
    the largest translation magnitude per generator, or an explicit
    ``(lo, hi)`` range.
    """
    if model == "disk":
        return {winding_number(strand_p, strand_q, closure_tol=closure_tol)}
    if model == "annulus":
        periodic = (True, False)
    elif model == "torus":
        periodic = (True, True)
    else:
        raise ValidationError(f"unknown model {model!r}")
    lo, hi = (-window, window) if isinstance(window, int) else window
    rng = range(lo, hi + 1)
    lp = _lift(strand_p.positions, periodic)
    lq = _lift(strand_q.positions, periodic)
    for lab, lift in ((strand_p.label, lp), (strand_q.label, lq)):
        if np.hypot(*(lift[-1] - lift[0])) > closure_tol:
            raise UnsupportedStructureError(f"strand {lab} is not contractible (its lift does not close)")
    shifts = [(k, 0) for k in rng] if model == "annulus" else list(itertools.product(rng, rng))
    out = set()
    for dx, dy in shifts:
        moved = Trajectory(strand_q.label, strand_q.times, lq + np.array([dx, dy], dtype=float))
        lifted_p = Trajectory(strand_p.label, strand_p.times, lp)
        deg = winding_degree(lifted_p, moved)
        w = round(deg)
        if abs(deg - w) > RESOLUTION_TOL:
            raise ResolutionError(f"lift winding {deg:.4f} is not near an integer")
        out.add(int(w))
    return out
