"""Named scenarios: the integrable non-autonomous disk map, baselines and sweeps."""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import brentq

from .braids import (
    COLLISION_TOL,
    StrandSet,
    WindingMatrix,
    nesting_order,
    set_valued_winding,
    winding_matrix,
)
from .config import ProfileEntry, ScenarioConfig, SweepSettings, load_builtin
from .dynamics.fixed import FIXED_TOL, circle_survivors, classify_fixed_sets, newton_fixed_points
from .dynamics.flow import Trajectory, integrate_flow, time_one_map
from .dynamics.systems import Bump, Concat, Radial, Sum, Zero
from .errors import BraidflowError, NumericError, StageError, ValidationError
from .obstruction import autonomous_consistency, find_obstruction
from .profiles import (
    DEFAULT_ALPHA0,
    DEFAULT_BETA0,
    RadialProfile,
    alpha_profile,
    beta_profile,
    hamiltonian_from_profile,
    validate_profile,
)
from .spectrum import action_spectrum, admissibility_check, hofer_length

DELTA_CENTER = (0.5, 0.0)
DELTA_RADIUS = 0.3
# slopes at r = 0.1 frozen from tune_profiles() over slopes in [-20, -10]; steeper violates monotonicity
DEFAULT_ALPHA_SLOPE = -15.0
DEFAULT_BETA_SLOPE = -15.0


# --------------------------------------------------------------------------
# paper disk construction


def beta_level_radius(beta: RadialProfile, k: float) -> float:
    """Radius in (0.1, 0.2) where the small-disk profile equals ``k``."""
    return brentq(lambda r: float(beta(r)) - k, 0.1, 0.2, xtol=1e-15, rtol=1e-15)


def paper_profiles(alpha0=DEFAULT_ALPHA0, beta0=DEFAULT_BETA0, alpha_slope=DEFAULT_ALPHA_SLOPE,
                   beta_slope=DEFAULT_BETA_SLOPE):
    alpha = alpha_profile(alpha0, alpha_slope)
    beta = beta_profile(beta0, beta_slope)
    problems = []
    for prof, name in ((alpha, "alpha"), (beta, "beta")):
        problems += [f"{c.id} (measured {c.measured:.6g})" for c in validate_profile(prof, name).violations]
    if problems:
        raise ValidationError("profile constraints violated: " + "; ".join(problems))
    return alpha, beta


def build_paper_disk_scenario(alpha0=DEFAULT_ALPHA0, beta0=DEFAULT_BETA0, *, alpha_slope=DEFAULT_ALPHA_SLOPE,
                              beta_slope=DEFAULT_BETA_SLOPE, moon_level: int = 3, steps: int = 4096,
                              name: str | None = None) -> ScenarioConfig:
    """h rotates by alpha about the origin, then h_Delta by beta about (0.5, 0).

    The moon ``m`` sits on the ray through the small disk's center at the
    radius where beta equals ``moon_level`` (0.1 for level 3).  The point
    (0, 0.6) is carried along as an auxiliary strand.
    """
    alpha, beta = paper_profiles(alpha0, beta0, alpha_slope, beta_slope)
    if moon_level == 3:
        rho = 0.1
    elif moon_level in (1, 2):
        rho = beta_level_radius(beta, moon_level)
    else:
        raise ValidationError("moon_level must be 1, 2 or 3")
    if name is None:
        name = "paper-disk" if moon_level == 3 else f"paper-disk-moon-level{moon_level}"
    return ScenarioConfig(
        name=name,
        model="disk",
        profiles={"alpha": ProfileEntry(alpha, (0.0, 0.0)), "beta": ProfileEntry(beta, DELTA_CENTER)},
        legs=("alpha", "beta"),
        points={"s": (0.0, 0.0), "p1": (0.1, 0.0), "p2": DELTA_CENTER, "m": (DELTA_CENTER[0] + rho, 0.0)},
        aux_points={"m_printed": (0.0, 0.6)},
        steps=steps,
        sweep=SweepSettings(),
    )


def paper_actions(alpha: RadialProfile, beta: RadialProfile) -> dict:
    """Closed-form actions of the fixed components of the paper map.

    On an integer level ``k`` of a rotation about ``c`` the action is
    ``H(r) + k*pi*r**2``; the small disk sits inside the unit plateau of alpha,
    whose value ``C`` it inherits.
    """
    ha = hamiltonian_from_profile(alpha)
    hb = hamiltonian_from_profile(beta, DELTA_CENTER)
    c = float(ha.value_at_radius(0.2)) + math.pi * 0.2 ** 2
    out = {
        "s": float(ha.value_at_radius(0.0)),
        "alpha-level-2": float(ha.value_at_radius(0.1)) + 2 * math.pi * 0.1 ** 2,
        "alpha-plateau": c,
        "p2": c + float(hb.value_at_radius(0.0)),
        "boundary": 0.0,
    }
    for k in (3, 2, 1):
        r = 0.1 if k == 3 else beta_level_radius(beta, k)
        out[f"beta-level-{k}"] = c + float(hb.value_at_radius(r)) + k * math.pi * r * r
    return out


def separation(values) -> float:
    v = sorted(values)
    return min(b - a for a, b in zip(v, v[1:]))


@dataclass(frozen=True)
class TuningResult:
    alpha0: float
    beta0: float
    alpha_slope: float | None
    beta_slope: float | None
    epsilon: float
    evaluated: int


_SLOPE_GRID = (None,) + tuple(np.arange(-5.0, -20.01, -2.5))


def tune_profiles(alpha0s=None, beta0s=None, alpha_slopes=_SLOPE_GRID, beta_slopes=_SLOPE_GRID) -> TuningResult:
    """Grid search over the flexible profile parameters maximizing the action gap.

    Candidates violating the profile constraints are skipped.  ``None`` as a
    slope keeps the shape-preserving default.
    """
    alpha0s = np.linspace(2.05, 2.5, 4) if alpha0s is None else alpha0s
    beta0s = np.linspace(3.05, 3.5, 4) if beta0s is None else beta0s
    best = None
    n = 0
    for a0, b0, sa, sb in itertools.product(alpha0s, beta0s, alpha_slopes, beta_slopes):
        try:
            alpha, beta = paper_profiles(float(a0), float(b0), sa, sb)
        except ValidationError:
            continue
        n += 1
        eps = separation(paper_actions(alpha, beta).values())
        if best is None or eps > best[0] + 1e-15:
            best = (eps, float(a0), float(b0), sa, sb)
    if best is None:
        raise ValidationError("no admissible profile in the search grid")
    eps, a0, b0, sa, sb = best
    fl = lambda v: None if v is None else float(v)  # noqa: E731
    return TuningResult(a0, b0, fl(sa), fl(sb), eps, n)


# --------------------------------------------------------------------------
# running scenarios


def build_system(cfg: ScenarioConfig):
    """Identity, a single rotation, or the legs run one after another."""
    legs = [Radial(hamiltonian_from_profile(cfg.profiles[n].profile, cfg.profiles[n].center)) for n in cfg.legs]
    if not legs:
        return Zero()
    if len(legs) == 1:
        return legs[0]
    weights = cfg.weights or (1.0 / len(legs),) * len(legs)
    return Concat(list(zip(legs, weights)))


@dataclass
class ScenarioResult:
    config: ScenarioConfig
    strands: StrandSet
    winding: WindingMatrix
    certificate: object  # ObstructionCertificate | None
    components: list
    spectrum: object
    admissibility: object
    hofer: float
    aux_windings: dict = field(default_factory=dict)  # (aux label, marked label) -> int
    set_windings: dict | None = None  # (p, q) -> set, on annulus or torus models
    embedded: StrandSet | None = None
    timings: dict = field(default_factory=dict)


class _Stages:
    def __init__(self):
        self.timings = {}

    def __call__(self, name, fn, *args, **kw):
        t0 = time.perf_counter()
        try:
            return fn(*args, **kw)
        except BraidflowError as exc:
            raise StageError(name, exc) from exc
        finally:
            self.timings[name] = time.perf_counter() - t0


def check_marked_fixed(system, cfg: ScenarioConfig, tol: float = 1e-6):
    if not cfg.points:
        raise ValidationError("scenario has no marked points")
    pts = np.array(list(cfg.points.values()), dtype=float)
    moved = np.hypot(*(time_one_map(system, pts, cfg.steps) - pts).T)
    bad = [f"{lab} (moves {d:.3g})" for lab, d in zip(cfg.points, moved) if d > tol]
    if bad:
        raise ValidationError("marked points are not fixed by the time-1 map: " + ", ".join(bad))


def run_scenario(cfg: ScenarioConfig, *, full: bool = True) -> ScenarioResult:
    """integrate -> winding matrix -> obstruction -> fixed sets -> spectrum -> admissibility.

    With ``full=False`` the fixed-set, spectrum and admissibility stages are
    skipped.  Any failing stage raises StageError naming the stage.
    """
    stage = _Stages()
    system = stage("build", build_system, cfg)
    stage("validate", check_marked_fixed, system, cfg)
    labels = list(cfg.points) + list(cfg.aux_points)
    pts = list(cfg.points.values()) + list(cfg.aux_points.values())
    trajs = stage("integrate", integrate_flow, system, pts, cfg.steps, labels)
    strands = StrandSet(tuple(trajs[:len(cfg.points)]))
    W = stage("winding", winding_matrix, strands)
    cert = stage("obstruction", find_obstruction, W)

    aux = {}
    for tr in trajs[len(cfg.points):]:
        def aux_row(tr=tr):
            return {(tr.label, q.label): w for q in strands
                    for w in [winding_matrix(StrandSet((q, tr)))[q.label, tr.label]]}
        aux.update(stage("aux-winding", aux_row))

    comps = spec = adm = None
    if full:
        comps = stage("classify", classify_fixed_sets, system, grid=cfg.grid, steps=cfg.steps)
        spec = stage("spectrum", action_spectrum, comps, system, steps=cfg.steps)
        adm = stage("admissibility", admissibility_check, comps, spec, cfg.points)
    hofer = stage("hofer", hofer_length, system)
    result = ScenarioResult(cfg, strands, W, cert, comps, spec, adm, hofer, aux, timings=stage.timings)
    if cfg.model != "disk":
        stage("set-winding", _attach_set_windings, result, cfg.model)
    return result


# --------------------------------------------------------------------------
# annulus and torus embeddings

CHART_SCALE = 0.45
CHART_OFFSET = (0.5, 0.5)


def embed_strands(strands: StrandSet, model: str, scale: float = CHART_SCALE, offset=CHART_OFFSET) -> StrandSet:
    """Push disk strands through ``x -> offset + scale * x`` into the unit-square chart.

    Periodic coordinates are reduced mod 1.  The chart is a homothety, so the
    pushed strands are exactly the trajectories of the conjugated flow.
    """
    if scale <= 0 or scale * 1.0 > min(offset[0], 1 - offset[0], offset[1], 1 - offset[1]):
        raise ValidationError("the disk does not fit in the chart")
    out = []
    for s in strands:
        pos = np.asarray(offset) + scale * s.positions
        pos[:, 0] %= 1.0
        if model == "torus":
            pos[:, 1] %= 1.0
        out.append(Trajectory(s.label, s.times, pos))
    return StrandSet(tuple(out))


def set_windings(strands: StrandSet, model: str, window=3) -> dict:
    return {(p.label, q.label): set_valued_winding(model, p, q, window)
            for p, q in itertools.combinations(strands, 2)}


def _attach_set_windings(result: ScenarioResult, model: str, window=3, scale=CHART_SCALE, offset=CHART_OFFSET):
    result.embedded = embed_strands(result.strands, model, scale, offset)
    result.set_windings = set_windings(result.embedded, model, window)


def annulus_embedding_scenario(cfg: ScenarioConfig | None = None, *, model: str = "annulus", window=3,
                               scale: float = CHART_SCALE, offset=CHART_OFFSET, full: bool = False) -> ScenarioResult:
    """Run a disk scenario, embed it in the annulus (or torus) chart and add set-valued windings."""
    cfg = build_paper_disk_scenario() if cfg is None else cfg
    if model not in ("annulus", "torus"):
        raise ValidationError("model must be annulus or torus")
    result = run_scenario(replace(cfg, model="disk"), full=full)
    try:
        _attach_set_windings(result, model, window, scale, offset)
    except BraidflowError as exc:
        raise StageError("set-winding", exc) from exc
    result.config = replace(cfg, model=model)
    return result


# --------------------------------------------------------------------------
# perturbation sweep


@dataclass(frozen=True)
class PersistenceRow:
    delta: float
    oscillation: float  # Hofer length of the added bump
    status: str  # identical | changed | orbit lost | collision
    continued: dict  # label -> (x, y)
    shifts: dict  # label -> distance from the unperturbed point
    matrix: WindingMatrix | None
    offsets: dict = field(default_factory=dict)  # label -> distance from the unperturbed fixed component
    lost: tuple = ()
    detail: str = ""


@dataclass(frozen=True)
class PersistenceReport:
    scenario: str
    base: WindingMatrix
    bump_center: tuple
    bump_radius: float
    epsilon: float | None
    rows: tuple

    @property
    def breaking_amplitude(self) -> float | None:
        """Smallest swept amplitude where the braid changed or a strand was lost."""
        bad = [r.delta for r in self.rows if r.status != "identical"]
        return min(bad) if bad else None

    @property
    def stable_below(self) -> float | None:
        ok = [r.delta for r in self.rows if r.status == "identical"]
        brk = self.breaking_amplitude
        ok = [d for d in ok if brk is None or d < brk]
        return max(ok) if ok else None


def component_offset(components, p, x) -> float:
    """Distance from ``x`` to the fixed component through ``p`` (a circle or the point itself)."""
    p = np.asarray(p, dtype=float)
    comp = next((c for c in components or () if c.kind == "circle" and c.contains(p)), None)
    if comp is None:
        return float(math.dist(p, x))
    return abs(math.dist(comp.center, x) - comp.radius)


def continue_fixed_points(system, points: dict, components, *, steps: int, max_shift: float = 0.05,
                          tol: float = FIXED_TOL, ring_samples: int = 32):
    """Follow marked fixed points into a perturbed system.

    A point that is still fixed is kept.  A point on a circle of fixed points
    is replaced by the nearest survivor on that circle (a perturbation leaves
    isolated survivors only); an isolated point is continued by Newton's
    method.  Survivors must stay within ``max_shift`` of the original
    component.  Returns ``(continued, lost)``.
    """
    continued, lost = {}, []
    labels = list(points)
    pts = np.array([points[k] for k in labels], dtype=float)
    moved = np.hypot(*(time_one_map(system, pts, steps) - pts).T)
    for lab, p, d in zip(labels, pts, moved):
        if d < tol:
            continued[lab] = tuple(float(v) for v in p)
            continue
        comp = next((c for c in components if c.kind != "planar-region" and c.contains(p)), None)
        if comp is not None and comp.kind == "circle":
            cand = circle_survivors(system, comp.center, comp.radius, steps=steps, n=ring_samples, tol=tol)
            off = np.abs(np.hypot(cand[:, 0] - comp.center[0], cand[:, 1] - comp.center[1]) - comp.radius)
            cand = cand[off <= max_shift]
        else:
            x, ok, _ = newton_fixed_points(system, p[None, :], steps=steps, tol=tol)
            cand = x[ok & (np.hypot(x[:, 0] - p[0], x[:, 1] - p[1]) <= max_shift)]
        if not len(cand):
            lost.append(lab)
            continue
        k = int(np.argmin(np.hypot(cand[:, 0] - p[0], cand[:, 1] - p[1])))
        continued[lab] = tuple(float(v) for v in cand[k])
    return continued, tuple(lost)


def perturbation_sweep(cfg: ScenarioConfig, deltas=None, *, center=None, radius=None,
                       continuation_steps: int | None = None, base: ScenarioResult | None = None) -> PersistenceReport:
    """Add a bump of oscillation ``delta`` and check whether the braid survives."""
    deltas = cfg.sweep.deltas if deltas is None else tuple(float(d) for d in deltas)
    center = cfg.sweep.center if center is None else tuple(center)
    radius = cfg.sweep.radius if radius is None else float(radius)
    if any(d < 0 for d in deltas):
        raise ValidationError("perturbation amplitudes must be non-negative")
    steps = continuation_steps or min(cfg.steps, 1024)
    base = run_scenario(cfg) if base is None else base
    system = build_system(cfg)
    rows = []
    for d in deltas:
        bump = Bump(center, radius, d)
        osc = hofer_length(bump) if d > 0 else 0.0
        perturbed = Sum([system, bump]) if d > 0 else system
        if d > 0:
            cont, lost = continue_fixed_points(perturbed, cfg.points, base.components, steps=steps)
        else:
            cont, lost = {k: tuple(map(float, v)) for k, v in cfg.points.items()}, ()
        shifts = {k: float(math.dist(cont[k], cfg.points[k])) for k in cont}
        offsets = {k: component_offset(base.components, cfg.points[k], cont[k]) for k in cont}
        if lost:
            rows.append(PersistenceRow(d, osc, "orbit lost", cont, shifts, None, offsets, lost,
                                       "no converged fixed point near " + ", ".join(lost)))
            continue
        try:
            trajs = integrate_flow(perturbed, list(cont.values()), cfg.steps, list(cont))
            W = winding_matrix(StrandSet(tuple(trajs)))
        except NumericError as exc:
            rows.append(PersistenceRow(d, osc, "collision", cont, shifts, None, offsets, (), str(exc)))
            continue
        status = "identical" if W == base.winding else "changed"
        rows.append(PersistenceRow(d, osc, status, cont, shifts, W, offsets))
    eps = base.spectrum.epsilon if base.spectrum is not None else None
    return PersistenceReport(cfg.name, base.winding, center, radius, eps, tuple(rows))


def bisect_breaking_amplitude(cfg: ScenarioConfig, lo: float, hi: float, *, iters: int = 5,
                              base: ScenarioResult | None = None, **kw) -> tuple:
    """Geometric bisection between an amplitude that keeps the braid and one that breaks it.

    Returns the final ``(lo, hi)`` bracket.
    """
    base = run_scenario(cfg) if base is None else base

    def status(d):
        return perturbation_sweep(cfg, [d], base=base, **kw).rows[0].status

    if status(lo) != "identical" or status(hi) == "identical":
        raise ValidationError("bracket must keep the braid at lo and break it at hi")
    for _ in range(iters):
        mid = math.sqrt(lo * hi)
        if status(mid) == "identical":
            lo = mid
        else:
            hi = mid
    return lo, hi


# --------------------------------------------------------------------------
# autonomous baseline suite


@dataclass(frozen=True)
class BaselineCase:
    seed: int
    labels: tuple
    matrix: WindingMatrix | None
    order: object
    violations: tuple
    certificate: object
    error: str = ""

    @property
    def passed(self) -> bool:
        return not self.violations and self.certificate is None and not self.error


@dataclass(frozen=True)
class BaselineReport:
    seed: int
    cases: tuple

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.cases)

    @property
    def failures(self) -> list:
        return [c for c in self.cases if not c.passed]


def _plateau_profile(R, plateaus, name="profile"):
    """Profile on [0, R] that is constant on each ``(a, b, value)`` (in units of R)."""
    knots, values = [], []
    for a, b, v in plateaus:
        knots += [a * R, b * R]
        values += [v, v]
    if knots[-1] < R:
        knots.append(R)
        values.append(0.0)
    return RadialProfile.from_knots(tuple(knots), tuple(values), name=name)


def _random_turns(rng):
    return float(rng.choice([-2, -1, 1, 2, 3]))


def _slot_plateaus(rng, n):
    """``n`` plateaus with random non-zero turn counts filling [0, 0.9]."""
    w = 0.9 / n
    return [(0.0 if j == 0 else (j + 0.15) * w, (j + 0.85) * w, _random_turns(rng)) for j in range(n)]


def random_autonomous_case(seed: int, *, max_groups: int = 3, nest_prob: float = 0.4):
    """Seeded random sum of radial rotations with disjoint or nested supports.

    Returns ``(system, points)``: centers, points on integer plateaus (sometimes
    two on the same circle) and an equilibrium outside every support.
    Non-concentric nesting puts a child rotation inside a zero ring of its
    parent, where the parent's Hamiltonian is constant.
    """
    rng = np.random.default_rng(seed)
    n_groups = int(rng.integers(1, max_groups + 1))
    disks = []
    for _ in range(200):
        if len(disks) == n_groups:
            break
        R = float(rng.uniform(0.2, 0.5))
        rc = float(rng.uniform(0.0, 0.98 - R))
        th = float(rng.uniform(0, 2 * math.pi))
        c = (rc * math.cos(th), rc * math.sin(th))
        if all(math.dist(c, c2) > R + R2 + 0.03 for c2, R2 in disks):
            disks.append((c, R))
    terms, points = [], {}

    def add_points(tag, c, plateaus, allow_pair=True):
        points[f"{tag}c"] = c
        for j, (a, b, v) in enumerate(plateaus):
            if v == 0.0:
                continue
            r = float(rng.uniform(a + 0.25 * (b - a), b - 0.25 * (b - a)))
            if r < 0.01:
                continue
            th = float(rng.uniform(0, 2 * math.pi))
            points[f"{tag}{j}"] = (c[0] + r * math.cos(th), c[1] + r * math.sin(th))
            if allow_pair and rng.random() < 0.25:
                th2 = th + float(rng.uniform(0.5, 2 * math.pi - 0.5))
                points[f"{tag}{j}b"] = (c[0] + r * math.cos(th2), c[1] + r * math.sin(th2))

    for g, (c, R) in enumerate(disks):
        tag = "abcdefgh"[g]
        nested = R >= 0.35 and rng.random() < nest_prob
        if nested:
            plateaus = [(0.0, 0.3, _random_turns(rng)), (0.4, 0.8, 0.0), (0.85, 0.93, _random_turns(rng))]
        else:
            plateaus = _slot_plateaus(rng, int(rng.integers(1, 4)))
        terms.append(Radial(hamiltonian_from_profile(_plateau_profile(R, plateaus, tag), c)))
        add_points(tag, c, [(a * R, b * R, v) for a, b, v in plateaus])
        if nested:
            th = float(rng.uniform(0, 2 * math.pi))
            cc = (c[0] + 0.6 * R * math.cos(th), c[1] + 0.6 * R * math.sin(th))
            child = [(0.0, 0.6, _random_turns(rng))]
            terms.append(Radial(hamiltonian_from_profile(_plateau_profile(0.15 * R, child, tag + "n"), cc)))
            add_points(tag + "n", cc, [(0.0, 0.09 * R, child[0][2])], allow_pair=False)
    # an equilibrium outside every support
    for _ in range(200):
        q = rng.uniform(-0.95, 0.95, size=2)
        if np.hypot(*q) < 0.95 and all(math.dist(q, c) > R + 0.02 for c, R in disks):
            points["z"] = (float(q[0]), float(q[1]))
            break
    system = terms[0] if len(terms) == 1 else Sum(terms)
    return system, points


def run_autonomous_case(system, points: dict, *, steps: int = 4096, seed: int = -1) -> BaselineCase:
    labels = tuple(points)
    try:
        trajs = integrate_flow(system, list(points.values()), steps, list(labels))
        strands = StrandSet(tuple(trajs))
        W = winding_matrix(strands)
        order = nesting_order(strands)
        rep = autonomous_consistency(W, order)
        cert = find_obstruction(W)
    except BraidflowError as exc:
        return BaselineCase(seed, labels, None, None, (), None, f"{type(exc).__name__}: {exc}")
    return BaselineCase(seed, labels, W, order, rep.violations, cert)


def autonomous_baseline_suite(seed: int = 0, n: int = 50, *, steps: int = 4096) -> BaselineReport:
    if n < 1:
        raise ValidationError("n must be at least 1")
    cases = []
    for i in range(n):
        case_seed = seed * 100003 + i
        system, points = random_autonomous_case(case_seed)
        cases.append(run_autonomous_case(system, points, steps=steps, seed=case_seed))
    return BaselineReport(seed, tuple(cases))


def load_scenario(name_or_path) -> ScenarioConfig:
    from pathlib import Path

    from .config import load

    p = Path(str(name_or_path))
    if p.suffix == ".ini" or p.exists():
        return load(p)
    return load_builtin(str(name_or_path))
