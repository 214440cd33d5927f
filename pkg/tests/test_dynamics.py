import math

import numpy as np
import pytest

from braidflow.dynamics.fixed import circle_survivors, classify_fixed_sets, find_fixed_points, newton_fixed_points
from braidflow.dynamics.flow import flow_map, integrate_flow, time_one_map, vector_field
from braidflow.dynamics.systems import Bump, Concat, Radial, Reparametrized, Smoothstep, Sum, Zero
from braidflow.errors import DomainError, IntegrationError, UnsupportedStructureError, ValidationError
from braidflow.profiles import alpha_profile, beta_profile, hamiltonian_from_profile
from braidflow.scenarios import DELTA_CENTER, beta_level_radius, build_system
from braidflow.spectrum import hofer_length
from oracles import profile_fn, rotation_angle

ALPHA = alpha_profile(slope_at_01=-15.0)
BETA = beta_profile(slope_at_01=-15.0)
H_ALPHA = Radial(hamiltonian_from_profile(ALPHA))
H_BETA = Radial(hamiltonian_from_profile(BETA, DELTA_CENTER))


class _Nan(Radial):
    def field(self, t, x):
        out = super().field(t, x)
        if t > 0.5:
            out[1] = np.nan
        return out


def test_field_at_center_vanishes_and_plateau_speed():
    assert np.all(vector_field(H_ALPHA, 0.0, [0.0, 0.0]) == 0.0)
    v = vector_field(H_ALPHA, 0.3, [0.5, 0.0])
    assert v == pytest.approx([0.0, 2 * math.pi * 0.5], abs=1e-12)


def test_sum_field_is_sum_of_fields():
    x = np.random.default_rng(0).uniform(-0.6, 0.6, (30, 2))
    s = Sum([H_ALPHA, H_BETA])
    assert np.array_equal(s.field(0.2, x), H_ALPHA.field(0.2, x) + H_BETA.field(0.2, x))
    assert np.allclose(s.value(0.2, x), H_ALPHA.value(0.2, x) + H_BETA.value(0.2, x), atol=0)


def test_domain_checks():
    with pytest.raises(DomainError):
        vector_field(H_ALPHA, 1.5, [0.0, 0.0])
    with pytest.raises(DomainError):
        vector_field(H_ALPHA, 0.5, [1.2, 0.0])
    with pytest.raises(DomainError):
        integrate_flow(H_ALPHA, [[0.9, 0.9]])
    with pytest.raises(ValidationError):
        integrate_flow(H_ALPHA, [[0.1, 0.0]], steps=50)


def test_nonfinite_state_names_point():
    with pytest.raises(IntegrationError) as err:
        integrate_flow(_Nan(hamiltonian_from_profile(ALPHA)), [[0.1, 0.0], [0.5, 0.0]], steps=200)
    assert err.value.point_index == 1


def test_zero_system_is_identity():
    x = np.random.default_rng(3).uniform(-0.6, 0.6, (20, 2))
    assert np.array_equal(time_one_map(Zero(), x, 256), x)
    for tr in integrate_flow(Zero(), x, 256):
        assert np.all(tr.positions == tr.positions[0])


def test_alpha_trajectory_from_plateau_closes():
    (tr,) = integrate_flow(H_ALPHA, [[0.5, 0.0]])
    assert tr.closure_defect < 1e-6
    assert len(tr.times) == 4097 and tr.times[0] == 0.0 and tr.times[-1] == 1.0


@pytest.mark.parametrize("prof, center", [(ALPHA, (0.0, 0.0)), (BETA, DELTA_CENTER)])
def test_rotation_angle_matches_profile(prof, center):
    sys = Radial(hamiltonian_from_profile(prof, center))
    rs = np.linspace(0.01, prof.r_max * 0.99, 100)
    x0 = np.stack([center[0] + rs, np.full_like(rs, center[1])], axis=1)
    x1 = time_one_map(sys, x0, 1000)
    f = profile_fn(prof)
    for r, a, b in zip(rs, x0, x1):
        want = (2 * math.pi * float(f(r)) + math.pi) % (2 * math.pi) - math.pi
        assert abs(rotation_angle(a, b, center) - want) < 1e-6
        assert math.dist(b, center) == pytest.approx(r, abs=1e-9)


def test_rk4_is_fourth_order():
    x0 = np.array([[0.15, 0.0]])
    exact = np.array([0.15 * math.cos(2 * math.pi * float(ALPHA(0.15))),
                      0.15 * math.sin(2 * math.pi * float(ALPHA(0.15)))])
    e1 = np.hypot(*(time_one_map(H_ALPHA, x0, 200)[0] - exact))
    e2 = np.hypot(*(time_one_map(H_ALPHA, x0, 400)[0] - exact))
    assert 12 < e1 / e2 < 20


def test_concat_is_composition_first_leg_first():
    g = Concat.equal([H_ALPHA, H_BETA])
    x = np.random.default_rng(4).uniform(-0.6, 0.6, (25, 2))
    direct = time_one_map(g, x, 4096)
    composed = time_one_map(H_BETA, time_one_map(H_ALPHA, x, 2048), 2048)
    assert np.allclose(direct, composed, atol=1e-12)
    assert g.breakpoints == (0.5,)


def test_energy_conserved_along_autonomous_leg():
    x = np.random.default_rng(5).uniform(-0.65, 0.65, (100, 2))
    trajs = integrate_flow(H_ALPHA, x)
    drift = max(float(np.ptp(H_ALPHA.value(0, tr.positions))) for tr in trajs)
    assert drift < 1e-8


def test_time_one_map_preserves_area():
    g = Concat.equal([H_ALPHA, H_BETA])
    x = np.random.default_rng(6).uniform(-0.6, 0.6, (100, 2))
    h = 1e-6
    cols = [(time_one_map(g, x + e, 4096) - time_one_map(g, x - e, 4096)) / (2 * h)
            for e in (np.array([h, 0]), np.array([0, h]))]
    det = cols[0][:, 0] * cols[1][:, 1] - cols[0][:, 1] * cols[1][:, 0]
    assert np.max(np.abs(det - 1)) < 1e-5


def test_flow_map_partial_interval():
    x = np.array([[0.5, 0.0]])
    y = flow_map(H_ALPHA, x, 0.0, 0.25, 4096)
    assert y[0] == pytest.approx([0.0, 0.5], abs=1e-9)


def test_bump_oscillation_equals_amplitude():
    b = Bump((0.55, 0.05), 0.2, 1e-3)
    assert not b.autonomous
    assert hofer_length(b) == pytest.approx(1e-3, rel=1e-6)
    with pytest.raises(ValidationError):
        Bump((0, 0), 0.0, 1.0)


def test_bump_field_is_symplectic_gradient():
    b = Bump((0.1, -0.2), 0.3, 0.7)
    x = np.random.default_rng(7).uniform(-0.4, 0.3, (40, 2))
    h = 1e-6
    dx = (b.value(0.3, x + [h, 0]) - b.value(0.3, x - [h, 0])) / (2 * h)
    dy = (b.value(0.3, x + [0, h]) - b.value(0.3, x - [0, h])) / (2 * h)
    assert np.allclose(b.field(0.3, x), np.stack([dy, -dx], axis=1), atol=1e-6)


def test_reparametrization_keeps_map_and_length():
    g = Concat.equal([H_ALPHA, H_BETA])
    tau = Smoothstep(0.5)
    rg = Reparametrized(g, tau, tau.derivative)
    x = np.array([[0.3, 0.1], [0.55, 0.02], [0.12, -0.05]])
    assert np.allclose(time_one_map(rg, x, 8192), time_one_map(g, x, 8192), atol=1e-8)
    assert hofer_length(rg, time_nodes=16) == pytest.approx(hofer_length(g), rel=1e-6)


def test_hofer_autonomous_is_oscillation():
    osc = float(hamiltonian_from_profile(ALPHA).value_at_radius(0.0))
    assert hofer_length(H_ALPHA) == pytest.approx(osc, rel=1e-9)
    assert hofer_length(Zero()) == 0.0


# --------------------------------------------------------------------------
# fixed points


def test_newton_recovers_p2_and_s(paper_cfg):
    g = build_system(paper_cfg)
    pts, ok, _ = newton_fixed_points(g, [[0.51, 0.005], [0.004, -0.003]], steps=2048)
    assert ok.all()
    assert pts[0] == pytest.approx(DELTA_CENTER, abs=1e-8)
    assert pts[1] == pytest.approx((0.0, 0.0), abs=1e-8)
    assert np.allclose(time_one_map(g, np.array([[0.0, 0.0], [0.5, 0.0]]), 4096), [[0, 0], [0.5, 0]], atol=1e-8)


def test_newton_lands_on_alpha_level_two_circle(paper_cfg):
    g = build_system(paper_cfg)
    th = np.linspace(0.3, 2.8, 5)
    seeds = np.stack([0.105 * np.cos(th), 0.105 * np.sin(th)], axis=1)
    pts, ok, _ = newton_fixed_points(g, seeds, steps=2048)
    assert ok.all()
    assert np.allclose(np.hypot(pts[:, 0], pts[:, 1]), 0.1, atol=1e-7)


def test_grid_search_on_beta_rotation():
    fp = find_fixed_points(H_BETA, region=(0.2, 0.8, -0.3, 0.3), resolution=(32, 32), steps=512)
    rho = np.hypot(fp.points[:, 0] - 0.5, fp.points[:, 1])
    assert fp.planar_region
    assert np.any(rho < 1e-7)
    for k in (3, 2, 1):
        r = 0.1 if k == 3 else beta_level_radius(BETA, k)
        assert np.any(np.abs(rho - r) < 1e-6)


def test_grid_search_identity_flags_region():
    fp = find_fixed_points(Zero(), resolution=(32, 32), steps=128)
    assert fp.planar_region and fp.converged == fp.seeds


def test_grid_search_resolution_floor():
    with pytest.raises(ValidationError):
        find_fixed_points(Zero(), resolution=(16, 16))


def test_classification_of_paper_map(paper_result):
    comps = {c.id: c for c in paper_result.components}
    kinds = sorted((c.kind, c.center, None if c.radius is None else round(c.radius, 12), c.turns)
                   for c in comps.values() if c.kind != "planar-region")
    r2, r1 = beta_level_radius(BETA, 2), beta_level_radius(BETA, 1)
    want = sorted([
        ("nondegenerate-point", (0.0, 0.0), None, 2.5),
        ("nondegenerate-point", DELTA_CENTER, None, 3.5),
        ("circle", (0.0, 0.0), 0.1, 2.0),
        ("circle", DELTA_CENTER, 0.1, 3.0),
        ("circle", DELTA_CENTER, round(r2, 12), 2.0),
        ("circle", DELTA_CENTER, round(r1, 12), 1.0),
    ])
    assert kinds == want
    regions = [c for c in comps.values() if c.kind == "planar-region"]
    assert len(regions) == 2
    outer = next(c for c in regions if c.near_boundary)
    inner = next(c for c in regions if not c.near_boundary)
    assert np.all(np.hypot(*outer.cells.T) >= 0.9 - 1e-12)
    rin = np.hypot(*inner.cells.T)
    assert np.all((rin >= 0.2 - 1e-12) & (rin <= 0.8 + 1e-12))
    assert np.all(np.hypot(inner.cells[:, 0] - 0.5, inner.cells[:, 1]) >= 0.2 - 1e-12)
    assert all(c.residual < 1e-8 for c in comps.values())


def test_level_radii_match_profile_roots():
    f = profile_fn(BETA)
    for k in (2, 1):
        r = beta_level_radius(BETA, k)
        assert float(f(r)) == pytest.approx(k, abs=1e-12)
    # closed form for slope -15 at r = 0.1: beta(0.1 + u) = 3 - 15u ... solved numerically, frozen
    assert beta_level_radius(BETA, 2) == pytest.approx(0.13333333333333333, abs=1e-12)
    assert beta_level_radius(BETA, 1) == pytest.approx(0.15773502691896257, abs=1e-12)


def test_classification_single_rotation_without_interior_integer_plateau():
    prof = beta_profile()
    comps = classify_fixed_sets(Radial(hamiltonian_from_profile(prof)), grid=101, steps=1024)
    kinds = sorted(c.kind for c in comps)
    assert kinds == ["circle", "circle", "circle", "nondegenerate-point", "planar-region"]
    region = next(c for c in comps if c.kind == "planar-region")
    assert region.near_boundary


def test_classification_zero_system():
    comps = classify_fixed_sets(Zero(), grid=51, steps=128)
    assert [c.kind for c in comps] == ["planar-region"]


def test_classification_rejects_overlapping_rotations_in_one_leg():
    with pytest.raises(UnsupportedStructureError):
        classify_fixed_sets(Sum([H_ALPHA, H_BETA]), grid=51, steps=256)


def test_circle_survivors_of_perturbed_circle():
    sys = Sum([H_BETA, Bump((0.55, 0.05), 0.2, 1e-3)])
    pts = circle_survivors(sys, DELTA_CENTER, 0.1, steps=1024)
    assert 2 <= len(pts) <= 8
    moved = np.hypot(*(time_one_map(sys, pts, 1024) - pts).T)
    assert np.all(moved < 1e-8)
    assert np.all(np.abs(np.hypot(pts[:, 0] - 0.5, pts[:, 1]) - 0.1) < 0.02)
