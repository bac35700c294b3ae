import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from capillary_media.constants import load_constants
from capillary_media.errors import DegenerateInputError, DomainError
from capillary_media.grain_field import (
    RegimeParams, VolumeState, field_from_centers, sample_configuration, trial_seed,
)
from capillary_media.interface_builder import (
    ContactPoint, ElementalComponent, Interface, Obstacle, area_below, build_interface,
    chain_interface, chain_length, class_rejects, classify_component, component_crossings,
    connect_pair, connection_candidates, count_below, decompose_levels, distance_bracket,
    length_bound, max_deviation, reflect_interface, straddling_grains, verify_interface,
    vertical_allowance, young_residual, young_residual_on_grains,
)

K1 = math.sqrt(2 * (math.pi ** 2 + 4))


# --- synthetic components ---

def straight(P, Q, lam, gi=None, gj=None, walls=(None, None), C=0.5, B=1.0, n=50):
    """Straight sampled segment from P to Q; geometry only, for the structural checks."""
    P, Q = np.asarray(P, float), np.asarray(Q, float)
    t = np.linspace(0.0, 1.0, n)
    x = P[0] + t * (Q[0] - P[0])
    y = P[1] + t * (Q[1] - P[1])
    b = math.atan2(Q[1] - P[1], Q[0] - P[0])
    s = t * float(np.hypot(*(Q - P)))
    p = ContactPoint.make(P, b, 0.0, gi, walls[0])
    q = ContactPoint.make(Q, b + math.pi, 0.0, gj, walls[1])
    return ElementalComponent(x, y, np.full(n, b), s, C, B, lam, (p, q), "synthetic")


def synthetic_interface(centers, lam, L, R=0.05, B=1.0):
    """Wall, straight runs between consecutive centers, wall."""
    centers = np.asarray(centers, float)
    p = RegimeParams(B=B, L=L, R=R, nu=0.0)
    pts = [(0.0, centers[0, 1])] + [tuple(c) for c in centers] + [(L, centers[-1, 1])]
    idx = [None] + list(range(len(centers))) + [None]
    comps = []
    for k in range(len(pts) - 1):
        walls = ("left" if k == 0 else None, "right" if k == len(pts) - 2 else None)
        comps.append(straight(pts[k], pts[k + 1], lam, idx[k], idx[k + 1], walls, B=B))
    return Interface(comps, list(range(len(centers))), 0.5, VolumeState(lam / L, lam, 0), p, centers)


def type_one_zigzag():
    """Serpentine of nine two-grain levels, alternating lr / rl, crossing lam in the middle
    level from above (type I)."""
    L, lam = 60.0, 30.0
    heights = [25, 15, 8, 5, 0.5, -5, -8, -15, -25]
    centers = []
    for k, h in enumerate(heights):
        if k == 4:
            row = [(10.0, lam + 0.5), (50.0, lam - 0.5)]
        else:
            row = [(10.0, lam + h), (50.0, lam + h)]
        centers += row if k % 2 == 0 else row[::-1]
    return synthetic_interface(centers, lam, L)


# --- connect_pair ---

def test_symmetric_pair_mirror_azimuths():
    p = RegimeParams(B=0.01, L=10.0, R=0.1, nu=0.0)
    c = connect_pair(np.array([4.5, 5.0]), np.array([5.5, 5.0]), p, 5.0)
    assert c is not None
    rp, rq = c.contacts[0].rho_c, c.contacts[1].rho_c
    assert math.remainder(rp - (math.pi - rq), 2 * math.pi) == pytest.approx(0.0, abs=1e-6)
    assert young_residual_on_grains(c, p, np.array([[4.5, 5.0], [5.5, 5.0]])) < 1e-6
    assert c.curvature_residual() < 1e-3


def test_pair_errors():
    p = RegimeParams(B=1.0, L=10.0, R=0.1, nu=0.0)
    with pytest.raises(DegenerateInputError):
        connect_pair(np.array([5.0, 5.0]), np.array([5.0, 5.0]), p, 5.0)
    with pytest.raises(DegenerateInputError):
        connect_pair(np.array([5.0, 5.0]), np.array([5.1, 5.0]), p, 5.0)
    with pytest.raises(DomainError):
        connect_pair(np.array([5.0, 5.0]), np.array([11.0, 5.0]), p, 5.0)


def test_class_prefilter_rejects_far_pairs():
    p = RegimeParams(B=1.0, L=10.0, R=0.1, nu=0.0)
    C = 2.0
    cap = 2 * p.R + 2 * math.sqrt(5 / (p.B * (C - 1)))
    assert class_rejects(cap + 1e-6, C, "lr", p)
    assert not class_rejects(cap - 1e-6, C, "lr", p)


def _random_pair(rng):
    while True:
        B = 10 ** rng.uniform(-1, 2)
        R = rng.uniform(0.01, 0.2)
        alpha = rng.uniform(-1, 1) * rng.integers(0, 2)
        d = 2 * R + rng.uniform(0.05, 3) / math.sqrt(B)
        th = rng.uniform(-math.pi, math.pi)
        c0 = np.array([5.0, 5.0 + rng.uniform(-2, 2) / math.sqrt(B)])
        c1 = c0 + d * np.array([math.cos(th), math.sin(th)])
        if 0 <= c1[0] <= 10 and 0 <= c1[1] <= 10 and 0 <= c0[1] <= 10:
            return RegimeParams(B=B, L=10.0, R=R, nu=0.0, alpha=alpha), c0, c1, d


def test_random_pairs_contract():
    # contact angles, curvature, upper brackets and the triangle-inequality lower bound
    rng = np.random.default_rng(2024)
    found = 0
    for _ in range(120):
        p, c0, c1, d = _random_pair(rng)
        c = connect_pair(c0, c1, p, 5.0)
        if c is None:
            continue
        found += 1
        lo, hi, _ = distance_bracket(c, p)
        assert d < hi
        assert d > lo - 4 * p.R
        assert young_residual_on_grains(c, p, np.array([c0, c1])) < 1e-6
        assert c.curvature_residual() < 1e-3
        # every sample stays under the height confinement of its first integral
        assert np.max(np.abs(c.x2bar)) <= math.sqrt(2 * (max(c.C, -1) + 1) / p.B) + 1e-6
    assert found > 40


def test_wall_connection_young():
    p = RegimeParams(B=1.0, L=10.0, R=0.1, nu=0.0, alpha=0.3)
    g = Obstacle.grain((2.0, 5.2), p.R, 0)
    cands = connection_candidates(Obstacle.wall("left", p.L), g, p, 5.0)
    assert cands
    c = cands[0]
    assert c.contacts[0].wall == "left" and abs(c.contacts[0].point[0]) < 1e-9
    assert young_residual(c, p) < 1e-6


# --- classification ---

def test_classify_examples():
    lam = 5.0
    c = straight((1, 6), (2, 6.5), lam)
    assert classify_component(c, lam) == ("lr", "plus")
    c = straight((2, 4), (1, 3), lam)
    assert classify_component(c, lam) == ("rl", "minus")
    c = straight((1, 4), (1, 6), lam)
    assert classify_component(c, lam) == ("lr", "crossing")


# --- build_interface ---

def test_empty_field_is_horizontal():
    p = RegimeParams(B=1.0, L=10.0, R=0.1, nu=0.0, v0=0.4)
    g = build_interface(sample_configuration(p, 0))
    assert g.is_horizontal() and len(g.components) == 1
    assert g.lam == pytest.approx(0.4 * p.L)
    assert max_deviation(g) == pytest.approx(0.0, abs=1e-9)
    assert verify_interface(g).passed
    lv = decompose_levels(g)
    assert len(lv.levels) == 1 and lv.zigzag_type is None


def test_empty_strip_gives_horizontal():
    B, R = 4.0, 0.05
    half = max(2 / math.sqrt(B) + R, 2 * R)
    p = RegimeParams(B=B, L=10.0, R=R, nu=0.0)
    rng = np.random.default_rng(1)
    c = rng.random((60, 2)) * 10
    c = c[np.abs(c[:, 1] - 5.0) > half + 0.2]
    g = build_interface(field_from_centers(p, c))
    assert g is not None and g.m == 0
    assert verify_interface(g).passed


def test_single_grain_two_components():
    p = RegimeParams(B=1.0, L=4.0, R=0.1, nu=0.0)
    f = field_from_centers(p, [[2.0, 2.0]])
    g = build_interface(f)
    assert g.m == 1 and len(g.components) == 2
    rep = verify_interface(g)
    assert rep.passed, rep.failures()


def test_offset_grain_deviation():
    p = RegimeParams(B=1.0, L=4.0, R=0.1, nu=0.0)
    h = 0.3
    f = field_from_centers(p, [[2.0, 2.0 + h]])
    g = chain_interface(f, [0], 2.0)
    assert max_deviation(g) >= h - p.R
    assert verify_interface(g).passed


@pytest.mark.parametrize("B,nu,R", [(1.0, 0.3, 0.05), (4.0, 0.5, 0.05)])
def test_random_fields_verify(B, nu, R):
    built = 0
    for i in range(8):
        p = RegimeParams(B=B, L=10.0, R=R, nu=nu)
        f = sample_configuration(p, trial_seed(7, i))
        g = build_interface(f)
        if g is None:
            continue
        built += 1
        rep = verify_interface(g)
        assert rep.passed, rep.failures()
        assert len(g.components) == g.m + 1
        assert max_deviation(g) <= math.sqrt(2 * (g.C_max + 1) / B) + 1e-6
    assert built >= 6


def test_regime1_fields_verify():
    for i in range(30):
        p = RegimeParams(B=1e8, L=5.0, R=1e-3, nu=1.0)
        g = build_interface(sample_configuration(p, trial_seed(5, i)))
        assert g is not None
        assert verify_interface(g).passed


def test_overlapping_grains_form_one_obstacle():
    p = RegimeParams(B=1.0, L=6.0, R=0.2, nu=0.0)
    f = field_from_centers(p, [[2.8, 3.0], [3.1, 3.05]])
    g = build_interface(f)
    assert g is not None
    assert len(g.clusters) == 1 and sorted(g.clusters[0]) == [0, 1]
    rep = verify_interface(g)
    assert rep.passed, rep.failures()


def test_straddling_grains_order():
    p = RegimeParams(B=1.0, L=10.0, R=0.1, nu=0.0)
    f = field_from_centers(p, [[7.0, 5.05], [2.0, 4.95], [4.0, 6.0]])
    assert straddling_grains(f, 5.0) == [1, 0]


# --- reversal symmetry ---

def test_reflection_gives_valid_interface():
    p = RegimeParams(B=4.0, L=10.0, R=0.05, nu=0.5)
    f = sample_configuration(p, trial_seed(7, 15))
    g = build_interface(f)
    assert g is not None and g.m >= 2 and verify_interface(g).passed
    r = reflect_interface(g, f)
    rep = verify_interface(r)
    assert rep.passed, rep.failures()
    for c in g.components:
        m = c.mirrored(p.L)
        if c.contacts[0].point[0] != c.contacts[1].point[0]:
            assert m.direction != c.direction
    assert np.allclose(np.sort(p.L - r.polyline()[:, 0]), np.sort(g.polyline()[:, 0]))


# --- verification ---

def test_crossing_counterexample_fails():
    lam = 5.0
    centers = np.array([[6.0, 5.5], [3.0, 6.0]])
    g = synthetic_interface(centers, lam, 10.0)
    g.components[-1] = straight((3.0, 6.0), (10.0, 4.0), lam, 1, None, (None, "right"))
    assert component_crossings(g.components) > 0
    assert not verify_interface(g).checks["non_intersection"]


def test_non_crossing_synthetic_passes_structure():
    g = synthetic_interface([[3.0, 5.0], [7.0, 5.0]], 5.0, 10.0)
    rep = verify_interface(g)
    assert rep.checks["non_intersection"] and rep.checks["walls"] and rep.checks["component_count"]


def test_count_and_area_below():
    P = np.array([[0.0, 2.0], [4.0, 2.0]])
    c = np.array([[1.0, 1.0], [2.0, 3.0], [3.0, 1.9]])
    assert count_below(P, c) == 2
    g = synthetic_interface([[2.0, 2.0]], 2.0, 4.0)
    assert area_below(g) == pytest.approx(8.0)


# --- levels ---

def test_type_one_zigzag():
    g = type_one_zigzag()
    lv = decompose_levels(g)
    p = g.params
    assert len(lv.levels) == 9
    for lev in lv.levels:
        assert lev.d_max - lev.d_min <= vertical_allowance(lev.d_min, p.B, p.R)
    assert lv.zigzag_type == "I"
    assert len(lv.gamma0) == 3
    assert lv.N_plus % 2 == 1 and lv.N_minus % 2 == 1
    assert lv.alternates()
    m = len(g.components)
    assert chain_length(g) < 4 * m * (2 * p.R + K1 / math.sqrt(p.B)) + 5 * p.L
    assert chain_length(g) < length_bound(m, p, load_constants().K1, load_constants().K2)


def test_length_bound_holds_on_built_interfaces():
    cf = load_constants()
    for i in range(6):
        p = RegimeParams(B=1.0, L=10.0, R=0.05, nu=0.5)
        g = build_interface(sample_configuration(p, trial_seed(9, i)))
        if g is None:
            continue
        assert chain_length(g) < length_bound(len(g.components), p, cf.K1, cf.K2)
        for lev in decompose_levels(g).levels:
            assert lev.d_max - lev.d_min <= vertical_allowance(lev.d_min, p.B, p.R)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-4.0, 4.0), min_size=1, max_size=12))
def test_levels_partition_and_restriction(offsets):
    L, lam = 20.0, 10.0
    xs = np.linspace(1.5, 18.5, len(offsets))
    g = synthetic_interface(np.column_stack([xs, lam + np.array(offsets)]), lam, L)
    lv = decompose_levels(g)
    grains = [k for lev in lv.levels for k in lev.grains]
    assert grains == list(range(len(offsets)))
    comps = sorted(k for lev in lv.levels for k in lev.components)
    assert comps == list(range(len(g.components)))
    for lev in lv.levels:
        assert lev.d_max - lev.d_min <= vertical_allowance(lev.d_min, 1.0, g.params.R) + 1e-12
