import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from capillary_media.curve_core import (
    FirstIntegral, beta_range, branch_slope, characteristic_heights, closed_form_F,
    closed_form_F_prime, closed_form_x1, closure_residual, complete_curve, curvature_residual,
    eta, find_C0, in_beta_range, integrate_piece, measured_spans, piece_arc_integrals,
    piece_curvature_residual, span_bound_functions, tangent_mismatch_at_glue,
    _span_quadrature_C0,
)
from capillary_media.errors import DomainError, SingularPointError

# frozen oracle values (hand evaluation)
F_SQRT2 = 0.532839
SLOPE_HALF = -0.5 / math.sqrt(0.75)
NEG_LOWER = 0.2228946
NEG_UPPER = 2.22144


# --- heights and slopes ---

def test_heights_examples():
    h = characteristic_heights(FirstIntegral(0.0, 2.0))
    assert (h.x2_min, h.x2_med, h.x2_max) == (0.0, 0.0, 1.0)
    h = characteristic_heights(FirstIntegral(1.0, 2.0))
    assert h.x2_min == 0.0 and h.x2_med == pytest.approx(1.0) and h.x2_max == pytest.approx(math.sqrt(2))
    h = characteristic_heights(FirstIntegral(3.0, 2.0))
    assert h.x2_min == pytest.approx(math.sqrt(2)) and h.x2_med == pytest.approx(math.sqrt(3))
    assert h.x2_max == pytest.approx(2.0)
    assert characteristic_heights(FirstIntegral(-0.5, 1.0)).x2_med is None


def test_domain_errors():
    with pytest.raises(DomainError):
        FirstIntegral(-1.5, 1.0)
    with pytest.raises(DomainError):
        FirstIntegral(0.0, 0.0)
    with pytest.raises(DomainError):
        integrate_piece(FirstIntegral(-1.0, 1.0))
    with pytest.raises(DomainError):
        complete_curve(FirstIntegral(1.0, 1.0))


@given(st.floats(-0.99, 20.0), st.floats(0.01, 100.0))
def test_heights_ordered(C, B):
    h = characteristic_heights(FirstIntegral(C, B))
    if h.x2_med is not None:
        assert h.x2_min <= h.x2_med <= h.x2_max


def test_branch_slope():
    c = FirstIntegral(0.5, 1.0)
    assert branch_slope(0.0, c, "-") == pytest.approx(SLOPE_HALF, abs=1e-6)
    assert branch_slope(characteristic_heights(c).x2_med, c, "+") == pytest.approx(0.0, abs=1e-12)
    assert abs(branch_slope(c.x2max * (1 - 1e-9), c, "+")) > 1e3
    with pytest.raises(SingularPointError):
        branch_slope(c.x2max * (1 + 1e-12), c, "+")


# --- closed form ---

def test_closed_form_F_values():
    assert closed_form_F(2.0) == 0.0
    assert abs(closed_form_F(2.0 - 1e-14)) < 1e-6
    assert abs(closed_form_F_prime(math.sqrt(2))) < 1e-8
    assert closed_form_F(math.sqrt(2)) == pytest.approx(F_SQRT2, abs=1e-6)
    for bad in (0.0, 2.5, -3.0):
        with pytest.raises(DomainError):
            closed_form_F(bad)


@given(st.floats(0.05, 1.95))
def test_F_prime_matches_difference(Z):
    h = 1e-6
    fd = (closed_form_F(Z + h) - closed_form_F(Z - h)) / (2 * h)
    assert closed_form_F_prime(Z) == pytest.approx(fd, rel=1e-5, abs=1e-6)


@pytest.mark.parametrize("B", [0.1, 1.0, 37.0])
def test_C1_piece_matches_closed_form(B):
    p = integrate_piece(FirstIntegral(1.0, B))
    ref = closed_form_x1(p.x2bar, B, a=p.x1[0])
    assert np.max(np.abs(p.x1 - ref)) <= 1e-8
    assert p.x2bar[-1] == pytest.approx(1e-6 * p.constant.x2max, rel=1e-9)


# --- pieces ---

def test_piece_C3_endpoint():
    p = integrate_piece(FirstIntegral(3.0, 1.0))
    assert p.x2bar[-1] == pytest.approx(2.0, abs=1e-7)
    assert math.cos(p.beta[-1]) == pytest.approx(1.0, abs=1e-12)


def test_piece_C0_span_bracket():
    p = integrate_piece(FirstIntegral(0.0, 1.0))
    span = p.x1[0] - p.x1[-1]
    assert NEG_LOWER < span < NEG_UPPER


def test_piece_matches_independent_integral():
    # panel sampler vs direct integration over the same angle range
    for C in (-0.4, 0.3, 2.5):
        c = FirstIntegral(C, 3.0)
        p = integrate_piece(c)
        S, dx = piece_arc_integrals(c, -math.pi, 0.0)
        assert p.length == pytest.approx(S, rel=1e-10)
        assert p.x1[-1] - p.x1[0] == pytest.approx(dx, abs=1e-10)


piece_params = st.tuples(
    st.one_of(st.floats(-0.999, 0.999), st.floats(1.0001, 50.0), st.just(1.0)),
    st.floats(0.01, 1e3),
)


@given(piece_params)
def test_piece_invariants(cb):
    C, B = cb
    c = FirstIntegral(C, B)
    p = integrate_piece(c)
    assert p.first_integral_error() < 1e-6
    assert piece_curvature_residual(p) < 1e-3
    assert np.all(np.abs(p.x2bar) <= c.x2max + 1e-9)
    h = characteristic_heights(c)
    assert p.x2bar[-1] == pytest.approx(h.x2_min if C != 1 else 1e-6 * c.x2max, abs=1e-7)
    # graph over x2bar: x2bar monotone along the piece
    assert np.all(np.diff(p.x2bar) <= 1e-15)
    # convexity: dx1/dx2bar = cot(beta) is monotone, so d2x1/dx2bar2 has the sign of x2bar
    inner = slice(1, -1)
    cot = np.cos(p.beta[inner]) / np.sin(p.beta[inner])
    assert np.all(np.diff(cot) < 0)


@given(piece_params)
def test_residual_halves(cb):
    C, B = cb
    c = FirstIntegral(C, B)
    n = 2001
    r1 = piece_curvature_residual(integrate_piece(c, n_samples=n))
    r2 = piece_curvature_residual(integrate_piece(c, n_samples=2 * n - 1))
    assert 0.4 <= r2 / r1 <= 0.6


def test_eta_and_beta_range():
    assert eta(0.0) == pytest.approx(math.pi / 2)
    assert eta(-1.0) == pytest.approx(math.pi)
    r = beta_range(FirstIntegral(2.0, 1.0))
    assert (r[0].lo, r[0].hi) == (-math.pi, math.pi)
    r = beta_range(FirstIntegral(1.0, 1.0))
    assert not r[0].hi_closed and not r[1].lo_closed


@given(st.floats(-0.99, 0.99), st.floats(0.1, 10.0))
def test_eta_matches_piece_end(C, B):
    p = integrate_piece(FirstIntegral(C, B), n_samples=500)
    assert abs(p.beta[-1]) == pytest.approx(eta(C), abs=1e-12)
    assert all(in_beta_range(p.constant, b) for b in p.beta)


# --- C0 ---

def test_find_C0():
    c0 = find_C0()
    assert 0.6512 <= c0 <= 0.6532
    assert closure_residual(c0) < 1e-10
    assert _span_quadrature_C0(0.5) * _span_quadrature_C0(0.9) < 0


@pytest.mark.parametrize("B", [0.1, 10.0])
def test_C0_B_independent(B):
    p = integrate_piece(FirstIntegral(find_C0(), B))
    assert abs(p.x1[-1] - p.x1[0]) < 1e-10


# --- complete curves ---

def test_closed_curve_at_C0():
    cc = complete_curve(FirstIntegral(find_C0(), 1.0))
    a, b = np.array(cc.glue_points[0]), np.array(cc.glue_points[-1])
    assert np.linalg.norm(a - b) < 1e-8
    assert cc.orientation == "air_below"


def test_open_curve_increasing():
    cc = complete_curve(FirstIntegral(2.0, 1.0), n_glue=4)
    g = np.array(cc.glue_points)
    assert np.all(np.diff(g[:, 0]) > 0)
    assert cc.orientation == "air_above"


def _check_complete(cc, B):
    c = cc.constant
    assert tangent_mismatch_at_glue(cc) < 1e-9
    assert curvature_residual(cc.x1, cc.x2bar, cc.beta, cc.s, B) < 1e-3
    assert np.all(np.abs(cc.x2bar) <= c.x2max + 1e-9)
    assert np.max(np.abs(c.value(cc.x2bar, cc.beta) - c.C)) < 1e-6
    h = characteristic_heights(c)
    allowed = [c.x2max, h.x2_min, 0.0]
    for _, y in cc.glue_points:
        assert min(abs(abs(y) - v) for v in allowed) < 1e-7
    # curvature dbeta/ds has the sign of x2bar
    k = np.diff(np.unwrap(cc.beta)) / np.maximum(np.diff(cc.s), 1e-300)
    y = cc.x2bar[:-1]
    big = np.abs(y) > 1e-3 * c.x2max
    assert np.all(np.sign(k[big]) == np.sign(y[big]))


@given(st.one_of(st.floats(-0.95, 0.95), st.floats(1.05, 20.0)), st.floats(0.1, 50.0),
       st.integers(0, 5))
def test_complete_curve_checks_and_symmetry(C, B, n_glue):
    cc = complete_curve(FirstIntegral(C, B), n_glue=n_glue)
    _check_complete(cc, B)
    _check_complete(cc.flipped(), B)


# --- span bounds ---

def test_span_bound_constants():
    c = FirstIntegral(-0.5, 1.0)
    c0 = FirstIntegral(0.0, 1.0)
    assert span_bound_functions(c0, "neg_lower") == pytest.approx(NEG_LOWER, abs=1e-5)
    assert span_bound_functions(c0, "neg_upper") == pytest.approx(NEG_UPPER, abs=1e-5)
    with pytest.raises(DomainError):
        span_bound_functions(c, "h1")
    with pytest.raises(DomainError):
        span_bound_functions(c0, "zz")


def test_h5_h6_decreasing():
    Cs = np.linspace(1.0, 100.0, 400)
    for which in ("h5", "h6"):
        v = [span_bound_functions(FirstIntegral(C, 1.0), which) for C in Cs]
        assert np.all(np.diff(v) < 0)


@pytest.mark.parametrize("cls", ["neg", "h12", "h34", "h56"])
def test_span_brackets_random(cls):
    rng = np.random.default_rng(17)
    for _ in range(200):
        B = float(np.exp(rng.uniform(-2, 4)))
        if cls == "neg":
            C = rng.uniform(-0.999, 0.0)
            lo, hi = "neg_lower", "neg_upper"
        elif cls == "h12":
            C = rng.uniform(1e-3, 0.999)
            lo, hi = "h1", "h2"
        elif cls == "h34":
            C = 1.0 + rng.exponential(3.0) + 1e-4
            lo, hi = "h3", "h4"
        else:
            C = rng.uniform(1e-3, 30.0)
            lo, hi = "h5", "h6"
        c = FirstIntegral(float(C), B)
        m = measured_spans(integrate_piece(c, n_samples=3000))[cls]
        assert span_bound_functions(c, lo) < m < span_bound_functions(c, hi)
