"""Planar curves with curvature proportional to height: H = B * x2bar.

Along arc length s the tangent angle beta satisfies

    x1' = cos(beta),  x2bar' = sin(beta),  beta' = B * x2bar,

which has the first integral B * x2bar**2 / 2 + cos(beta) = C.  Every solution
is glued from one elemental piece that starts at the top height x2max moving
left, tangent (-1, 0), and descends until x2bar reaches x2min (C > 1), the
asymptote x2bar -> 0 (C = 1) or the axis x2bar = 0 (-1 < C < 1).

Pieces are sampled by quadrature rather than by time stepping.  Heights and
angles come from the first integral with C held exact, and x1 and s are
accumulated with Gauss-Legendre panels on parameterizations that are smooth
over each region of the piece.  Stepping the ODE would drift C by round-off,
and near the C = 1 asymptote that drift is amplified into O(1e-3) errors in
x1.
"""

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import List, Optional, Tuple

import numpy as np
from numba import njit
from scipy import optimize

from .errors import DomainError, NumericalError, SingularPointError
from .tolerances import DEFAULT, Tolerances

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(8)


# --- basic types ---

@dataclass(frozen=True)
class FirstIntegral:
    C: float
    B: float

    def __post_init__(self):
        if not (math.isfinite(self.B) and self.B > 0):
            raise DomainError(f"Bond number must be positive, got B={self.B}")
        if not (math.isfinite(self.C) and self.C >= -1):
            raise DomainError(f"first-integral constant needs C >= -1, got C={self.C}")

    @property
    def x2max(self) -> float:
        return math.sqrt(2.0 * (self.C + 1.0) / self.B)

    def value(self, x2bar, beta):
        """B x2bar^2/2 + cos(beta); equals C on the curve."""
        return 0.5 * self.B * np.asarray(x2bar) ** 2 + np.cos(beta)


@dataclass(frozen=True)
class CharacteristicHeights:
    x2_min: float
    x2_med: Optional[float]
    x2_max: float


def characteristic_heights(c: FirstIntegral) -> CharacteristicHeights:
    """Heights where the tangent is horizontal (min, max) or vertical (med)."""
    C, B = c.C, c.B
    x2_max = math.sqrt(2.0 * (C + 1.0) / B)
    x2_min = math.sqrt(2.0 * (C - 1.0) / B) if C > 1 else 0.0
    x2_med = math.sqrt(2.0 * C / B) if C >= 0 else None
    return CharacteristicHeights(x2_min, x2_med, x2_max)


def _sign_value(sign) -> int:
    if sign in (1, "+", "plus"):
        return 1
    if sign in (-1, "-", "minus"):
        return -1
    raise DomainError(f"branch sign must be + or -, got {sign!r}")


def branch_slope(x2bar: float, c: FirstIntegral, sign) -> float:
    """dx1/dx2bar on the selected branch of the first integral."""
    sgn = _sign_value(sign)
    p = c.C - 0.5 * c.B * x2bar * x2bar
    den = (1.0 - p) * (1.0 + p)
    if not den > 0:
        raise SingularPointError(
            f"branch equation singular at x2bar={x2bar} (C={c.C}, B={c.B}); "
            "continue in arc length"
        )
    return sgn * p / math.sqrt(den)


# --- closed form at C = 1 ---

def closed_form_F(Z: float) -> float:
    """F(Z) = 1/2 log((2 - r)/(2 + r)) + r with r = sqrt(4 - Z^2).

    Written as log(|Z|/(2 + r)) + r, which avoids the cancellation in 2 - r.
    """
    Z = float(Z)
    a = abs(Z)
    if a == 2.0:
        return 0.0
    if Z == 0.0 or a > 2.0 or not math.isfinite(Z):
        raise DomainError(f"F is defined on (-2, 0) U (0, 2), got Z={Z}")
    r = math.sqrt((2.0 - a) * (2.0 + a))
    return math.log(a / (2.0 + r)) + r


def closed_form_F_prime(Z: float) -> float:
    Z = float(Z)
    a = abs(Z)
    if Z == 0.0 or a >= 2.0:
        raise DomainError(f"F' is defined on (-2, 0) U (0, 2), got Z={Z}")
    r = math.sqrt((2.0 - a) * (2.0 + a))
    return 1.0 / Z - Z * (1.0 + r) / (r * (2.0 + r))


def closed_form_x1(x2bar, B: float, a: float = 0.0, sign: int = 1):
    """x1 on the C = 1 branches: x1 = a - sign * F(sqrt(B) x2bar) / sqrt(B)."""
    rb = math.sqrt(B)
    z = np.abs(np.asarray(x2bar, dtype=float)) * rb
    r = np.sqrt(np.clip((2.0 - z) * (2.0 + z), 0.0, None))
    with np.errstate(divide="ignore"):
        F = np.log(z / (2.0 + r)) + r
    return a - sign * F / rb


# --- regions of a piece and their smooth parameterizations ---
#
# Each region maps a parameter u (traversed from u0 to u1) to (beta, x2bar)
# and supplies ds/du > 0 along the direction of travel.

@dataclass(frozen=True)
class _Region:
    kind: str
    u0: float
    u1: float


def _c_minus_cos(C: float, beta, beta_end: float):
    """C - cos(beta) without cancellation near the piece end."""
    beta = np.asarray(beta, dtype=float)
    if C < 1:
        # cos(beta_end) - cos(beta)
        return -2.0 * np.sin(0.5 * (beta_end + beta)) * np.sin(0.5 * (beta_end - beta))
    return (C - 1.0) + 2.0 * np.sin(0.5 * beta) ** 2


def _piece_end_angle(c: FirstIntegral, tol: Tolerances) -> float:
    if c.C > 1:
        return 0.0
    if c.C == 1:
        delta = tol.asymptote_cutoff * c.x2max
        return -2.0 * math.asin(0.5 * math.sqrt(c.B) * delta)
    return -math.acos(c.C)


def _region_eval(kind: str, u: np.ndarray, C: float, B: float, beta_end: float):
    """Return beta, x2bar, ds/du for parameter values u in a region."""
    if kind == "beta":
        beta = u
        cm = _c_minus_cos(C, beta, beta_end)
        x2 = np.sqrt(2.0 * np.maximum(cm, 0.0) / B)
        ds = 1.0 / np.sqrt(2.0 * B * cm)
    elif kind == "z":
        p = C - 0.5 * B * u * u
        beta = -np.arccos(np.clip(p, -1.0, 1.0))
        x2 = u
        ds = 1.0 / np.sqrt((1.0 - p) * (1.0 + p))
    elif kind == "sqrt_end":
        # beta = beta_end - t^2, t decreasing to 0
        t = u
        beta = beta_end - t * t
        half = 0.5 * t * t
        sinc = np.where(half > 0, np.sin(half) / np.where(half > 0, half, 1.0), 1.0)
        fac = -2.0 * np.sin(0.5 * (beta_end + beta))
        cm = fac * np.sin(half)
        x2 = np.sqrt(2.0 * np.maximum(cm, 0.0) / B)
        ds = 2.0 / np.sqrt(B * fac * sinc)
    elif kind == "sinh_end":
        e = C - 1.0
        w = -math.sqrt(0.5 * e) * np.sinh(u)
        beta = 2.0 * np.arcsin(w)
        x2 = np.sqrt(2.0 * (e + 2.0 * w * w) / B)
        ds = 1.0 / (math.sqrt(B) * np.sqrt(1.0 - w * w))
    elif kind == "log_end":
        w = -np.exp(u)
        beta = 2.0 * np.arcsin(w)
        x2 = 2.0 * np.abs(w) / math.sqrt(B)
        ds = 1.0 / (math.sqrt(B) * np.sqrt(1.0 - w * w))
    else:  # pragma: no cover
        raise ValueError(kind)
    return beta, x2, ds


def _piece_regions(c: FirstIntegral, tol: Tolerances) -> Tuple[List[_Region], float]:
    C, B = c.C, c.B
    beta_end = _piece_end_angle(c, tol)
    ang = math.atan(1.0 / tol.slope_switch)
    beta_a = -math.pi + ang
    beta_b = -ang
    regions: List[_Region] = []
    if C < 1 and beta_end <= beta_a:
        regions.append(_Region("sqrt_end", math.sqrt(beta_end + math.pi), 0.0))
        return regions, beta_end

    def z_of(beta):
        return float(np.sqrt(2.0 * max(float(_c_minus_cos(C, beta, beta_end)), 0.0) / B))

    regions.append(_Region("beta", -math.pi, beta_a))
    if C < 1 and beta_end <= beta_b:
        regions.append(_Region("z", z_of(beta_a), 0.0))
        return regions, beta_end
    regions.append(_Region("z", z_of(beta_a), z_of(beta_b)))
    if C > 1:
        e = C - 1.0
        regions.append(_Region("sinh_end", math.asinh(-math.sin(0.5 * beta_b) / math.sqrt(0.5 * e)), 0.0))
    elif C == 1:
        regions.append(_Region("log_end", math.log(-math.sin(0.5 * beta_b)), math.log(-math.sin(0.5 * beta_end))))
    else:
        regions.append(_Region("sqrt_end", math.sqrt(beta_end - beta_b), 0.0))
    return regions, beta_end


def _panel_integrals(kind, grid, C, B, beta_end):
    """Arc length and x1 increments over consecutive grid intervals."""
    a = grid[:-1]
    b = grid[1:]
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    u = mid[:, None] + half[:, None] * _GL_NODES[None, :]
    beta, _, ds = _region_eval(kind, u.ravel(), C, B, beta_end)
    beta = beta.reshape(u.shape)
    ds = ds.reshape(u.shape)
    w = np.abs(half)[:, None] * _GL_WEIGHTS[None, :]
    d_s = np.sum(w * ds, axis=1)
    d_x1 = np.sum(w * ds * np.cos(beta), axis=1)
    return d_s, d_x1


def _region_length(region: _Region, C, B, beta_end, panels: int = 64) -> float:
    grid = np.linspace(region.u0, region.u1, panels + 1)
    d_s, _ = _panel_integrals(region.kind, grid, C, B, beta_end)
    return float(np.sum(d_s))


# --- pieces ---

@dataclass(frozen=True)
class CurvePiece:
    """A sampled elemental piece, parameterized by arc length s from its start."""

    x1: np.ndarray
    x2bar: np.ndarray
    beta: np.ndarray
    s: np.ndarray
    constant: FirstIntegral
    branch_sign: int = -1

    @property
    def samples(self) -> np.ndarray:
        return np.column_stack([self.x1, self.x2bar])

    @property
    def tangent_angle(self) -> np.ndarray:
        return self.beta

    @property
    def length(self) -> float:
        return float(self.s[-1])

    @property
    def start(self) -> Tuple[float, float]:
        return float(self.x1[0]), float(self.x2bar[0])

    @property
    def end(self) -> Tuple[float, float]:
        return float(self.x1[-1]), float(self.x2bar[-1])

    def first_integral_error(self) -> float:
        return float(np.max(np.abs(self.constant.value(self.x2bar, self.beta) - self.constant.C)))

    def transformed(self, mirror_x1: Optional[float] = None, flip_x2: bool = False,
                    reverse: bool = False, shift_x1: float = 0.0) -> "CurvePiece":
        """Apply the solution-preserving symmetries.

        mirror_x1=a with reverse=True is (x1, s) -> (2a - x1, -s), mapping
        beta -> -beta; flip_x2 is x2bar -> -x2bar, also beta -> -beta.  Both
        map solutions to solutions.
        """
        x1 = self.x1.copy()
        x2 = self.x2bar.copy()
        beta = self.beta.copy()
        if mirror_x1 is not None:
            x1 = 2.0 * mirror_x1 - x1
            beta = -beta
        if flip_x2:
            x2 = -x2
            beta = -beta
        if reverse:
            x1, x2, beta = x1[::-1], x2[::-1], beta[::-1]
            s = self.s[-1] - self.s[::-1]
        else:
            s = self.s.copy()
        beta = np.where(beta > math.pi, beta - 2 * math.pi, beta)
        beta = np.where(beta < -math.pi, beta + 2 * math.pi, beta)
        return CurvePiece(x1 + shift_x1, x2, beta, s, self.constant, -self.branch_sign if reverse else self.branch_sign)


def integrate_piece(c: FirstIntegral, start_x1: float = 0.0, n_samples: Optional[int] = None,
                    tol: Tolerances = DEFAULT) -> CurvePiece:
    """Sample the elemental piece starting at (start_x1, x2max) with tangent (-1, 0).

    With n_samples unset the count is the larger of tol.samples_per_piece and
    the resolution floor S * B / tol.curvature_step, which keeps the
    forward-difference curvature residual under tol.curvature_residual.
    """
    if c.C <= -1:
        raise DomainError(f"pieces need C > -1, got C={c.C}")
    C, B = c.C, c.B
    regions, beta_end = _piece_regions(c, tol)
    lengths = [_region_length(r, C, B, beta_end) for r in regions]
    total = sum(lengths)
    if n_samples is None:
        n = max(tol.samples_per_piece, int(math.ceil(total * B / tol.curvature_step)) + 1)
    else:
        n = int(n_samples)
    if n < 2 * len(regions) + 1:
        raise DomainError(f"need at least {2 * len(regions) + 1} samples")
    # intervals per region proportional to length, at least 2 each
    counts = [max(2, int(round((n - 1) * L / total))) for L in lengths]
    counts[int(np.argmax(lengths))] += (n - 1) - sum(counts)

    xs, ys, bs, ss = [], [], [], []
    x1_acc = float(start_x1)
    s_acc = 0.0
    for k, (region, m) in enumerate(zip(regions, counts)):
        grid = np.linspace(region.u0, region.u1, m + 1)
        beta, x2, _ = _region_eval(region.kind, grid, C, B, beta_end)
        d_s, d_x1 = _panel_integrals(region.kind, grid, C, B, beta_end)
        s_loc = s_acc + np.concatenate([[0.0], np.cumsum(d_s)])
        x_loc = x1_acc + np.concatenate([[0.0], np.cumsum(d_x1)])
        sl = slice(0, None) if k == 0 else slice(1, None)
        xs.append(x_loc[sl])
        ys.append(np.asarray(x2, dtype=float)[sl])
        bs.append(np.asarray(beta, dtype=float)[sl])
        ss.append(s_loc[sl])
        x1_acc = float(x_loc[-1])
        s_acc = float(s_loc[-1])
    x1 = np.concatenate(xs)
    x2 = np.concatenate(ys)
    beta = np.concatenate(bs)
    s = np.concatenate(ss)
    # the start point is exact: beta = -pi at x2max
    beta[0] = -math.pi
    x2[0] = c.x2max
    return CurvePiece(x1, x2, beta, s, c, -1)


def piece_arc_integrals(c: FirstIntegral, beta_lo: float, beta_hi: float,
                        tol: Tolerances = DEFAULT, panels: int = 400) -> Tuple[float, float]:
    """(arc length, x1 increment) between two tangent angles on the piece.

    An independent route to the sampled piece: the same smooth
    parameterizations, integrated directly over [beta_lo, beta_hi].
    """
    C, B = c.C, c.B
    regions, beta_end = _piece_regions(c, tol)
    beta_hi = min(beta_hi, beta_end)
    total_s = 0.0
    total_x = 0.0
    for region in regions:
        # find the sub-range of the region's parameter inside [beta_lo, beta_hi]
        g = np.linspace(region.u0, region.u1, 4 * panels + 1)
        bg, _, _ = _region_eval(region.kind, g, C, B, beta_end)
        bg = np.asarray(bg, dtype=float)
        lo_r, hi_r = float(np.min(bg)), float(np.max(bg))
        if hi_r <= beta_lo or lo_r >= beta_hi:
            continue
        u_lo = region.u0 if lo_r >= beta_lo else _solve_region_param(region, beta_lo, C, B, beta_end)
        u_hi = region.u1 if hi_r <= beta_hi else _solve_region_param(region, beta_hi, C, B, beta_end)
        grid = np.linspace(u_lo, u_hi, panels + 1)
        d_s, d_x = _panel_integrals(region.kind, grid, C, B, beta_end)
        total_s += float(np.sum(d_s))
        total_x += float(np.sum(d_x))
    return total_s, total_x


def _solve_region_param(region: _Region, beta_target: float, C, B, beta_end) -> float:
    def f(u):
        return float(_region_eval(region.kind, np.array([u]), C, B, beta_end)[0][0]) - beta_target

    return optimize.brentq(f, min(region.u0, region.u1), max(region.u0, region.u1), xtol=1e-15, rtol=1e-15)


# --- spans, C0, beta range ---

def piece_span(c: FirstIntegral, tol: Tolerances = DEFAULT) -> float:
    """Net x1 displacement of the whole piece, x1(end) - x1(start)."""
    return piece_arc_integrals(c, -math.pi, 0.0, tol)[1]


def _span_quadrature_C0(C: float) -> float:
    """x1(0) - x1(x2max) at B = 1, by adaptive quadrature in x2bar.

    An independent route from the panel sampler.  The endpoint singularity at
    x2max is an inverse square root and is integrated with an algebraic
    weight.
    """
    from scipy import integrate

    zmax = math.sqrt(2.0 * (C + 1.0))

    def f(z):
        p = C - 0.5 * z * z
        return p / math.sqrt((1.0 - C + 0.5 * z * z) * 0.5 * (zmax + z))

    val, _ = integrate.quad(f, 0.0, zmax, weight="alg", wvar=(0.0, -0.5),
                            epsabs=1e-14, epsrel=1e-13, limit=200)
    return val


@lru_cache(maxsize=1)
def find_C0() -> float:
    """The constant in (0, 1) whose pieces have zero net horizontal span.

    Computed once at B = 1; the substitution z = sqrt(B) x2bar removes B, so
    the value holds for every B.
    """
    lo, hi = 0.3, 0.95
    flo, fhi = _span_quadrature_C0(lo), _span_quadrature_C0(hi)
    if not flo * fhi < 0:
        raise NumericalError("closure root not bracketed")
    return optimize.brentq(_span_quadrature_C0, lo, hi, xtol=1e-15, rtol=1e-15, maxiter=200)


def closure_residual(C: float) -> float:
    return abs(_span_quadrature_C0(C))


@dataclass(frozen=True)
class AngleInterval:
    lo: float
    hi: float
    lo_closed: bool = True
    hi_closed: bool = True

    def contains(self, x: float, slack: float = 0.0) -> bool:
        ok_lo = x >= self.lo - slack if self.lo_closed else x > self.lo - slack
        ok_hi = x <= self.hi + slack if self.hi_closed else x < self.hi + slack
        return ok_lo and ok_hi


def eta(C: float) -> float:
    """Smallest |beta| attained when -1 <= C < 1: cos(eta) = C."""
    return math.acos(min(1.0, max(-1.0, C)))


def beta_range(c: FirstIntegral) -> List[AngleInterval]:
    C = c.C
    if C > 1:
        return [AngleInterval(-math.pi, math.pi)]
    if C == 1:
        return [AngleInterval(-math.pi, 0.0, True, False), AngleInterval(0.0, math.pi, False, True)]
    e = eta(C)
    return [AngleInterval(-math.pi, -e), AngleInterval(e, math.pi)]


def in_beta_range(c: FirstIntegral, beta: float, slack: float = 1e-12) -> bool:
    return any(iv.contains(beta, slack) for iv in beta_range(c))


# --- span bounds ---

def span_bound_functions(c: FirstIntegral, which: str) -> float:
    """Lower/upper bounds on partial spans of a piece, already divided by sqrt(B).

    which:
      'neg_lower', 'neg_upper'  x1(x2max) - x1(0), -1 < C <= 0
      'h1', 'h2'                x1(0) - x1(x2med), 0 < C < 1
      'h3', 'h4'                x1(x2min) - x1(x2med), C > 1
      'h5', 'h6'                x1(x2max) - x1(x2med), C > 0

    Each bound comes from integrating dx1/dx2bar with the factor
    sqrt(1 - p^2) = sqrt(1 - p) sqrt(1 + p), p = C - B Z^2/2, where one factor
    is replaced by its extreme value on the interval; the remaining integral
    is elementary.
    """
    C, B = c.C, c.B
    rb = math.sqrt(B)
    if which in ("neg_lower", "neg_upper"):
        if not (-1 < C <= 0):
            raise DomainError(f"{which} needs -1 < C <= 0, got C={C}")
        if which == "neg_upper":
            return math.pi / math.sqrt(2.0 * B * (1.0 - C))
        return (1.0 - C) / math.sqrt(B * (C + 1.0)) * math.log(
            (math.sqrt(2.0 * (C + 1.0)) + 2.0) / (math.sqrt(C + 1.0) + math.sqrt(3.0 - C)))
    if which in ("h1", "h2"):
        if not (0 < C < 1):
            raise DomainError(f"{which} needs 0 < C < 1, got C={C}")
        h2 = math.sqrt(2.0) * (0.5 * (1.0 + C) * math.asinh(math.sqrt(C / (1.0 - C))) - 0.5 * math.sqrt(C))
        return (h2 / math.sqrt(1.0 + C) if which == "h1" else h2) / rb
    if which in ("h3", "h4"):
        if not C > 1:
            raise DomainError(f"{which} needs C > 1, got C={C}")
        h4 = math.sqrt(2.0) * (0.5 * (C + 1.0) * math.acosh(math.sqrt(C / (C - 1.0))) - 0.5 * math.sqrt(C))
        return (h4 / math.sqrt(2.0) if which == "h3" else h4) / rb
    if which in ("h5", "h6"):
        if not C > 0:
            raise DomainError(f"{which} needs C > 0, got C={C}")
        h6 = math.sqrt(2.0) * (0.5 * (1.0 - C) * math.atan(1.0 / math.sqrt(C)) + 0.5 * math.sqrt(C))
        return (h6 / math.sqrt(2.0) if which == "h5" else h6) / rb
    raise DomainError(f"unknown bound {which!r}")


NEG_LOWER_CONST = math.log((2.0 + math.sqrt(2.0)) / (1.0 + math.sqrt(3.0)))
NEG_UPPER_CONST = math.pi / math.sqrt(2.0)


def measured_spans(piece: CurvePiece) -> dict:
    """Partial spans of a sampled piece, keyed like span_bound_functions."""
    C = piece.constant.C
    x1, beta = piece.x1, piece.beta
    out = {}

    def x1_at_beta(target):
        i = int(np.searchsorted(beta, target))
        i = min(max(i, 1), len(beta) - 1)
        t = (target - beta[i - 1]) / (beta[i] - beta[i - 1])
        return x1[i - 1] + t * (x1[i] - x1[i - 1])

    top = x1[0]
    if -1 < C <= 0:
        out["neg"] = top - x1[-1]
    if C > 0:
        xmed = x1_at_beta(-0.5 * math.pi)
        out["h56"] = top - xmed
        if C < 1:
            out["h12"] = x1[-1] - xmed
        elif C > 1:
            out["h34"] = x1[-1] - xmed
    return out


# --- complete curves ---

@dataclass(frozen=True)
class CompleteCurve:
    pieces: Tuple[CurvePiece, ...]
    glue_points: Tuple[Tuple[float, float], ...]
    orientation: str
    constant: FirstIntegral = field(default=None)

    @property
    def x1(self) -> np.ndarray:
        return np.concatenate([self.pieces[0].x1] + [p.x1[1:] for p in self.pieces[1:]])

    @property
    def x2bar(self) -> np.ndarray:
        return np.concatenate([self.pieces[0].x2bar] + [p.x2bar[1:] for p in self.pieces[1:]])

    @property
    def beta(self) -> np.ndarray:
        return np.concatenate([self.pieces[0].beta] + [p.beta[1:] for p in self.pieces[1:]])

    @property
    def s(self) -> np.ndarray:
        out = [self.pieces[0].s]
        off = self.pieces[0].s[-1]
        for p in self.pieces[1:]:
            out.append(p.s[1:] + off)
            off += p.s[-1]
        return np.concatenate(out)

    def flipped(self) -> "CompleteCurve":
        pieces = tuple(p.transformed(flip_x2=True) for p in self.pieces)
        glue = tuple((x, -y) for x, y in self.glue_points)
        return CompleteCurve(pieces, glue, "air_below" if self.orientation == "air_above" else "air_above",
                             self.constant)


def complete_curve(c: FirstIntegral, start_x1: float = 0.0, n_glue: int = 3,
                   n_samples: Optional[int] = None, tol: Tolerances = DEFAULT) -> CompleteCurve:
    """Glue n_glue + 1 pieces following the orientation of the curve."""
    if c.C == 1:
        raise DomainError("C = 1 curves are assembled from the closed-form branches")
    if n_glue < 0:
        raise DomainError("n_glue must be non-negative")
    base = integrate_piece(c, start_x1, n_samples, tol)
    pieces = [base]
    cur = base
    for k in range(1, n_glue + 1):
        ex, ey = cur.end
        if c.C > 1:
            # horizontal tangent at x2min or x2max: mirror about the end point
            nxt = cur.transformed(mirror_x1=ex, reverse=True)
        else:
            if k % 2 == 1:
                # crossing x2bar = 0: point reflection through the end point
                nxt = cur.transformed(mirror_x1=ex, flip_x2=True, reverse=True)
            else:
                # horizontal tangent at -x2max or x2max: continue with the
                # reflected copy of the piece before last
                prev = pieces[-2]
                nxt = prev.transformed(flip_x2=True)
                nxt = nxt.transformed(shift_x1=ex - nxt.x1[0])
        pieces.append(nxt)
        cur = nxt
    glue = tuple([p.start for p in pieces] + [pieces[-1].end])
    orient = "air_above" if c.C > find_C0() else "air_below"
    return CompleteCurve(tuple(pieces), glue, orient, c)


# --- residual checks ---

def curvature_residual(x1, x2bar, beta, s, B: float) -> float:
    """max |(beta_{i+1} - beta_i)/(s_{i+1} - s_i) - B x2bar_i|.

    A forward difference of the sampled tangent angle, so first order in the
    step: halving the spacing halves the residual.  Jumps of beta by 2 pi at
    the top and bottom glue points are unwrapped.
    """
    b = np.unwrap(np.asarray(beta, dtype=float))
    ds = np.diff(np.asarray(s, dtype=float))
    good = ds > 0
    k = np.diff(b)[good] / ds[good]
    return float(np.max(np.abs(k - B * np.asarray(x2bar)[:-1][good])))


def piece_curvature_residual(piece: CurvePiece) -> float:
    return curvature_residual(piece.x1, piece.x2bar, piece.beta, piece.s, piece.constant.B)


def tangent_mismatch_at_glue(curve: CompleteCurve) -> float:
    worst = 0.0
    for a, b in zip(curve.pieces[:-1], curve.pieces[1:]):
        d = abs(math.remainder(a.beta[-1] - b.beta[0], 2 * math.pi))
        pos = math.hypot(a.x1[-1] - b.x1[0], a.x2bar[-1] - b.x2bar[0])
        worst = max(worst, d, pos)
    return worst


# --- arc-length integrator used by the connection solver ---

@njit(cache=True)
def rk4_arc(x0, y0, b0, B, h, n):
    """Fixed-step RK4 for (x1, x2bar, beta) over n steps of length h."""
    out = np.empty((n + 1, 3))
    x, y, b = x0, y0, b0
    out[0, 0] = x
    out[0, 1] = y
    out[0, 2] = b
    for i in range(n):
        k1x = math.cos(b)
        k1y = math.sin(b)
        k1b = B * y
        b2 = b + 0.5 * h * k1b
        y2 = y + 0.5 * h * k1y
        k2x = math.cos(b2)
        k2y = math.sin(b2)
        k2b = B * y2
        b3 = b + 0.5 * h * k2b
        y3 = y + 0.5 * h * k2y
        k3x = math.cos(b3)
        k3y = math.sin(b3)
        k3b = B * y3
        b4 = b + h * k3b
        y4 = y + h * k3y
        k4x = math.cos(b4)
        k4y = math.sin(b4)
        k4b = B * y4
        x += h * (k1x + 2 * k2x + 2 * k3x + k4x) / 6.0
        y += h * (k1y + 2 * k2y + 2 * k3y + k4y) / 6.0
        b += h * (k1b + 2 * k2b + 2 * k3b + k4b) / 6.0
        out[i + 1, 0] = x
        out[i + 1, 1] = y
        out[i + 1, 2] = b
    return out
