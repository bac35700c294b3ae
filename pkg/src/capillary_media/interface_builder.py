"""Interfaces through a grain field.

An interface runs from the left wall to the right wall, passing through an
ordered chain of grains.  Between consecutive chain members it is an
elemental component: an arc of H = B (x2 - lam) that leaves one obstacle
and arrives at the next with the contact angle alpha.

Angle conventions.  The tangent t of a component points along the direction
of travel, with air on its left.  At a grain with outward normal at azimuth
phi (counterclockwise from the x1 axis), departure requires beta = phi + alpha
and arrival requires beta = phi + pi + alpha.  Writing beta_c for the tangent
that points away from the grain at the contact, both cases read
beta_c = phi + alpha, and the stored contact azimuth is rho_c = alpha - beta_c
(so rho_c = -phi, the azimuth measured clockwise).  Walls behave as grains of
infinite radius with phi = 0 (left) and phi = pi (right).

Connections come from two sources:

  * shooting: integrate from the departure contact and adjust one parameter
    (the azimuth at a grain, or the height at a wall) until the arrival
    contact satisfies the contact angle.  The constant C follows from the
    departure point.  Arcs are kept x1-monotone, as in the lr/rl classes.
  * composites, for large sqrt(B) times the gap: an exact C = 1 meniscus from
    the departure contact down to the reference line, a straight run along
    it, and an exact C = 1 meniscus up to the arrival contact.
"""

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from numba import njit
from scipy import optimize
from scipy.spatial import cKDTree

from .constants import ConstantsFile, load_constants
from .curve_core import CurvePiece, FirstIntegral, closed_form_F
from .errors import DegenerateInputError, DomainError
from .grain_field import GrainField, RegimeParams, VolumeState, volume_fixed_point
from .percolation import CompatibleCurve, site_states

TWO_PI = 2.0 * math.pi

# meniscus cut: scaled height Z = sqrt(B) |x2bar| where the C = 1 branch
# joins the straight run; the curvature error there is B |x2bar| / sqrt(B) = Z
MENISCUS_Z_CUT = 1e-5
MENISCUS_SAMPLES = 2000
# composites are preferred once the gap exceeds this many capillary lengths
SHOOT_MAX_SCALED_GAP = 25.0
# a shooting root is kept only if the arrival angle error is below this
SHOT_RESIDUAL_TOL = 1e-7


def wrap_angle(a: float) -> float:
    """Representative of a in (-pi, pi]."""
    r = math.remainder(a, TWO_PI)
    return math.pi if r == -math.pi else r


# --- contacts and components ---

@dataclass(frozen=True)
class ContactPoint:
    point: Tuple[float, float]
    grain_index: Optional[int]
    beta_c: float
    rho_c: float
    wall: Optional[str] = None

    @staticmethod
    def make(point, beta_c: float, alpha: float, grain_index=None, wall=None) -> "ContactPoint":
        b = wrap_angle(beta_c)
        return ContactPoint((float(point[0]), float(point[1])), grain_index, b,
                            wrap_angle(alpha - b), wall)


@dataclass
class ElementalComponent:
    """A sampled connection; x2 is absolute height, lam the reference line."""

    x1: np.ndarray
    x2: np.ndarray
    beta: np.ndarray
    s: np.ndarray
    C: float
    B: float
    lam: float
    contacts: Tuple[ContactPoint, ContactPoint]
    kind: str = "shooting"

    @property
    def x2bar(self) -> np.ndarray:
        return self.x2 - self.lam

    @property
    def length(self) -> float:
        return float(self.s[-1])

    @property
    def direction(self) -> str:
        return classify_component(self, self.lam)[0]

    @property
    def position_class(self) -> str:
        return classify_component(self, self.lam)[1]

    def _split_indices(self) -> List[int]:
        # pieces end where x2bar or sin(beta) changes sign
        yb = self.x2bar
        sb = np.sin(self.beta)
        cut = []
        for arr in (yb, sb):
            sg = np.sign(np.where(np.abs(arr) < 1e-14, 0.0, arr))
            nz = np.nonzero(sg)[0]
            if nz.size > 1:
                ch = nz[1:][sg[nz[1:]] != sg[nz[:-1]]]
                cut.extend(int(i) for i in ch)
        return sorted(set(cut))

    @property
    def n_pieces(self) -> int:
        return 1 + len(self._split_indices())

    @property
    def pieces(self) -> List[CurvePiece]:
        cuts = [0] + self._split_indices() + [len(self.s) - 1]
        const = FirstIntegral(max(self.C, -1.0), self.B)
        out = []
        for a, b in zip(cuts[:-1], cuts[1:]):
            if b <= a:
                continue
            sl = slice(a, b + 1)
            yb = self.x2bar[sl]
            sign = -1 if yb[-1] <= yb[0] else 1
            out.append(CurvePiece(self.x1[sl].copy(), yb.copy(), self.beta[sl].copy(),
                                  self.s[sl] - self.s[a], const, sign))
        return out

    def curvature_residual(self) -> float:
        """Midpoint-rule residual of beta' = B x2bar in capillary units.

        max |dbeta/ds - B (x2bar_i + x2bar_{i+1})/2| / max(1, sqrt(B)).
        """
        return _midpoint_residual(self.beta, self.s, self.x2bar, self.B)

    def mirrored(self, L: float) -> "ElementalComponent":
        """Image under x1 -> L - x1 with the same point order."""
        p, q = self.contacts
        alpha = wrap_angle(p.rho_c + p.beta_c)
        def mc(c: ContactPoint):
            wall = {"left": "right", "right": "left"}.get(c.wall)
            return ContactPoint.make((L - c.point[0], c.point[1]), math.pi - c.beta_c, alpha,
                                     c.grain_index, wall)
        return ElementalComponent(L - self.x1, self.x2.copy(), np.pi - self.beta, self.s.copy(),
                                  self.C, self.B, self.lam, (mc(p), mc(q)), self.kind)


def _midpoint_residual(beta, s, x2bar, B) -> float:
    b = np.unwrap(np.asarray(beta, dtype=float))
    ds = np.diff(s)
    good = ds > 0
    if not np.any(good):
        return 0.0
    k = np.diff(b)[good] / ds[good]
    ym = 0.5 * (x2bar[1:] + x2bar[:-1])[good]
    return float(np.max(np.abs(k - B * ym))) / max(1.0, math.sqrt(B))


def classify_component(gamma: ElementalComponent, lam: float) -> Tuple[str, str]:
    """(direction, position class); x1 ties go to lr."""
    p, q = gamma.contacts
    direction = "lr" if p.point[0] <= q.point[0] else "rl"
    yb = np.asarray(gamma.x2) - lam
    tol = 1e-12 * max(1.0, abs(lam))
    if np.all(yb >= -tol):
        pos = "plus"
    elif np.all(yb <= tol):
        pos = "minus"
    else:
        pos = "crossing"
    return direction, pos


# --- obstacles ---

@dataclass(frozen=True)
class Obstacle:
    """A grain (R > 0, index set) or a wall ('left' / 'right')."""

    kind: str
    x: float
    y: float
    R: float = 0.0
    index: Optional[int] = None

    @staticmethod
    def grain(center, R: float, index: Optional[int] = None) -> "Obstacle":
        return Obstacle("grain", float(center[0]), float(center[1]), float(R), index)

    @staticmethod
    def wall(side: str, L: float) -> "Obstacle":
        return Obstacle(side, 0.0 if side == "left" else float(L), 0.0)


# --- shooting kernel ---

@njit(cache=True, nogil=True)
def _step(x, y, b, B, h):
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
    return (x + h * (k1x + 2 * k2x + 2 * k3x + k4x) / 6.0,
            y + h * (k1y + 2 * k2y + 2 * k3y + k4y) / 6.0,
            b + h * (k1b + 2 * k2b + 2 * k3b + k4b) / 6.0)


@njit(cache=True, nogil=True)
def _target_gap(x, y, tkind, tx, ty, tr):
    # positive outside the target, zero on its boundary
    if tkind == 0:
        return math.hypot(x - tx, y - ty) - tr
    return tx - x


@njit(cache=True, nogil=True)
def shoot(x0, y0, b0, B, h, nmax, mode, sx, sy, sr, tkind, tx, ty, tr,
          xlo, xhi, ylo, yhi, out):
    """Integrate (x1, x2bar, beta) from a departure contact until an event.

    mode +1 / -1 keeps cos(beta) non-negative / non-positive; 0 disables the
    check.  The source grain (sx, sy, sr), sr = 0 for a wall, must not be
    re-entered.  The target is a circle (tkind 0) or the wall x1 = tx
    (tkind 1).  Returns (status, n) with out[:n + 1] holding the samples and
    out[n] the exact hit for status 1.  Status: 1 hit, 2 re-entered source,
    3 direction reversed, 4 left the box, 5 ran out of steps.
    """
    x, y, b = x0, y0, b0
    out[0, 0] = x
    out[0, 1] = y
    out[0, 2] = b
    for i in range(nmax):
        xn, yn, bn = _step(x, y, b, B, h)
        g = _target_gap(xn, yn, tkind, tx, ty, tr)
        if g <= 0.0:
            lo = 0.0
            hi = h
            for _ in range(80):
                mid = 0.5 * (lo + hi)
                xm, ym, bm = _step(x, y, b, B, mid)
                if _target_gap(xm, ym, tkind, tx, ty, tr) > 0.0:
                    lo = mid
                else:
                    hi = mid
                if hi - lo <= 1e-16 * h:
                    break
            xm, ym, bm = _step(x, y, b, B, 0.5 * (lo + hi))
            out[i + 1, 0] = xm
            out[i + 1, 1] = ym
            out[i + 1, 2] = bm
            return 1, i + 1
        out[i + 1, 0] = xn
        out[i + 1, 1] = yn
        out[i + 1, 2] = bn
        x, y, b = xn, yn, bn
        if sr > 0.0 and math.hypot(x - sx, y - sy) < sr * (1.0 - 1e-7):
            return 2, i + 1
        c = math.cos(b)
        if (mode > 0 and c < -1e-12) or (mode < 0 and c > 1e-12):
            return 3, i + 1
        if x < xlo or x > xhi or y < ylo or y > yhi:
            return 4, i + 1
    return 5, nmax


@njit(cache=True)
def _hit_step_length(traj, n, h):
    # length of the final, partial step of a hit
    dx = traj[n, 0] - traj[n - 1, 0]
    dy = traj[n, 1] - traj[n - 1, 1]
    return min(h, math.hypot(dx, dy))


# --- connection problem ---

@dataclass
class _ShotSetup:
    src: Obstacle
    tgt: Obstacle
    params: RegimeParams
    lam: float
    h: float
    nmax: int
    h_scan: float
    nmax_scan: int
    box: Tuple[float, float, float, float]
    buf: np.ndarray


def _departure(src: Obstacle, u: float, alpha: float):
    """Departure point and angle for shooting parameter u."""
    if src.kind == "grain":
        return src.x + src.R * math.cos(u), src.y + src.R * math.sin(u), u + alpha
    if src.kind == "left":
        return 0.0, u, alpha
    return src.x, u, math.pi - alpha


def _setup(src: Obstacle, tgt: Obstacle, params: RegimeParams, lam: float) -> _ShotSetup:
    B, R, L = params.B, params.R, params.L
    d = math.hypot(src.x - tgt.x, src.y - tgt.y) if tgt.kind == "grain" and src.kind == "grain" \
        else abs(src.x - tgt.x)
    # walls carry no height; only grain centers set the curvature scale
    yspan = max([abs(o.y - lam) for o in (src, tgt) if o.kind == "grain"] + [0.0]) + d + R
    kappa = B * yspan + math.sqrt(B)
    h = min(0.05 / kappa, max(d, R) / 400.0)
    if R > 0:
        h = min(h, R / 8.0)
    smax = 4.0 * (d + 2 * R) + 1e-12
    nmax = int(math.ceil(smax / h)) + 2
    # grid scans only need the sign pattern of the residual
    h_scan = max(h, min(0.05 / kappa, max(d, R) / 100.0))
    nmax_scan = int(math.ceil(smax / h_scan)) + 2
    tol = 1e-9 * max(1.0, L)
    box = (-tol, L + tol, -lam - tol, L - lam + tol)
    return _ShotSetup(src, tgt, params, lam, h, nmax, h_scan, nmax_scan, box,
                      np.empty((nmax + 1, 3)))


def _run_shot(st: _ShotSetup, u: float, mode: int, coarse: bool = False):
    alpha = st.params.alpha
    x0, y0, b0 = _departure(st.src, u, alpha)
    src, tgt = st.src, st.tgt
    sx, sy, sr = (src.x, src.y - st.lam, src.R) if src.kind == "grain" else (0.0, 0.0, 0.0)
    if tgt.kind == "grain":
        tk, tx, ty, tr = 0, tgt.x, tgt.y - st.lam, tgt.R
    else:
        tk, tx, ty, tr = 1, tgt.x, 0.0, 0.0
    xlo, xhi, ylo, yhi = st.box
    h, nmax = (st.h_scan, st.nmax_scan) if coarse else (st.h, st.nmax)
    status, n = shoot(x0, y0 - st.lam, b0, st.params.B, h, nmax, mode, sx, sy, sr,
                      tk, tx, ty, tr, xlo, xhi, ylo, yhi, st.buf)
    if status != 1:
        return status, n, math.nan
    xq, yq, bq = st.buf[n]
    if tgt.kind == "grain":
        phi = math.atan2(yq - ty, xq - tx)
        res = wrap_angle(bq - phi - math.pi - alpha)
    else:
        res = wrap_angle(bq - alpha)
    return status, n, res


def _shot_component(st: _ShotSetup, u: float, mode: int) -> Optional[ElementalComponent]:
    status, n, res = _run_shot(st, u, mode)
    if status != 1 or not abs(res) < SHOT_RESIDUAL_TOL:
        return None
    traj = st.buf[: n + 1].copy()
    B, alpha, lam = st.params.B, st.params.alpha, st.lam
    s = np.arange(n + 1, dtype=float) * st.h
    s[n] = s[n - 1] + _hit_step_length(traj, n, st.h)
    x0, y0, b0 = traj[0]
    C = 0.5 * B * y0 * y0 + math.cos(b0)
    p = ContactPoint.make((x0, y0 + lam), b0, alpha, st.src.index,
                          None if st.src.kind == "grain" else st.src.kind)
    xq, yq, bq = traj[n]
    q = ContactPoint.make((xq, yq + lam), bq + math.pi, alpha, st.tgt.index,
                          None if st.tgt.kind == "grain" else st.tgt.kind)
    return ElementalComponent(traj[:, 0], traj[:, 1] + lam, traj[:, 2], s, C, B, lam, (p, q))


def _c_one_params(st: _ShotSetup) -> List[float]:
    """Departure azimuths where C = 1 exactly.

    Near-horizontal connections at large B have C exponentially close to 1,
    so the base grid is refined around these azimuths.
    """
    src, B, alpha = st.src, st.params.B, st.params.alpha
    cy = src.y - st.lam
    if src.kind != "grain":
        return []

    def f(u):
        yb = cy + src.R * math.sin(u)
        return 0.5 * B * yb * yb + math.cos(u + alpha) - 1.0

    us = np.linspace(-math.pi, math.pi, 2049)
    ys = cy + src.R * np.sin(us)
    fs = 0.5 * B * ys * ys + np.cos(us + alpha) - 1.0
    out = []
    for a, b, fa, fb in zip(us[:-1], us[1:], fs[:-1], fs[1:]):
        if fa == 0.0:
            out.append(float(a))
        elif fa * fb < 0:
            out.append(optimize.brentq(f, a, b, xtol=1e-16, rtol=1e-15))
    return out


_MODE_OFFSETS = np.geomspace(1e-8, 3e-2, 16)


def _vertical_params(alpha: float) -> Tuple[float, float]:
    """Departure azimuths with a vertical tangent."""
    return math.pi / 2 - alpha, -math.pi / 2 - alpha


def _target_angle(st: _ShotSetup) -> float:
    """Angular radius of the target seen from the source."""
    src, tgt = st.src, st.tgt
    if tgt.kind != "grain":
        return math.pi / 4
    d = math.hypot(tgt.x - src.x, tgt.y - src.y)
    return math.asin(min(1.0, tgt.R / d))


def _local_params(st: _ShotSetup, n: int = 25) -> List[Tuple[float, int]]:
    """A short scan around the straight-line guess."""
    src, tgt, alpha, B = st.src, st.tgt, st.params.alpha, st.params.B
    d = math.hypot(tgt.x - src.x, tgt.y - src.y) if tgt.kind == "grain" else abs(tgt.x - src.x)
    bend = B * (abs(src.y - st.lam) + abs(tgt.y - st.lam) + d) * d
    if src.kind == "grain":
        ta = _target_angle(st)
        width = 3.0 * ta + 2.0 * bend
        # at least four samples across the target so hits come in brackets
        n = max(n, int(math.ceil(8.0 * width / ta)) + 1)
        base = math.atan2(tgt.y - src.y, tgt.x - src.x) - alpha
        us = list(base + np.linspace(-width, width, n))
        for u0 in _vertical_params(alpha):
            k = round((base - u0) / TWO_PI)
            v = u0 + k * TWO_PI
            if abs(v - base) < width:
                us.extend(v + _MODE_OFFSETS)
                us.extend(v - _MODE_OFFSETS)
        out = []
        for u in sorted(us):
            c = math.cos(u + alpha)
            if abs(c) > 1e-9:
                out.append((float(u), 1 if c > 0 else -1))
        return out
    mode = 1 if src.kind == "left" else -1
    hw = 3.0 * tgt.R + 2.0 * bend * d + abs(math.tan(alpha)) * d
    hs = np.linspace(tgt.y - hw, tgt.y + hw, n)
    return [(float(u), mode) for u in hs if 0 <= u <= st.params.L]


def _shoot_params(st: _ShotSetup, n_grid: int) -> List[Tuple[float, int]]:
    """Shooting parameters, in increasing order, with the direction mode each implies."""
    src, tgt, alpha = st.src, st.tgt, st.params.alpha
    out = []
    if src.kind == "grain":
        base = math.atan2(tgt.y - src.y, tgt.x - src.x)
        n_grid = max(n_grid, int(math.ceil(4 * math.pi / _target_angle(st))))
        us = list(base + np.linspace(-math.pi, math.pi, n_grid, endpoint=False))
        offsets = np.geomspace(1e-13, 3e-2, 24)
        for u0 in _c_one_params(st):
            us.append(u0)
            us.extend(u0 + offsets)
            us.extend(u0 - offsets)
        # near-vertical connections have their root close to a mode switch
        for u0 in _vertical_params(alpha):
            us.extend(u0 + _MODE_OFFSETS)
            us.extend(u0 - _MODE_OFFSETS)
        lo = base - math.pi
        us = sorted(lo + ((u - lo) % TWO_PI) for u in us)
        for u in us:
            c = math.cos(u + alpha)
            if abs(c) > 1e-9:
                out.append((float(u), 1 if c > 0 else -1))
        return out
    # wall departure: scan heights around the target
    L = st.params.L
    reach = abs(tgt.x - src.x) + tgt.R
    lo = max(0.0, tgt.y - reach)
    hi = min(L, tgt.y + reach)
    mode = 1 if src.kind == "left" else -1
    if tgt.R > 0:
        n_grid = max(n_grid, int(math.ceil(4 * (hi - lo) / tgt.R)))
    hs = list(np.linspace(lo, hi, min(n_grid, 4096)))
    yc = st.lam - (2.0 / math.sqrt(st.params.B)) * math.sin(alpha / 2)
    if lo < yc < hi:
        hs.append(yc)
        offs = np.geomspace(1e-13, 3e-2, 24) / math.sqrt(st.params.B)
        hs.extend(yc + offs)
        hs.extend(yc - offs)
    return [(float(u), mode) for u in sorted(hs) if lo <= u <= hi]


def _solve_shots(st: _ShotSetup, n_grid: int, local: bool = False,
                 free: bool = False) -> List[ElementalComponent]:
    """Roots of the arrival residual over the shooting grid.

    With free, the direction modes are dropped so arcs may turn back in x1
    (needed for near-vertical connections).
    """
    grid = _local_params(st) if local else _shoot_params(st, n_grid)
    if free:
        grid = [(u, 0) for u, _ in grid]
    vals = []
    for u, mode in grid:
        status, _, res = _run_shot(st, u, mode, coarse=True)
        vals.append(res if status == 1 else math.nan)
    periodic = st.src.kind == "grain" and not local
    m = len(grid)
    comps = []
    pairs = range(m if periodic else m - 1)
    for i in pairs:
        j = (i + 1) % m
        (ua, ma), (ub, mb) = grid[i], grid[j]
        ra, rb = vals[i], vals[j]
        if ma != mb or not (abs(ra) < math.pi / 2 and abs(rb) < math.pi / 2):
            continue
        if periodic and j == 0:
            ub += TWO_PI
        if ra == 0.0:
            root = ua
        elif ra * rb > 0:
            continue
        else:
            def f(u, mode=ma):
                status, _, r = _run_shot(st, u, mode)
                if status != 1:
                    raise _Miss()
                return r
            try:
                root = optimize.brentq(f, ua, ub, xtol=1e-15, rtol=1e-15, maxiter=200)
            except (_Miss, ValueError, RuntimeError):
                continue
        comp = _shot_component(st, root, ma)
        if comp is not None:
            comps.append(comp)
    return comps


class _Miss(Exception):
    pass


def _preference_key(c: ElementalComponent):
    return (c.n_pieces, round(c.length, 12), abs(c.C - 1.0))


# --- C = 1 composites ---

def _meniscus_contact(ob: Obstacle, lam: float, B: float, alpha: float, depart: bool):
    """Contact on obstacle ob from which an exact C = 1 branch decays to lam.

    Returns (x, x2bar, beta) or None.  Departures head to the right, arrivals
    come from the left; both keep cos(beta) >= 0.
    """
    rb = math.sqrt(B)
    if ob.kind != "grain":
        yb = (-1.0 if depart else 1.0) * (2.0 / rb) * math.sin(alpha / 2)
        if (ob.kind == "left") != depart:
            return None
        return ob.x, yb, alpha
    cy, R = ob.y - lam, ob.R
    sgn = 1.0 if depart else -1.0

    def g(t):
        # departure azimuth t, or arrival azimuth pi + t
        return cy + sgn * (R * math.sin(t) + (2.0 / rb) * math.sin((t + alpha) / 2))

    ts = np.linspace(-math.pi / 2 - alpha, math.pi / 2 - alpha, 241)
    gs = np.array([g(t) for t in ts])
    roots = []
    for a, b, ga, gb in zip(ts[:-1], ts[1:], gs[:-1], gs[1:]):
        if ga == 0.0:
            roots.append(a)
        elif ga * gb < 0:
            roots.append(optimize.brentq(g, a, b, xtol=1e-16, rtol=1e-15))
    if gs[-1] == 0.0:
        roots.append(ts[-1])
    if not roots:
        return None
    best = None
    for t in roots:
        phi = t if depart else math.pi + t
        px = ob.x + R * math.cos(phi)
        pyb = cy + R * math.sin(phi)
        cand = (abs(pyb), px, pyb, t + alpha)
        if best is None or cand < best:
            best = cand
    return best[1], best[2], best[3]


def _meniscus_samples(x, yb, B, depart: bool, n: int = MENISCUS_SAMPLES):
    """Samples of the C = 1 branch between the contact and the cut height."""
    rb = math.sqrt(B)
    Zp = rb * abs(yb)
    sg = 1.0 if yb > 0 else -1.0
    if Zp <= MENISCUS_Z_CUT:
        return np.array([x]), np.array([yb]), np.array([0.0])
    Z = np.geomspace(Zp, MENISCUS_Z_CUT, n)
    FZ = np.array([closed_form_F(z) for z in Z])
    Fp = FZ[0]
    if depart:
        xs = x + (Fp - FZ) / rb
        beta = -sg * 2.0 * np.arcsin(Z / 2.0)
        return xs, sg * Z / rb, beta
    xs = x - (Fp - FZ) / rb
    beta = sg * 2.0 * np.arcsin(Z / 2.0)
    return xs[::-1], (sg * Z / rb)[::-1], beta[::-1]


def composite_component(src: Obstacle, tgt: Obstacle, params: RegimeParams,
                        lam: float) -> Optional[ElementalComponent]:
    """Meniscus, straight run along lam, meniscus; None if they do not fit."""
    B, alpha = params.B, params.alpha
    dep = _meniscus_contact(src, lam, B, alpha, True)
    arr = _meniscus_contact(tgt, lam, B, alpha, False)
    if dep is None or arr is None:
        return None
    rb = math.sqrt(B)
    Fc = closed_form_F(MENISCUS_Z_CUT)

    def reach(yb):
        Z = rb * abs(yb)
        return (closed_form_F(Z) - Fc) / rb if Z > MENISCUS_Z_CUT else 0.0

    if (arr[0] - reach(arr[1])) - (dep[0] + reach(dep[1])) < 1e-2 / max(1.0, rb):
        return None
    xa, ya, ba = _meniscus_samples(dep[0], dep[1], B, True)
    xb, yb, bb = _meniscus_samples(arr[0], arr[1], B, False)
    # pin the contact angles to the exact roots
    ba[0] = dep[2]
    bb[-1] = arr[2]
    gap = xb[0] - xa[-1]
    if gap < 1e-2 / max(1.0, math.sqrt(B)):
        return None
    x = np.concatenate([xa, xb])
    y = np.concatenate([ya, yb])
    beta = np.concatenate([ba, bb])
    seg = np.hypot(np.diff(x), np.diff(y))
    s = np.concatenate([[0.0], np.cumsum(seg)])
    p = ContactPoint.make((x[0], y[0] + lam), dep[2], alpha, src.index,
                          None if src.kind == "grain" else src.kind)
    q = ContactPoint.make((x[-1], y[-1] + lam), arr[2] + math.pi, alpha, tgt.index,
                          None if tgt.kind == "grain" else tgt.kind)
    return ElementalComponent(x, y + lam, beta, s, 1.0, B, lam, (p, q), "composite")


# --- distance bounds ---

def _piece_cap(params: RegimeParams) -> int:
    return int(math.ceil(params.L * math.sqrt(params.B) / math.sqrt(2 * (math.pi ** 2 + 4)))) + 1


def distance_bracket(comp: ElementalComponent, params: RegimeParams) -> Tuple[float, float, str]:
    """(lower, upper, class label) for the center distance of a grain-grain component."""
    B, R, C = params.B, params.R, comp.C
    p, q = comp.contacts
    bp = p.beta_c
    bq = wrap_angle(q.beta_c + math.pi)
    lower = 2 * R + abs(math.cos(bp) - math.cos(bq)) / math.sqrt(2 * B * max(C + 1, 1e-300))
    direction = comp.direction
    rl_bound = 2 * R + math.sqrt((math.pi ** 2 + 2) / (B * (C + 1))) if C > -1 else math.inf
    if C <= 0:
        n = min(comp.n_pieces, _piece_cap(params))
        return lower, 2 * R + n * math.sqrt(2 * (math.pi ** 2 + 4) / B), "C<=0"
    if C < 1:
        if direction == "lr":
            return lower, 2 * R + 6 / math.sqrt(B * (1 - C)), "0<C<1 lr"
        return lower, rl_bound, "0<C<1 rl"
    if C > 1:
        if direction == "lr":
            return lower, 2 * R + 2 * math.sqrt(5 / (B * (C - 1))), "C>1 lr"
        return lower, rl_bound, "C>1 rl"
    return lower, (math.inf if direction == "lr" else rl_bound), f"C=1 {direction}"


def class_rejects(d: float, C: float, direction: str, params: RegimeParams,
                  n_pieces: int = 1) -> bool:
    """True when the center distance d exceeds the upper bound of the class (C, direction)."""
    B, R = params.B, params.R
    if C <= 0:
        n = min(n_pieces, _piece_cap(params))
        return d > 2 * R + n * math.sqrt(2 * (math.pi ** 2 + 4) / B)
    if direction == "rl":
        return d > 2 * R + math.sqrt((math.pi ** 2 + 2) / (B * (C + 1)))
    if C > 1:
        return d > 2 * R + 2 * math.sqrt(5 / (B * (C - 1)))
    if C < 1:
        return d > 2 * R + 6 / math.sqrt(B * (1 - C))
    return False


# --- pair solver ---

def _check_pair(a: Obstacle, b: Obstacle):
    if a.kind == "grain" and b.kind == "grain":
        d = math.hypot(a.x - b.x, a.y - b.y)
        if d == 0.0:
            raise DegenerateInputError("coincident grains")
        if d <= a.R + b.R:
            raise DegenerateInputError("overlapping grains cannot be joined by a component")
    if a.kind == b.kind and a.kind != "grain":
        raise DegenerateInputError("a component cannot join a wall to itself")


def connection_candidates(src: Obstacle, tgt: Obstacle, params: RegimeParams, lam: float,
                          n_grid: int = 96, use_composite: bool = True,
                          local_first: bool = False) -> List[ElementalComponent]:
    """All connections found, best first.

    With local_first, a short scan around the straight-line guess is tried
    before the full scan and its roots are returned if there are any.
    """
    _check_pair(src, tgt)
    L = params.L
    for ob in (src, tgt):
        if ob.kind == "grain" and not (0 <= ob.x <= L and 0 <= ob.y <= L):
            raise DomainError("grain center outside the box")
    d = math.hypot(src.x - tgt.x, src.y - tgt.y) if src.kind == tgt.kind == "grain" \
        else abs(src.x - tgt.x)
    gap = max(d - src.R - tgt.R, 0.0)
    cc = composite_component(src, tgt, params, lam) if use_composite else None
    if cc is not None and gap * math.sqrt(params.B) > SHOOT_MAX_SCALED_GAP:
        return [cc]
    st = _setup(src, tgt, params, lam)
    # cheapest scans first; free (non-monotone) arcs only after monotone ones fail
    plan = [(True, False), (True, True)] if local_first else []
    plan += [(False, False), (False, True)]
    comps: List[ElementalComponent] = []
    for local, free in plan:
        if free and src.kind != "grain":
            continue
        comps = _solve_shots(st, n_grid, local=local, free=free)
        if comps:
            break
    comps.sort(key=_preference_key)
    if cc is not None:
        comps.append(cc)
    return comps


def connect_pair(xi, zeta, params: RegimeParams, lam: float,
                 n_grid: int = 96) -> Optional[ElementalComponent]:
    """Best component from grain xi to grain zeta, or None."""
    a = Obstacle.grain(xi, params.R, 0)
    b = Obstacle.grain(zeta, params.R, 1)
    c = connection_candidates(a, b, params, lam, n_grid)
    return c[0] if c else None


def young_residual(comp: ElementalComponent, params: RegimeParams) -> float:
    """Largest contact-angle error of the two contacts, measured from the geometry."""
    alpha = params.alpha
    worst = 0.0
    for end, c in ((0, comp.contacts[0]), (-1, comp.contacts[1])):
        beta_c = comp.beta[0] if end == 0 else comp.beta[-1] + math.pi
        if c.wall == "left":
            phi = 0.0
        elif c.wall == "right":
            phi = math.pi
        else:
            phi = None
        worst = max(worst, abs(wrap_angle(beta_c - c.beta_c)))
        if phi is not None:
            worst = max(worst, abs(wrap_angle(beta_c - phi - alpha)))
        else:
            worst = max(worst, abs(wrap_angle(c.rho_c - (alpha - beta_c))))
    return worst


def young_residual_on_grains(comp: ElementalComponent, params: RegimeParams,
                             centers: np.ndarray) -> float:
    """Contact-angle error against the actual grain normals."""
    alpha = params.alpha
    worst = young_residual(comp, params)
    for end, c in ((0, comp.contacts[0]), (-1, comp.contacts[1])):
        if c.grain_index is None or c.wall is not None:
            continue
        cx, cy = centers[c.grain_index]
        phi = math.atan2(c.point[1] - cy, c.point[0] - cx)
        beta_c = comp.beta[0] if end == 0 else comp.beta[-1] + math.pi
        worst = max(worst, abs(wrap_angle(beta_c - phi - alpha)))
    return worst


def contact_radius_error(comp: ElementalComponent, params: RegimeParams,
                         centers: np.ndarray) -> float:
    """Largest | |p - xi| - R | over the grain contacts."""
    worst = 0.0
    for c in comp.contacts:
        if c.grain_index is None:
            continue
        cx, cy = centers[c.grain_index]
        worst = max(worst, abs(math.hypot(c.point[0] - cx, c.point[1] - cy) - params.R))
    return worst


# --- interfaces ---

@dataclass
class Interface:
    components: List[ElementalComponent]
    grains_connected: List[int]
    C_max: float
    volume: VolumeState
    params: RegimeParams
    centers: np.ndarray
    clusters: List[List[int]] = field(default_factory=list)

    def __post_init__(self):
        if not self.clusters:
            self.clusters = [[g] for g in self.grains_connected]

    @property
    def lam(self) -> float:
        return self.volume.lam

    @property
    def m(self) -> int:
        return len(self.grains_connected)

    def polyline(self) -> np.ndarray:
        """Sampled interface, joined through each grain by the contact chord."""
        pts = [np.column_stack([c.x1, c.x2]) for c in self.components]
        return np.concatenate(pts, axis=0)

    def chain_points(self) -> np.ndarray:
        """Wall contact, the centers of the attached grains in order, wall contact."""
        pts = [self.components[0].contacts[0].point]
        for a, b in zip(self.components[:-1], self.components[1:]):
            gi, go = a.contacts[1].grain_index, b.contacts[0].grain_index
            pts.append(tuple(self.centers[gi]))
            if go != gi:
                pts.append(tuple(self.centers[go]))
        pts.append(self.components[-1].contacts[1].point)
        return np.array(pts, dtype=float)

    def is_horizontal(self) -> bool:
        return self.m == 0


def max_deviation(gamma: Interface) -> float:
    y = np.concatenate([c.x2 for c in gamma.components])
    return float(np.max(np.abs(y - gamma.volume.lam)))


def area_below(gamma: Interface) -> float:
    """Area of [0, L]^2 below the interface polyline (shoelace)."""
    P = gamma.polyline()
    L = gamma.params.L
    poly = np.vstack([P, [[L, 0.0], [0.0, 0.0]]])
    x, y = poly[:, 0], poly[:, 1]
    return float(0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))


def count_below(polyline: np.ndarray, centers: np.ndarray) -> int:
    """Number of centers below the polyline, by upward ray parity."""
    if centers.size == 0:
        return 0
    order = np.argsort(centers[:, 0], kind="stable")
    cx = centers[order, 0]
    cy = centers[order, 1]
    parity = np.zeros(cx.size, dtype=np.int64)
    P = polyline
    for k in range(P.shape[0] - 1):
        x0, y0, x1, y1 = P[k, 0], P[k, 1], P[k + 1, 0], P[k + 1, 1]
        if x0 == x1:
            continue
        lo, hi = (x0, x1) if x0 < x1 else (x1, x0)
        # half-open in x so that a shared vertex is counted once
        i0 = np.searchsorted(cx, lo, side="left")
        i1 = np.searchsorted(cx, hi, side="left")
        if i1 <= i0:
            continue
        t = (cx[i0:i1] - x0) / (x1 - x0)
        yc = y0 + t * (y1 - y0)
        parity[i0:i1] += yc > cy[i0:i1]
    return int(np.count_nonzero(parity % 2 == 1))


# --- grain crossing checks ---

def _seg_point_dist(P: np.ndarray, c: np.ndarray) -> np.ndarray:
    """Distances from each point in c (k, 2) to the polyline P."""
    a = P[:-1]
    d = P[1:] - a
    dd = np.einsum("ij,ij->i", d, d)
    out = np.full(c.shape[0], np.inf)
    for k in range(c.shape[0]):
        w = c[k] - a
        with np.errstate(divide="ignore", invalid="ignore"):
            t = np.where(dd > 0, np.einsum("ij,ij->i", w, d) / dd, 0.0)
        t = np.clip(t, 0.0, 1.0)
        r = w - t[:, None] * d
        out[k] = math.sqrt(float(np.min(np.einsum("ij,ij->i", r, r))))
    return out


def crossed_grains(comp: ElementalComponent, centers: np.ndarray, R: float,
                   exclude: Sequence[int] = (), tree=None) -> List[int]:
    """Grains whose open disc the component enters, ordered along the component."""
    if R <= 0 or centers.size == 0:
        return []
    P = np.column_stack([comp.x1, comp.x2])
    lo = P.min(axis=0) - R
    hi = P.max(axis=0) + R
    if tree is not None:
        cand = np.array(sorted(tree.query_ball_point(0.5 * (lo + hi), 0.5 * float(np.hypot(*(hi - lo))))),
                        dtype=np.int64)
    else:
        cand = np.arange(centers.shape[0])
    cc = centers[cand]
    mask = np.all((cc >= lo) & (cc <= hi), axis=1)
    ex = set(exclude)
    idx = [int(i) for i in cand[mask] if int(i) not in ex]
    if not idx:
        return []
    dist = _seg_point_dist(P, centers[idx])
    # endpoints sit on their own circles; anything else must stay outside
    hit = [i for i, dv in zip(idx, dist) if dv < R * (1 - 1e-9)]
    if not hit:
        return []
    # order by first approach along the component
    order = []
    for i in hit:
        r = np.hypot(P[:, 0] - centers[i, 0], P[:, 1] - centers[i, 1])
        order.append((int(np.argmax(r < R)) if np.any(r < R) else int(np.argmin(r)), i))
    return [i for _, i in sorted(order)]


# --- assembly ---

class BuildFailure(Exception):
    """The chain could not be completed."""


def _overlap(field: GrainField, i: int, j: int) -> bool:
    c = field.centers
    return float(np.hypot(*(c[i] - c[j]))) < 2 * field.params.R


def _initial_clusters(field: GrainField, chain: Sequence[int]) -> List[List[int]]:
    """Group runs of consecutive overlapping chain grains."""
    out: List[List[int]] = []
    for g in chain:
        g = int(g)
        if out and any(_overlap(field, g, h) for h in out[-1]):
            out[-1].append(g)
        else:
            out.append([g])
    return out


def _members(field: GrainField, element) -> List[Obstacle]:
    if isinstance(element, str):
        return [Obstacle.wall(element, field.params.L)]
    R = field.params.R
    return [Obstacle.grain(field.centers[g], R, g) for g in element]


def _connect_elements(A, B, field: GrainField, lam: float, n_grid: int, local_first: bool,
                      tree, arrived: Optional[int]
                      ) -> Tuple[Optional[ElementalComponent], List[int]]:
    """Best admissible component from element A to element B.

    Elements are walls or clusters of overlapping grains; a component may
    attach to any member circle.  Returns (component, []) or (None, grains
    outside A and B that block the candidates).
    """
    p = field.params
    inside = set() if isinstance(A, str) else set(A)
    if not isinstance(B, str):
        inside |= set(B)
    srcs = _members(field, A)
    # leave the cluster from the member the interface arrived on first
    srcs.sort(key=lambda o: o.index != arrived)
    tgts = _members(field, B)
    pairs = sorted(((a, b) for a in srcs for b in tgts),
                   key=lambda ab: (ab[0].index != arrived, math.hypot(ab[0].x - ab[1].x, ab[0].y - ab[1].y)))
    blockers: List[int] = []
    for a, b in pairs:
        try:
            cands = connection_candidates(a, b, p, lam, n_grid, local_first=local_first)
        except DegenerateInputError:
            continue
        excl = [i for i in (a.index, b.index) if i is not None]
        for c in cands:
            hits = crossed_grains(c, field.centers, p.R, excl, tree)
            if not hits:
                return c, []
            outside = [h for h in hits if h not in inside]
            if outside and not blockers:
                blockers = outside
    return None, blockers


def chain_interface(field: GrainField, chain: Sequence[int], lam: float,
                    n_grid: int = 96, max_inserts: int = 64,
                    local_first: bool = False, count_volume: bool = True) -> Interface:
    """Interface through the given grains in order, at reference height lam.

    Runs of overlapping grains act as one obstacle.  A component that enters
    some other grain is rerouted through it (or through the cluster it
    overlaps), so the chain can grow by up to max_inserts grains.  Raises
    BuildFailure.
    """
    p = field.params
    elems: list = ["left"] + _initial_clusters(field, chain) + ["right"]
    comps: List[ElementalComponent] = []
    inserts = 0
    k = 0
    tree = cKDTree(field.centers) if field.N > 2000 else None
    arrived: Optional[int] = None
    while k < len(elems) - 1:
        comp, blockers = _connect_elements(elems[k], elems[k + 1], field, lam, n_grid,
                                           local_first, tree, arrived)
        if comp is None:
            if not blockers or inserts >= max_inserts:
                raise BuildFailure(f"no connection between chain positions {k} and {k + 1}")
            g = blockers[0]
            if any(not isinstance(e, str) and g in e for e in elems):
                raise BuildFailure(f"connection re-enters chain grain {g}")
            A, B = elems[k], elems[k + 1]
            in_a = not isinstance(A, str) and any(_overlap(field, g, h) for h in A)
            in_b = not isinstance(B, str) and any(_overlap(field, g, h) for h in B)
            if in_a and in_b:
                A.append(g)
                A.extend(B)
                del elems[k + 1]
            elif in_a:
                A.append(g)
            elif in_b:
                B.insert(0, g)
            else:
                elems.insert(k + 1, [g])
            inserts += 1
            continue
        comps.append(comp)
        arrived = comp.contacts[1].grain_index
        k += 1
    clusters = [e for e in elems[1:-1]]
    reps = [c.contacts[1].grain_index for c in comps[:-1]]
    C_max = max(c.C for c in comps)
    vol = VolumeState(lam / p.L, lam, 0)
    gamma = Interface(comps, reps, C_max, vol, p, field.centers, clusters)
    if count_volume:
        gamma.volume = VolumeState(lam / p.L, lam, count_below(gamma.polyline(), field.centers))
    return gamma


def straddling_grains(field: GrainField, lam: float) -> List[int]:
    """Grains cut by the line x2 = lam, ordered by x1."""
    c = field.centers
    if c.size == 0:
        return []
    idx = np.nonzero(np.abs(c[:, 1] - lam) < field.params.R)[0]
    return [int(i) for i in idx[np.argsort(c[idx, 0], kind="stable")]]


def build_interface(field: GrainField, n_grid: int = 96, tol: float = 1e-6,
                    max_iter: int = 50) -> Optional[Interface]:
    """Interface along the volume-consistent reference line, or None.

    The search starts from the left wall at height lam and visits, left to
    right, every grain the line x2 = lam cuts; any grain that a component
    would enter is added to the chain and the connection is retried.  The
    reference height follows the volume fixed point.
    """
    built: Dict[float, Optional[Interface]] = {}

    def build_at(lam: float) -> Optional[Interface]:
        if lam not in built:
            try:
                built[lam] = chain_interface(field, straddling_grains(field, lam), lam, n_grid)
            except BuildFailure:
                built[lam] = None
        return built[lam]

    def n_below(lam: float) -> int:
        g = build_at(lam)
        return g.volume.n_below if g is not None else count_below(
            np.array([[0.0, lam], [field.params.L, lam]]), field.centers)

    state = volume_fixed_point(field, n_below, tol=tol, max_iter=max_iter)
    gamma = build_at(state.lam)
    if gamma is None:
        return None
    gamma.volume = VolumeState(state.v1, state.lam, gamma.volume.n_below)
    return gamma


def reflect_interface(gamma: Interface, field: GrainField) -> Interface:
    """Mirror image under x1 -> L - x1, traversed left to right again.

    Mirroring alone swaps lr and rl; reversing the order of travel restores
    the air-on-the-left orientation so the image solves the same equations.
    """
    L = gamma.params.L
    alpha = gamma.params.alpha
    comps = []
    for c in reversed(gamma.components):
        m = c.mirrored(L)
        p, q = m.contacts
        beta = np.pi + m.beta[::-1]
        beta = np.array([wrap_angle(b) for b in beta])
        s = m.s[-1] - m.s[::-1]
        np_ = ContactPoint.make(q.point, wrap_angle(beta[0]), alpha, q.grain_index, q.wall)
        nq = ContactPoint.make(p.point, wrap_angle(beta[-1] + math.pi), alpha, p.grain_index, p.wall)
        comps.append(ElementalComponent(m.x1[::-1].copy(), m.x2[::-1].copy(), beta, s, c.C, c.B,
                                        c.lam, (np_, nq), c.kind))
    centers = gamma.centers.copy()
    centers[:, 0] = L - centers[:, 0]
    reps = [c.contacts[1].grain_index for c in comps[:-1]]
    clusters = [list(reversed(cl)) for cl in reversed(gamma.clusters)]
    return Interface(comps, reps, gamma.C_max, gamma.volume, gamma.params, centers, clusters)


# --- chains through open sites ---

def open_site_path(open_sites: np.ndarray, target_rows: np.ndarray, band: float,
                   width: float = 3.0) -> Optional[List[Tuple[int, int]]]:
    """Cheapest x1-monotone path of open sites from column 0 to the last column.

    Moves go right, up or down.  Entering site (i, j) costs
    1 + ((j + 1/2 - target_rows[i]) / width)^2, and sites farther than band
    from the target are excluded.  Returns the site list or None.
    """
    import heapq
    M = open_sites.shape[0]
    rows = np.arange(M) + 0.5
    allowed = open_sites & (np.abs(rows[None, :] - target_rows[:, None]) <= band)
    cost = 1.0 + ((rows[None, :] - target_rows[:, None]) / width) ** 2
    dist = np.full((M, M), np.inf)
    prev = -np.ones((M, M, 2), dtype=np.int64)
    heap = []
    for j in np.nonzero(allowed[0])[0]:
        dist[0, j] = cost[0, j]
        heap.append((dist[0, j], 0, int(j)))
    heapq.heapify(heap)
    while heap:
        dcur, i, j = heapq.heappop(heap)
        if dcur > dist[i, j]:
            continue
        if i == M - 1:
            path = [(i, j)]
            while prev[i, j, 0] >= 0:
                i, j = int(prev[i, j, 0]), int(prev[i, j, 1])
                path.append((i, j))
            return path[::-1]
        for di, dj in ((1, 0), (0, 1), (0, -1)):
            a, b = i + di, j + dj
            if 0 <= a < M and 0 <= b < M and allowed[a, b]:
                nd = dcur + cost[a, b]
                if nd < dist[a, b]:
                    dist[a, b] = nd
                    prev[a, b] = (i, j)
                    heapq.heappush(heap, (nd, a, b))
    return None


def site_grains(field: GrainField, path: Sequence[Tuple[int, int]], s: float) -> List[int]:
    """For each unit site of the path, the grain in its inner square nearest its center."""
    c = field.centers
    half = 0.5 * math.sqrt(s)
    ii = np.floor(c[:, 0]).astype(np.int64)
    jj = np.floor(c[:, 1]).astype(np.int64)
    M = int(round(field.params.L))
    key = ii * (M + 1) + jj
    order = np.argsort(key, kind="stable")
    ks = key[order]
    out = []
    for i, j in path:
        k = i * (M + 1) + j
        a, b = np.searchsorted(ks, k, "left"), np.searchsorted(ks, k, "right")
        best, bd = None, math.inf
        for g in order[a:b]:
            du, dv = c[g, 0] - i - 0.5, c[g, 1] - j - 0.5
            if abs(du) <= half and abs(dv) <= half and du * du + dv * dv < bd:
                best, bd = int(g), du * du + dv * dv
        if best is None:
            raise BuildFailure(f"site {(i, j)} is not open")
        out.append(best)
    return out


def build_site_interface(field: GrainField, curve: CompatibleCurve, s: float, band: float,
                         lam: Optional[float] = None, n_grid: int = 96) -> Optional[Interface]:
    """Interface through one grain per site along an open path that follows curve.

    The reference height lam defaults to V L and is updated once from the
    area below the first interface.
    """
    p = field.params
    M = int(round(p.L))
    open_sites = site_states(field.centers, 0.0, 0.0, M, s)
    target = curve.height_at((np.arange(M) + 0.5) / M) * p.L
    path = open_site_path(open_sites, target, band)
    if path is None:
        return None
    chain = site_grains(field, path, s)
    lam = curve.V * p.L if lam is None else lam
    gamma = None
    for _ in range(2):
        try:
            gamma = chain_interface(field, chain, lam, n_grid, max_inserts=4 * M,
                                    local_first=True, count_volume=False)
        except BuildFailure:
            return None
        v1 = area_below(gamma) / (p.L * p.L)
        gamma.volume = VolumeState(v1, v1 * p.L, 0)
        lam = v1 * p.L
    return gamma


# --- verification ---

@njit(cache=True)
def _segments_cross(ax, ay, bx, by, cx, cy, dx, dy):
    def orient(px, py, qx, qy, rx, ry):
        return (qx - px) * (ry - py) - (qy - py) * (rx - px)
    o1 = orient(ax, ay, bx, by, cx, cy)
    o2 = orient(ax, ay, bx, by, dx, dy)
    o3 = orient(cx, cy, dx, dy, ax, ay)
    o4 = orient(cx, cy, dx, dy, bx, by)
    return (o1 * o2 < 0.0) and (o3 * o4 < 0.0)


@njit(cache=True)
def _count_crossings(X, Y, comp, order):
    """Proper crossings between segments i -> i+1 of different components or
    non-adjacent segments of one component.  Segments are swept in order of
    their smallest x1."""
    n = order.size
    count = 0
    for a in range(n):
        i = order[a]
        ax0 = min(X[i], X[i + 1])
        ax1 = max(X[i], X[i + 1])
        ay0 = min(Y[i], Y[i + 1])
        ay1 = max(Y[i], Y[i + 1])
        for b in range(a + 1, n):
            j = order[b]
            if min(X[j], X[j + 1]) > ax1:
                break
            if comp[i] == comp[j] and abs(i - j) <= 1:
                continue
            if max(Y[j], Y[j + 1]) < ay0 or min(Y[j], Y[j + 1]) > ay1:
                continue
            if _segments_cross(X[i], Y[i], X[i + 1], Y[i + 1], X[j], Y[j], X[j + 1], Y[j + 1]):
                count += 1
    return count


def component_crossings(components: Sequence[ElementalComponent], max_points: int = 4000) -> int:
    xs, ys, ids = [], [], []
    for k, c in enumerate(components):
        n = c.x1.size
        step = max(1, n // max_points)
        sel = np.unique(np.concatenate([np.arange(0, n, step), [n - 1]]))
        xs.append(c.x1[sel])
        ys.append(c.x2[sel])
        ids.append(np.full(sel.size, k))
        # separator so that the last point of one component does not join the next
        xs.append(np.array([np.nan]))
        ys.append(np.array([np.nan]))
        ids.append(np.array([-1]))
    X = np.concatenate(xs)
    Y = np.concatenate(ys)
    comp = np.concatenate(ids)
    seg_ok = np.nonzero(np.isfinite(X[:-1]) & np.isfinite(X[1:]))[0]
    key = np.minimum(X[seg_ok], X[seg_ok + 1])
    order = seg_ok[np.argsort(key, kind="stable")].astype(np.int64)
    return int(_count_crossings(X, Y, comp, order))


@dataclass
class VerificationReport:
    checks: Dict[str, bool]
    details: Dict[str, object] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def failures(self) -> List[str]:
        return [k for k, v in self.checks.items() if not v]


def length_bound(m_components: int, params: RegimeParams, K1: float, K2: float) -> float:
    return 4 * m_components * (2 * params.R + K1 / math.sqrt(params.B)) + K2 * params.L


def chain_length(gamma: Interface) -> float:
    P = gamma.chain_points()
    return float(np.sum(np.hypot(np.diff(P[:, 0]), np.diff(P[:, 1]))))


def verify_interface(gamma: Interface, constants: Optional[ConstantsFile] = None,
                     young_tol: float = 1e-6, curvature_tol: float = 1e-3) -> VerificationReport:
    """Checks: (a) crossings, (b) distance brackets, (c) strip gaps, (d) length
    bound, plus contact angles, curvature, walls and component count."""
    if constants is None:
        constants = load_constants()
    p = gamma.params
    lam = gamma.lam
    comps = gamma.components
    checks: Dict[str, bool] = {}
    det: Dict[str, object] = {}

    n_cross = component_crossings(comps)
    checks["non_intersection"] = n_cross == 0
    det["crossings"] = n_cross

    viol = []
    for k, c in enumerate(comps):
        pc, qc = c.contacts
        if pc.grain_index is None or qc.grain_index is None:
            continue
        d = float(np.hypot(*(gamma.centers[pc.grain_index] - gamma.centers[qc.grain_index])))
        lo, hi, cls = distance_bracket(c, p)
        if not (lo < d < hi):
            viol.append((k, cls, lo, d, hi))
    checks["distance_brackets"] = not viol
    det["distance_violations"] = viol

    D0 = constants.D0(max(gamma.C_max, 1.0))
    gaps = []
    rb = math.sqrt(p.B)
    for c in comps:
        a, b = c.contacts[0].grain_index, c.contacts[1].grain_index
        if a is None or b is None:
            continue
        ya = gamma.centers[a, 1] - lam
        yb = gamma.centers[b, 1] - lam
        # both discs inside the same strip {|x2 - lam| >= D/sqrt(B)}
        D = rb * (min(abs(ya), abs(yb)) - p.R)
        if D >= D0 and ya * yb > 0:
            dist = float(np.hypot(*(gamma.centers[a] - gamma.centers[b])))
            cap = constants.K / (D * rb) + 2 * p.R
            if dist > cap:
                gaps.append((a, b, D, dist, cap))
    checks["strip_condition"] = not gaps
    det["strip_violations"] = gaps
    det["D0"] = D0

    total = chain_length(gamma) if gamma.m > 0 else 0.0
    bound = length_bound(len(comps), p, constants.K1, constants.K2)
    checks["length_bound"] = total < bound
    det["chain_length"] = total
    det["length_bound"] = bound

    yr = max(young_residual_on_grains(c, p, gamma.centers) for c in comps)
    checks["young"] = yr < young_tol
    det["young_residual"] = yr
    re_ = max(contact_radius_error(c, p, gamma.centers) for c in comps)
    checks["contacts_on_grains"] = re_ < 1e-9 * max(1.0, p.R)
    det["contact_radius_error"] = re_
    cr = max(c.curvature_residual() for c in comps)
    checks["curvature"] = cr < curvature_tol
    det["curvature_residual"] = cr

    first, last = comps[0].contacts[0], comps[-1].contacts[1]
    checks["walls"] = first.wall == "left" and last.wall == "right" \
        and abs(first.point[0]) < 1e-9 and abs(last.point[0] - p.L) < 1e-9 * max(1.0, p.L)
    chained = len(gamma.clusters) == len(comps) - 1 and all(
        a.contacts[1].grain_index in cl and b.contacts[0].grain_index in cl
        for a, b, cl in zip(comps[:-1], comps[1:], gamma.clusters))
    checks["component_count"] = len(comps) == gamma.m + 1 and chained
    return VerificationReport(checks, det)


# --- level decomposition ---

@dataclass
class Level:
    components: List[int]
    grains: List[int]
    d_min: float
    d_max: float
    side: int            # +1 above, -1 below, 0 crossing
    parity_class: str    # lr, rl or mixed
    spans_box: bool


@dataclass
class LevelDecomposition:
    levels: List[Level]
    zigzag_type: Optional[str]
    N_plus: int
    N_minus: int
    gamma0: List[int] = field(default_factory=list)

    def alternates(self) -> bool:
        """Neighbouring levels alternate between lr and rl."""
        cls = [lv.parity_class for lv in self.levels]
        return all(a != b and a != "mixed" and b != "mixed" for a, b in zip(cls[:-1], cls[1:]))


def vertical_allowance(d_min: float, B: float, R: float) -> float:
    rb = math.sqrt(B)
    return 2 * R + (4 / rb) / (1 + rb * d_min)


def decompose_levels(gamma: Interface) -> LevelDecomposition:
    """Greedy split of the chain into maximal runs obeying the level restriction.

    Heights are those of the grain centers of a run (the component samples
    when no grain is connected).  Component k departs from chain position k,
    so it belongs to the level of its departure grain; the first component
    (from the wall) joins the first level.
    """
    p = gamma.params
    lam = gamma.lam
    comps = gamma.components
    if gamma.m == 0:
        d = np.abs(np.concatenate([c.x2 for c in comps]) - lam)
        lv = Level(list(range(len(comps))), [], float(d.min()), float(d.max()), 0,
                   comps[0].direction, True)
        return LevelDecomposition([lv], None, 0, 0)

    g = gamma.grains_connected
    yb = gamma.centers[g, 1] - lam
    runs: List[List[int]] = [[0]]
    for k in range(1, len(g)):
        cur = runs[-1] + [k]
        d = np.abs(yb[cur])
        if d.max() - d.min() <= vertical_allowance(float(d.min()), p.B, p.R):
            runs[-1] = cur
        else:
            runs.append([k])

    levels = []
    L = p.L
    for r_i, run in enumerate(runs):
        comp_idx = [k + 1 for k in run]
        if r_i == 0:
            comp_idx = [0] + comp_idx
        comp_idx = [k for k in comp_idx if k < len(comps)]
        d = np.abs(yb[run])
        xs = gamma.centers[[g[k] for k in run], 0]
        side = 1 if np.all(yb[run] > 0) else (-1 if np.all(yb[run] < 0) else 0)
        dirs = [comps[k].direction for k in comp_idx if comps[k].contacts[0].grain_index is not None
                and comps[k].contacts[1].grain_index is not None
                and comps[k].contacts[1].grain_index in [g[j] for j in run]]
        if not dirs:
            dirs = [comps[k].direction for k in comp_idx]
        n_lr = dirs.count("lr")
        n_rl = dirs.count("rl")
        parity = "lr" if n_lr > 0 and n_rl == 0 else ("rl" if n_rl > 0 and n_lr == 0 else "mixed")
        spans = bool(xs.min() < 2 * p.R + 1 and (L - xs.max()) < 2 * p.R + 1)
        levels.append(Level(comp_idx, [g[k] for k in run], float(d.min()), float(d.max()),
                            side, parity, spans))

    # crossing level: first and last grain on opposite sides of the line
    zig = None
    gamma0: List[int] = []
    n_plus = n_minus = 0
    cross = [i for i, lv in enumerate(levels)
             if (gamma.centers[lv.grains[0], 1] - lam) * (gamma.centers[lv.grains[-1], 1] - lam) < 0]
    if cross:
        c0 = cross[0]
        gamma0 = [i for i in (c0 - 1, c0, c0 + 1) if 0 <= i < len(levels)]
        lv = levels[c0]
        down = gamma.centers[lv.grains[0], 1] > lam
        if lv.parity_class == "lr":
            zig = "I" if down else "III"
        elif lv.parity_class == "rl":
            zig = "II" if down else "IV"
        for i, other in enumerate(levels):
            if i in gamma0:
                continue
            mean = float(np.mean(gamma.centers[other.grains, 1] - lam))
            if mean > 0:
                n_plus += 1
            else:
                n_minus += 1
    return LevelDecomposition(levels, zig, n_plus, n_minus, gamma0)
