"""Site percolation on unit cells with centered fill squares.

A box of M x M unit sites is laid over a grain field.  Site (i, j) is open
when some grain center falls in its centered fill square of area s.  Open
sites connect through edges (4-adjacency), closed sites through edges and
corners (8-adjacency).  Grids are indexed states[i, j] with i the column
(x) and j the row (y), both 0-based.
"""

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from numba import njit
from scipy import optimize
from scipy.spatial import cKDTree

from .asymptotic_bounds import crossing_bound_log_terms
from .errors import DomainError, InfeasibleError
from .grain_field import GrainField, RegimeParams, rng_for, trial_seed

SIDES = ("bottom", "left", "top", "right")   # sides 1..4


# --- grids ---

@dataclass(frozen=True)
class SiteGrid:
    M: int
    states: np.ndarray          # bool (M, M), True = open
    s: float
    origin: Tuple[float, float] = (0.0, 0.0)

    @property
    def q_empirical(self) -> float:
        """Fraction of closed sites."""
        return float(1.0 - self.states.mean()) if self.M else 0.0

    def to_rle(self) -> str:
        rows = [f"{self.M} {self.s!r} {self.origin[0]!r} {self.origin[1]!r}"]
        for j in range(self.M):
            row = self.states[:, j]
            out = []
            k = 0
            while k < self.M:
                v = row[k]
                n = 1
                while k + n < self.M and row[k + n] == v:
                    n += 1
                out.append(f"{n}{'o' if v else 'c'}")
                k += n
            rows.append("".join(out))
        return "\n".join(rows) + "\n"

    @staticmethod
    def from_rle(text: str) -> "SiteGrid":
        lines = text.strip().splitlines()
        head = lines[0].split()
        M, s = int(head[0]), float(head[1])
        origin = (float(head[2]), float(head[3])) if len(head) >= 4 else (0.0, 0.0)
        st = np.zeros((M, M), dtype=bool)
        for j, line in enumerate(lines[1:1 + M]):
            i = 0
            num = ""
            for ch in line.strip():
                if ch.isdigit():
                    num += ch
                else:
                    n = int(num)
                    st[i:i + n, j] = ch == "o"
                    i += n
                    num = ""
            if i != M:
                raise DomainError(f"RLE row {j} has {i} sites, expected {M}")
        return SiteGrid(M, st, s, origin)


def site_states(centers: np.ndarray, x0: float, y0: float, M: int, s: float) -> np.ndarray:
    half = 0.5 * math.sqrt(s)
    st = np.zeros((M, M), dtype=bool)
    if centers.size == 0:
        return st
    u = centers[:, 0] - x0
    v = centers[:, 1] - y0
    i = np.floor(u).astype(np.int64)
    j = np.floor(v).astype(np.int64)
    inside = (i >= 0) & (i < M) & (j >= 0) & (j < M)
    inside &= (np.abs(u - i - 0.5) <= half) & (np.abs(v - j - 0.5) <= half)
    st[i[inside], j[inside]] = True
    return st


def build_site_grid(field: GrainField, box, s: float) -> SiteGrid:
    """box = (x0, y0, side); side must be a whole number of unit sites."""
    if not 0 < s < 1:
        raise DomainError(f"fill area must lie in (0, 1), got {s}")
    x0, y0, side = box
    M = int(round(side))
    if abs(side - M) > 1e-9 or M < 1:
        raise DomainError(f"box side {side} is not a positive whole number of sites")
    return SiteGrid(M, site_states(field.centers, x0, y0, M, s), s, (float(x0), float(y0)))


def bernoulli_grid(M: int, q: float, rng: np.random.Generator, s: float = 0.5) -> SiteGrid:
    """Independent sites, closed with probability q (comparison mode)."""
    return SiteGrid(M, rng.random((M, M)) >= q, s)


# --- boundary arcs ---

@dataclass(frozen=True)
class BoundarySegment:
    side: str
    start: int      # 0-based, inclusive, along the side
    stop: int       # inclusive

    def sites(self, M: int) -> List[Tuple[int, int]]:
        if self.side not in SIDES:
            raise DomainError(f"unknown side {self.side!r}")
        if not 0 <= self.start <= self.stop < M:
            raise DomainError(f"segment [{self.start}, {self.stop}] outside side of length {M}")
        r = range(self.start, self.stop + 1)
        if self.side == "bottom":
            return [(k, 0) for k in r]
        if self.side == "top":
            return [(k, M - 1) for k in r]
        if self.side == "left":
            return [(0, k) for k in r]
        return [(M - 1, k) for k in r]

    @property
    def length(self) -> int:
        return self.stop - self.start + 1


def centered_segment(side: str, M: int, length: Optional[int] = None) -> BoundarySegment:
    n = max(1, M // 3) if length is None else int(length)
    start = (M - n) // 2
    return BoundarySegment(side, start, start + n - 1)


def boundary_edges(M: int) -> List[Tuple[str, int]]:
    """The 4M unit edges of the box boundary, counterclockwise from (0, 0).

    An edge is (side, k) with k the site index along that side.
    """
    ring = [("bottom", i) for i in range(M)]
    ring += [("right", j) for j in range(M)]
    ring += [("top", i) for i in range(M - 1, -1, -1)]
    ring += [("left", j) for j in range(M - 1, -1, -1)]
    return ring


def _edge_site(M: int, edge: Tuple[str, int]) -> Tuple[int, int]:
    side, k = edge
    return BoundarySegment(side, k, k).sites(M)[0]


def boundary_ring(M: int) -> List[Tuple[int, int]]:
    """The 4(M-1) boundary sites in counterclockwise order from (0, 0)."""
    out = []
    for e in boundary_edges(M):
        site = _edge_site(M, e)
        if not out or (out[-1] != site and (len(out) < 2 or out[0] != site)):
            if site not in out:
                out.append(site)
    return out


def complement_arcs(M: int, A1: BoundarySegment, A2: BoundarySegment):
    """Sites of the two boundary arcs between A1 and A2.

    Arcs are runs of boundary edges outside A1 and A2.  The sites of an arc
    are the sites of its edges plus the sites at the two segment ends it
    touches: a closed end site of a segment already blocks it at that end,
    so it belongs to the adjacent arc for *-connectivity.
    """
    ring = boundary_edges(M)
    n = len(ring)
    pos = {e: k for k, e in enumerate(ring)}
    tag = np.zeros(n, dtype=np.int64)
    for lab, seg in ((1, A1), (2, A2)):
        seg.sites(M)  # range check
        for k in range(seg.start, seg.stop + 1):
            p = pos[(seg.side, k)]
            if tag[p]:
                raise DomainError("segments A1 and A2 overlap")
            tag[p] = lab
    if np.all(tag > 0):
        raise DomainError("complement arcs are empty")
    k0 = int(np.nonzero(tag > 0)[0][0])
    arcs = []
    cur: List[int] = []
    labels = []
    for step in range(1, n + 1):
        k = (k0 + step) % n
        if tag[k] == 0:
            cur.append(k)
        else:
            if cur:
                arcs.append(cur)
                cur = []
            labels.append(int(tag[k]))
    if cur:
        arcs.append(cur)
    changes = sum(1 for a, b in zip(labels, labels[1:] + labels[:1]) if a != b)
    if len(arcs) != 2 or changes != 2:
        raise DomainError("A1 and A2 must be disjoint contiguous arcs with two nonempty gaps")
    out = []
    for run in arcs:
        ks = [(run[0] - 1) % n] + run + [(run[-1] + 1) % n]
        sites: List[Tuple[int, int]] = []
        for k in ks:
            site = _edge_site(M, ring[k])
            if site not in sites:
                sites.append(site)
        out.append(sites)
    return out[0], out[1]


# --- connectivity kernels ---

_N4 = np.array([[1, 0], [-1, 0], [0, 1], [0, -1]], dtype=np.int64)
_N8 = np.array([[1, 0], [-1, 0], [0, 1], [0, -1], [1, 1], [1, -1], [-1, 1], [-1, -1]], dtype=np.int64)


@njit(cache=True)
def _reach(open_mask, src, dst, nbrs):
    """Flood fill over True cells of open_mask from src cells; hit any dst cell?"""
    M = open_mask.shape[0]
    seen = np.zeros((M, M), dtype=np.bool_)
    stack = np.empty((M * M, 2), dtype=np.int64)
    top = 0
    target = np.zeros((M, M), dtype=np.bool_)
    for k in range(dst.shape[0]):
        target[dst[k, 0], dst[k, 1]] = True
    for k in range(src.shape[0]):
        i, j = src[k, 0], src[k, 1]
        if open_mask[i, j] and not seen[i, j]:
            seen[i, j] = True
            stack[top, 0] = i
            stack[top, 1] = j
            top += 1
    while top > 0:
        top -= 1
        i, j = stack[top, 0], stack[top, 1]
        if target[i, j]:
            return True
        for d in range(nbrs.shape[0]):
            a = i + nbrs[d, 0]
            b = j + nbrs[d, 1]
            if 0 <= a < M and 0 <= b < M and open_mask[a, b] and not seen[a, b]:
                seen[a, b] = True
                stack[top, 0] = a
                stack[top, 1] = b
                top += 1
    return False


def _as_sites(seg, M) -> np.ndarray:
    sites = seg.sites(M) if isinstance(seg, BoundarySegment) else list(seg)
    return np.array(sites, dtype=np.int64).reshape(-1, 2)


def connected(grid: SiteGrid, A1, A2) -> bool:
    """Open chain (4-adjacency) from A1 to A2."""
    return bool(_reach(grid.states, _as_sites(A1, grid.M), _as_sites(A2, grid.M), _N4))


def star_connected(grid: SiteGrid, A1c, A2c) -> bool:
    """Closed *-chain (8-adjacency) from A1c to A2c."""
    return bool(_reach(~grid.states, _as_sites(A1c, grid.M), _as_sites(A2c, grid.M), _N8))


def duality_check(grid: SiteGrid, A1, A2) -> bool:
    """connected(A1, A2) XOR star_connected(A1c, A2c); always True."""
    c1, c2 = complement_arcs(grid.M, A1, A2)
    return connected(grid, A1, A2) != star_connected(grid, c1, c2)


@njit(cache=True)
def _duality_failures_exhaustive(M, s1, s2, c1, c2):
    fails = 0
    n = M * M
    mask = np.zeros((M, M), dtype=np.bool_)
    for code in range(1 << n):
        for k in range(n):
            mask[k // M, k % M] = (code >> k) & 1
        a = _reach(mask, s1, s2, _N4)
        b = _reach(~mask, c1, c2, _N8)
        if a == b:
            fails += 1
    return fails


@njit(cache=True)
def _duality_failures_random(M, s1, s2, c1, c2, draws):
    fails = 0
    for t in range(draws.shape[0]):
        mask = draws[t]
        a = _reach(mask, s1, s2, _N4)
        b = _reach(~mask, c1, c2, _N8)
        if a == b:
            fails += 1
    return fails


def default_duality_segments(M: int):
    if M == 2:
        return BoundarySegment("left", 0, 0), BoundarySegment("right", 1, 1)
    return centered_segment("left", M), centered_segment("right", M)


def exhaustive_duality(M: int, A1=None, A2=None) -> int:
    """Number of the 2^(M^2) grids violating the duality; expected 0."""
    if A1 is None:
        A1, A2 = default_duality_segments(M)
    c1, c2 = complement_arcs(M, A1, A2)
    arr = lambda x: np.array(x, dtype=np.int64).reshape(-1, 2)
    return int(_duality_failures_exhaustive(M, arr(A1.sites(M)), arr(A2.sites(M)), arr(c1), arr(c2)))


def random_duality(M: int, n_grids: int, seed: int, p_open: float = 0.5, A1=None, A2=None) -> int:
    if A1 is None:
        A1, A2 = default_duality_segments(M)
    c1, c2 = complement_arcs(M, A1, A2)
    arr = lambda x: np.array(x, dtype=np.int64).reshape(-1, 2)
    A1, A2 = A1.sites(M), A2.sites(M)
    rng = rng_for(seed)
    fails = 0
    chunk = 10_000
    for start in range(0, n_grids, chunk):
        m = min(chunk, n_grids - start)
        draws = rng.random((m, M, M)) < p_open
        fails += int(_duality_failures_random(M, arr(A1), arr(A2), arr(c1), arr(c2), draws))
    return fails


# --- crossing probability ---

@dataclass(frozen=True)
class CrossingResult:
    nu: float
    s: float
    M: int
    trials: int
    estimate: float
    stderr: float
    bound: float
    vacuous: bool

    def csv_row(self) -> str:
        return (f"{self.nu!r},{self.s!r},{self.M},{self.trials},{self.estimate!r},"
                f"{self.stderr!r},{self.bound!r},{int(self.vacuous)}")


CSV_HEADER = "nu,s,M,trials,estimate,stderr,bound,vacuous_flag"


def crossing_lower_bound(nu: float, s: float, M: int, seg_len: int, form: str = "rigorous"):
    """Lower bound on P(A1 connected to A2) and its vacuity flag.

    rigorous: a blocking closed *-chain joins the two complement arcs, so it
    must pass around the shorter segment and has at least seg_len + 2 sites;
    it starts at one of the 4(M-1) boundary sites and has at most M^2 sites.
    short: J* = M - 1 and prefactor M, summed to J* M.
    """
    if M < 3:
        return 0.0, True
    r = math.log(9.0) - nu * s
    if form == "short":
        J = M - 1
        logsum = crossing_bound_log_terms(nu, s, M, J)
    else:
        J = seg_len + 2
        j = np.arange(J, M * M + 1, dtype=float)
        terms = j * r
        top = float(np.max(terms))
        logsum = math.log(4 * (M - 1)) + top + math.log(float(np.sum(np.exp(terms - top))))
    bound = -math.expm1(logsum) if logsum < 0 else 0.0
    vacuous = r >= -0.5 or bound <= 0.0
    return max(bound, 0.0), vacuous


def crossing_probability(params: RegimeParams, M: int, s: float, trials: int, seed: int,
                         seg_len: Optional[int] = None, independent: bool = False,
                         form: str = "rigorous") -> CrossingResult:
    """Monte Carlo P(left segment connected to right segment) on an M x M box.

    Each trial draws round(nu M^2) uniform centers on the box, so site states
    keep their weak correlation; independent=True uses Bernoulli sites with
    closed probability e^{-nu s} instead.
    """
    if trials < 1:
        raise DomainError("trials must be >= 1")
    if not 0 < s < 1:
        raise DomainError("fill area must lie in (0, 1)")
    n = max(1, M // 3) if seg_len is None else int(seg_len)
    A1 = centered_segment("left", M, n).sites(M)
    A2 = centered_segment("right", M, n).sites(M)
    a1 = np.array(A1, dtype=np.int64)
    a2 = np.array(A2, dtype=np.int64)
    N = int(math.floor(params.nu * M * M + 0.5))
    q = math.exp(-params.nu * s)
    hits = np.zeros(trials, dtype=bool)
    for t in range(trials):
        rng = rng_for(trial_seed(seed, t))
        if independent:
            st = rng.random((M, M)) >= q
        else:
            st = site_states(rng.random((N, 2)) * M, 0.0, 0.0, M, s)
        hits[t] = _reach(st, a1, a2, _N4)
    est = float(hits.mean())
    se = math.sqrt(max(est * (1 - est), 0.0) / trials)
    bound, vac = crossing_lower_bound(params.nu, s, M, n, form)
    return CrossingResult(params.nu, s, M, trials, est, se, bound, vac)


# --- geometry of adjacent-site connections ---

def phi_s(s: float) -> float:
    return math.acos(2.0 * math.sqrt(s) / (s + 1.0))


def min_radius(s: float, R: float = 0.0) -> Tuple[float, float]:
    """(phi_s, r_min): narrowest three-site angle and smallest safe arc radius."""
    if not 0 < s < 1:
        raise DomainError(f"s must lie in (0, 1), got {s}")
    if not 0 <= R < 0.5:
        raise DomainError(f"R must lie in [0, 1/2), got {R}")
    ph = phi_s(s)
    if R == 0:
        # sin(phi/2) = sqrt((1 - cos phi)/2) = (1 - sqrt s)/sqrt(2(s+1))
        sh = (1.0 - math.sqrt(s)) / math.sqrt(2.0 * (s + 1.0))
        return ph, math.sqrt(s + 1.0) / (2.0 * sh)
    rs = math.sqrt(s)
    num = math.sqrt((1 + s) ** 2 * s + (3 - s) ** 2) - 4 * rs * R
    return ph, num / (4 * rs * math.tan(0.5 * ph))


def solve_s0(a: float, eps0: float, R: float = 0.0) -> float:
    """s0 in (0, 1) with r_min(s0) = 1/(a eps0)."""
    if not (a > 0 and eps0 > 0):
        raise DomainError("a and eps0 must be positive")
    target = 1.0 / (a * eps0)
    f = lambda s: min_radius(s, R)[1] - target
    if R == 0:
        if a * eps0 >= math.sqrt(2.0):
            raise InfeasibleError(f"a*eps0 = {a * eps0} >= sqrt(2): no fill size is small enough")
        lo = 1e-300
    else:
        # the R > 0 radius blows up as s -> 0; use its increasing branch
        res = optimize.minimize_scalar(lambda s: min_radius(s, R)[1], bounds=(1e-9, 1 - 1e-9),
                                       method="bounded", options={"xatol": 1e-12})
        lo = float(res.x)
        if f(lo) >= 0:
            raise InfeasibleError("target radius below the minimum of r_min(s, R)")
    hi = 1.0 - 1e-16
    while f(hi) < 0:  # pragma: no cover - r_min -> inf as s -> 1
        raise InfeasibleError("target radius not reached below s = 1")
    return optimize.brentq(f, lo, hi, xtol=1e-15, rtol=1e-15, maxiter=500)


def curvature_cap(s: float, a: float, eps0: float) -> float:
    ph = phi_s(s)
    return min(2.0 * math.sin(0.5 * ph) / math.sqrt(s + 1.0), eps0 * a)


def site_connection_feasible(xi, zeta, params: RegimeParams, s: float, lam: float, eps0: float) -> bool:
    """Adjacent-site distance and the curvature cap on the joining arc."""
    xi = np.asarray(xi, float)
    zeta = np.asarray(zeta, float)
    if np.linalg.norm(xi - zeta) > math.sqrt(s + 2 * math.sqrt(s) + 1) + 1e-12:
        return False
    a = params.B * params.L
    Hmax = params.B * (max(abs(xi[1] - lam), abs(zeta[1] - lam)) + params.R)
    return Hmax < curvature_cap(s, a, eps0)


def alpha_max(s: float, r: float, R: float) -> float:
    """Contact angle of the radius-r arc meeting the corner grain at azimuth -pi/4.

    Three grains sit at the corners of adjacent fill squares:
    (b, 2-b), (1+b, 1+b) with b = (1 - sqrt s)/2.  The arc joining the first
    two has its center on their perpendicular bisector, on the side with
    c1 > b + 1/2.  The angle returned is the signed angle from the outward
    grain normal to the arc tangent leaving the grain.
    """
    b = 0.5 * (1.0 - math.sqrt(s))
    xi = np.array([b, 2 - b])
    zeta = np.array([1 + b, 1 + b])
    rho = -0.25 * math.pi
    P = xi + R * np.array([math.cos(rho), math.sin(rho)])
    mid = 0.5 * (xi + zeta)
    d = zeta - xi
    nrm = np.array([-d[1], d[0]]) / np.linalg.norm(d)
    if nrm[0] < 0:
        nrm = -nrm
    # center c = mid + t*nrm with |c - P| = r, pick the root with c1 > b + 1/2
    w = mid - P
    bq = 2 * float(w @ nrm)
    cq = float(w @ w) - r * r
    disc = bq * bq - 4 * cq
    if disc < 0:
        raise InfeasibleError("radius too small to reach the contact point")
    roots = [(-bq + sg * math.sqrt(disc)) / 2 for sg in (1, -1)]
    cands = [mid + t * nrm for t in roots if (mid + t * nrm)[0] > b + 0.5]
    if not cands:
        raise InfeasibleError("no arc center on the required side")
    c = cands[0]
    radial = P - c
    # tangent moving from the grain toward zeta along the arc
    t1 = np.array([-radial[1], radial[0]])
    if t1 @ (zeta - P) < 0:
        t1 = -t1
    beta = math.atan2(t1[1], t1[0])
    return math.remainder(beta - rho, 2 * math.pi)


# --- compatible curves and tubes ---

def _segments_intersect(P: np.ndarray) -> bool:
    """True when two non-adjacent segments of the polyline P cross."""
    a = P[:-1]
    b = P[1:]
    n = len(a)
    lo = np.minimum(a, b)
    hi = np.maximum(a, b)
    order = np.argsort(lo[:, 0])
    for idx in range(n):
        i = order[idx]
        # candidates whose x-range overlaps
        for jdx in range(idx + 1, n):
            j = order[jdx]
            if lo[j, 0] > hi[i, 0]:
                break
            if abs(i - j) <= 1 or lo[j, 1] > hi[i, 1] or hi[j, 1] < lo[i, 1]:
                continue
            if _cross(a[i], b[i], a[j], b[j]):
                return True
    return False


def _orient(p, q, r):
    return (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])


def _cross(p1, p2, q1, q2) -> bool:
    d1 = _orient(q1, q2, p1)
    d2 = _orient(q1, q2, p2)
    d3 = _orient(p1, p2, q1)
    d4 = _orient(p1, p2, q2)
    return (d1 * d2 < 0) and (d3 * d4 < 0)


@dataclass(frozen=True)
class CompatibleCurve:
    samples: np.ndarray     # (n, 2) points in [0, 1]^2
    V: float
    eps0: float
    a: float = 1.0

    def area_under(self) -> float:
        x, y = self.samples[:, 0], self.samples[:, 1]
        return float(np.sum(0.5 * (y[1:] + y[:-1]) * np.diff(x)))

    def problems(self) -> List[str]:
        P, V, e = self.samples, self.V, self.eps0
        out = []
        if not 0 < V < 1:
            out.append("V outside (0, 1)")
        if not e < min(V, 1 - V, 1 / (2 * self.a)):
            out.append("eps0 >= min(V, 1 - V, 1/(2a))")
        if np.any(P[:, 0] < -1e-12) or np.any(P[:, 0] > 1 + 1e-12):
            out.append("curve leaves [0, 1] horizontally")
        if np.any(np.abs(P[:, 1] - V) > e + 1e-12):
            out.append("curve leaves the band [V - eps0, V + eps0]")
        if abs(P[0, 0]) > 1e-12 or abs(P[-1, 0] - 1) > 1e-12:
            out.append("endpoints not on the vertical sides")
        if abs(self.area_under() - V) > 1e-6:
            out.append(f"area under curve {self.area_under():.9f} != V")
        if _segments_intersect(P):
            out.append("self-intersection")
        return out

    def check(self) -> None:
        from .errors import ConfigError
        p = self.problems()
        if p:
            raise ConfigError("incompatible curve: " + "; ".join(p))

    @staticmethod
    def horizontal(V: float, eps0: float, a: float = 1.0, n: int = 1000) -> "CompatibleCurve":
        t = np.linspace(0.0, 1.0, n)
        return CompatibleCurve(np.column_stack([t, np.full(n, V)]), V, eps0, a)

    @staticmethod
    def s_curve(V: float, amp: float, eps0: float, a: float = 1.0, n: int = 1000) -> "CompatibleCurve":
        """y = V + amp sin(2 pi x); the area under it is exactly V."""
        t = np.linspace(0.0, 1.0, n)
        return CompatibleCurve(np.column_stack([t, V + amp * np.sin(2 * math.pi * t)]), V, eps0, a)

    def height_at(self, x):
        return np.interp(x, self.samples[:, 0], self.samples[:, 1])


def _one_sided(A: np.ndarray, B_: np.ndarray) -> float:
    """max over points of A of the distance to polyline B_."""
    tree = cKDTree(B_)
    _, idx = tree.query(A)
    best = np.full(len(A), np.inf)
    for off in (-1, 0):
        i0 = np.clip(idx + off, 0, len(B_) - 2)
        p, q = B_[i0], B_[i0 + 1]
        d = q - p
        L2 = np.maximum(np.sum(d * d, axis=1), 1e-300)
        t = np.clip(np.sum((A - p) * d, axis=1) / L2, 0.0, 1.0)
        proj = p + t[:, None] * d
        best = np.minimum(best, np.linalg.norm(A - proj, axis=1))
    return float(np.max(best))


def _resample(P: np.ndarray, n: int) -> np.ndarray:
    seg = np.linalg.norm(np.diff(P, axis=0), axis=1)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    if s[-1] == 0:
        return P[:1].repeat(n, axis=0)
    t = np.linspace(0.0, s[-1], n)
    return np.column_stack([np.interp(t, s, P[:, 0]), np.interp(t, s, P[:, 1])])


def tube_distances(polyline: np.ndarray, curve: CompatibleCurve, L: float, n: int = 1000):
    """(sup over interface of dist to Lambda, sup over Lambda of dist to interface), rescaled by 1/L."""
    G = np.asarray(polyline, float) / L
    A = _resample(G, n)
    Lam = curve.samples
    return _one_sided(A, Lam), _one_sided(_resample(Lam, n), G)


def tube_check(polyline: np.ndarray, curve: CompatibleCurve, eps: float, L: float = 1.0) -> bool:
    """Two-sided containment in tubes of radius sqrt(2) eps."""
    d1, d2 = tube_distances(polyline, curve, L)
    r = math.sqrt(2.0) * eps
    return d1 <= r and d2 <= r
