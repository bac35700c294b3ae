"""Random grain configurations under the uniform product measure.

N = round(nu L^2) centers are drawn independently and uniformly on [0, L]^2.
Overlaps are allowed.  Per-trial streams come from numpy's SeedSequence
keyed on (master_seed, trial_index), so trials are independent of the order
and the thread that runs them.
"""

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import DomainError, VolumeFixedPointError


# --- parameters ---

@dataclass(frozen=True)
class RegimeParams:
    B: float
    L: float
    R: float
    nu: float
    alpha: float = 0.0
    v0: float = 0.5

    def __post_init__(self):
        if not (math.isfinite(self.B) and self.B > 0):
            raise DomainError(f"B must be positive, got {self.B}")
        if not (math.isfinite(self.L) and self.L > 0):
            raise DomainError(f"L must be positive, got {self.L}")
        if not (0.0 <= self.R < 0.5):
            raise DomainError(f"grain radius must lie in [0, 1/2), got {self.R}")
        if not (math.isfinite(self.nu) and self.nu >= 0):
            raise DomainError(f"density must be non-negative, got {self.nu}")
        if not (-math.pi / 2 <= self.alpha <= math.pi / 2):
            raise DomainError(f"contact angle must lie in [-pi/2, pi/2], got {self.alpha}")
        if not (0.0 < self.v0 < 1.0):
            raise DomainError(f"liquid fraction must lie in (0, 1), got {self.v0}")

    def theta(self) -> float:
        return self.L * max(1.0 / math.sqrt(self.B), self.R)

    @property
    def n_grains(self) -> int:
        return int(math.floor(self.nu * self.L * self.L + 0.5))


def trial_seed(master_seed: int, trial_index: int) -> int:
    """64-bit seed for one trial, derived from (master_seed, trial_index)."""
    ss = np.random.SeedSequence([int(master_seed) & 0xFFFFFFFFFFFFFFFF, int(trial_index)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def rng_for(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed) & 0xFFFFFFFFFFFFFFFF)))


# --- fields ---

@dataclass(frozen=True)
class GrainField:
    centers: np.ndarray
    params: RegimeParams
    seed: int

    @property
    def N(self) -> int:
        return int(self.centers.shape[0])

    def to_text(self) -> str:
        p = self.params
        lines = [f"{p.L!r} {p.R!r} {p.nu!r} {self.seed} {self.N}"]
        lines += [f"{x:.17g} {y:.17g}" for x, y in self.centers]
        return "\n".join(lines) + "\n"

    @staticmethod
    def from_text(text: str, B: float = 1.0, alpha: float = 0.0, v0: float = 0.5) -> "GrainField":
        rows = [ln.split() for ln in text.strip().splitlines() if ln.strip()]
        L, R, nu = (float(v) for v in rows[0][:3])
        seed, N = int(rows[0][3]), int(rows[0][4])
        pts = np.array([[float(a), float(b)] for a, b in rows[1:1 + N]], dtype=float).reshape(N, 2)
        return GrainField(pts, RegimeParams(B, L, R, nu, alpha, v0), seed)

    def reflected(self) -> "GrainField":
        """Mirror image under x1 -> L - x1."""
        c = self.centers.copy()
        c[:, 0] = self.params.L - c[:, 0]
        return GrainField(c, self.params, self.seed)


def sample_configuration(params: RegimeParams, seed: int) -> GrainField:
    rng = rng_for(seed)
    pts = rng.random((params.n_grains, 2)) * params.L
    return GrainField(pts, params, int(seed))


def field_from_centers(params: RegimeParams, centers, seed: int = 0) -> GrainField:
    pts = np.asarray(centers, dtype=float).reshape(-1, 2)
    if pts.size and (pts.min() < 0 or pts.max() > params.L):
        raise DomainError("centers must lie in [0, L]^2")
    return GrainField(pts, params, int(seed))


# --- probabilities ---

def region_probability(params: RegimeParams, region_area: float, m: int) -> float:
    """Probability that m given centers all fall in a region of this area."""
    L2 = params.L * params.L
    if not (0.0 <= region_area <= L2 * (1 + 1e-12)):
        raise DomainError("region area must lie in [0, L^2]")
    return min(region_area / L2, 1.0) ** int(m)


def strip_empty_probability(params: RegimeParams, delta: float) -> float:
    """P(no center in a horizontal strip of half-width delta): (1 - 2 delta/L)^N."""
    frac = max(0.0, 1.0 - 2.0 * delta / params.L)
    return frac ** params.n_grains


def count_in_rect(field: GrainField, x0: float, y0: float, x1: float, y1: float) -> int:
    c = field.centers
    return int(np.count_nonzero((c[:, 0] >= x0) & (c[:, 0] <= x1) & (c[:, 1] >= y0) & (c[:, 1] <= y1)))


# --- volume bookkeeping ---

@dataclass(frozen=True)
class VolumeState:
    v1: float
    lam: float
    n_below: int

    @property
    def lambda_(self) -> float:
        return self.lam


def resolve_volume(field: GrainField, interface_n_below: int) -> VolumeState:
    """v1 = v0 + n_below pi R^2 / L^2 and lambda = v1 L."""
    p = field.params
    n = int(interface_n_below)
    if not 0 <= n <= field.N:
        raise DomainError(f"n_below must lie in [0, {field.N}], got {n}")
    v1 = p.v0 + n * math.pi * p.R * p.R / (p.L * p.L)
    return VolumeState(v1, v1 * p.L, n)


def volume_fixed_point(field: GrainField, count_below: Callable[[float], int],
                       tol: float = 1e-6, max_iter: int = 50) -> VolumeState:
    """Iterate lambda -> interface -> n_below -> v1 until |dv1| < tol.

    count_below(lam) builds the interface at reference height lam and returns
    the number of grains below it.  Plain substitution is used until a count
    repeats; from then on the step is damped and the damping halves whenever
    the step changes direction, which settles a two-cycle at the height where
    the count switches.  Exhaustion of
    max_iter raises VolumeFixedPointError carrying both bracketing v1 values.
    """
    p = field.params
    state = resolve_volume(field, 0)
    seen = set()
    omega = 1.0
    damped = False
    last_dir = 0.0
    prev: Optional[VolumeState] = None
    for _ in range(max_iter):
        n = count_below(state.lam)
        target = resolve_volume(field, n)
        if abs(target.v1 - state.v1) < tol:
            return target
        direction = math.copysign(1.0, target.v1 - state.v1)
        if not damped and n in seen:
            damped = True
        if damped and direction != last_dir:
            omega *= 0.5
        seen.add(n)
        last_dir = direction
        v1 = state.v1 + omega * (target.v1 - state.v1)
        new = VolumeState(v1, v1 * p.L, n)
        if abs(new.v1 - state.v1) < tol:
            return new
        prev, state = state, new
    lo, hi = sorted((prev.v1 if prev else state.v1, state.v1))
    raise VolumeFixedPointError(f"volume iteration did not converge in {max_iter} steps", (lo, hi))
