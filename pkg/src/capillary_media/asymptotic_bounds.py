"""Stirling brackets, binomial envelopes, Poisson tails and regime bounds."""

import math
from dataclasses import dataclass, field
from typing import Dict, List

import numpy as np

from .constants import ConstantsFile
from .errors import DomainError
from .grain_field import RegimeParams


# --- Stirling ---

@dataclass(frozen=True)
class StirlingBracket:
    n: int
    lower: float
    upper: float

    @property
    def ratio(self) -> float:
        return math.exp(1.0 / (12 * self.n) - 1.0 / (12 * (self.n + 1)))


def _log_stirling_core(n: int) -> float:
    return 0.5 * math.log(2 * math.pi * n) + n * (math.log(n) - 1.0)


def stirling_bracket(n: int) -> StirlingBracket:
    """sqrt(2 pi n)(n/e)^n e^r with 1/(12(n+1)) < r < 1/(12n)."""
    n = int(n)
    if n < 1:
        raise DomainError(f"Stirling bracket needs n >= 1, got {n}")
    core = _log_stirling_core(n)
    return StirlingBracket(n, math.exp(core + 1.0 / (12 * (n + 1))), math.exp(core + 1.0 / (12 * n)))


def log_stirling_bracket(n: int):
    core = _log_stirling_core(n)
    return core + 1.0 / (12 * (n + 1)), core + 1.0 / (12 * n)


# --- binomial envelope ---

def Psi(x: float) -> float:
    return -x * math.log(x) - (1 - x) * math.log1p(-x)


def phi(x: float) -> float:
    return math.log(x) + math.log1p(-x)


def C_n_bound(n: int) -> float:
    """Bound on exp(r_n - r_m - r_{n-m}) / sqrt(2 pi), uniform in 2 <= m <= n-2.

    From the Stirling bracket the exponent is below
    1/(12n) - 1/(12(m+1)) - 1/(12(n-m+1)), largest at m = n/2.
    """
    n = int(n)
    e = 1.0 / (12 * n) - 2.0 / (12 * (0.5 * n + 1))
    return math.exp(e) / math.sqrt(2 * math.pi)


@dataclass(frozen=True)
class BinomialEnvelope:
    n: int
    m: int
    W: float
    Psi: float
    phi: float
    C_n_bound: float

    def log_bound(self) -> float:
        return math.log(self.C_n_bound) + self.W


def binomial_W(n: int, m: int) -> BinomialEnvelope:
    n, m = int(n), int(m)
    if not 1 < m < n:
        raise DomainError(f"binomial_W needs 1 < m < n, got n={n}, m={m}")
    x = m / n
    ps, ph = Psi(x), phi(x)
    W = n * ps - 0.5 * ph - 0.5 * math.log(n)
    return BinomialEnvelope(n, m, W, ps, ph, C_n_bound(n))


def log_binom(n: int, m: int) -> float:
    if n <= 60:
        return math.log(math.comb(n, m))
    return math.lgamma(n + 1) - math.lgamma(m + 1) - math.lgamma(n - m + 1)


# --- Poisson tail ---

def poisson_tail(mu: float, k: int, N0: int) -> float:
    """exp(-mu) sum_{i=k}^{N0} mu^i / i!, summed with the term recurrence."""
    if mu < 0:
        raise DomainError("mu must be non-negative")
    k, N0 = int(k), int(N0)
    if k > N0:
        return 0.0
    if mu == 0:
        return 1.0 if k == 0 else 0.0
    # recur outward from the mode, so each term depends on i alone and the
    # correctly rounded sum is exactly monotone in k and N0
    m0 = int(math.floor(mu))
    t0 = math.exp(-mu + m0 * math.log(mu) - math.lgamma(m0 + 1))
    terms = []
    t, i = t0, m0
    while i < N0:
        if i >= k:
            terms.append(t)
        t *= mu / (i + 1)
        i += 1
        if t == 0.0:
            break
    else:
        if k <= i <= N0:
            terms.append(t)
    t, i = t0, m0
    while i > k:
        t *= i / mu
        i -= 1
        if t == 0.0:
            break
        if i <= N0:
            terms.append(t)
    return min(math.fsum(terms), 1.0)


# --- sqrt growth ---

@dataclass(frozen=True)
class SqrtEnvelope:
    lower_seq: np.ndarray
    upper_seq: np.ndarray
    C1: float
    C2: float
    C1_tight: float
    relation_lower_ok: bool


def _relation_rhs_C2(b: float, C1: float) -> float:
    x = np.concatenate([[0.0], np.logspace(-8, 8, 2001)])
    return float(np.max((b * np.sqrt(x) + np.sqrt(b * b * x + b)) / (2 * (1 + C1 * np.sqrt(x)))))


def sqrt_growth_envelope(b: float, a0: float, k_max: int) -> SqrtEnvelope:
    """Extremal sequences a_{k+1} = a_k + c b/(1 + a_k), c in {1/2, 2}.

    C2 is the tightest lower constant on 1 <= k <= k_max.  C1 is the
    tightest upper constant raised, if needed, to satisfy the proof relation
    C1 > 4b(1 + b/C2); raising an upper constant keeps the envelope valid.
    """
    if not (b > 0 and a0 > 0):
        raise DomainError("sqrt growth needs b > 0 and a0 > 0")
    k_max = int(k_max)
    lo = np.empty(k_max + 1)
    hi = np.empty(k_max + 1)
    lo[0] = hi[0] = a0
    for k in range(k_max):
        lo[k + 1] = lo[k] + 0.5 * b / (1 + lo[k])
        hi[k + 1] = hi[k] + 2.0 * b / (1 + hi[k])
    ks = np.sqrt(np.arange(1, k_max + 1))
    C2 = float(np.min(lo[1:] / ks)) * (1 - 1e-12)
    C1_tight = float(np.max(hi[1:] / ks)) * (1 + 1e-12)
    C1 = max(C1_tight, 4 * b * (1 + b / C2) * (1 + 1e-12))
    return SqrtEnvelope(lo, hi, C1, C2, C1_tight, C2 > _relation_rhs_C2(b, C1))


# --- regime bounds ---

@dataclass(frozen=True)
class BoundValues:
    regime: int
    values: Dict[str, float] = field(default_factory=dict)
    flags: Dict[str, object] = field(default_factory=dict)


WINDOW_FACTOR = 3.0


def regime1_cap(params: RegimeParams, D0: float, K: float) -> float:
    return max(2 * D0 / math.sqrt(params.B), 2 * params.R) + 2 * K * params.v0 * params.L * params.R ** 2


def crossing_bound_log_terms(nu: float, s: float, M: int, J_star: int) -> float:
    """log of M * sum_{j=J*}^{J* M} 9^j e^{-nu j s}."""
    r = math.log(9.0) - nu * s
    j = np.arange(J_star, J_star * M + 1, dtype=float)
    terms = j * r
    top = float(np.max(terms))
    return math.log(M) + top + math.log(float(np.sum(np.exp(terms - top))))


def crossing_bound(nu: float, s: float, M: int, J_star: int = None):
    """(bound, vacuous) for P(A1 connected to A2) on an M x M grid.

    Any blocking *-chain of closed sites separating the segments has at
    least J* = M/3 sites.
    """
    if J_star is None:
        J_star = max(1, M // 3)
    logsum = crossing_bound_log_terms(nu, s, M, J_star)
    bound = -math.expm1(logsum) if logsum < 0 else -math.inf
    vacuous = (math.log(9.0) - nu * s) >= -0.5 or bound <= 0
    return max(bound, 0.0) if bound > -math.inf else 0.0, vacuous


def regime_bound(params: RegimeParams, regime: int, calibrated: ConstantsFile,
                 k: int = 1, N0: int = None, C_gamma: float = 1.0) -> BoundValues:
    if regime not in (1, 2, 3, 4):
        raise DomainError(f"regime must be 1..4, got {regime}")
    D0 = calibrated.D0(C_gamma)
    rb = math.sqrt(params.B)
    if regime == 1:
        cap = regime1_cap(params, D0, calibrated.K)
        delta = cap
        return BoundValues(1, {"cap": cap, "strip_delta": delta,
                               "strip_empty": max(0.0, 1 - 2 * delta / params.L) ** params.n_grains})
    if regime == 2:
        mu = 2 * D0 * params.theta() * params.nu
        if N0 is None:
            N0 = max(params.n_grains, k)
        return BoundValues(2, {"mu": mu, "tail": poisson_tail(mu, k, N0)}, {"k": k, "N0": N0})
    if regime == 3:
        lo = params.L / rb
        hi = params.L / (rb * math.log(params.B)) if params.B > 1 else math.inf
        # lower edge needs L >= WINDOW_FACTOR sqrt(B); upper edge is L < sqrt(B) log B
        below = lo < WINDOW_FACTOR * (1 - 1e-12)
        above = hi >= 1.0
        flag = "below window" if below else ("above window" if above else "inside window")
        return BoundValues(3, {"L_over_sqrtB": lo, "L_over_sqrtB_logB": hi}, {"window": flag})
    eps = params.L ** (-calibrated.p)
    K = calibrated.K_perc
    return BoundValues(4, {
        "eps": eps,
        "crossing": 1 - math.exp(-K * eps * params.L),
        "delta_eps": 1 - params.L ** (2 * calibrated.p) * math.exp(-K * params.L ** (1 - calibrated.p)),
    })
