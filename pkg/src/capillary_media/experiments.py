"""Regime experiment drivers, configuration and report output.

A config is a plain key = value text file with # comments.  Every trial
draws its field from a seed derived from (master seed, trial index), trials
run on a thread pool and results are reduced in index order, so report.json
and trials.csv do not depend on the thread count.  Wall-clock time goes to a
separate timing.json.
"""

import csv
import io
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
from scipy.spatial import cKDTree

from . import __version__
from .asymptotic_bounds import poisson_tail, regime_bound
from .constants import ConstantsFile, load_constants
from .errors import CapillaryError, ConfigError, DomainError
from .grain_field import RegimeParams, sample_configuration, trial_seed
from .interface_builder import (Interface, build_interface, build_site_interface, max_deviation,
                                open_site_path, verify_interface)
from .percolation import CompatibleCurve, site_states, tube_distances


# --- configuration ---

@dataclass
class ExperimentConfig:
    regime: int
    B: float
    L: float
    R: float
    nu: float
    alpha: float = 0.0
    v0: float = 0.5
    trials: int = 100
    seed: int = 0
    out: str = "out"
    constants: str = ""
    # regime 2
    k: List[int] = field(default_factory=lambda: [1, 2, 3])
    N0: int = 0
    L_ladder: List[float] = field(default_factory=list)
    # regime 3
    h: float = 1.0
    B_ladder: List[float] = field(default_factory=list)
    L_ratio: float = 3.0
    # regime 4
    curve: str = "horizontal"
    V: float = 0.5
    eps0: float = 0.25
    amp: float = 0.1
    a: float = 1.0
    s: float = 0.5
    p: float = 0.0
    nu0: float = 0.0
    min_success: float = 0.9

    def params(self, B: Optional[float] = None, L: Optional[float] = None) -> RegimeParams:
        return RegimeParams(B=self.B if B is None else B, L=self.L if L is None else L,
                            R=self.R, nu=self.nu, alpha=self.alpha, v0=self.v0)

    def echo(self) -> Dict[str, object]:
        return {f.name: getattr(self, f.name) for f in fields(self)}


_LIST_INT = {"k"}
_LIST_FLOAT = {"L_ladder", "B_ladder"}
_INT = {"regime", "trials", "seed", "N0"}
_STR = {"out", "constants", "curve"}


def parse_config(text: str, path: str = "<memory>") -> ExperimentConfig:
    vals: Dict[str, object] = {}
    known = {f.name for f in fields(ExperimentConfig)}
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}: malformed line {raw!r}")
        key, v = (t.strip() for t in line.split("=", 1))
        if key not in known:
            raise ConfigError(f"{path}: unknown key {key!r}")
        try:
            if key in _LIST_INT:
                vals[key] = [int(x) for x in v.split(",") if x.strip()]
            elif key in _LIST_FLOAT:
                vals[key] = [float(x) for x in v.split(",") if x.strip()]
            elif key in _INT:
                vals[key] = int(v, 0)
            elif key in _STR:
                vals[key] = v
            else:
                vals[key] = float(v)
        except ValueError:
            raise ConfigError(f"{path}: bad value for {key}: {v!r}") from None
    for req in ("regime", "B", "L", "R", "nu"):
        if req not in vals:
            raise ConfigError(f"{path}: missing key {req!r}")
    return ExperimentConfig(**vals)


def load_config(path) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from None
    return parse_config(text, str(path))


def _constants(cfg: ExperimentConfig) -> ConstantsFile:
    return load_constants(cfg.constants or None)


def validate(cfg: ExperimentConfig) -> None:
    """Reject configs that violate their regime's scale relations."""
    if cfg.regime not in (1, 2, 3, 4):
        raise ConfigError(f"regime must be 1..4, got {cfg.regime}")
    if cfg.trials < 1:
        raise ConfigError("trials must be >= 1")
    try:
        cfg.params()
    except DomainError as e:
        raise ConfigError(str(e)) from None
    rb = math.sqrt(cfg.B)
    cap = min(rb, 1.0 / cfg.R if cfg.R > 0 else math.inf)
    if cfg.regime == 1 and not cfg.L < cap:
        raise ConfigError(f"regime 1 needs L < min(sqrt(B), 1/R) = {cap}")
    if cfg.regime == 2:
        for L in cfg.L_ladder or [cfg.L]:
            if not 0.1 <= L / cap <= 10.0:
                raise ConfigError(f"regime 2 needs L comparable to min(sqrt(B), 1/R) = {cap}, got L = {L}")
        if any(k < 0 for k in cfg.k):
            raise ConfigError("k must be non-negative")
    if cfg.regime == 3:
        if cfg.h <= 0 or cfg.L_ratio <= 0:
            raise ConfigError("regime 3 needs h > 0 and L_ratio > 0")
        if any(B <= 1 for B in cfg.B_ladder):
            raise ConfigError("regime 3 ladder needs B > 1")
    if cfg.regime == 4:
        if abs(cfg.L * cfg.B - cfg.a) > 1e-9 * cfg.a:
            raise ConfigError(f"regime 4 needs L = a/B, got L B = {cfg.L * cfg.B} and a = {cfg.a}")
        if not 0 < cfg.s < 1:
            raise ConfigError("site fill s must lie in (0, 1)")
        nu0 = cfg.nu0 if cfg.nu0 > 0 else math.log(9.0) / cfg.s
        if cfg.nu < nu0:
            raise ConfigError(f"regime 4 needs nu >= nu0 = {nu0}")
        if cfg.curve not in ("horizontal", "s"):
            raise ConfigError(f"curve must be 'horizontal' or 's', got {cfg.curve!r}")
        make_curve(cfg).check()


def make_curve(cfg: ExperimentConfig) -> CompatibleCurve:
    if cfg.curve == "horizontal":
        return CompatibleCurve.horizontal(cfg.V, cfg.eps0, cfg.a)
    return CompatibleCurve.s_curve(cfg.V, cfg.amp, cfg.eps0, cfg.a)


# --- reports ---

@dataclass
class ExperimentReport:
    regime: int
    config: Dict[str, object]
    summary: Dict[str, object]
    verdict: str
    trial_header: List[str]
    trial_rows: List[list]
    constants_sha256: str
    constants_version: str
    wall_clock: float = 0.0
    code_version: str = __version__

    def to_json(self) -> str:
        d = {
            "regime": self.regime,
            "config": self.config,
            "summary": self.summary,
            "verdict": self.verdict,
            "trials": len(self.trial_rows),
            "constants_sha256": self.constants_sha256,
            "constants_version": self.constants_version,
            "code_version": self.code_version,
        }
        return json.dumps(_plain(d), indent=2, sort_keys=True) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.trial_header)
        for row in self.trial_rows:
            w.writerow([_cell(v) for v in row])
        return buf.getvalue()

    def write(self, out_dir) -> Path:
        d = Path(out_dir)
        try:
            d.mkdir(parents=True, exist_ok=True)
            (d / "report.json").write_text(self.to_json())
            (d / "trials.csv").write_text(self.to_csv())
            (d / "timing.json").write_text(json.dumps({"wall_clock_s": self.wall_clock}) + "\n")
        except OSError as e:
            raise ConfigError(f"cannot write to {d}: {e}") from None
        return d


def _plain(x):
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating, float)):
        v = float(x)
        return v if math.isfinite(v) else repr(v)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def _mean_se(x: Sequence[float]):
    a = np.asarray(x, dtype=float)
    if a.size == 0:
        return math.nan, math.nan
    m = float(np.mean(a))
    se = float(np.std(a, ddof=1) / math.sqrt(a.size)) if a.size > 1 else 0.0
    return m, se


def _fraction(flags: Sequence[bool]):
    n = len(flags)
    p = float(np.count_nonzero(flags)) / n if n else math.nan
    return p, math.sqrt(max(p * (1 - p), 0.0) / n) if n else math.nan


def run_trials(fn: Callable[[int], dict], n: int, threads: int = 1) -> List[dict]:
    """fn(i) for i < n, returned in index order."""
    if threads <= 1:
        return [fn(i) for i in range(n)]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, range(n)))


def _interface_checks(gamma: Optional[Interface], cf: ConstantsFile) -> dict:
    if gamma is None:
        return {"verified": False, "failed_checks": "no_interface", "length_ok": True}
    rep = verify_interface(gamma, cf)
    return {"verified": rep.passed, "failed_checks": ";".join(rep.failures()),
            "length_ok": rep.checks["length_bound"]}


def _grain_count(gamma: Optional[Interface]) -> int:
    return 0 if gamma is None else sum(len(c) for c in gamma.clusters)


def _check_counts(rows: Sequence[dict]) -> Dict[str, int]:
    return {
        "interfaces": sum(r["built"] for r in rows),
        "verify_failures": sum(r["built"] and not r["verified"] for r in rows),
        "length_bound_violations": sum(not r["length_ok"] for r in rows),
    }


# --- regime 1 ---

def run_regime1(cfg: ExperimentConfig, threads: int = 1) -> ExperimentReport:
    validate(cfg)
    t0 = time.perf_counter()
    cf = _constants(cfg)
    p = cfg.params()
    bv = regime_bound(p, 1, cf)
    cap = bv.values["cap"]

    def trial(i):
        f = sample_configuration(p, trial_seed(cfg.seed, i))
        g = build_interface(f)
        dev = max_deviation(g) if g is not None else math.nan
        ok = g is not None and dev <= cap
        return {"trial": i, "N": f.N, "built": g is not None, "m": _grain_count(g),
                "lam": g.lam if g is not None else math.nan, "max_deviation": dev,
                "C_max": g.C_max if g is not None else math.nan,
                "horizontal_within_cap": ok, **_interface_checks(g, cf)}

    rows = run_trials(trial, cfg.trials, threads)
    frac, se = _fraction([r["horizontal_within_cap"] for r in rows])
    lower = bv.values["strip_empty"]
    counts = _check_counts(rows)
    ok = frac >= lower - 3 * se and counts["length_bound_violations"] == 0
    summary = {"estimate": frac, "stderr": se, "cap": cap, "strip_delta": bv.values["strip_delta"],
               "bound_strip_empty": lower, "exactly_horizontal": _fraction([r["m"] == 0 for r in rows])[0],
               **counts}
    return _report(1, cfg, cf, summary, "consistent" if ok else "violated", rows, t0)


# --- regime 2 ---

def run_regime2(cfg: ExperimentConfig, threads: int = 1) -> ExperimentReport:
    validate(cfg)
    t0 = time.perf_counter()
    cf = _constants(cfg)
    Ls = sorted(cfg.L_ladder) if cfg.L_ladder else [cfg.L]
    all_rows: List[dict] = []
    per_L = []
    violated = False
    for li, L in enumerate(Ls):
        p = cfg.params(L=L)

        def trial(i, p=p, li=li):
            f = sample_configuration(p, trial_seed(trial_seed(cfg.seed, li), i))
            g = build_interface(f)
            return {"L": p.L, "trial": i, "N": f.N, "built": g is not None, "m": _grain_count(g),
                    "C_max": g.C_max if g is not None else math.nan, **_interface_checks(g, cf)}

        rows = run_trials(trial, cfg.trials, threads)
        all_rows.extend(rows)
        ms = [r["m"] for r in rows]
        N0 = cfg.N0 if cfg.N0 > 0 else p.n_grains
        ks = []
        for k in cfg.k:
            est, se = _fraction([m >= k for m in ms])
            if k == 0:
                ks.append({"k": 0, "estimate": est, "stderr": se, "bound": None, "ok": True})
                continue
            bv = regime_bound(p, 2, cf, k=k, N0=max(N0, k))
            bound = bv.values["tail"]
            rel = se / est if est > 0 else 0.0
            ok = est <= bound * (1 + 3 * rel)
            ks.append({"k": k, "estimate": est, "stderr": se, "bound": bound, "mu": bv.values["mu"], "ok": ok})
        Cs = np.array([r["C_max"] for r in rows if r["built"]])
        conc = float(np.mean(np.abs(Cs - 1.0) <= 0.1)) if Cs.size else math.nan
        per_L.append({"L": L, "U_k": ks, "C_concentration_0.1": conc})
        if L == Ls[-1]:
            violated = not all(e["ok"] for e in ks)
    counts = _check_counts(all_rows)
    violated = violated or counts["length_bound_violations"] > 0
    summary = {"ladder": per_L, "largest_L": Ls[-1], **counts,
               "note": "U_k counts grains on the built interface, a lower bound on existence"}
    return _report(2, cfg, cf, summary, "violated" if violated else "consistent", all_rows, t0)


# --- regime 3 ---

def reach_height(centers: np.ndarray, lam: float, B: float, R: float, cf: ConstantsFile) -> float:
    """Upper estimate of how far from lam a grain chain obeying the strip-gap rule can climb.

    Grains within D0/sqrt(B) of lam (plus R) are free to connect; outside that
    band consecutive centers on one side must lie within K/(D sqrt(B)) + 2R,
    with D = sqrt(B)(min |x2 - lam| - R).
    """
    if centers.shape[0] == 0:
        return 0.0
    rb = math.sqrt(B)
    D0 = cf.D0(1.0)
    yb = centers[:, 1] - lam
    band = D0 / rb + R
    seeds = np.flatnonzero(np.abs(yb) < band)
    if seeds.size == 0:
        return 0.0
    hop_max = cf.K / (D0 * rb) + 2 * R
    tree = cKDTree(centers)
    pairs = tree.query_pairs(hop_max, output_type="ndarray")
    adj: Dict[int, List[int]] = {}
    if pairs.size:
        i, j = pairs[:, 0], pairs[:, 1]
        same = yb[i] * yb[j] > 0
        D = rb * (np.minimum(np.abs(yb[i]), np.abs(yb[j])) - R)
        d = np.hypot(*(centers[i] - centers[j]).T)
        free = (np.abs(yb[i]) < band) & (np.abs(yb[j]) < band)
        with np.errstate(divide="ignore"):
            cap = np.where(D > 0, cf.K / (np.maximum(D, 1e-300) * rb), np.inf) + 2 * R
        ok = free | (same & (d <= cap))
        for a, b in pairs[ok]:
            adj.setdefault(int(a), []).append(int(b))
            adj.setdefault(int(b), []).append(int(a))
    seen = set(int(s) for s in seeds)
    stack = list(seen)
    while stack:
        a = stack.pop()
        for b in adj.get(a, ()):
            if b not in seen:
                seen.add(b)
                stack.append(b)
    top = max(abs(yb[i]) for i in seen)
    return float(top + R + cf.K / (D0 * rb))


def _monotone(ests: Sequence[float], ses: Sequence[float]) -> bool:
    return all(b <= a + 3 * math.hypot(sa, sb)
               for a, b, sa, sb in zip(ests[:-1], ests[1:], ses[:-1], ses[1:]))


def run_regime3(cfg: ExperimentConfig, threads: int = 1) -> ExperimentReport:
    validate(cfg)
    t0 = time.perf_counter()
    cf = _constants(cfg)
    ladder = sorted(cfg.B_ladder) if cfg.B_ladder else [cfg.B]
    all_rows: List[dict] = []
    steps = []
    inside = True
    for bi, B in enumerate(ladder):
        L = cfg.L_ratio * math.sqrt(B)
        p = cfg.params(B=B, L=L)
        flag = regime_bound(p, 3, cf).flags["window"]
        inside = inside and flag == "inside window"

        def trial(i, p=p, bi=bi):
            f = sample_configuration(p, trial_seed(trial_seed(cfg.seed, bi), i))
            if cfg.h > p.L / 2:
                return {"B": p.B, "L": p.L, "trial": i, "N": f.N, "built": False, "m": 0,
                        "max_deviation": math.nan, "omega_builder": False, "reach": 0.0,
                        "omega_reach": False, "verified": False, "failed_checks": "skipped",
                        "length_ok": True}
            g = build_interface(f)
            lam = g.lam if g is not None else p.v0 * p.L
            dev = max_deviation(g) if g is not None else math.nan
            reach = reach_height(f.centers, lam, p.B, p.R, cf)
            return {"B": p.B, "L": p.L, "trial": i, "N": f.N, "built": g is not None, "m": _grain_count(g),
                    "max_deviation": dev, "omega_builder": bool(g is not None and dev >= cfg.h),
                    "reach": reach, "omega_reach": reach >= cfg.h, **_interface_checks(g, cf)}

        rows = run_trials(trial, cfg.trials, threads)
        all_rows.extend(rows)
        eb, sb = _fraction([r["omega_builder"] for r in rows])
        er, sr = _fraction([r["omega_reach"] for r in rows])
        steps.append({"B": B, "L": L, "window": flag, "builder_estimate": eb, "builder_stderr": sb,
                      "reach_estimate": er, "reach_stderr": sr})
    counts = _check_counts(all_rows)
    mono_reach = _monotone([s["reach_estimate"] for s in steps], [s["reach_stderr"] for s in steps])
    mono_builder = _monotone([s["builder_estimate"] for s in steps], [s["builder_stderr"] for s in steps])
    if not inside:
        verdict = "vacuous"
    else:
        verdict = "consistent" if mono_reach and mono_builder and counts["length_bound_violations"] == 0 \
            else "violated"
    summary = {"h": cfg.h, "ladder": steps, "nonincreasing_reach": mono_reach,
               "nonincreasing_builder": mono_builder,
               "window_note": "outside window, no verdict" if not inside else "inside window", **counts}
    return _report(3, cfg, cf, summary, verdict, all_rows, t0)


# --- regime 4 ---

def run_regime4(cfg: ExperimentConfig, threads: int = 1) -> ExperimentReport:
    validate(cfg)
    t0 = time.perf_counter()
    cf = _constants(cfg)
    p = cfg.params()
    curve = make_curve(cfg)
    pexp = cfg.p if cfg.p > 0 else cf.p
    eps = p.L ** (-pexp)
    M = int(round(p.L))
    target = curve.height_at((np.arange(M) + 0.5) / M) * p.L
    band = math.sqrt(2.0) * eps * p.L

    def trial(i):
        f = sample_configuration(p, trial_seed(cfg.seed, i))
        crossing = open_site_path(site_states(f.centers, 0.0, 0.0, M, cfg.s), target, band) is not None
        g = build_site_interface(f, curve, cfg.s, band) if crossing else None
        d1 = d2 = math.nan
        tube = False
        if g is not None:
            d1, d2 = tube_distances(g.polyline(), curve, p.L)
            r = math.sqrt(2.0) * eps
            tube = d1 <= r and d2 <= r
        return {"trial": i, "N": f.N, "crossing": crossing, "built": g is not None, "m": _grain_count(g),
                "tube_ok": tube, "d_interface": d1, "d_curve": d2,
                "v1": g.volume.v1 if g is not None else math.nan, **_interface_checks(g, cf)}

    rows = run_trials(trial, cfg.trials, threads)
    est, se = _fraction([r["tube_ok"] for r in rows])
    v1s = [r["v1"] for r in rows if r["tube_ok"]]
    v1m, v1se = _mean_se(v1s)
    v1_ok = bool(v1s) and abs(v1m - cfg.V) <= 3 * v1se
    K = cf.K_perc
    delta = 1 - p.L ** (2 * pexp) * math.exp(-K * p.L ** (1 - pexp))
    K_fit = (2 * pexp * math.log(p.L) - math.log(1 - est)) / p.L ** (1 - pexp) if est < 1 else math.inf
    counts = _check_counts(rows)
    ok = est >= cfg.min_success and v1_ok and counts["length_bound_violations"] == 0
    summary = {"estimate": est, "stderr": se, "eps": eps, "delta_eps": delta, "K_perc": K, "K_fit": K_fit,
               "crossing_fraction": _fraction([r["crossing"] for r in rows])[0],
               "v1_mean": v1m, "v1_stderr": v1se, "V": cfg.V, "v1_within_3se": v1_ok,
               "min_success": cfg.min_success, **counts}
    return _report(4, cfg, cf, summary, "consistent" if ok else "violated", rows, t0)


# --- dispatch ---

def _report(regime, cfg, cf, summary, verdict, rows, t0) -> ExperimentReport:
    header = list(rows[0].keys()) if rows else []
    body = [[r[k] for k in header] for r in rows]
    return ExperimentReport(regime, cfg.echo(), summary, verdict, header, body, cf.sha256, cf.version,
                            wall_clock=time.perf_counter() - t0)


RUNNERS = {1: run_regime1, 2: run_regime2, 3: run_regime3, 4: run_regime4}


def run_experiment(cfg: ExperimentConfig, threads: int = 1) -> ExperimentReport:
    try:
        return RUNNERS[cfg.regime](cfg, threads)
    except KeyError:
        raise ConfigError(f"regime must be 1..4, got {cfg.regime}") from None


__all__ = ["ExperimentConfig", "ExperimentReport", "parse_config", "load_config", "validate",
           "run_experiment", "run_regime1", "run_regime2", "run_regime3", "run_regime4",
           "reach_height", "make_curve", "run_trials", "CapillaryError"]
