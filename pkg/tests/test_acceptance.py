"""Acceptance suite: one PASS/FAIL line per criterion, at full size.

Run with `pytest -s tests/test_acceptance.py` (or -v; lines are printed with
capture disabled either way).  Experiment reports are cached per session so
the length-bound and reproducibility checks reuse them.
"""

import functools
import math
import time
from pathlib import Path

import numpy as np
import pytest

from capillary_media.asymptotic_bounds import C_n_bound, binomial_W, stirling_bracket
from capillary_media.curve_core import (
    FirstIntegral, closed_form_F, closed_form_F_prime, closed_form_x1, closure_residual, find_C0,
    integrate_piece, measured_spans, piece_curvature_residual, span_bound_functions,
)
from capillary_media.experiments import load_config, run_experiment
from capillary_media.grain_field import RegimeParams, sample_configuration, trial_seed
from capillary_media.interface_builder import connect_pair, distance_bracket, young_residual_on_grains
from capillary_media.percolation import build_site_grid, exhaustive_duality, min_radius, random_duality, solve_s0

CONFIGS = Path(__file__).resolve().parent.parent / "configs"
REGIME4_TRIALS = 20


@pytest.fixture
def report(capsys):
    def say(name: str, ok: bool, detail: str):
        with capsys.disabled():
            print(f"\nACCEPTANCE {'PASS' if ok else 'FAIL'}  {name}: {detail}", flush=True)
        return ok
    return say


@functools.lru_cache(maxsize=None)
def experiment(name: str, threads: int = 1, trials: int = 0):
    cfg = load_config(CONFIGS / f"{name}.cfg")
    if trials:
        cfg.trials = trials
    t0 = time.perf_counter()
    rep = run_experiment(cfg, threads=threads)
    return rep, time.perf_counter() - t0


# --- curves ---

def test_C0(report):
    t0 = time.perf_counter()
    c0 = find_C0()
    dt = time.perf_counter() - t0
    res = abs(closure_residual(c0))
    ok = 0.6512 <= c0 <= 0.6532 and res < 1e-10 and dt < 1.0
    assert report("C0", ok, f"C0={c0:.8f} closure={res:.1e} time={dt:.2f}s")


def test_C1_closed_form(report):
    worst = 0.0
    for B in (0.01, 0.1, 1.0, 10.0, 100.0):
        p = integrate_piece(FirstIntegral(1.0, B))
        worst = max(worst, float(np.max(np.abs(p.x1 - closed_form_x1(p.x2bar, B, a=p.x1[0])))))
    # F(2-) as a one-sided limit: F(2 - e) ~ sqrt(e) and F(2) = 0
    eps = [1e-4, 1e-8, 1e-12]
    lim = [closed_form_F(2.0 - e) / math.sqrt(e) for e in eps]
    f2 = abs(closed_form_F(2.0))
    fp = abs(closed_form_F_prime(math.sqrt(2.0)))
    ok = worst <= 1e-8 and f2 <= 1e-8 and fp <= 1e-8 and abs(lim[-1] - 1) < 1e-3
    assert report("C=1 closed form", ok, f"sup|x1 - F|={worst:.1e} F(2)={f2:.1e} F'(sqrt2)={fp:.1e} "
                  f"F(2-e)/sqrt(e)={lim[-1]:.6f}")


def test_first_integral_and_curvature(report):
    rng = np.random.default_rng(0)
    fi = cr = 0.0
    ratios = []
    for _ in range(1000):
        k = rng.integers(3)
        C = rng.uniform(-0.999, 0.999) if k == 0 else (rng.uniform(1.0001, 50.0) if k == 1 else 1.0)
        B = float(10 ** rng.uniform(-2, 3))
        c = FirstIntegral(float(C), B)
        p = integrate_piece(c)
        fi = max(fi, p.first_integral_error())
        cr = max(cr, piece_curvature_residual(p))
        r1 = piece_curvature_residual(integrate_piece(c, n_samples=2001))
        r2 = piece_curvature_residual(integrate_piece(c, n_samples=4001))
        ratios.append(r2 / r1)
    ok = fi <= 1e-6 and cr <= 1e-3 and all(0.4 <= r <= 0.6 for r in ratios)
    assert report("first integral / curvature", ok, f"max FI error={fi:.1e} max residual={cr:.1e} "
                  f"refinement ratio in [{min(ratios):.3f}, {max(ratios):.3f}]")


def test_span_brackets(report):
    rng = np.random.default_rng(17)
    bad = 0
    for cls, lo, hi in (("neg", "neg_lower", "neg_upper"), ("h12", "h1", "h2"),
                        ("h34", "h3", "h4"), ("h56", "h5", "h6")):
        for _ in range(200):
            B = float(np.exp(rng.uniform(-2, 4)))
            if cls == "neg":
                C = rng.uniform(-0.999, 0.0)
            elif cls == "h12":
                C = rng.uniform(1e-3, 0.999)
            elif cls == "h34":
                C = 1.0 + rng.exponential(3.0) + 1e-4
            else:
                C = rng.uniform(1e-3, 30.0)
            c = FirstIntegral(float(C), B)
            m = measured_spans(integrate_piece(c, n_samples=3000))[cls]
            bad += not span_bound_functions(c, lo) < m < span_bound_functions(c, hi)
    # the C <= 0, B = 1 example bracket
    ex = [measured_spans(integrate_piece(FirstIntegral(C, 1.0), n_samples=3000))["neg"]
          for C in (-0.99, -0.5, 0.0)]
    ex_ok = all(0.22291 < s < 2.22144 for s in ex)
    ok = bad == 0 and ex_ok
    assert report("span brackets", ok, f"{bad} of 800 outside; B=1 C<=0 spans {[round(float(s), 5) for s in ex]}")


@functools.lru_cache(maxsize=None)
def pair_sweep():
    """connect_pair over 10^3 random feasible pairs; counts per bracket check."""
    rng = np.random.default_rng(0)
    n = found = lower = rigorous = upper = other = 0
    while n < 1000:
        B = 10 ** rng.uniform(-1, 2)
        R = rng.uniform(0.01, 0.2)
        alpha = rng.uniform(-1, 1) * rng.integers(0, 2)
        d = 2 * R + rng.uniform(0.05, 3) / math.sqrt(B)
        th = rng.uniform(-math.pi, math.pi)
        c0 = np.array([5.0, 5.0 + rng.uniform(-2, 2) / math.sqrt(B)])
        c1 = c0 + d * np.array([math.cos(th), math.sin(th)])
        if not (0 <= c1[0] <= 10 and 0 <= c1[1] <= 10 and 0 <= c0[1] <= 10):
            continue
        p = RegimeParams(B=B, L=10.0, R=R, nu=0.0, alpha=alpha)
        n += 1
        c = connect_pair(c0, c1, p, 5.0)
        if c is None:
            continue
        found += 1
        lo, hi, _ = distance_bracket(c, p)
        lower += not lo < d
        rigorous += not lo - 4 * R < d
        upper += not d < hi
        other += young_residual_on_grains(c, p, np.array([c0, c1])) > 1e-6 or c.curvature_residual() > 1e-3
    return dict(pairs=n, found=found, lower=lower, rigorous=rigorous, upper=upper, other=other)


@pytest.mark.xfail(strict=True, reason="the +2R lower bound is not a valid bound; see decisions ledger")
def test_distance_bounds(report):
    s = pair_sweep()
    ok = s["lower"] == 0 and s["upper"] == 0 and s["other"] == 0
    report("distance bounds", ok, f"{s['found']} connections from {s['pairs']} pairs; "
           f"+2R lower-bound violations={s['lower']}, upper violations={s['upper']}, "
           f"young/curvature failures={s['other']}")
    assert ok


def test_distance_bounds_rigorous_parts():
    # the triangle-inequality lower bound (-2R), the upper brackets and the contact checks
    s = pair_sweep()
    assert s["rigorous"] == 0 and s["upper"] == 0 and s["other"] == 0 and s["found"] > 500


# --- bounds ---

def test_binomial_envelope(report):
    worst = -math.inf
    fails = explicit_fails = 0
    for n in range(3, 501):
        logC = math.log(C_n_bound(n))
        log_explicit = -11 / (12 * n) - 0.5 * math.log(2 * math.pi)
        for m in range(2, n):
            lb, W = math.log(math.comb(n, m)), binomial_W(n, m).W
            gap = lb - (logC + W)
            worst = max(worst, gap)
            fails += gap > 1e-12
            explicit_fails += lb > log_explicit + W
    argmax_ok = all(2 + int(np.argmax([binomial_W(n, m).W for m in range(2, n - 1)])) == n // 2
                    for n in range(4, 501, 2))
    ok = fails == 0 and argmax_ok
    assert report("binomial envelope", ok, f"{fails} failures, worst log excess {worst:.2e}, "
                  f"argmax at n/2: {argmax_ok} (explicit e^(-11/12n)/sqrt(2pi) form: "
                  f"{explicit_fails} failing pairs)")


def test_stirling(report):
    bad = [n for n in range(1, 171)
           if not stirling_bracket(n).lower <= math.factorial(n) <= stirling_bracket(n).upper]
    assert report("Stirling bracket", not bad, f"n=1..170, failures {bad}")


# --- percolation ---

def test_duality(report):
    t0 = time.perf_counter()
    ex = sum(exhaustive_duality(M) for M in (2, 3, 4))
    dt = time.perf_counter() - t0
    rnd = random_duality(16, 100_000, seed=16)
    ok = ex == 0 and rnd == 0 and dt < 10.0
    assert report("percolation duality", ok, f"exhaustive M<=4 failures={ex} in {dt:.2f}s; "
                  f"random M=16 10^5 grids failures={rnd}")


def test_q_convergence(report):
    nu, s = 1.0, 0.5
    lines = []
    ok = True
    for L in (200, 256):
        p = RegimeParams(B=1.0, L=float(L), R=0.0, nu=nu)
        trials = 5
        qs = [build_site_grid(sample_configuration(p, trial_seed(11, t)), (0.0, 0.0, L), s).q_empirical
              for t in range(trials)]
        exact = (1 - s / L ** 2) ** p.n_grains
        se = math.sqrt(exact * (1 - exact) / (trials * L * L))
        z = abs(np.mean(qs) - exact) / se
        ok &= z < 3 and abs(exact - math.exp(-nu * s)) < 1e-2
        lines.append(f"L={L} q={np.mean(qs):.5f} exact={exact:.5f} z={z:.2f}")
    assert report("q-convergence", ok, "; ".join(lines))


@pytest.mark.xfail(strict=True, reason="r_min(s) - 1/sqrt2 ~ sqrt(s/2); see decisions ledger")
def test_r_min(report):
    r0 = min_radius(1e-8)[1]
    rq = min_radius(0.25)[1]
    grid = np.linspace(1e-6, 1 - 1e-6, 1000)
    mono = bool(np.all(np.diff([min_radius(x)[1] for x in grid]) > 0))
    inv = 0.0
    for a, e in ((1.0, 0.1), (0.5, 0.3), (1.2, 1.0), (0.2, 0.05)):
        s0 = solve_s0(a, e)
        inv = max(inv, abs(min_radius(s0)[1] * a * e - 1))
    ok = abs(r0 - 1 / math.sqrt(2)) < 1e-6 and abs(rq - 1.767767) < 1e-6 and mono and inv < 1e-8
    report("r_min geometry", ok, f"r_min(1e-8)-1/sqrt2={r0 - 1 / math.sqrt(2):.2e} "
           f"r_min(1e-14)-1/sqrt2={min_radius(1e-14)[1] - 1 / math.sqrt(2):.2e} "
           f"r_min(0.25)={rq:.7f} monotone={mono} inverse err={inv:.1e}")
    assert ok


def test_r_min_attainable_parts():
    assert abs(min_radius(0.25)[1] - 1.767767) < 1e-6
    assert abs(min_radius(1e-14)[1] - 1 / math.sqrt(2)) < 1e-6
    grid = np.linspace(1e-6, 1 - 1e-6, 1000)
    assert np.all(np.diff([min_radius(x)[1] for x in grid]) > 0)
    for a, e in ((1.0, 0.1), (0.5, 0.3), (1.2, 1.0), (0.2, 0.05)):
        assert abs(min_radius(solve_s0(a, e))[1] * a * e - 1) < 1e-8


# --- experiments ---

def test_regime1(report):
    rep, dt = experiment("regime1")
    s = rep.summary
    ok = rep.summary["estimate"] >= 0.99 and dt < 300 and rep.config["trials"] == 10_000
    assert report("regime 1", ok, f"horizontal within cap {s['estimate']:.4f} over {rep.config['trials']} "
                  f"trials, verify failures {s['verify_failures']}, {dt:.0f}s")


def test_regime2(report):
    rep, dt = experiment("regime2")
    last = rep.summary["ladder"][-1]
    ks = {e["k"]: e for e in last["U_k"]}
    ok = all(ks[k]["ok"] for k in (1, 2, 3))
    parts = [f"k={k}: {ks[k]['estimate']:.4f} <= {ks[k]['bound']:.4f}" for k in (1, 2, 3)]
    assert report("regime 2", ok, f"L={last['L']}: " + ", ".join(parts)
                  + f"; fraction with |C-1|<=0.1: {last['C_concentration_0.1']:.3f}")


def test_regime3(report):
    rep, dt = experiment("regime3")
    s = rep.summary
    est = [(round(x["reach_estimate"], 3), round(x["builder_estimate"], 3)) for x in s["ladder"]]
    ok = s["nonincreasing_reach"] and s["nonincreasing_builder"] and rep.verdict == "consistent"
    assert report("regime 3 ladder", ok, f"(reach, builder) per B={[x['B'] for x in s['ladder']]}: {est}")


@pytest.mark.parametrize("curve", ["horizontal", "s"])
def test_regime4(report, curve):
    rep, dt = experiment(f"regime4_{curve}", trials=REGIME4_TRIALS)
    s = rep.summary
    ok = s["estimate"] >= 0.9 and s["v1_within_3se"]
    assert report(f"regime 4 ({curve})", ok, f"tube success {s['estimate']:.3f} over {REGIME4_TRIALS} trials, "
                  f"v1={s['v1_mean']:.5f} +- {s['v1_stderr']:.5f} vs V={s['V']}, K_fit={s['K_fit']:.3g}")


def test_length_bound(report):
    names = [("regime1", 0), ("regime2", 0), ("regime3", 0),
             ("regime4_horizontal", REGIME4_TRIALS), ("regime4_s", REGIME4_TRIALS)]
    viol = interfaces = 0
    for name, trials in names:
        rep, _ = experiment(name, trials=trials)
        viol += rep.summary["length_bound_violations"]
        interfaces += rep.summary["interfaces"]
    assert report("length bound", viol == 0, f"{viol} violations over {interfaces} interfaces")


def test_reproducibility(report):
    same = []
    for name, trials in (("regime1", 0), ("regime2", 100), ("regime4_s", 3)):
        a, _ = experiment(name, 1, trials)
        b, _ = experiment(name, 2, trials)
        same.append(a.to_json() == b.to_json() and a.to_csv() == b.to_csv())
    assert report("reproducibility", all(same), f"threads 1 vs 2 byte-identical: {same}")
