"""Command-line entry point.

Exit codes: 0 ran and consistent, 2 a bound was violated, 3 bad config or
input.
"""

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from .constants import load_constants
from .curve_core import FirstIntegral, closure_residual, complete_curve, find_C0, integrate_piece, \
    measured_spans, piece_curvature_residual
from .errors import ConfigError, DomainError
from .experiments import ExperimentConfig, load_config, make_curve, parse_config, run_experiment, validate
from .grain_field import GrainField, RegimeParams, sample_configuration, trial_seed
from .interface_builder import build_interface, build_site_interface, connect_pair, distance_bracket, \
    young_residual_on_grains
from .percolation import CSV_HEADER, build_site_grid, crossing_probability, exhaustive_duality, \
    random_duality

EXIT_OK, EXIT_VIOLATED, EXIT_CONFIG = 0, 2, 3


def _emit(obj) -> None:
    print(json.dumps(obj, indent=2, sort_keys=True, default=float))


def _out_dir(args) -> Path:
    d = Path(args.out)
    d.mkdir(parents=True, exist_ok=True)
    return d


def _config(args, regime=None) -> ExperimentConfig:
    if args.config:
        cfg = load_config(args.config)
    elif regime is not None:
        raise ConfigError("--config is required")
    else:
        cfg = parse_config(f"regime=1\nB={args.B!r}\nL={args.L!r}\nR={args.R!r}\nnu={args.nu!r}\n"
                           f"alpha={args.alpha!r}\n")
    if regime is not None and cfg.regime != regime:
        raise ConfigError(f"config is for regime {cfg.regime}, not {regime}")
    if args.seed is not None:
        cfg.seed = args.seed
    if args.trials is not None:
        cfg.trials = args.trials
    if args.out:
        cfg.out = args.out
    return cfg


# --- subcommands ---

def cmd_curve(args) -> int:
    if args.what == "C0":
        c0 = find_C0()
        _emit({"C0": c0, "closure_residual": closure_residual(c0)})
        return EXIT_OK
    fi = FirstIntegral(args.C, args.B)
    if args.what == "piece":
        piece = integrate_piece(fi)
        _emit({"C": fi.C, "B": fi.B, "length": piece.length, "spans": measured_spans(piece),
               "first_integral_error": piece.first_integral_error(),
               "curvature_residual": piece_curvature_residual(piece)})
        return EXIT_OK
    curve = complete_curve(fi, n_glue=args.glue)
    _emit({"C": fi.C, "B": fi.B, "orientation": curve.orientation,
           "glue_points": [list(p) for p in curve.glue_points]})
    if args.out:
        from .render import render_svg
        render_svg(curve, _out_dir(args) / "curve.svg")
    return EXIT_OK


def cmd_field(args) -> int:
    cfg = _config(args)
    f = sample_configuration(cfg.params(), cfg.seed)
    if args.out:
        (_out_dir(args) / "field.txt").write_text(f.to_text())
    _emit({"N": f.N, "L": f.params.L, "R": f.params.R, "nu": f.params.nu, "seed": f.seed})
    return EXIT_OK


def _point(text: str):
    try:
        x, y = (float(v) for v in text.split(","))
    except ValueError:
        raise ConfigError(f"expected x,y but got {text!r}") from None
    return np.array([x, y])


def cmd_connect(args) -> int:
    L = args.L
    p = RegimeParams(B=args.B, L=L, R=args.R, nu=0.0, alpha=args.alpha)
    xi, zeta = _point(args.xi), _point(args.zeta)
    c = connect_pair(xi, zeta, p, args.lam)
    if c is None:
        _emit({"found": False})
        return EXIT_OK
    lo, hi, cls = distance_bracket(c, p)
    d = float(np.hypot(*(xi - zeta)))
    _emit({"found": True, "C": c.C, "class": cls, "direction": c.direction, "pieces": c.n_pieces,
           "length": c.length, "distance": d, "bracket": [lo, hi], "in_bracket": lo < d < hi,
           "young_residual": young_residual_on_grains(c, p, np.array([xi, zeta])),
           "curvature_residual": c.curvature_residual()})
    return EXIT_OK


def _regime(n):
    def run(args) -> int:
        cfg = _config(args, regime=n)
        validate(cfg)
        rep = run_experiment(cfg, threads=args.threads)
        out = rep.write(cfg.out)
        print(f"regime {n}: {rep.verdict}  ({out / 'report.json'})")
        return EXIT_VIOLATED if rep.verdict == "violated" else EXIT_OK
    return run


def cmd_percolation(args) -> int:
    if args.mode == "duality":
        if args.random:
            fails = random_duality(args.M, args.random, args.seed or 0)
        else:
            fails = exhaustive_duality(args.M)
        _emit({"M": args.M, "failures": fails})
        return EXIT_VIOLATED if fails else EXIT_OK
    p = RegimeParams(B=1.0, L=float(args.M), R=0.0, nu=args.nu)
    if args.mode == "grid":
        f = sample_configuration(p, args.seed or 0)
        g = build_site_grid(f, (0.0, 0.0, args.M), args.s)
        text = g.to_rle()
        if args.out:
            (_out_dir(args) / "grid.rle").write_text(text)
        else:
            sys.stdout.write(text)
        return EXIT_OK
    res = crossing_probability(p, args.M, args.s, args.trials or 1000, args.seed or 0)
    print(CSV_HEADER)
    print(res.csv_row())
    if not res.vacuous and res.estimate < res.bound - 3 * res.stderr:
        return EXIT_VIOLATED
    return EXIT_OK


def cmd_render(args) -> int:
    from .render import render_svg
    cfg = _config(args)
    out = _out_dir(args)
    seed = trial_seed(cfg.seed, args.trial)
    f = sample_configuration(cfg.params(), seed)
    if args.what == "field":
        render_svg(f, out / "field.svg")
    elif args.what == "curve":
        render_svg(make_curve(cfg), out / "curve.svg")
    elif args.what == "grid":
        render_svg(build_site_grid(f, (0.0, 0.0, int(round(cfg.L))), cfg.s), out / "grid.svg")
    else:
        if cfg.regime == 4:
            eps = cfg.L ** (-(cfg.p if cfg.p > 0 else load_constants(cfg.constants or None).p))
            g = build_site_interface(f, make_curve(cfg), cfg.s, math.sqrt(2.0) * eps * cfg.L)
        else:
            g = build_interface(f)
        if g is None:
            print("no interface for this trial")
            return EXIT_OK
        render_svg(g, out / "interface.svg", field=f)
    print(f"wrote {out}")
    return EXIT_OK


# --- parser ---

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=str, default=None, help="experiment config file")
    common.add_argument("--seed", type=lambda s: int(s, 0), default=None, help="master seed (u64)")
    common.add_argument("--trials", type=int, default=None)
    common.add_argument("--out", type=str, default=None, help="output directory")
    common.add_argument("--threads", type=int, default=1)

    phys = argparse.ArgumentParser(add_help=False)
    phys.add_argument("--B", type=float, default=1.0)
    phys.add_argument("--L", type=float, default=10.0)
    phys.add_argument("--R", type=float, default=0.05)
    phys.add_argument("--nu", type=float, default=1.0)
    phys.add_argument("--alpha", type=float, default=0.0)

    ap = argparse.ArgumentParser(prog="capillary-media", description="Capillary interfaces in random porous media")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("curve", parents=[common], help="pieces, complete curves and C0")
    p.add_argument("what", choices=["piece", "complete", "C0"])
    p.add_argument("--C", type=float, default=0.5)
    p.add_argument("--B", type=float, default=1.0)
    p.add_argument("--glue", type=int, default=3)
    p.set_defaults(func=cmd_curve)

    p = sub.add_parser("field", parents=[common, phys], help="sample and serialize a grain field")
    p.set_defaults(func=cmd_field)

    p = sub.add_parser("connect", parents=[common, phys], help="solve one grain-to-grain connection")
    p.add_argument("--xi", required=True, help="x,y of the source grain")
    p.add_argument("--zeta", required=True, help="x,y of the target grain")
    p.add_argument("--lam", type=float, required=True, help="reference height")
    p.set_defaults(func=cmd_connect)

    for n in (1, 2, 3, 4):
        p = sub.add_parser(f"regime{n}", parents=[common], help=f"run the regime-{n} experiment")
        p.set_defaults(func=_regime(n))

    p = sub.add_parser("percolation", parents=[common], help="site grids, crossing and duality")
    p.add_argument("mode", choices=["grid", "crossing", "duality"])
    p.add_argument("--M", type=int, default=16)
    p.add_argument("--s", type=float, default=0.5)
    p.add_argument("--nu", type=float, default=6.0)
    p.add_argument("--random", type=int, default=0, help="random duality check with this many grids")
    p.set_defaults(func=cmd_percolation)

    p = sub.add_parser("render", parents=[common, phys], help="write SVG files")
    p.add_argument("what", choices=["interface", "field", "grid", "curve"])
    p.add_argument("--trial", type=int, default=0)
    p.set_defaults(func=cmd_render)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, DomainError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
