"""Numerical tolerances and resolution defaults.

Everything that would otherwise be a magic number in the curve and interface
code lives here so that tests and experiments can tighten or relax it in one
place.
"""

from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    first_integral: float = 1e-6
    curvature_residual: float = 1e-3
    height: float = 1e-9
    endpoint: float = 1e-7
    closure: float = 1e-8
    young: float = 1e-6
    # switch from the x2bar form of the branch equation to the arc-length
    # form once |dx1/dx2bar| exceeds this
    slope_switch: float = 10.0
    samples_per_piece: int = 10_000
    # floor on resolution: step h is capped so that h * B stays below this
    curvature_step: float = 1e-3
    # the C = 1 piece is cut where x2bar = asymptote_cutoff * x2max
    asymptote_cutoff: float = 1e-6
    quad_abs: float = 1e-14
    quad_rel: float = 1e-13


DEFAULT = Tolerances()
