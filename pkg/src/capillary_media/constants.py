"""Calibrated constants, stored as a plain key = value text file.

The file is versioned and its SHA-256 digest goes into every experiment
report.
"""

import hashlib
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Optional, Union

from .errors import ConfigError

K1_EXACT = math.sqrt(2.0 * (math.pi ** 2 + 4.0))


@dataclass(frozen=True)
class ConstantsFile:
    version: str
    D0_coeff: float     # D0 = D0_coeff * sqrt(C(Gamma))
    K: float            # gap constant: |xi_i - xi_l| <= K/(D sqrt(B)) + 2R
    K1: float
    K2: float
    p: float            # eps(L) = L^-p
    K_perc: float       # crossing-bound rate for the tube experiment
    sha256: str
    path: str

    def D0(self, C_gamma: float = 1.0) -> float:
        return self.D0_coeff * math.sqrt(max(C_gamma, 0.0))


def parse_constants(text: str, path: str = "<memory>") -> ConstantsFile:
    vals = {}
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}: malformed line {raw!r}")
        k, v = (s.strip() for s in line.split("=", 1))
        vals[k] = v
    try:
        out = ConstantsFile(
            version=vals["version"],
            D0_coeff=float(vals["D0_coeff"]),
            K=float(vals["K"]),
            K1=float(vals["K1"]),
            K2=float(vals["K2"]),
            p=float(vals["p"]),
            K_perc=float(vals["K_perc"]),
            sha256=hashlib.sha256(text.encode()).hexdigest(),
            path=path,
        )
    except KeyError as e:
        raise ConfigError(f"{path}: missing constant {e.args[0]}") from None
    except ValueError as e:
        raise ConfigError(f"{path}: {e}") from None
    if not 0 < out.p < 1:
        raise ConfigError(f"{path}: p must lie in (0, 1)")
    return out


def load_constants(path: Optional[Union[str, Path]] = None) -> ConstantsFile:
    if path is None:
        text = resources.files("capillary_media").joinpath("data/constants.txt").read_text()
        return parse_constants(text, "capillary_media/data/constants.txt")
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as e:
        raise ConfigError(f"cannot read constants file {p}: {e}") from None
    return parse_constants(text, str(p))
