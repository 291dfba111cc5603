"""First-exit-time distributions of Lévy subordinators and the approximate BN-S model.

Submodules
----------
specfun
    Special-function kernels.
laplace
    Forward and inverse Laplace transforms.
levy
    Catalog subordinator laws and model parameters.
firstexit
    Exit-time densities by closed form and numeric inversion.
decomp
    Decomposition integral of the two-part exit time.
mc
    Monte Carlo oracle.
empirical, emit, cli
    Price-file pipeline, artifact files and the command line.
"""

from __future__ import annotations

__version__ = "0.1.0"

from . import decomp, emit, empirical, firstexit, laplace, levy, mc, specfun
from .exceptions import *  # noqa: F401,F403
from .grids import DensityCurve, Grid
from .levy import ModelParams, parse_model, parse_spec

__all__ = [
    "__version__",
    "specfun",
    "laplace",
    "levy",
    "firstexit",
    "decomp",
    "mc",
    "empirical",
    "emit",
    "Grid",
    "DensityCurve",
    "ModelParams",
    "parse_spec",
    "parse_model",
]
