"""Time-fractional Fokker-Planck solvers and verification harness."""

from . import analysis, fem1d, fracops, timestep

__version__ = "0.1.0"

__all__ = ["analysis", "fem1d", "fracops", "timestep", "__version__"]
