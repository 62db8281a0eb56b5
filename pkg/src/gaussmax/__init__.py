"""Extremes of stationary Gaussian processes under weak and strong dependence.

Modules:

* :mod:`gaussmax.covmodels` correlation families and regime diagnostics
* :mod:`gaussmax.gpsim` exact path synthesis (circulant embedding, Cholesky, fBm)
* :mod:`gaussmax.limitlaws` limit CDFs, normalisers and exceedance intensities
* :mod:`gaussmax.pickands` Monte Carlo Pickands constants
* :mod:`gaussmax.maxstats` limit-theorem experiments
* :mod:`gaussmax.cli` command-line entry point
"""
from . import covmodels, gpsim, limitlaws, maxstats, pickands, streams
from .covmodels import CorrelationModel, make_b1, make_b2, make_weak
from .limitlaws import LimitLaw

__version__ = "0.1.0"

__all__ = ["covmodels", "gpsim", "limitlaws", "maxstats", "pickands", "streams",
           "CorrelationModel", "make_weak", "make_b1", "make_b2", "LimitLaw", "__version__"]
