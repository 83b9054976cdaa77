"""Minimum information Markov models for stationary time series.

A minimum information Markov kernel pairs a dependence function (a vector of
monomials in lagged observations, weighted by theta) with a stationary
marginal law; the two blocks are orthogonal, so the dependence weights can be
estimated without touching the marginals.  This package provides the
dependence-function machinery, Gaussian AR/VAR ground truth and parameter
transforms, conditional-likelihood estimation by exchange MCMC with Fisher
scoring, Besag pseudo-likelihood estimation (full, bipartition, online SGD),
AIC/PIC model selection, and exact small-n oracles.
"""

from . import core, exceptions, gaussian, mcle, oracle, ple
from .core import (
    DependenceSpec,
    MonomialTerm,
    TimeSeries,
    ar_spec,
    kron_spec,
    standard_scale,
    swap_delta,
    total_statistic,
)
from .gaussian import (
    ClassicalARParams,
    ClassicalVARParams,
    MinInfoARParams,
    MinInfoVARParams,
    simulate_ar,
    simulate_var,
)

__version__ = "0.1.0"

__all__ = [
    "core",
    "exceptions",
    "gaussian",
    "mcle",
    "oracle",
    "ple",
    "DependenceSpec",
    "MonomialTerm",
    "TimeSeries",
    "ar_spec",
    "kron_spec",
    "standard_scale",
    "swap_delta",
    "total_statistic",
    "ClassicalARParams",
    "ClassicalVARParams",
    "MinInfoARParams",
    "MinInfoVARParams",
    "simulate_ar",
    "simulate_var",
    "__version__",
]
