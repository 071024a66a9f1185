"""Shared factories for the test suite."""

import numpy as np

from levydrift.model import (
    CompoundPoisson,
    ExponentialJumps,
    cir_model,
    hyperbolic_model,
    ou_model,
)
from levydrift.simulate import Observations


def cp_exp(intensity=1.0, rate=1.0, two_sided=False):
    """Compound-Poisson driver with exponential jump sizes."""
    return CompoundPoisson(intensity, ExponentialJumps(rate), two_sided=two_sided)


def std_ou(sigma=0.88, intensity=1.0, rate=1.0):
    """The OU model used throughout the Monte Carlo checks."""
    return ou_model(sigma=sigma, levy=cp_exp(intensity, rate))


def std_cir(sigma=0.25, intensity=1.0, rate=1.0):
    return cir_model(sigma=sigma, levy=cp_exp(intensity, rate))


def std_hyp(sigma=0.85, intensity=1.0, rate=1.0):
    return hyperbolic_model(sigma=sigma, levy=cp_exp(intensity, rate))


def obs_from(times, values):
    """Observations from plain lists."""
    return Observations(np.asarray(times, dtype=float), np.asarray(values, dtype=float))


def fd_gradient(f, x, h=1e-6):
    """Central finite-difference gradient of a scalar function."""
    x = np.asarray(x, dtype=float)
    g = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h * (1.0 + abs(x[i]))
        g[i] = (f(x + e) - f(x - e)) / (2.0 * e[i])
    return g
