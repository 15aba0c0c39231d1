"""Independent numerical oracles used by the tests.

These deliberately avoid the package's solvers: the Bessel route uses a plain
power series plus bisection, and quadratures are composite Simpson on dense
grids, so oracle values share no code path with the implementations they
check.
"""

import math

import numpy as np


def bessel_j0(x):
    """J0 by power series; accurate to ~1e-15 for |x| <= 12."""
    x = np.asarray(x, dtype=float)
    term = np.ones_like(x)
    total = np.ones_like(x)
    q = -(x * x) / 4.0
    for k in range(1, 40):
        term = term * q / (k * k)
        total = total + term
    return total


def first_j0_zero():
    """First positive zero of J0 by bisection on the series."""
    lo, hi = 2.0, 3.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if bessel_j0(np.array(mid)) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def unit_disk_eigenvalue():
    """Squared first J0 zero: the unit-disk Dirichlet eigenvalue."""
    return first_j0_zero() ** 2


def simpson(f, a, b, n=4096):
    """Composite Simpson rule on a uniform grid (n even)."""
    x = np.linspace(a, b, n + 1)
    y = f(x)
    h = (b - a) / n
    return h / 3.0 * (y[0] + y[-1] + 4.0 * y[1:-1:2].sum() + 2.0 * y[2:-1:2].sum())


def hyperbolic_disk_area(r, kappa=1.0):
    return 2.0 * math.pi * (math.cosh(kappa * r) - 1.0) / kappa**2


def hyperbolic_disk_perimeter(r, kappa=1.0):
    return 2.0 * math.pi * math.sinh(kappa * r) / kappa


def euclidean_radius_of_hyperbolic_circle(r, kappa=1.0):
    """Poincare-model Euclidean radius of the hyperbolic circle of radius r."""
    return math.tanh(kappa * r / 2.0)
