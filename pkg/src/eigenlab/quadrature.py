"""Gauss-Legendre and triangle quadrature helpers.

All radial and boundary integrals in the package go through
``gauss_legendre_panels`` so that accuracy is controlled in one place:
the panel count doubles until two successive composite values agree to
the requested relative tolerance.
"""

from functools import lru_cache

import numpy as np

from .errors import SolverError


@lru_cache(maxsize=32)
def gl_nodes(m: int):
    """Nodes and weights of the m-point Gauss-Legendre rule on [-1, 1]."""
    x, w = np.polynomial.legendre.leggauss(m)
    return x, w


def gauss_legendre_panels(f, a, b, rel_tol=1e-11, nodes=64, max_panels=1024):
    """Integrate a vectorized callable on [a, b] by panel-doubling composite GL.

    ``f`` must accept an ndarray of abscissae and return an ndarray of values.
    """
    if b == a:
        return 0.0
    x, w = gl_nodes(nodes)
    prev = None
    panels = 1
    while panels <= max_panels:
        edges = np.linspace(a, b, panels + 1)
        half = 0.5 * (edges[1] - edges[0])
        mids = 0.5 * (edges[:-1] + edges[1:])
        pts = (mids[:, None] + half * x[None, :]).ravel()
        vals = np.asarray(f(pts), dtype=float).reshape(panels, nodes)
        total = half * float(np.sum(vals @ w))
        if prev is not None and abs(total - prev) <= rel_tol * max(abs(total), 1e-300):
            return total
        prev = total
        panels *= 2
    raise SolverError(
        f"Gauss-Legendre panel doubling did not converge on [{a}, {b}] "
        f"(last value {prev!r}, rel_tol {rel_tol})"
    )


# Symmetric 6-point rule on the reference triangle, exact for degree 4.
# Barycentric coordinates and weights (weights sum to 1).
_A1 = 0.445948490915965
_A2 = 0.091576213509771
TRI6_BARY = np.array(
    [
        [1.0 - 2.0 * _A1, _A1, _A1],
        [_A1, 1.0 - 2.0 * _A1, _A1],
        [_A1, _A1, 1.0 - 2.0 * _A1],
        [1.0 - 2.0 * _A2, _A2, _A2],
        [_A2, 1.0 - 2.0 * _A2, _A2],
        [_A2, _A2, 1.0 - 2.0 * _A2],
    ]
)
TRI6_WEIGHTS = np.array(
    [
        0.223381589678011,
        0.223381589678011,
        0.223381589678011,
        0.109951743655322,
        0.109951743655322,
        0.109951743655322,
    ]
)


def triangle_quad_points(p1, p2, p3):
    """Physical quadrature points of the 6-point rule for triangles.

    Each ``p*`` is an (M, 2) array of triangle corners; returns (M, 6, 2).
    """
    p1 = np.asarray(p1, dtype=float)
    p2 = np.asarray(p2, dtype=float)
    p3 = np.asarray(p3, dtype=float)
    return (
        TRI6_BARY[None, :, 0, None] * p1[:, None, :]
        + TRI6_BARY[None, :, 1, None] * p2[:, None, :]
        + TRI6_BARY[None, :, 2, None] * p3[:, None, :]
    )


def triangle_areas(p1, p2, p3):
    """Signed areas of triangles given corner arrays of shape (M, 2)."""
    p1 = np.asarray(p1, dtype=float)
    p2 = np.asarray(p2, dtype=float)
    p3 = np.asarray(p3, dtype=float)
    return 0.5 * (
        (p2[:, 0] - p1[:, 0]) * (p3[:, 1] - p1[:, 1])
        - (p3[:, 0] - p1[:, 0]) * (p2[:, 1] - p1[:, 1])
    )


def integrate_weight_over_triangles(weight_fn, p1, p2, p3):
    """Integral of a scalar field over each triangle with the 6-point rule.

    ``weight_fn(x, y)`` must be vectorized. Returns an (M,) array.
    """
    pts = triangle_quad_points(p1, p2, p3)
    vals = weight_fn(pts[..., 0].ravel(), pts[..., 1].ravel()).reshape(pts.shape[:2])
    return np.abs(triangle_areas(p1, p2, p3)) * (vals @ TRI6_WEIGHTS)
