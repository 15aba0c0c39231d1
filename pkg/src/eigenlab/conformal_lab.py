"""Conformal-image experiments: eigenvalues of F(B_t) versus B_t.

Planar maps are polynomials F(z) = c1 z + a2 z^2 + ... with a certified
injectivity radius (a derivative bound keeps Re(F'/c1) > 0, so F is univalent
on the ball).  As t grows, the image boundary moves with metric normal speed
|DF|, and the normalized comparison d/dt log(lambda(F(B_t)) / lambda(B_t)) is
negative unless the map is an isometry on the ball.

For n >= 3, conformal maps are Mobius (dilations and sphere inversions);
images of concentric balls are balls with closed-form radii, so the
monotonicity comparison of lambda^((n-2)/2) reduces to sphere quadrature of
|DF|^(n-2) plus arithmetic.

Note on the n >= 3 sufficient condition: the comparison derivative is
nonpositive when the sphere integral of |DF|^(n-2) does NOT exceed the sphere
area (a dilation with c > 1 satisfies the reversed condition yet has a
positive comparison derivative).  The hypothesis margin reported here is
|boundary sphere| - integral(|DF|^(n-2)), positive when the conclusion is
asserted.
"""

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq

from . import domain_mesh, model_space
from .errors import DomainError, GeometryError, InjectivityError, InputError
from .eigensolver import first_eigen
from .quadrature import gl_nodes


class PolynomialMap:
    """Planar conformal polynomial map with a certified injectivity radius."""

    map_kind = "planar"
    n = 2

    def __init__(self, coefficients):
        coeffs = np.asarray(coefficients, dtype=complex)
        if coeffs.ndim != 1 or len(coeffs) < 1 or coeffs[0] == 0:
            raise InputError("coefficients must be [c1, a2, ...] with c1 != 0")
        self.coefficients = coeffs
        self.t_max = self._injectivity_radius()

    def _derivative_slack(self, t):
        """|c1| - sum k |a_k| t^(k-1); positive slack certifies univalence on B_t."""
        k = np.arange(2, len(self.coefficients) + 1)
        if len(k) == 0:
            return abs(self.coefficients[0])
        tail = np.sum(k * np.abs(self.coefficients[1:]) * t ** (k - 1))
        return abs(self.coefficients[0]) - tail

    def _injectivity_radius(self):
        if len(self.coefficients) == 1:
            return math.inf
        hi = 1.0
        while self._derivative_slack(hi) > 0:
            hi *= 2.0
            if hi > 1e12:
                return math.inf
        return brentq(self._derivative_slack, 0.0, hi, rtol=1e-14)

    def forward(self, z):
        z = np.asarray(z, dtype=complex)
        out = np.zeros_like(z)
        for a in self.coefficients[::-1]:
            out = out * z + a
        return out * z

    def derivative(self, z):
        z = np.asarray(z, dtype=complex)
        out = np.zeros_like(z)
        for k in range(len(self.coefficients), 0, -1):
            out = out * z + k * self.coefficients[k - 1]
        return out

    def df_magnitude(self, z):
        return np.abs(self.derivative(z))

    @property
    def is_linear(self):
        return len(self.coefficients) == 1


class MobiusMap:
    """Mobius map of R^n (n >= 3) sending concentric balls to balls.

    Two kinds: ``dilation`` x -> c x, and ``inversion`` about the sphere of
    radius sqrt(scale) centered at distance ``center_distance`` from the
    origin along the first axis.  Image radii of B_t are closed-form.
    """

    map_kind = "mobius"

    def __init__(self, n, kind, c=1.0, center_distance=3.0, scale=4.0):
        if int(n) != n or n < 3:
            raise DomainError(f"Mobius maps are the n >= 3 channel; got n = {n}")
        if kind not in ("dilation", "inversion"):
            raise DomainError(f"unknown Mobius kind {kind!r}")
        self.n = int(n)
        self.kind = kind
        if kind == "dilation":
            if not c > 0:
                raise DomainError("dilation factor must be positive")
            self.c = float(c)
            self.t_max = math.inf
        else:
            if not (center_distance > 0 and scale > 0):
                raise DomainError("inversion needs positive center distance and scale")
            self.a = float(center_distance)
            self.s = float(scale)
            self.t_max = self.a  # balls must avoid the inversion center

    def image_radius(self, t):
        if self.kind == "dilation":
            return self.c * t
        if not t < self.a:
            raise DomainError(f"ball radius {t} reaches the inversion center at {self.a}")
        return self.s * t / (self.a**2 - t**2)

    def image_radius_derivative(self, t):
        if self.kind == "dilation":
            return self.c
        return self.s * (self.a**2 + t**2) / (self.a**2 - t**2) ** 2

    def df_on_sphere(self, t, cos_theta):
        """|DF| on the sphere of radius t as a function of the polar angle."""
        if self.kind == "dilation":
            return np.full_like(np.asarray(cos_theta, dtype=float), self.c)
        dist_sq = t**2 + self.a**2 - 2.0 * t * self.a * np.asarray(cos_theta, dtype=float)
        return self.s / dist_sq


def image_domain(cmap, t, n_boundary=512):
    """Image of the t-ball boundary under a planar map, as a boundary curve."""
    if cmap.map_kind != "planar":
        raise DomainError("image_domain needs a planar map")
    if not (0 < t < cmap.t_max):
        raise InjectivityError(
            f"radius {t} is outside the certified injectivity radius {cmap.t_max}"
        )
    theta = np.linspace(0.0, 2.0 * math.pi, n_boundary, endpoint=False)
    w = cmap.forward(t * np.exp(1j * theta))
    try:
        return domain_mesh.BoundaryCurve(np.column_stack([w.real, w.imag]))
    except GeometryError as exc:
        raise InjectivityError(f"image boundary is not a simple curve: {exc}") from exc


@lru_cache(maxsize=8)
def _unit_disk_mesh(n_boundary, h0):
    curve = domain_mesh.circle_curve(1.0, n_boundary)
    return domain_mesh.triangulate(curve, h0)


def _mapped_mesh(cmap, t, n_boundary, h0):
    """Image of a scaled reference disk mesh; topology is shared across t."""
    ref = _unit_disk_mesh(n_boundary, h0)
    z = t * (ref.vertices[:, 0] + 1j * ref.vertices[:, 1])
    w = cmap.forward(z)
    verts = np.column_stack([w.real, w.imag])
    curve = domain_mesh.BoundaryCurve(verts[: ref.n_boundary])
    return domain_mesh.TriMesh(
        vertices=verts,
        triangles=ref.triangles,
        boundary_edges=ref.boundary_edges,
        mesh_size_h=ref.mesh_size_h * t,
        curve=curve,
    )


def image_eigenvalue(cmap, t, target_surface, n_boundary=512, h0=0.03, tol=1e-12):
    """FEM first eigenvalue of F(B_t) in the target surface metric."""
    if not (0 < t < cmap.t_max):
        raise InjectivityError(
            f"radius {t} is outside the certified injectivity radius {cmap.t_max}"
        )
    mesh = _mapped_mesh(cmap, t, n_boundary, h0)
    return first_eigen(mesh, target_surface, tol=tol)


@dataclass
class SchwarzPoint:
    t: float
    lam: float
    lam_tilde: float
    dlog_ratio: float
    error_estimate: float


@dataclass
class Schwarz2DReport:
    points: list
    linear: bool

    def export_rows(self):
        for pt in self.points:
            yield (pt.t, pt.lam, pt.lam_tilde, pt.dlog_ratio, math.nan, math.nan)


def schwarz_check_2d(cmap, t_grid, target_surface, n_boundary=512, h0=0.03, step=0.1):
    """Richardson-extrapolated derivative of log(lambda(F(B_t)) / lambda(B_t)).

    The derivative is computed from symmetric differences at spacings ``step``
    and ``step/2``; the returned error estimate is the Richardson defect,
    which bounds the finite-difference truncation (not the mesh bias).
    """
    if cmap.map_kind != "planar":
        raise DomainError("schwarz_check_2d needs a planar map")
    t_grid = np.asarray(t_grid, dtype=float)
    needed = set()
    for t in t_grid:
        for dt in (step, step / 2.0):
            needed.update((t - dt, t + dt))
    if max(needed) >= cmap.t_max:
        raise InjectivityError(
            f"stencil reaches {max(needed):.4f}, beyond injectivity radius {cmap.t_max:.4f}"
        )
    ms2 = model_space.ModelSpace(2, 0.0)
    lam_unit = model_space.ball_eigenvalue(ms2, 1.0)

    cache = {}

    def log_ratio(t):
        key = round(t, 12)
        if key not in cache:
            lam_tilde = image_eigenvalue(cmap, t, target_surface, n_boundary, h0).lambda_h
            cache[key] = (lam_tilde, math.log(lam_tilde / (lam_unit / t**2)))
        return cache[key][1]

    points = []
    for t in t_grid:
        d1 = (log_ratio(t + step) - log_ratio(t - step)) / (2.0 * step)
        d2 = (log_ratio(t + step / 2.0) - log_ratio(t - step / 2.0)) / step
        richardson = (4.0 * d2 - d1) / 3.0
        err = abs(d2 - d1) / 3.0
        lam_t = lam_unit / t**2
        lam_tilde = image_eigenvalue(cmap, t, target_surface, n_boundary, h0).lambda_h
        points.append(
            SchwarzPoint(
                t=float(t),
                lam=lam_t,
                lam_tilde=lam_tilde,
                dlog_ratio=richardson,
                error_estimate=err,
            )
        )
    return Schwarz2DReport(points=points, linear=getattr(cmap, "is_linear", False))


@dataclass
class MobiusPoint:
    t: float
    lam: float
    lam_tilde: float
    hypothesis_margin: float  # |sphere| - integral(|DF|^(n-2)); conclusion asserted when > 0
    conclusion_margin: float  # -d/dt [lambda_tilde^((n-2)/2) - lambda^((n-2)/2)]
    asserted: bool


@dataclass
class SchwarzMobiusReport:
    n: int
    points: list
    passed: bool

    def export_rows(self):
        for pt in self.points:
            yield (pt.t, pt.lam, pt.lam_tilde, math.nan, pt.hypothesis_margin, pt.conclusion_margin)


def _sphere_mean_integral(cmap, t, power, order=256):
    """integral over the sphere of radius t of |DF|^power (axisymmetric quadrature).

    The integrand depends only on the polar angle to the map axis, so the
    integral is the sphere area times the sin^(n-2)-weighted angular mean.
    """
    n = cmap.n
    x, w = gl_nodes(order)
    theta = 0.5 * math.pi * (x + 1.0)
    weights = 0.5 * math.pi * w
    sin_pow = np.sin(theta) ** (n - 2)
    vals = cmap.df_on_sphere(t, np.cos(theta)) ** power * sin_pow
    area = model_space.boundary_volume(model_space.ModelSpace(n, 0.0), t)
    return area * float(np.sum(vals * weights)) / float(np.sum(sin_pow * weights))


def schwarz_check_mobius(n, cmap, t_grid):
    """Hypothesis and conclusion margins of the n >= 3 conformal comparison.

    At each t the hypothesis margin is |boundary sphere| minus the sphere
    integral of |DF|^(n-2); where it is positive, the conclusion margin
    -(d/dt)[lambda_tilde^((n-2)/2) - lambda^((n-2)/2)] must be positive too.
    """
    if cmap.map_kind != "mobius" or cmap.n != n:
        raise DomainError("schwarz_check_mobius needs a Mobius map of matching dimension")
    if int(n) != n or n < 3:
        raise DomainError(f"needs n >= 3, got {n}")
    t_grid = np.asarray(t_grid, dtype=float)
    if np.any(t_grid >= cmap.t_max):
        raise DomainError("t grid reaches the map's validity radius")
    ms = model_space.ModelSpace(int(n), 0.0)
    lam1 = model_space.ball_eigenvalue(ms, 1.0)
    ex = (n - 2) / 2.0
    points = []
    ok = True
    for t in t_grid:
        sphere = model_space.boundary_volume(ms, t)
        integral = _sphere_mean_integral(cmap, t, n - 2)
        hyp_margin = sphere - integral
        rho = cmap.image_radius(t)
        rho_prime = cmap.image_radius_derivative(t)
        d_tilde = lam1**ex * (2 - n) * rho ** (1 - n) * rho_prime
        d_plain = lam1**ex * (2 - n) * t ** (1 - n)
        conclusion = -(d_tilde - d_plain)
        asserted = hyp_margin > 0
        if asserted and conclusion <= 0:
            ok = False
        points.append(
            MobiusPoint(
                t=float(t),
                lam=lam1 / t**2,
                lam_tilde=lam1 / rho**2,
                hypothesis_margin=hyp_margin,
                conclusion_margin=conclusion,
                asserted=asserted,
            )
        )
    return SchwarzMobiusReport(n=int(n), points=points, passed=ok)


@dataclass
class VelocityConsistencyReport:
    t: float
    hadamard: float
    finite_difference: float
    residual: float
    passed: bool


def velocity_consistency_check(
    cmap, t, target_surface=None, n_boundary=512, h0=0.03, eps_rel=0.02, rel_tol=1e-2
):
    """The image boundary moves with metric normal speed |DF|.

    Compares the flux variation formula evaluated with that speed against a
    central finite difference of lambda(F(B_t)) over the mapped mesh family.
    """
    if cmap.map_kind != "planar":
        raise DomainError("velocity_consistency_check needs a planar map")
    if target_surface is None:
        target_surface = domain_mesh.ConformalSurface.euclidean()
    result = image_eigenvalue(cmap, t, target_surface, n_boundary, h0)
    theta = np.linspace(0.0, 2.0 * math.pi, n_boundary, endpoint=False)
    z = t * np.exp(1j * theta)
    speeds = cmap.df_magnitude(z)
    from .flow_lab import hadamard_derivative

    had = hadamard_derivative(result, speeds)
    eps = eps_rel * t
    lam_plus = image_eigenvalue(cmap, t + eps, target_surface, n_boundary, h0).lambda_h
    lam_minus = image_eigenvalue(cmap, t - eps, target_surface, n_boundary, h0).lambda_h
    fd = (lam_plus - lam_minus) / (2.0 * eps)
    residual = abs(had - fd) / abs(fd)
    return VelocityConsistencyReport(
        t=t, hadamard=had, finite_difference=fd, residual=residual, passed=residual <= rel_tol
    )
