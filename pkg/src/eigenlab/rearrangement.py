"""Distribution functions, decreasing rearrangements, and comparison inequalities.

Starting from a discrete first eigenpair, the distribution function
mu(t) = metric volume of {phi > t} is computed exactly for the
piecewise-linear eigenfunction: each straddled triangle is clipped against
the level plane and the metric weight is integrated over the clipped polygon.
Monotone inversion of mu gives the decreasing rearrangement phi*(v), from
which the module verifies:

* the integro-differential rearrangement bound
  -(phi*)'(v) <= lambda (n omega_n)^-2 (sinh(kappa r_kappa(v))/kappa)^(2-2n)
  * integral(phi*, 0..v), with equality exactly on model balls,
* sup-normalized majorization phi* >= psi* against the same-frequency ball,
* the Lp-ratio and reverse-Holder inequalities it implies,
* the conformal-metric isoperimetric corollary Ltilde^2 >= 4 pi Atilde.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import model_space
from .errors import ConfigurationError, DomainError, ExponentOrderError, InputError
from .eigensolver import tolerance_policy
from .quadrature import TRI6_BARY, TRI6_WEIGHTS, triangle_areas


@dataclass
class DistributionProfile:
    """Level/volume tables of the distribution function and rearrangement."""

    sup_norm: float
    levels: np.ndarray
    mu_values: np.ndarray
    v_grid: np.ndarray  # ascending volumes
    phi_star: np.ndarray  # decreasing along v_grid
    total_volume: float

    def phi_star_at(self, v):
        return np.interp(np.asarray(v, dtype=float), self.v_grid, self.phi_star)

    def cumulative_phi_star(self):
        """Trapezoid cumulative integral of phi* on the volume grid."""
        return np.concatenate(
            [[0.0], np.cumsum(0.5 * (self.phi_star[1:] + self.phi_star[:-1]) * np.diff(self.v_grid))]
        )

    def lp_integral(self, p):
        """integral of (phi*)^p over [0, total_volume] by trapezoid."""
        vals = self.phi_star**p
        return float(np.trapezoid(vals, self.v_grid))


def _triangle_weights(surface, p1, p2, p3):
    """Metric areas of triangles given corner stacks (degree-4 rule)."""
    pts = (
        TRI6_BARY[None, :, 0, None] * p1[:, None, :]
        + TRI6_BARY[None, :, 1, None] * p2[:, None, :]
        + TRI6_BARY[None, :, 2, None] * p3[:, None, :]
    )
    vals = surface.weight(pts[..., 0].ravel(), pts[..., 1].ravel()).reshape(len(p1), 6)
    return np.abs(triangle_areas(p1, p2, p3)) * (vals @ TRI6_WEIGHTS)


def _level_grid(sup_norm, n_levels):
    base = np.linspace(0.0, sup_norm, n_levels)
    fine = np.linspace(0.75 * sup_norm, sup_norm, 3 * max(n_levels // 4, 8))
    return np.unique(np.concatenate([base, fine]))


def distribution_function(result, surface, n_levels=256):
    """Exact distribution function of the P1 eigenfunction on the level grid.

    The level grid is uniform on [0, sup phi] with four-fold refinement near
    the maximum, where mu is flat and drives the accuracy of phi* near v = 0.
    """
    if n_levels < 64:
        raise InputError(f"need at least 64 levels, got {n_levels}")
    mesh, phi = result.mesh, result.phi
    verts = mesh.vertices
    tris = mesh.triangles
    tri_vals = phi[tris]
    order = np.argsort(tri_vals, axis=1)
    sorted_vals = np.take_along_axis(tri_vals, order, axis=1)
    sorted_ids = np.take_along_axis(tris, order, axis=1)
    pa = verts[sorted_ids[:, 0]]
    pb = verts[sorted_ids[:, 1]]
    pc = verts[sorted_ids[:, 2]]
    va, vb, vc = sorted_vals[:, 0], sorted_vals[:, 1], sorted_vals[:, 2]

    full_weight = _triangle_weights(surface, pa, pb, pc)
    by_min = np.argsort(va)
    va_sorted = va[by_min]
    suffix = np.concatenate([np.cumsum(full_weight[by_min][::-1])[::-1], [0.0]])

    m = float(phi.max())
    levels = _level_grid(m, n_levels)
    mu = np.empty_like(levels)
    for k, t in enumerate(levels):
        if t >= m:
            mu[k] = 0.0
            continue
        lo = np.searchsorted(va_sorted, t, side="right")
        total = suffix[lo]
        strad = (va <= t) & (t < vc)
        if strad.any():
            sv_a, sv_b, sv_c = va[strad], vb[strad], vc[strad]
            sp_a, sp_b, sp_c = pa[strad], pb[strad], pc[strad]
            upper = t >= sv_b
            if upper.any():
                # only the top corner exceeds the level
                s_ca = (t - sv_a[upper]) / (sv_c[upper] - sv_a[upper])
                s_cb = (t - sv_b[upper]) / (sv_c[upper] - sv_b[upper])
                q_ca = sp_a[upper] + s_ca[:, None] * (sp_c[upper] - sp_a[upper])
                q_cb = sp_b[upper] + s_cb[:, None] * (sp_c[upper] - sp_b[upper])
                total += float(np.sum(_triangle_weights(surface, sp_c[upper], q_ca, q_cb)))
            lower = ~upper
            if lower.any():
                # quad between the two upper corners and the level segment
                s_ab = (t - sv_a[lower]) / (sv_b[lower] - sv_a[lower])
                s_ac = (t - sv_a[lower]) / (sv_c[lower] - sv_a[lower])
                q_ab = sp_a[lower] + s_ab[:, None] * (sp_b[lower] - sp_a[lower])
                q_ac = sp_a[lower] + s_ac[:, None] * (sp_c[lower] - sp_a[lower])
                total += float(np.sum(_triangle_weights(surface, q_ab, sp_b[lower], sp_c[lower])))
                total += float(np.sum(_triangle_weights(surface, q_ab, sp_c[lower], q_ac)))
        mu[k] = total

    mu = np.minimum.accumulate(mu)
    v_grid = mu[::-1]
    phi_star = levels[::-1]
    keep = np.concatenate([[True], np.diff(v_grid) > 0])
    return DistributionProfile(
        sup_norm=m,
        levels=levels,
        mu_values=mu,
        v_grid=v_grid[keep],
        phi_star=phi_star[keep],
        total_volume=float(mu[0]),
    )


def _strided_three_point(v, f, stride):
    """Three-point derivative estimates df/dv at interior indices, strided.

    The stencil spans ``stride`` grid cells on each side: level-set areas of a
    piecewise-linear function carry kinks at every vertex value, and a wider
    stencil averages that jitter out of the slope estimate.
    """
    n = len(v)
    stride = max(1, min(stride, (n - 1) // 2))
    idx = np.arange(stride, n - stride)
    h1 = v[idx] - v[idx - stride]
    h2 = v[idx + stride] - v[idx]
    df = (
        -h2 / (h1 * (h1 + h2)) * f[idx - stride]
        + (h2 - h1) / (h1 * h2) * f[idx]
        + h1 / (h2 * (h1 + h2)) * f[idx + stride]
    )
    return idx, df


@dataclass
class TalentiReport:
    v: np.ndarray
    lhs: np.ndarray  # -(phi*)'
    rhs: np.ndarray  # model factor * lambda * cumulative integral
    margins: np.ndarray
    rel_tol: float
    passed: bool

    @property
    def worst_relative_margin(self):
        scale = np.maximum(self.rhs, 1e-300)
        return float(np.min(self.margins / scale))


def talenti_check(profile, lam, ms, rel_tol=0.005, stencil_stride=12):
    """Pointwise margins of the rearrangement differential inequality.

    The slope -(phi*)'(v) is evaluated through the inverse parametrization,
    -1/mu'(t), with mu' from strided monotone three-point differences on the
    level grid (uniform spacing conditions the stencil much better than the
    image grid in v).  Margins RHS - LHS are reported on the interior window
    [0.05, 0.95] * |Omega|; nonnegative within rel_tol of the local RHS
    verifies the bound.
    """
    if ms.n != 2:
        raise ConfigurationError("profiles come from 2D eigenfunctions; model dimension must be 2")
    n = ms.n
    wn = model_space.unit_ball_volume(n)
    idx, dmu = _strided_three_point(profile.levels, profile.mu_values, stencil_stride)
    dmu = np.minimum(dmu, -1e-300)  # mu is decreasing
    v = profile.mu_values[idx]
    lhs = -1.0 / dmu
    cumulative = np.interp(v, profile.v_grid, profile.cumulative_phi_star())
    window = (v >= 0.05 * profile.total_volume) & (v <= 0.95 * profile.total_volume)
    v = v[window]
    lhs = lhs[window]
    radii = model_space.volume_radius(ms, v)
    sigma = model_space.sinh_ratio(ms.kappa, radii)
    rhs = lam * sigma ** (2 - 2 * n) / (n * wn) ** 2 * cumulative[window]
    margins = rhs - lhs
    passed = bool(np.all(margins >= -rel_tol * np.maximum(rhs, 1e-300)))
    return TalentiReport(v=v, lhs=lhs, rhs=rhs, margins=margins, rel_tol=rel_tol, passed=passed)


@dataclass
class ChitiReport:
    v: np.ndarray
    phi_star: np.ndarray
    psi_star: np.ndarray
    margins: np.ndarray
    min_margin: float
    rel_tol: float
    passed: bool
    ball_radius: float
    ball_volume: float

    def export_csv(self, path):
        with open(path, "w") as fh:
            fh.write("v,phi_star,psi_star,margin\n")
            for row in zip(self.v, self.phi_star, self.psi_star, self.margins):
                fh.write(",".join(f"{x:.12g}" for x in row) + "\n")


def chiti_compare(profile, ms, lam, rel_tol=0.005):
    """Sup-normalized majorization phi* >= psi* on the same-frequency model ball."""
    r_star = model_space.ball_radius_for_eigenvalue(ms, lam)
    vol_star = model_space.ball_volume(ms, r_star)
    sol = model_space.radial_eigenfunction(ms, r_star)
    mask = profile.v_grid <= vol_star
    v = profile.v_grid[mask]
    phi_star = profile.phi_star[mask]
    psi_star = profile.sup_norm * sol.psi_star(v)
    margins = phi_star - psi_star
    min_margin = float(margins.min()) if len(margins) else 0.0
    passed = min_margin >= -rel_tol * profile.sup_norm
    return ChitiReport(
        v=v,
        phi_star=phi_star,
        psi_star=psi_star,
        margins=margins,
        min_margin=min_margin,
        rel_tol=rel_tol,
        passed=passed,
        ball_radius=r_star,
        ball_volume=vol_star,
    )


def mesh_lp_integral(result, p):
    """integral of phi^p against the metric volume element (degree-4 rule)."""
    if not p > 0:
        raise DomainError(f"exponent must be > 0, got {p}")
    mesh, phi = result.mesh, result.phi
    verts = mesh.vertices
    tris = mesh.triangles
    p1, p2, p3 = (verts[tris[:, k]] for k in range(3))
    pts = (
        TRI6_BARY[None, :, 0, None] * p1[:, None, :]
        + TRI6_BARY[None, :, 1, None] * p2[:, None, :]
        + TRI6_BARY[None, :, 2, None] * p3[:, None, :]
    )
    weights = result.surface.weight(pts[..., 0].ravel(), pts[..., 1].ravel()).reshape(len(tris), 6)
    vals = phi[tris] @ TRI6_BARY.T  # phi at quadrature points
    integrand = weights * np.maximum(vals, 0.0) ** p
    areas = np.abs(triangle_areas(p1, p2, p3))
    return float(np.sum(areas * (integrand @ TRI6_WEIGHTS)))


@dataclass
class LpRatioReport:
    p: float
    lhs: float  # ||phi||_p / ||phi||_inf on the domain
    rhs: float  # same ratio for the model ball eigenfunction
    relative_margin: float
    passed: bool


def lp_ratio_check(result, ms, p, rel_tol=0.005):
    """Normalized Lp-norm comparison against the same-frequency model ball."""
    if not p > 0:
        raise DomainError(f"exponent must be > 0, got {p}")
    lam = result.lambda_h
    r_star = model_space.ball_radius_for_eigenvalue(ms, lam)
    sol = model_space.radial_eigenfunction(ms, r_star)
    lhs = mesh_lp_integral(result, p) ** (1.0 / p) / float(result.phi.max())
    rhs = sol.lp_mass(p) ** (1.0 / p)  # sup norm is 1
    margin = (lhs - rhs) / rhs
    return LpRatioReport(p=p, lhs=lhs, rhs=rhs, relative_margin=margin, passed=margin >= -rel_tol)


@dataclass
class ReverseHolderReport:
    p: float
    q: float
    lhs: float  # (integral phi^p)^q
    rhs: float  # C * (integral phi^q)^p
    constant: float
    relative_margin: float
    passed: bool
    payne_rayner_value: float = None
    scale_form_gap: float = None


def reverse_holder_check(result, ms, p, q, rel_tol=0.005):
    """Reverse-Holder inequality with the sharp ball constant.

    For Euclidean comparisons the scale-invariant form C = K lambda^(n(p-q)/2)
    is cross-checked, and for p=1, q=2 in two dimensions the report carries
    the Payne-Rayner value lambda (integral phi)^2 / integral phi^2.
    """
    if not (0 < p < q):
        raise ExponentOrderError(f"need 0 < p < q, got p={p}, q={q}")
    lam = result.lambda_h
    constant = model_space.reverse_holder_constant(ms, lam, p, q)
    ip = mesh_lp_integral(result, p)
    iq = mesh_lp_integral(result, q)
    lhs = ip**q
    rhs = constant * iq**p
    margin = (lhs - rhs) / rhs
    payne = None
    scale_gap = None
    if ms.kappa == 0.0:
        k_form = model_space.euclidean_K(ms.n, p, q) * lam ** (ms.n * (p - q) / 2.0)
        scale_gap = constant / k_form - 1.0
        if ms.n == 2 and p == 1 and q == 2:
            payne = lam * ip**2 / iq
    return ReverseHolderReport(
        p=p,
        q=q,
        lhs=lhs,
        rhs=rhs,
        constant=constant,
        relative_margin=margin,
        passed=margin >= -rel_tol,
        payne_rayner_value=payne,
        scale_form_gap=scale_gap,
    )


@dataclass
class ConformalIsoperimetricReport:
    boundary_energy_sq: float  # (integral |grad phi| dsigma)^2
    four_pi_area: float  # 4 pi * integral |grad phi|^2 dm = 4 pi lambda
    relative_margin: float
    passed: bool
    equality: bool


def conformal_isoperimetric_check(result, surface, rel_tol=None):
    """Isoperimetric inequality of the metric |grad phi|^2 g: Ltilde^2 >= 4 pi Atilde.

    Under the unit L2 normalization Atilde equals the eigenvalue, and Ltilde is
    the metric boundary flux integral.
    """
    tol = rel_tol if rel_tol is not None else tolerance_policy(result)
    l_tilde = result.flux_total()
    lhs = l_tilde**2
    rhs = 4.0 * math.pi * result.lambda_h
    margin = (lhs - rhs) / rhs
    return ConformalIsoperimetricReport(
        boundary_energy_sq=lhs,
        four_pi_area=rhs,
        relative_margin=margin,
        passed=margin >= -tol,
        equality=abs(margin) <= tol,
    )
