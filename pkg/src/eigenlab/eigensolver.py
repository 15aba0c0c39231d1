"""First Dirichlet eigenpair on a triangulated conformal domain.

Piecewise-linear Galerkin discretization: in two dimensions the Dirichlet
energy is conformally invariant, so the stiffness matrix uses Euclidean
gradients regardless of the surface, while the mass matrix carries the metric
weight e^(2u).  The smallest eigenpair of the generalized problem
K phi = lambda M phi comes from inverse iteration with a factorized stiffness
block and a deterministic all-ones start.  Boundary normal derivatives are
recovered from the discrete residual so that the divergence identity
sum(flux * metric edge length) = lambda * integral(phi) holds to solver
accuracy.
"""

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from . import domain_mesh, model_space
from .errors import AssemblyError, DomainError, SolverError
from .quadrature import TRI6_BARY, TRI6_WEIGHTS, triangle_areas

_MAX_ITERATIONS = 500
# empirical eigenvalue-error coefficient of the P1 scheme on quasi-uniform
# meshes (relative error ~ _ERR_COEFF * lambda * h^2), with safety headroom
_ERR_COEFF = 0.15


def assemble(mesh, surface):
    """Stiffness and metric mass matrices (CSR) for P1 elements on the mesh."""
    verts = mesh.vertices
    tris = mesh.triangles
    p1 = verts[tris[:, 0]]
    p2 = verts[tris[:, 1]]
    p3 = verts[tris[:, 2]]
    areas = triangle_areas(p1, p2, p3)
    if np.any(areas <= 0.0):
        raise AssemblyError("mesh contains degenerate or inverted triangles")

    # P1 gradients: grad N_i = perp(opposite edge) / (2 A)
    e1 = p3 - p2
    e2 = p1 - p3
    e3 = p2 - p1
    grads = np.stack(
        [
            np.column_stack([e1[:, 1], -e1[:, 0]]),
            np.column_stack([e2[:, 1], -e2[:, 0]]),
            np.column_stack([e3[:, 1], -e3[:, 0]]),
        ],
        axis=1,
    ) / (2.0 * areas)[:, None, None]
    k_local = np.einsum("tid,tjd->tij", grads, grads) * areas[:, None, None]

    # metric mass with the degree-4 rule; surface curvature checked at the
    # quadrature points actually used
    qpts = (
        TRI6_BARY[None, :, 0, None] * p1[:, None, :]
        + TRI6_BARY[None, :, 1, None] * p2[:, None, :]
        + TRI6_BARY[None, :, 2, None] * p3[:, None, :]
    )
    qx = qpts[..., 0].ravel()
    qy = qpts[..., 1].ravel()
    surface.check_points(qx, qy)
    weights = surface.weight(qx, qy).reshape(len(tris), 6)
    wq = weights * TRI6_WEIGHTS[None, :] * areas[:, None]
    m_local = np.einsum("tq,qi,qj->tij", wq, TRI6_BARY, TRI6_BARY)

    rows = np.repeat(tris, 3, axis=1).reshape(len(tris), 3, 3)
    cols = np.tile(tris, 3).reshape(len(tris), 3, 3)
    n = len(verts)
    stiffness = sp.coo_matrix(
        (k_local.ravel(), (rows.ravel(), cols.ravel())), shape=(n, n)
    ).tocsr()
    mass = sp.coo_matrix(
        (m_local.ravel(), (rows.ravel(), cols.ravel())), shape=(n, n)
    ).tocsr()
    return stiffness, mass


@dataclass
class EigenResult:
    """Discrete first eigenpair with boundary flux and integral report."""

    lambda_h: float
    phi: np.ndarray
    boundary_flux: np.ndarray  # per boundary edge, outward normal derivative (negative)
    norm_report: dict
    mesh: domain_mesh.TriMesh = field(repr=False)
    surface: domain_mesh.ConformalSurface = field(repr=False)
    edge_lengths_g: np.ndarray = field(repr=False)
    stiffness: sp.csr_matrix = field(repr=False)
    mass: sp.csr_matrix = field(repr=False)

    @property
    def mass_integral(self):
        """integral of phi dm (metric volume element)."""
        return self.norm_report["l1"]

    def flux_total(self):
        """sum of |flux| * metric edge length = integral of |grad phi| over the boundary."""
        return float(np.sum(np.abs(self.boundary_flux) * self.edge_lengths_g))

    def boundary_vertex_count(self):
        return self.mesh.n_boundary

    def export_eigenfunction_csv(self, path):
        with open(path, "w") as fh:
            fh.write("vertex_id,x,y,phi\n")
            for i, ((x, y), p) in enumerate(zip(self.mesh.vertices, self.phi)):
                fh.write(f"{i},{x:.12g},{y:.12g},{p:.12g}\n")

    def export_flux_csv(self, path):
        with open(path, "w") as fh:
            fh.write("edge_id,length,flux\n")
            for i, (l, f) in enumerate(zip(self.edge_lengths_g, self.boundary_flux)):
                fh.write(f"{i},{l:.12g},{f:.12g}\n")


def first_eigen(mesh, surface, tol=1e-12):
    """Smallest Dirichlet eigenpair of the Laplace-Beltrami operator on the mesh.

    Parameters
    ----------
    mesh : TriMesh
        Quality triangulation whose boundary cycle carries the Dirichlet condition.
    surface : ConformalSurface
        Metric supplying the mass weight (stiffness is metric independent in 2D).
    tol : float
        Relative convergence tolerance for the Rayleigh quotient and residual,
        in [1e-12, 1e-2].
    """
    if not (1e-12 <= tol <= 1e-2):
        raise DomainError(f"tolerance must lie in [1e-12, 1e-2], got {tol}")
    stiffness, mass = assemble(mesh, surface)
    n = len(mesh.vertices)
    boundary = np.zeros(n, dtype=bool)
    boundary[mesh.boundary_edges.ravel()] = True
    interior = ~boundary
    idx = np.flatnonzero(interior)
    if idx.size == 0:
        raise AssemblyError("mesh has no interior vertices at this resolution")
    k_ii = stiffness[np.ix_(idx, idx)].tocsc()
    m_ii = mass[np.ix_(idx, idx)].tocsr()
    try:
        lu = splu(k_ii)
    except RuntimeError as exc:
        raise AssemblyError(f"stiffness factorization failed: {exc}") from exc

    x = np.ones(idx.size)
    x /= math.sqrt(x @ (m_ii @ x))
    rho_prev = math.inf
    for _ in range(_MAX_ITERATIONS):
        y = m_ii @ x
        z = lu.solve(y)
        norm = math.sqrt(z @ (m_ii @ z))
        if not norm > 0:
            raise SolverError("inverse iteration collapsed to the zero vector")
        x = z / norm
        kx = k_ii @ x
        rho = float(x @ kx)
        residual = np.linalg.norm(kx - rho * (m_ii @ x))
        scale = np.linalg.norm(m_ii @ x)
        if abs(rho - rho_prev) <= tol * rho and residual <= tol * rho * max(scale, 1.0):
            break
        rho_prev = rho
    else:
        raise SolverError(
            f"inverse iteration did not converge in {_MAX_ITERATIONS} iterations; "
            f"last residual {residual:.3e} at rho {rho:.6e}"
        )

    phi = np.zeros(n)
    phi[idx] = x
    if phi.sum() < 0:
        phi = -phi
    interior_min = phi[idx].min()
    if interior_min <= 0.0:
        raise SolverError(
            f"discrete first eigenfunction not positive at interior vertices "
            f"(min {interior_min:.3e})"
        )
    # exact unit metric L2 norm
    phi /= math.sqrt(phi @ (mass @ phi))
    lam = float(phi @ (stiffness @ phi))

    edge_lengths_g = mesh.edge_metric_lengths(surface)
    flux = _consistent_boundary_flux(mesh, stiffness, mass, phi, lam, edge_lengths_g)
    l1 = float(np.ones(n) @ (mass @ phi))
    report = {
        "l1": l1,
        "l2_sq": float(phi @ (mass @ phi)),
        "dirichlet": lam,
    }
    result = EigenResult(
        lambda_h=lam,
        phi=phi,
        boundary_flux=flux,
        norm_report=report,
        mesh=mesh,
        surface=surface,
        edge_lengths_g=edge_lengths_g,
        stiffness=stiffness,
        mass=mass,
    )
    _validate_result(result)
    return result


def _consistent_boundary_flux(mesh, stiffness, mass, phi, lam, edge_lengths_g):
    """Per-edge outward normal derivative recovered from the discrete residual.

    The boundary rows of (K - lambda M) phi are the metric-weighted flux
    functionals integral(dphi/deta * N_i dsigma); lumping them with the
    adjacent half-edge metric lengths gives vertex fluxes whose edge averages
    reproduce the total flux exactly.
    """
    residual = stiffness @ phi - lam * (mass @ phi)
    edges = mesh.boundary_edges
    nb = len(edges)
    vertex_weight = np.zeros(nb)
    first = edges[:, 0]
    vertex_weight[: nb] = 0.5 * (edge_lengths_g + np.roll(edge_lengths_g, 1))
    vertex_flux = residual[first] / vertex_weight
    return 0.5 * (vertex_flux + np.roll(vertex_flux, -1))


def _validate_result(result):
    phi, mass = result.phi, result.mass
    l2 = float(phi @ (mass @ phi))
    if abs(l2 - 1.0) > 1e-12:
        raise SolverError(f"metric L2 normalization off by {l2 - 1.0:.3e}")
    dirichlet = float(phi @ (result.stiffness @ phi))
    if abs(dirichlet - result.lambda_h) > 1e-10 * result.lambda_h:
        raise SolverError("Rayleigh quotient inconsistent with reported eigenvalue")
    total = float(np.sum(-result.boundary_flux * result.edge_lengths_g))
    target = result.lambda_h * result.mass_integral
    if abs(total - target) > 1e-8 * target:
        raise SolverError(
            f"boundary flux incompatible with the divergence identity: "
            f"{total} vs {target}"
        )


def boundary_flux(result):
    """Per-edge outward normal derivative of the eigenfunction (stored on the result)."""
    return result.boundary_flux


def estimate_relative_error(result):
    """Heuristic relative eigenvalue error of the P1 scheme, ~ c * lambda * h^2."""
    return _ERR_COEFF * result.lambda_h * result.mesh.mesh_size_h**2


def tolerance_policy(result, floor=0.005):
    """Inequality-check tolerance: twice the estimated FEM error, floored."""
    return max(2.0 * estimate_relative_error(result), floor)


@dataclass
class FaberKrahnReport:
    lambda_h: float
    lambda_ball: float
    margin: float
    area: float
    equality: bool

    @property
    def relative_margin(self):
        return self.margin / self.lambda_ball


def faber_krahn_check(result, surface, ms, rel_tol=None):
    """Margin lambda(Omega) - lambda(model ball of the same metric volume)."""
    area, _ = domain_mesh.measure(result.mesh.curve, surface)
    r = model_space.volume_radius(ms, area)
    lam_ball = model_space.ball_eigenvalue(ms, r)
    margin = result.lambda_h - lam_ball
    tol = rel_tol if rel_tol is not None else tolerance_policy(result)
    return FaberKrahnReport(
        lambda_h=result.lambda_h,
        lambda_ball=lam_ball,
        margin=margin,
        area=area,
        equality=abs(margin) < tol * lam_ball,
    )
