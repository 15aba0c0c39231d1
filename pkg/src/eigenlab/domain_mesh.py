"""Plane domains carrying conformal metrics of nonpositive Gauss curvature.

A domain is a counter-clockwise polygonal boundary curve; the metric is
e^(2u) (dx^2 + dy^2) with the conformal exponent u supplied analytically
(value, gradient, Laplacian).  The module provides quality triangulation,
metric area/perimeter, isoperimetric and curvature measurements, and the
curve/mesh file formats used by the CLI.
"""

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np
import shapely
from scipy.spatial import Delaunay, cKDTree
from shapely.geometry import Polygon

from . import model_space
from .errors import DomainError, GeometryError, InputError, MeshQualityError
from .quadrature import (
    gauss_legendre_panels,
    gl_nodes,
    integrate_weight_over_triangles,
    triangle_areas,
)

CURVATURE_SIGN_TOL = 1e-9
MIN_ANGLE_DEG = 20.0


class ConformalSurface:
    """Conformal metric e^(2u)(dx^2+dy^2) with analytic u, grad u, Laplacian u.

    The callbacks must be vectorized over coordinate arrays.  Gauss curvature
    is K = -e^(-2u) * Laplacian(u); construction is trusted, but every
    quadrature consumer samples K and rejects positive values.
    """

    def __init__(self, u, grad_u, lap_u, curvature_tag="custom", kappa=None, domain_radius=None):
        self.u = u
        self.grad_u = grad_u
        self.lap_u = lap_u
        self.curvature_tag = curvature_tag
        self.kappa = kappa
        self.domain_radius = domain_radius

    @classmethod
    def euclidean(cls):
        zero = lambda x, y: np.zeros_like(np.asarray(x, dtype=float))
        grad = lambda x, y: (zero(x, y), zero(x, y))
        return cls(zero, grad, zero, curvature_tag="euclidean", kappa=0.0)

    @classmethod
    def poincare(cls, kappa=1.0):
        """Disk model of curvature -kappa**2: u = log(2 / (kappa (1 - x^2 - y^2)))."""
        if not kappa > 0:
            raise DomainError(f"poincare surface needs kappa > 0, got {kappa}")

        def u(x, y):
            rho2 = np.asarray(x, dtype=float) ** 2 + np.asarray(y, dtype=float) ** 2
            return np.log(2.0 / (kappa * (1.0 - rho2)))

        def grad_u(x, y):
            x = np.asarray(x, dtype=float)
            y = np.asarray(y, dtype=float)
            denom = 1.0 - x**2 - y**2
            return (2.0 * x / denom, 2.0 * y / denom)

        def lap_u(x, y):
            rho2 = np.asarray(x, dtype=float) ** 2 + np.asarray(y, dtype=float) ** 2
            return 4.0 / (1.0 - rho2) ** 2

        return cls(u, grad_u, lap_u, curvature_tag="hyperbolic", kappa=kappa, domain_radius=1.0)

    def weight(self, x, y):
        """Area density e^(2u)."""
        return np.exp(2.0 * self.u(x, y))

    def length_weight(self, x, y):
        """Length density e^u."""
        return np.exp(self.u(x, y))

    def gauss_curvature(self, x, y):
        return -np.exp(-2.0 * self.u(x, y)) * self.lap_u(x, y)

    def check_points(self, x, y):
        """Reject points outside the definition domain or with positive curvature."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if self.domain_radius is not None:
            rho2 = x**2 + y**2
            if np.any(rho2 >= self.domain_radius**2):
                raise DomainError(
                    "points leave the conformal factor's definition domain "
                    f"(radius {self.domain_radius})"
                )
        worst = float(np.max(self.gauss_curvature(x, y))) if x.size else -math.inf
        if worst > CURVATURE_SIGN_TOL:
            raise GeometryError(
                f"surface has positive Gauss curvature {worst:.3e} at a sampled point"
            )

    def matches_model(self, ms):
        """True when the curvature tag agrees with a model-space comparison object."""
        if self.curvature_tag == "euclidean":
            return ms.kappa == 0.0
        if self.curvature_tag == "hyperbolic":
            return ms.kappa > 0.0 and abs(ms.kappa - self.kappa) < 1e-12
        return False


class BoundaryCurve:
    """Simple closed polyline, counter-clockwise, at least 8 distinct vertices."""

    def __init__(self, vertices):
        vertices = np.asarray(vertices, dtype=float)
        if vertices.ndim != 2 or vertices.shape[1] != 2:
            raise InputError("curve vertices must form an (N, 2) array")
        if len(vertices) >= 2 and np.allclose(vertices[0], vertices[-1]):
            vertices = vertices[:-1]
        if len(vertices) < 8:
            raise GeometryError(f"boundary curve needs >= 8 vertices, got {len(vertices)}")
        edges = np.diff(np.vstack([vertices, vertices[:1]]), axis=0)
        lengths = np.hypot(edges[:, 0], edges[:, 1])
        if np.any(lengths == 0.0):
            raise GeometryError("consecutive curve vertices must be distinct")
        area2 = np.sum(vertices[:, 0] * np.roll(vertices[:, 1], -1)
                       - np.roll(vertices[:, 0], -1) * vertices[:, 1])
        if area2 <= 0.0:
            raise GeometryError("curve must be counter-clockwise (positive signed area)")
        poly = Polygon(vertices)
        if not poly.is_valid:
            raise GeometryError("curve is self-intersecting")
        self.vertices = vertices
        self.vertices.setflags(write=False)
        self._polygon = poly

    def __len__(self):
        return len(self.vertices)

    @property
    def polygon(self):
        return self._polygon

    @property
    def edge_vectors(self):
        return np.roll(self.vertices, -1, axis=0) - self.vertices

    @property
    def edge_lengths(self):
        e = self.edge_vectors
        return np.hypot(e[:, 0], e[:, 1])

    @property
    def euclidean_area(self):
        return self._polygon.area

    @property
    def euclidean_perimeter(self):
        return float(np.sum(self.edge_lengths))

    @property
    def diameter(self):
        lo = self.vertices.min(axis=0)
        hi = self.vertices.max(axis=0)
        return float(np.hypot(*(hi - lo)))

    def edge_normals(self):
        """Outward unit normals per edge (CCW orientation)."""
        e = self.edge_vectors
        n = np.column_stack([e[:, 1], -e[:, 0]])
        return n / np.linalg.norm(n, axis=1)[:, None]

    def vertex_normals(self):
        """Outward unit normals per vertex (mean of adjacent edge normals)."""
        en = self.edge_normals()
        vn = en + np.roll(en, 1, axis=0)
        return vn / np.linalg.norm(vn, axis=1)[:, None]

    def resample(self, spacing):
        """Uniform arclength resampling at approximately the given spacing."""
        if not spacing > 0:
            raise DomainError(f"spacing must be > 0, got {spacing}")
        closed = np.vstack([self.vertices, self.vertices[:1]])
        seg = np.hypot(*np.diff(closed, axis=0).T)
        cum = np.concatenate([[0.0], np.cumsum(seg)])
        total = cum[-1]
        count = max(8, int(round(total / spacing)))
        targets = np.linspace(0.0, total, count, endpoint=False)
        x = np.interp(targets, cum, closed[:, 0])
        y = np.interp(targets, cum, closed[:, 1])
        return BoundaryCurve(np.column_stack([x, y]))

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["x", "y"])
            for x, y in self.vertices:
                writer.writerow([f"{x:.12g}", f"{y:.12g}"])

    @classmethod
    def from_csv(cls, path):
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        if not rows or [c.strip() for c in rows[0][:2]] != ["x", "y"]:
            raise InputError(f"curve file {path} must start with header 'x,y'")
        try:
            pts = np.array([[float(r[0]), float(r[1])] for r in rows[1:] if r], dtype=float)
        except (ValueError, IndexError) as exc:
            raise InputError(f"malformed vertex row in {path}: {exc}") from exc
        return cls(pts)


@dataclass
class TriMesh:
    """Conforming triangulation whose boundary cycle is the input curve."""

    vertices: np.ndarray
    triangles: np.ndarray
    boundary_edges: np.ndarray  # ordered cycle of vertex index pairs
    mesh_size_h: float
    curve: BoundaryCurve = field(repr=False, default=None)

    def __post_init__(self):
        self.n_boundary = len(self.boundary_edges)
        areas = triangle_areas(*self._corners())
        if np.any(areas <= 0.0):
            raise GeometryError("mesh contains non-positively oriented triangles")
        self._validate_manifold()

    def _corners(self):
        t = self.triangles
        return self.vertices[t[:, 0]], self.vertices[t[:, 1]], self.vertices[t[:, 2]]

    def _validate_manifold(self):
        counts = {}
        for tri in self.triangles:
            for a, b in ((tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])):
                key = (min(a, b), max(a, b))
                counts[key] = counts.get(key, 0) + 1
        if any(c > 2 for c in counts.values()):
            raise GeometryError("mesh is not edge-manifold")
        for a, b in self.boundary_edges:
            key = (min(a, b), max(a, b))
            if counts.get(key, 0) != 1:
                raise GeometryError("boundary edge missing or interior in triangulation")

    @property
    def triangle_areas(self):
        return triangle_areas(*self._corners())

    def min_angle_degrees(self):
        p1, p2, p3 = self._corners()
        return float(np.degrees(_triangle_min_angles(p1, p2, p3)).min())

    def boundary_vertex_indices(self):
        return self.boundary_edges[:, 0]

    def edge_metric_lengths(self, surface, order=16):
        """Metric lengths of the boundary edges: per-edge integral of e^u ds."""
        x, w = gl_nodes(order)
        a = self.vertices[self.boundary_edges[:, 0]]
        b = self.vertices[self.boundary_edges[:, 1]]
        mid = 0.5 * (a + b)
        half = 0.5 * (b - a)
        pts = mid[:, None, :] + x[None, :, None] * half[:, None, :]
        vals = surface.length_weight(pts[..., 0].ravel(), pts[..., 1].ravel())
        vals = vals.reshape(len(a), order)
        return np.hypot(half[:, 0], half[:, 1]) * (vals @ w)

    def to_off(self, path):
        with open(path, "w") as fh:
            fh.write("OFF\n")
            fh.write(f"{len(self.vertices)} {len(self.triangles)} 0\n")
            for x, y in self.vertices:
                fh.write(f"{x:.12g} {y:.12g} 0\n")
            for tri in self.triangles:
                fh.write(f"3 {tri[0]} {tri[1]} {tri[2]}\n")


def _triangle_min_angles(p1, p2, p3):
    """Minimum interior angle (radians) per triangle."""
    a = np.linalg.norm(p2 - p3, axis=1)
    b = np.linalg.norm(p1 - p3, axis=1)
    c = np.linalg.norm(p1 - p2, axis=1)
    angles = []
    for opp, s1, s2 in ((a, b, c), (b, a, c), (c, a, b)):
        cosv = np.clip((s1**2 + s2**2 - opp**2) / (2.0 * s1 * s2), -1.0, 1.0)
        angles.append(np.arccos(cosv))
    return np.min(angles, axis=0)


def _hex_lattice(bounds, pitch):
    """Origin-anchored hexagonal lattice covering the bounding box."""
    xmin, ymin, xmax, ymax = bounds
    row_h = pitch * math.sqrt(3.0) / 2.0
    j0 = math.floor(ymin / row_h) - 1
    j1 = math.ceil(ymax / row_h) + 1
    pts = []
    for j in range(j0, j1 + 1):
        y = j * row_h
        off = 0.5 * pitch if j % 2 else 0.0
        i0 = math.floor((xmin - off) / pitch) - 1
        i1 = math.ceil((xmax - off) / pitch) + 1
        xs = off + pitch * np.arange(i0, i1 + 1)
        pts.append(np.column_stack([xs, np.full_like(xs, y)]))
    return np.vstack(pts)


def _ring_points(ring, spacing):
    """Evenly spaced samples along a shapely LinearRing."""
    total = ring.length
    count = max(8, int(round(total / spacing)))
    dists = np.linspace(0.0, total, count, endpoint=False)
    pts = shapely.line_interpolate_point(ring, dists)
    return np.column_stack([shapely.get_x(pts), shapely.get_y(pts)])


def _projected_layer(curve, factor=0.78):
    """First interior layer: boundary vertices pushed inward by the local spacing.

    Every boundary vertex keeps an interior partner (falling back to half
    depth where full-depth projections leave the polygon near corners); the
    partner prevents Delaunay from spanning collinear boundary runs with
    degenerate chords.
    """
    lengths = curve.edge_lengths
    local = 0.5 * (lengths + np.roll(lengths, 1))
    normals = curve.vertex_normals()
    pts = curve.vertices - factor * local[:, None] * normals
    exterior = curve.polygon.exterior
    inside = shapely.contains_xy(curve.polygon, pts[:, 0], pts[:, 1])
    d = exterior.distance(shapely.points(pts))
    good = inside & (d > 0.4 * factor * local)
    fallback = ~good
    if fallback.any():
        half = curve.vertices[fallback] - 0.5 * factor * local[fallback, None] * normals[fallback]
        ok = shapely.contains_xy(curve.polygon, half[:, 0], half[:, 1])
        ok &= exterior.distance(shapely.points(half)) > 0.2 * factor * local[fallback]
        pts[fallback] = np.where(ok[:, None], half, pts[fallback])
        good[np.flatnonzero(fallback)[ok]] = True
    return pts[good]


def _interior_points(curve, h):
    """Graded interior point set: projected layer and offset rings near the
    boundary, origin-anchored hex core inside."""
    poly = curve.polygon
    b = float(np.median(curve.edge_lengths))
    points = []
    layer = _projected_layer(curve)
    if len(layer):
        points.append(layer)
    s = min(b, h)
    delta = 0.78 * s
    grading = 1.45
    while s < h:
        s_next = min(h, grading * s)
        delta += 0.78 * 0.5 * (s + s_next)
        region = poly.buffer(-delta)
        if region.is_empty:
            return np.vstack(points) if points else np.empty((0, 2))
        rings = [g.exterior for g in getattr(region, "geoms", [region])]
        for ring in rings:
            if ring.length > 2.5 * s_next:
                points.append(_ring_points(ring, s_next))
        s = s_next
    core = poly.buffer(-(delta + 0.78 * h))
    if not core.is_empty:
        lattice = _hex_lattice(core.bounds, h)
        keep = shapely.contains_xy(core, lattice[:, 0], lattice[:, 1])
        if keep.any():
            points.append(lattice[keep])
    return np.vstack(points) if points else np.empty((0, 2))


def _delaunay_mesh(all_points, n_boundary, poly):
    tri = Delaunay(all_points)
    simplices = tri.simplices
    p1 = all_points[simplices[:, 0]]
    p2 = all_points[simplices[:, 1]]
    p3 = all_points[simplices[:, 2]]
    areas = triangle_areas(p1, p2, p3)
    # collinear boundary runs can yield exactly degenerate hull simplices
    scale = np.ptp(all_points, axis=0).max()
    keep = np.abs(areas) > 1e-13 * scale**2
    simplices, areas = simplices[keep], areas[keep]
    flip = areas < 0
    simplices[flip, 1], simplices[flip, 2] = simplices[flip, 2].copy(), simplices[flip, 1].copy()
    cent = (
        all_points[simplices[:, 0]] + all_points[simplices[:, 1]] + all_points[simplices[:, 2]]
    ) / 3.0
    inside = shapely.contains_xy(poly, cent[:, 0], cent[:, 1])
    return simplices[inside]


def _boundary_edges_present(simplices, n_boundary):
    edges = set()
    for tri in simplices:
        for a, b in ((tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])):
            edges.add((min(a, b), max(a, b)))
    missing = []
    for i in range(n_boundary):
        j = (i + 1) % n_boundary
        if (min(i, j), max(i, j)) not in edges:
            missing.append((i, j))
    return missing


def triangulate(curve, h):
    """Quality triangulation of the polygon at target interior edge length h.

    The boundary polyline is preserved exactly; interior points grade from the
    local boundary spacing up to h.  Triangles with a minimum angle below 20
    degrees are refined by circumcenter insertion; if refinement stalls a
    MeshQualityError is raised.
    """
    if not isinstance(curve, BoundaryCurve):
        raise InputError("triangulate expects a BoundaryCurve")
    if not (h > 0 and h < curve.diameter / 4.0):
        raise DomainError(f"mesh size must satisfy 0 < h < diameter/4, got h={h}")
    poly = curve.polygon
    nb = len(curve)
    interior = _interior_points(curve, h)
    all_points = np.vstack([curve.vertices, interior]) if len(interior) else curve.vertices.copy()
    b_med = float(np.median(curve.edge_lengths))

    for attempt in range(16):
        simplices = _delaunay_mesh(all_points, nb, poly)
        missing = _boundary_edges_present(simplices, nb)
        if missing:
            raise GeometryError(
                f"boundary edges not recovered by Delaunay triangulation: {missing[:4]}"
            )
        p1 = all_points[simplices[:, 0]]
        p2 = all_points[simplices[:, 1]]
        p3 = all_points[simplices[:, 2]]
        min_angles = np.degrees(_triangle_min_angles(p1, p2, p3))
        bad = min_angles < MIN_ANGLE_DEG
        if not bad.any():
            mesh = TriMesh(
                vertices=all_points,
                triangles=simplices,
                boundary_edges=np.array([(i, (i + 1) % nb) for i in range(nb)]),
                mesh_size_h=float(h),
                curve=curve,
            )
            return mesh
        # crowded bad triangles (short edge next to an interior point) are
        # repaired by deleting the crowding point rather than inserting
        removal = set()
        for tri in simplices[bad]:
            pts_tri = all_points[tri]
            lengths = [
                (float(np.hypot(*(pts_tri[a] - pts_tri[b]))), tri[a], tri[b])
                for a, b in ((0, 1), (1, 2), (2, 0))
            ]
            shortest, ia, ib = min(lengths)
            d_bnd = poly.exterior.distance(shapely.points(pts_tri.mean(axis=0)[None]))[0]
            local = min(h, b_med + 0.6 * d_bnd)
            if shortest < 0.6 * local:
                candidates = [i for i in (ia, ib) if i >= nb]
                if candidates:
                    removal.add(max(candidates))
        if removal:
            keep = np.ones(len(all_points), dtype=bool)
            keep[list(removal)] = False
            all_points = all_points[keep]
            continue
        # Chew-style refinement: insert admissible circumcenters of bad
        # triangles; near the boundary, where circumcenters are inadmissible,
        # fall back to interior-edge midpoints and centroids with
        # progressively relaxed clearances
        centers = _circumcenters(p1[bad], p2[bad], p3[bad])
        midpoints = _interior_edge_midpoints(simplices[bad], all_points, nb)
        centroids = (p1[bad] + p2[bad] + p3[bad]) / 3.0
        inserted = []
        for cand_set, clearance, proximity in (
            (centers, 0.5, 0.5),
            (midpoints, 0.25, 0.4),
            (centroids, 0.15, 0.3),
        ):
            ok = np.isfinite(cand_set).all(axis=1)
            cand = cand_set[ok]
            if not len(cand):
                continue
            inside = shapely.contains_xy(poly, cand[:, 0], cand[:, 1])
            cand = cand[inside]
            if not len(cand):
                continue
            d_bnd = poly.exterior.distance(shapely.points(cand))
            local = np.minimum(h, b_med + 0.6 * d_bnd)
            keep = d_bnd > clearance * local
            cand = cand[keep]
            local = local[keep]
            if not len(cand):
                continue
            tree = cKDTree(all_points)
            dist, _ = tree.query(cand)
            cand = cand[dist > proximity * local]
            if len(cand):
                inserted.append(cand)
                break
        if not inserted:
            raise MeshQualityError(
                f"cannot reach min angle {MIN_ANGLE_DEG} deg at h={h}; "
                f"worst angle {min_angles.min():.2f} deg"
            )
        all_points = np.vstack([all_points] + inserted)
    raise MeshQualityError(f"mesh quality loop did not converge at h={h}")


def _interior_edge_midpoints(bad_simplices, all_points, n_boundary):
    """Midpoint of the longest non-boundary edge of each bad triangle."""
    out = np.full((len(bad_simplices), 2), np.nan)
    for row, tri in enumerate(bad_simplices):
        best = -1.0
        for a, b in ((tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])):
            if a < n_boundary and b < n_boundary and abs(int(a) - int(b)) in (1, n_boundary - 1):
                continue  # boundary polyline edges are fixed
            length = float(np.hypot(*(all_points[a] - all_points[b])))
            if length > best:
                best = length
                out[row] = 0.5 * (all_points[a] + all_points[b])
    return out


def _circumcenters(p1, p2, p3):
    ax, ay = p1[:, 0], p1[:, 1]
    bx, by = p2[:, 0], p2[:, 1]
    cx, cy = p3[:, 0], p3[:, 1]
    d = 2.0 * (ax * (by - cy) + bx * (cy - ay) + cx * (ay - by))
    with np.errstate(divide="ignore", invalid="ignore"):
        ux = ((ax**2 + ay**2) * (by - cy) + (bx**2 + by**2) * (cy - ay)
              + (cx**2 + cy**2) * (ay - by)) / d
        uy = ((ax**2 + ay**2) * (cx - bx) + (bx**2 + by**2) * (ax - cx)
              + (cx**2 + cy**2) * (bx - ax)) / d
    return np.column_stack([ux, uy])


def _fan_triangles(curve):
    """Fan triangulation about the centroid; valid for star-shaped polygons."""
    center = curve.vertices.mean(axis=0)
    p1 = np.broadcast_to(center, curve.vertices.shape).copy()
    p2 = curve.vertices
    p3 = np.roll(curve.vertices, -1, axis=0)
    if np.any(triangle_areas(p1, p2, p3) <= 0.0):
        return None
    return p1, p2, p3


def _refine_triangles(p1, p2, p3):
    """Uniform 4-split of every triangle."""
    m12 = 0.5 * (p1 + p2)
    m23 = 0.5 * (p2 + p3)
    m31 = 0.5 * (p3 + p1)
    q1 = np.vstack([p1, m12, m31, m12])
    q2 = np.vstack([m12, p2, m23, m23])
    q3 = np.vstack([m31, m23, p3, m31])
    return q1, q2, q3


def measure(curve, surface, rel_tol=1e-9):
    """Metric area and perimeter: integral of e^(2u) over the polygon and e^u along it."""
    if not isinstance(curve, BoundaryCurve):
        raise InputError("measure expects a BoundaryCurve")
    surface.check_points(curve.vertices[:, 0], curve.vertices[:, 1])
    tris = _fan_triangles(curve)
    if tris is None:
        mesh = triangulate(curve, curve.diameter / 16.0)
        tris = tuple(mesh.vertices[mesh.triangles[:, k]] for k in range(3))
    area_prev = None
    p1, p2, p3 = tris
    for _ in range(8):
        pts_x = np.concatenate([p1[:, 0], p2[:, 0], p3[:, 0]])
        pts_y = np.concatenate([p1[:, 1], p2[:, 1], p3[:, 1]])
        surface.check_points(pts_x, pts_y)
        area = float(np.sum(integrate_weight_over_triangles(surface.weight, p1, p2, p3)))
        if area_prev is not None and abs(area - area_prev) <= rel_tol * abs(area):
            break
        area_prev = area
        p1, p2, p3 = _refine_triangles(p1, p2, p3)
    perimeter = 0.0
    verts = curve.vertices
    nxt = np.roll(verts, -1, axis=0)
    for a, b in zip(verts, nxt):
        seg = np.hypot(*(b - a))

        def density(s, a=a, b=b, seg=seg):
            x = a[0] + (b[0] - a[0]) * s
            y = a[1] + (b[1] - a[1]) * s
            return surface.length_weight(x, y) * seg

        perimeter += gauss_legendre_panels(density, 0.0, 1.0, rel_tol=1e-11, nodes=16)
    return area, float(perimeter)


def isoperimetric_check(curve, surface):
    """Isoperimetric ratio L^2 / (4 pi A) in the surface metric; must be >= 1."""
    area, perim = measure(curve, surface)
    ratio = perim**2 / (4.0 * math.pi * area)
    if ratio < 1.0 - 1e-6:
        raise GeometryError(
            f"isoperimetric ratio {ratio} < 1; inputs violate nonpositive curvature"
        )
    return ratio


def small_volume_isoperimetric_check(curve, surface, ms):
    """Margin of the model comparison |boundary|_g - |sphere of equal model volume|.

    Nonnegative (up to quadrature slack) for metrics whose curvature is at most
    -kappa^2 everywhere.
    """
    area, perim = measure(curve, surface)
    bound = model_space.boundary_volume(ms, model_space.volume_radius(ms, area))
    margin = perim - bound
    if margin < -1e-6 * perim:
        raise GeometryError(
            f"model isoperimetric comparison violated: margin {margin} for perimeter {perim}"
        )
    return margin


def boundary_geodesic_curvature(curve, surface):
    """Per-vertex geodesic curvature of the boundary in the surface metric.

    The Euclidean curvature comes from the osculating circle through each
    vertex triple; the conformal correction is k_g = e^(-u) (k_e + du/dn) with
    n the outward Euclidean normal.  Collinear triples give curvature 0.
    """
    v = curve.vertices
    prev_pt = np.roll(v, 1, axis=0)
    next_pt = np.roll(v, -1, axis=0)
    e1 = v - prev_pt
    e2 = next_pt - v
    chord = next_pt - prev_pt
    cross = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
    denom = (np.hypot(*e1.T) * np.hypot(*e2.T) * np.hypot(*chord.T))
    with np.errstate(divide="ignore", invalid="ignore"):
        k_e = np.where(denom > 0.0, 2.0 * cross / denom, 0.0)
    normals = curve.vertex_normals()
    gx, gy = surface.grad_u(v[:, 0], v[:, 1])
    du_dn = gx * normals[:, 0] + gy * normals[:, 1]
    return np.exp(-surface.u(v[:, 0], v[:, 1])) * (k_e + du_dn)


# --- built-in shapes -------------------------------------------------------

def square_curve(side=1.0, n_per_side=64, center=(0.0, 0.0)):
    s = side / 2.0
    cx, cy = center
    t = np.linspace(-s, s, n_per_side, endpoint=False)
    pts = np.concatenate(
        [
            np.column_stack([t, np.full_like(t, -s)]),
            np.column_stack([np.full_like(t, s), t]),
            np.column_stack([-t, np.full_like(t, s)]),
            np.column_stack([np.full_like(t, -s), -t]),
        ]
    )
    return BoundaryCurve(pts + np.array([cx, cy]))


def circle_curve(radius=1.0, n=512, center=(0.0, 0.0)):
    theta = np.linspace(0.0, 2.0 * math.pi, n, endpoint=False)
    pts = np.column_stack(
        [center[0] + radius * np.cos(theta), center[1] + radius * np.sin(theta)]
    )
    return BoundaryCurve(pts)


def ellipse_curve(a=1.0, b=0.6, n=512, center=(0.0, 0.0)):
    theta = np.linspace(0.0, 2.0 * math.pi, n, endpoint=False)
    pts = np.column_stack([center[0] + a * np.cos(theta), center[1] + b * np.sin(theta)])
    return BoundaryCurve(pts)


def geodesic_disk_curve(hyperbolic_radius, kappa=1.0, n=512):
    """Euclidean circle realizing the geodesic disk of the Poincare surface."""
    rho = math.tanh(kappa * hyperbolic_radius / 2.0)
    return circle_curve(radius=rho, n=n)


def random_convex_curve(rng, n_support=14, n_vertices=256, radius=1.0):
    """Convex hull of random support points, resampled to a smooth dense polygon."""
    angles = np.sort(rng.uniform(0.0, 2.0 * math.pi, n_support))
    radii = rng.uniform(0.55 * radius, radius, n_support)
    pts = np.column_stack([radii * np.cos(angles), radii * np.sin(angles)])
    hull = Polygon(pts).convex_hull
    ring = hull.exterior
    if not ring.is_ccw:
        ring = shapely.reverse(ring)
    dists = np.linspace(0.0, ring.length, n_vertices, endpoint=False)
    samples = shapely.line_interpolate_point(ring, dists)
    return BoundaryCurve(np.column_stack([shapely.get_x(samples), shapely.get_y(samples)]))
