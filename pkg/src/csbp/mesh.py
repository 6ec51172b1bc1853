"""Triangular meshes, curvilinear coordinate maps, and nodal metric data.

Meshes are stored with split topology/geometry: `elements` holds vertex
ids used for connectivity (periodic meshes identify vertices across the
seam), while `corners` holds per-element corner coordinates so that
wrapped elements keep their own geometry.  Face adjacency is built
structurally (never by coordinate hashing), so meshes remain valid even
when periodic identification makes vertex pairs ambiguous.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from .basis import REF_VERTICES, lagrange_eval_matrices, uniform_nodes


@dataclass
class TriMesh:
    """Conforming triangle mesh with oriented, involutive face adjacency.

    adjacency[k, f] = (neighbor element, neighbor face) or (-1, -1) on a
    boundary; matched faces always traverse the shared edge in opposite
    directions.  boundary_tag[k, f] indexes into tag_names (or -1).
    """

    vertices: np.ndarray  # (Nv, 2) representative coordinates
    elements: np.ndarray  # (K, 3) vertex ids
    corners: np.ndarray  # (K, 3, 2) per-element corner coordinates
    adjacency: np.ndarray  # (K, 3, 2) int
    boundary_tag: np.ndarray  # (K, 3) int, -1 for interior faces
    tag_names: tuple = ()
    periodic: bool = False

    @property
    def num_elements(self) -> int:
        return self.elements.shape[0]

    def signed_areas(self) -> np.ndarray:
        a, b, c = self.corners[:, 0], self.corners[:, 1], self.corners[:, 2]
        return 0.5 * ((b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0]))

    def validate(self) -> None:
        if np.any(self.signed_areas() <= 0):
            raise ValueError("mesh contains non-positively oriented elements")
        K = self.num_elements
        for k in range(K):
            for f in range(3):
                nk, nf = self.adjacency[k, f]
                if nk < 0:
                    if self.boundary_tag[k, f] < 0:
                        raise ValueError(f"untagged boundary face ({k},{f})")
                    continue
                if tuple(self.adjacency[nk, nf]) != (k, f):
                    raise ValueError(f"adjacency not involutive at ({k},{f})")

    def face_corner_coords(self, k: int, f: int) -> np.ndarray:
        """Coordinates of the two corners of face f (ordered along the face)."""
        return self.corners[k, [f, (f + 1) % 3]]


# Local face f of an element joins local corners f and f+1 (mod 3); this
# matches the reference-triangle face ordering in basis.REF_FACES.


def _torus_mesh(seed: int) -> TriMesh:
    """seed x seed periodic unit square, each cell split along the
    lower-left to upper-right diagonal."""
    if seed < 1:
        raise ValueError("seed must be >= 1")
    h = 1.0 / seed
    vid = lambda i, j: (i % seed) + seed * (j % seed)
    vertices = np.array([[(i % seed) * h, (j % seed) * h] for j in range(seed) for i in range(seed)])
    vertices = vertices.reshape(seed * seed, 2)

    elements = []
    corners = []
    for j in range(seed):
        for i in range(seed):
            x0, y0 = i * h, j * h
            c00, c10, c11, c01 = (x0, y0), (x0 + h, y0), (x0 + h, y0 + h), (x0, y0 + h)
            v00, v10, v11, v01 = vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)
            elements.append((v00, v10, v11))
            corners.append((c00, c10, c11))
            elements.append((v00, v11, v01))
            corners.append((c00, c11, c01))

    K = len(elements)
    adjacency = np.full((K, 3, 2), -1, dtype=int)
    tri = lambda i, j, lower: 2 * ((i % seed) + seed * (j % seed)) + (0 if lower else 1)
    for j in range(seed):
        for i in range(seed):
            t1 = tri(i, j, True)
            t2 = tri(i, j, False)
            adjacency[t1, 0] = (tri(i, j - 1, False), 1)  # bottom <-> top of cell below
            adjacency[t1, 1] = (tri(i + 1, j, False), 2)  # right <-> left of cell right
            adjacency[t1, 2] = (t2, 0)  # shared diagonal
            adjacency[t2, 0] = (t1, 2)
            adjacency[t2, 1] = (tri(i, j + 1, True), 0)
            adjacency[t2, 2] = (tri(i - 1, j, True), 1)
    mesh = TriMesh(
        vertices=vertices,
        elements=np.array(elements, dtype=int),
        corners=np.array(corners, dtype=float),
        adjacency=adjacency,
        boundary_tag=np.full((K, 3), -1, dtype=int),
        tag_names=(),
        periodic=True,
    )
    mesh.validate()
    return mesh


def unit_square_periodic_mesh(seed: int = 1) -> TriMesh:
    """Periodic triangulation of [0,1]^2 with 2*seed^2 elements."""
    return _torus_mesh(seed)


# --- kernel refinement -----------------------------------------------------

def _kernel_pattern(interior_bary):
    """Kernel mesh on the reference triangle: barycentric points are the 3
    corners, 6 edge-trisection points, then the supplied interior points."""
    pts = [
        (1.0, 0.0, 0.0),
        (0.0, 1.0, 0.0),
        (0.0, 0.0, 1.0),
        # edge f0 (corners 0->1) at t = 1/3, 2/3
        (2 / 3, 1 / 3, 0.0),
        (1 / 3, 2 / 3, 0.0),
        # edge f1 (corners 1->2)
        (0.0, 2 / 3, 1 / 3),
        (0.0, 1 / 3, 2 / 3),
        # edge f2 (corners 2->0)
        (1 / 3, 0.0, 2 / 3),
        (2 / 3, 0.0, 1 / 3),
    ] + [tuple(b) for b in interior_bary]
    return np.array(pts)


# Uniform 9-triangle kernel: the interior point is the centroid and the
# children are the classic edge-trisection grid.
KERNEL_UNIFORM = {
    "points": _kernel_pattern([(1 / 3, 1 / 3, 1 / 3)]),
    "triangles": np.array(
        [
            (0, 3, 8),
            (3, 4, 9),
            (4, 1, 5),
            (8, 3, 9),
            (9, 4, 5),
            (8, 9, 7),
            (7, 9, 6),
            (9, 5, 6),
            (7, 6, 2),
        ],
        dtype=int,
    ),
}

# Same connectivity with the interior point pulled off the centroid, so
# that refined meshes do not develop smoothly varying element sizes.
KERNEL_PERTURBED = {
    "points": _kernel_pattern([(0.40, 0.32, 0.28)]),
    "triangles": KERNEL_UNIFORM["triangles"],
}

_EDGE_POINTS = {0: (3, 4), 1: (5, 6), 2: (7, 8)}  # kernel point ids along each parent face


def _kernel_face_children(triangles):
    """For each parent face, the (child, face, segment) triples lying on it."""
    out = {0: [], 1: [], 2: []}
    for pf, (e1, e2) in _EDGE_POINTS.items():
        c1, c2 = pf, (pf + 1) % 3
        chain = [c1, e1, e2, c2]  # kernel point ids along the face, in order
        for seg in range(3):
            a, b = chain[seg], chain[seg + 1]
            for t, tri_pts in enumerate(triangles):
                for f in range(3):
                    if tri_pts[f] == a and tri_pts[(f + 1) % 3] == b:
                        out[pf].append((t, f, seg))
    return out


def kernel_refine(mesh: TriMesh, levels: int, kernel=None) -> TriMesh:
    """Replace every triangle by the kernel pattern, `levels` times.

    Edge points stay at the thirds of each parent edge so neighboring
    elements stay conforming; alternative kernels may only move interior
    points.
    """
    if levels < 0:
        raise ValueError("levels must be >= 0")
    if kernel is None:
        kernel = KERNEL_UNIFORM
    out = mesh
    for _ in range(levels):
        out = _refine_once(out, kernel)
    return out


def _refine_once(mesh: TriMesh, kernel) -> TriMesh:
    pts = kernel["points"]
    tris = kernel["triangles"]
    face_children = _kernel_face_children(tris)
    n_kernel_pts = len(pts)
    n_interior = n_kernel_pts - 9
    K = mesh.num_elements

    # Global ids: parent vertices first, then two per parent-edge, then
    # interior points per parent element.
    edge_id = {}
    n_edges = 0
    for k in range(K):
        for f in range(3):
            nk, nf = mesh.adjacency[k, f]
            key = (k, f) if (nk < 0 or (k, f) < (nk, nf)) else (nk, nf)
            if key not in edge_id:
                edge_id[key] = n_edges
                n_edges += 1
    nv_old = mesh.vertices.shape[0]
    nv_new = nv_old + 2 * n_edges + n_interior * K

    def edge_point_ids(k, f):
        """Global ids of the two trisection points along face f of element k,
        ordered along k's own traversal of the face."""
        nk, nf = mesh.adjacency[k, f]
        key = (k, f) if (nk < 0 or (k, f) < (nk, nf)) else (nk, nf)
        base = nv_old + 2 * edge_id[key]
        if key == (k, f):
            return base, base + 1
        return base + 1, base  # neighbor traverses the edge reversed

    vertices = np.zeros((nv_new, 2))
    vertices[:nv_old] = mesh.vertices
    elements = np.zeros((K * len(tris), 3), dtype=int)
    corners = np.zeros((K * len(tris), 3, 2))
    child_of = {}  # (parent, face, segment) -> (child element, child face)

    for k in range(K):
        local_ids = np.zeros(n_kernel_pts, dtype=int)
        local_ids[0:3] = mesh.elements[k]
        for f in range(3):
            e1, e2 = _EDGE_POINTS[f]
            g1, g2 = edge_point_ids(k, f)
            local_ids[e1], local_ids[e2] = g1, g2
        for m in range(n_interior):
            local_ids[9 + m] = nv_old + 2 * n_edges + n_interior * k + m

        coords = pts @ mesh.corners[k]  # barycentric -> parent geometry
        vertices[local_ids] = coords
        for t, tri_pts in enumerate(tris):
            c = k * len(tris) + t
            elements[c] = local_ids[tri_pts]
            corners[c] = coords[tri_pts]
        for f in range(3):
            for t, cf, seg in face_children[f]:
                child_of[(k, f, seg)] = (k * len(tris) + t, cf)

    adjacency = np.full((K * len(tris), 3, 2), -1, dtype=int)
    boundary_tag = np.full((K * len(tris), 3), -1, dtype=int)
    # interior kernel edges: match within each parent by vertex pairs
    for k in range(K):
        half = {}
        for t, tri_pts in enumerate(tris):
            c = k * len(tris) + t
            for f in range(3):
                a, b = elements[c, f], elements[c, (f + 1) % 3]
                half[(a, b)] = (c, f)
        for (a, b), (c, f) in half.items():
            if (b, a) in half:
                adjacency[c, f] = half[(b, a)]
    # parent faces: segment s on (k,f) meets segment 2-s on the neighbor
    for k in range(K):
        for f in range(3):
            nk, nf = mesh.adjacency[k, f]
            for seg in range(3):
                c, cf = child_of[(k, f, seg)]
                if nk < 0:
                    boundary_tag[c, cf] = mesh.boundary_tag[k, f]
                else:
                    adjacency[c, cf] = child_of[(nk, nf, 2 - seg)]

    refined = TriMesh(
        vertices=vertices,
        elements=elements,
        corners=corners,
        adjacency=adjacency,
        boundary_tag=boundary_tag,
        tag_names=mesh.tag_names,
        periodic=mesh.periodic,
    )
    refined.validate()
    return refined


# --- curvilinear maps ------------------------------------------------------

@dataclass
class LagrangeMap:
    """Per-element coordinate maps of degree p+1 on uniform reference nodes."""

    degree: int
    control_nodes: np.ndarray  # (K, n_c, 2)

    @property
    def nodes_per_element(self) -> int:
        return (self.degree + 1) * (self.degree + 2) // 2


@dataclass
class MetricData:
    """Mapping derivatives, Jacobian determinant, and physical positions of a
    reference node set, per element."""

    xy: np.ndarray  # (K, n, 2)
    x_xi: np.ndarray  # (K, n)
    x_eta: np.ndarray
    y_xi: np.ndarray
    y_eta: np.ndarray
    jac: np.ndarray  # (K, n)

    def contravariant(self):
        """(J grad xi, J grad eta) as ((K,n,2), (K,n,2)) arrays."""
        jgxi = np.stack([self.y_eta, -self.x_eta], axis=-1)
        jgeta = np.stack([-self.y_xi, self.x_xi], axis=-1)
        return jgxi, jgeta


def _bary(points: np.ndarray) -> np.ndarray:
    """Barycentric coordinates of reference points."""
    lam2 = (points[:, 0] + 1.0) / 2.0
    lam3 = (points[:, 1] + 1.0) / 2.0
    return np.stack([1.0 - lam2 - lam3, lam2, lam3], axis=1)


def affine_map(mesh: TriMesh, p: int) -> LagrangeMap:
    """Degree p+1 map whose control nodes come from straight-sided corners."""
    lam = _bary(uniform_nodes(p + 1))
    control = np.einsum("nv,kvd->knd", lam, mesh.corners)
    return LagrangeMap(p + 1, control)


def parametric_map(mesh: TriMesh, p: int, transform) -> LagrangeMap:
    """Degree p+1 map through `transform`, applied to parameter-space control
    nodes built from the element corners."""
    lam = _bary(uniform_nodes(p + 1))
    params = np.einsum("nv,kvd->knd", lam, mesh.corners)
    flat = params.reshape(-1, 2)
    mapped = transform(flat).reshape(params.shape)
    return LagrangeMap(p + 1, mapped)


def compute_metrics(lmap: LagrangeMap, nodes: np.ndarray) -> MetricData:
    """Evaluate the map and its analytic derivatives at reference nodes."""
    E, Exi, Eeta = lagrange_eval_matrices(lmap.degree, nodes[:, 0], nodes[:, 1])
    cx = lmap.control_nodes[:, :, 0]
    cy = lmap.control_nodes[:, :, 1]
    xy = np.stack([cx @ E.T, cy @ E.T], axis=-1)
    x_xi = cx @ Exi.T
    x_eta = cx @ Eeta.T
    y_xi = cy @ Exi.T
    y_eta = cy @ Eeta.T
    jac = x_xi * y_eta - x_eta * y_xi
    if np.any(jac <= 0):
        k, i = np.unravel_index(np.argmin(jac), jac.shape)
        raise ValueError(f"non-positive Jacobian {jac[k, i]:.3e} in element {k} at node {i}")
    return MetricData(xy, x_xi, x_eta, y_xi, y_eta, jac)


# --- the three study meshes ------------------------------------------------

def quarter_annulus_mesh(N: int, p: int) -> tuple[TriMesh, LagrangeMap]:
    """Quarter annulus 1 <= r <= 3, 0 <= theta <= pi/2, as N x N polar cells
    split into triangles, with a degree p+1 map through the polar chart.

    Boundary tags: 'slip' on r = 1, 'characteristic' elsewhere.
    """
    if N < 1 or not (1 <= p <= 4):
        raise ValueError("need N >= 1 and p in 1..4")
    tag_names = ("slip", "characteristic")
    dr = 2.0 / N
    dth = (np.pi / 2) / N

    def polar_to_xy(rt):
        r, th = rt[:, 0], rt[:, 1]
        return np.stack([r * np.cos(th), r * np.sin(th)], axis=1)

    vid = lambda i, j: i + (N + 1) * j
    params = np.array([[1.0 + i * dr, j * dth] for j in range(N + 1) for i in range(N + 1)])
    elements = []
    corners = []
    for j in range(N):
        for i in range(N):
            q = [
                (1.0 + i * dr, j * dth),
                (1.0 + (i + 1) * dr, j * dth),
                (1.0 + (i + 1) * dr, (j + 1) * dth),
                (1.0 + i * dr, (j + 1) * dth),
            ]
            v = [vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)]
            elements.append((v[0], v[1], v[2]))
            corners.append((q[0], q[1], q[2]))
            elements.append((v[0], v[2], v[3]))
            corners.append((q[0], q[2], q[3]))

    K = len(elements)
    adjacency = np.full((K, 3, 2), -1, dtype=int)
    boundary_tag = np.full((K, 3), -1, dtype=int)
    tri = lambda i, j, lower: 2 * (i + N * j) + (0 if lower else 1)
    for j in range(N):
        for i in range(N):
            t1, t2 = tri(i, j, True), tri(i, j, False)
            adjacency[t1, 2] = (t2, 0)
            adjacency[t2, 0] = (t1, 2)
            if j > 0:
                adjacency[t1, 0] = (tri(i, j - 1, False), 1)
            else:
                boundary_tag[t1, 0] = 1  # theta = 0 side
            if i < N - 1:
                adjacency[t1, 1] = (tri(i + 1, j, False), 2)
            else:
                boundary_tag[t1, 1] = 1  # outer radius
            if j < N - 1:
                adjacency[t2, 1] = (tri(i, j + 1, True), 0)
            else:
                boundary_tag[t2, 1] = 1  # theta = pi/2 side
            if i > 0:
                adjacency[t2, 2] = (tri(i - 1, j, True), 1)
            else:
                boundary_tag[t2, 2] = 0  # inner radius: slip wall
    param_mesh = TriMesh(
        vertices=params,
        elements=np.array(elements, dtype=int),
        corners=np.array(corners, dtype=float),  # polar parameter corners
        adjacency=adjacency,
        boundary_tag=boundary_tag,
        tag_names=tag_names,
        periodic=False,
    )
    param_mesh.validate()
    lmap = parametric_map(param_mesh, p, polar_to_xy)
    phys_corners = polar_to_xy(param_mesh.corners.reshape(-1, 2)).reshape(param_mesh.corners.shape)
    mesh = replace(param_mesh, vertices=polar_to_xy(params), corners=phys_corners)
    return mesh, lmap


def warp_transform(params: np.ndarray) -> np.ndarray:
    """Sinusoidal area-preserving warp of the unit square."""
    xi, eta = params[:, 0], params[:, 1]
    bump = (1.0 / 20.0) * np.sin(3 * np.pi * xi) * np.sin(3 * np.pi * eta)
    return np.stack([xi + bump, eta - bump], axis=1)


def warped_periodic_mesh(p: int, seed: int = 6) -> tuple[TriMesh, LagrangeMap]:
    """Curvilinear periodic mesh: seed x seed unit-square cells split into
    triangles and pushed through the sinusoidal warp via degree p+1 maps."""
    if not (1 <= p <= 4):
        raise ValueError("p must be in 1..4")
    base = unit_square_periodic_mesh(seed)
    lmap = parametric_map(base, p, warp_transform)
    warped_corners = warp_transform(base.corners.reshape(-1, 2)).reshape(base.corners.shape)
    mesh = replace(base, corners=warped_corners)
    mesh.vertices[:] = warp_transform(base.vertices)
    return mesh, lmap
