"""Global continuous-SBP structures: shared-node numbering, the assembled
diagonal norm, and global difference operators on affine meshes.

Interface matching is purely topological: vertices are unified by mesh
vertex id and face nodes by face pairing with the LGL ordering reversed on
the neighbor side.  No coordinate hashing is involved, so the construction
is exact for periodic and curved meshes alike.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .mesh import MetricData, TriMesh
from .tricub import TriCubature
from .trisbp import SbpTri

NODE_VERTEX, NODE_FACE, NODE_INTERIOR = 0, 1, 2


@dataclass(frozen=True)
class GlobalNumbering:
    """Shared-node global numbering: elem_to_global[k] are the global ids of
    element k's cubature nodes (the rows of the restriction operator)."""

    n: int
    elem_to_global: np.ndarray  # (K, n_k)
    local_class: np.ndarray  # (n_k,) vertex/face/interior label per local node
    multiplicity: np.ndarray  # (n,) number of elements touching each global node


def local_node_classes(cub: TriCubature) -> np.ndarray:
    cls = np.full(cub.n_k, NODE_INTERIOR, dtype=int)
    cls[cub.vertex_ids] = NODE_VERTEX
    for f in range(3):
        cls[cub.face_node_ids[f][2:]] = NODE_FACE
    return cls


def build_global_numbering(mesh: TriMesh, cub: TriCubature) -> GlobalNumbering:
    """Unify vertex and face nodes topologically; number the rest per element."""
    K = mesh.num_elements
    n_k = cub.n_k
    p = cub.p
    elem_to_global = np.full((K, n_k), -1, dtype=int)

    # vertices first: reuse the mesh's vertex ids compressed to used range
    used = np.unique(mesh.elements)
    vmap = {int(v): i for i, v in enumerate(used)}
    counter = len(used)
    for k in range(K):
        for lv, v in zip(cub.vertex_ids, mesh.elements[k]):
            elem_to_global[k, lv] = vmap[int(v)]

    # face interior nodes: allocate per undirected face, reversed on the
    # neighbor side (LGL positions are symmetric)
    face_base = {}
    for k in range(K):
        for f in range(3):
            nk, nf = mesh.adjacency[k, f]
            interior = cub.face_node_ids[f][2:]
            if len(interior) == 0:
                continue
            key = (k, f) if (nk < 0 or (k, f) < (int(nk), int(nf))) else (int(nk), int(nf))
            if key not in face_base:
                face_base[key] = counter
                counter += p
            base = face_base[key]
            if key == (k, f):
                ids = base + np.arange(p)
            else:
                ids = base + np.arange(p)[::-1]
            elem_to_global[k, interior] = ids

    # element-interior nodes
    cls = local_node_classes(cub)
    interior_local = np.where(cls == NODE_INTERIOR)[0]
    for k in range(K):
        m = len(interior_local)
        elem_to_global[k, interior_local] = counter + np.arange(m)
        counter += m

    if np.any(elem_to_global < 0):
        raise RuntimeError("numbering left unassigned local nodes")
    mult = np.zeros(counter, dtype=int)
    np.add.at(mult, elem_to_global.reshape(-1), 1)
    if np.any(mult == 0):
        raise RuntimeError("numbering produced unreferenced global nodes")
    return GlobalNumbering(counter, elem_to_global, cls, mult)


def element_loop_apply(numbering: GlobalNumbering, fields: np.ndarray, kernel) -> np.ndarray:
    """Gather-apply-scatter over elements in ascending order.

    kernel(k, local_values) -> local contribution; the scatter-add order is
    fixed, so results are bitwise deterministic.
    """
    out = np.zeros_like(fields, dtype=float)
    for k in range(numbering.elem_to_global.shape[0]):
        idx = numbering.elem_to_global[k]
        contrib = kernel(k, fields[idx])
        if np.shape(contrib) != np.shape(fields[idx]):
            raise ValueError(
                f"kernel output shape {np.shape(contrib)} does not match "
                f"element block shape {np.shape(fields[idx])}"
            )
        np.add.at(out, idx, contrib)
    return out


@dataclass
class GlobalOperator:
    """Assembled global norm and (for affine meshes) difference operators."""

    numbering: GlobalNumbering
    H: np.ndarray  # (n,) diagonal of the global norm
    Qx: sp.csr_matrix | None = None
    Qy: sp.csr_matrix | None = None

    def apply_Dx(self, u: np.ndarray) -> np.ndarray:
        return (self.Qx @ u) / self.H

    def apply_Dy(self, u: np.ndarray) -> np.ndarray:
        return (self.Qy @ u) / self.H


def assemble_global(
    mesh: TriMesh,
    numbering: GlobalNumbering,
    op: SbpTri,
    metrics: MetricData,
    with_Q: bool = True,
) -> GlobalOperator:
    """Additively scatter J H and the metric-weighted Q combinations.

    The assembled Qx/Qy require element-constant (affine) metrics; the norm
    H is assembled for curvilinear meshes as well.
    """
    K = mesh.num_elements
    n = numbering.n
    H = np.zeros(n)
    gidx = numbering.elem_to_global
    for k in range(K):
        np.add.at(H, gidx[k], metrics.jac[k] * op.H)
    if np.any(H <= 0):
        raise RuntimeError("assembled global norm has non-positive entries")

    Qx = Qy = None
    if with_Q:
        spread = max(
            float(np.max(np.ptp(metrics.x_xi, axis=1))),
            float(np.max(np.ptp(metrics.x_eta, axis=1))),
            float(np.max(np.ptp(metrics.y_xi, axis=1))),
            float(np.max(np.ptp(metrics.y_eta, axis=1))),
        )
        if spread > 1e-12:
            raise ValueError(
                "assembled Qx/Qy require affine elements (metric spread "
                f"{spread:.2e}); use element loops for curvilinear meshes"
            )
        n_k = op.n_k
        rows = np.empty(K * n_k * n_k, dtype=int)
        cols = np.empty_like(rows)
        vx = np.empty(K * n_k * n_k)
        vy = np.empty_like(vx)
        Qxi, Qeta = op.Qxi, op.Qeta
        for k in range(K):
            yeta = metrics.y_eta[k, 0]
            yxi = metrics.y_xi[k, 0]
            xeta = metrics.x_eta[k, 0]
            xxi = metrics.x_xi[k, 0]
            Qxk = yeta * Qxi - yxi * Qeta
            Qyk = -xeta * Qxi + xxi * Qeta
            sl = slice(k * n_k * n_k, (k + 1) * n_k * n_k)
            rows[sl] = np.repeat(gidx[k], n_k)
            cols[sl] = np.tile(gidx[k], n_k)
            vx[sl] = Qxk.reshape(-1)
            vy[sl] = Qyk.reshape(-1)
        shape = (n, n)
        Qx = sp.coo_matrix((vx, (rows, cols)), shape=shape).tocsr()
        Qy = sp.coo_matrix((vy, (rows, cols)), shape=shape).tocsr()
        Qx.sum_duplicates()
        Qy.sum_duplicates()
    return GlobalOperator(numbering, H, Qx, Qy)


def export_coo(matrix: sp.spmatrix, path) -> None:
    """Write (row, col, value) triplets, sorted, one per line."""
    coo = matrix.tocoo()
    order = np.lexsort((coo.col, coo.row))
    with open(path, "w") as fh:
        for r, c, v in zip(coo.row[order], coo.col[order], coo.data[order]):
            fh.write(f"{r} {c} {v:.17g}\n")
