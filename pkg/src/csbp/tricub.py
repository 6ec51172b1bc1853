"""Symmetric cubature rules on the reference triangle.

Every rule carries a node at each vertex and p+2 LGL-positioned nodes on
each face (so the boundary operator of the induced SBP family is
diagonal), has strictly positive weights, and integrates total-degree-2p
polynomials exactly.  Rules are built from symmetry orbits: vertex and
face orbits are fixed in position with free weights, interior orbits have
free barycentric parameters.  A damped Gauss-Newton iteration solves the
moment equations from the seed parameters stored below; the seeds were
found offline by a multistart search and the solve re-verifies every
invariant at build time.
"""

import itertools
import json
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .basis import REF_VERTICES, REF_AREA, basis_size, pkd_vandermonde, tri_monomial_moment
from .lgl import lgl_rule


@dataclass(frozen=True)
class TriCubature:
    """Cubature rule with vertex and face-LGL nodes on the reference triangle.

    face_node_ids[f] lists the p+2 node indices on face f ordered as
    (start vertex, end vertex, interior nodes ascending along the face);
    the face midpoint, when present, therefore comes last for p = 1.
    """

    p: int
    n_k: int
    nodes: np.ndarray  # (n_k, 2)
    weights: np.ndarray  # (n_k,)
    vertex_ids: np.ndarray  # (3,)
    face_node_ids: np.ndarray  # (3, p+2)

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "nodes": self.nodes.tolist(),
            "weights": self.weights.tolist(),
            "vertex_ids": self.vertex_ids.tolist(),
            "face_node_ids": self.face_node_ids.tolist(),
        }


@dataclass(frozen=True)
class FaceRule:
    """LGL rule along one face: p+2 nodes in the face reference coordinate,
    ordered (endpoints first, then interior ascending), with quadrature
    weights scaled by half the face length on the diagonal of B."""

    p: int
    nodes: np.ndarray
    B: np.ndarray  # diagonal entries


def face_rule(p: int, face_length: float = 2.0) -> FaceRule:
    if p < 0 or face_length <= 0:
        raise ValueError("need p >= 0 and a positive face length")
    rule = lgl_rule(p + 2)
    order = [0, p + 1] + list(range(1, p + 1))
    nodes = rule.nodes[order]
    B = 0.5 * face_length * rule.weights[order]
    return FaceRule(p, nodes, B)


# --- symmetry orbits ---------------------------------------------------------

def _orbit_bary(kind: str, params) -> np.ndarray:
    if kind == "vertex":
        return np.eye(3)
    if kind == "centroid":
        return np.full((1, 3), 1.0 / 3.0)
    if kind == "edge":
        a = params[0]
        if abs(a - 0.5) < 1e-13:
            lams = {(0.5, 0.5, 0.0)}
        else:
            lams = {(a, 1 - a, 0.0), (1 - a, a, 0.0)}
        pts = set()
        for lam in lams:
            for perm in itertools.permutations(range(3)):
                pts.add(tuple(lam[i] for i in perm))
        return np.array(sorted(pts))
    if kind == "median":
        a = params[0]
        return np.array([[a, a, 1 - 2 * a], [a, 1 - 2 * a, a], [1 - 2 * a, a, a]])
    if kind == "general":
        a, b = params
        lam = (a, b, 1 - a - b)
        pts = {tuple(lam[i] for i in perm) for perm in itertools.permutations(range(3))}
        return np.array(sorted(pts))
    raise ValueError(f"unknown orbit kind {kind!r}")


_N_FREE = {"vertex": 0, "centroid": 0, "edge": 0, "median": 1, "general": 2}


def _edge_orbit_alphas(p: int) -> list[float]:
    """Distinct orbit parameters of the face-interior LGL positions."""
    ts = lgl_rule(p + 2).nodes[1:-1]
    alphas = sorted({min((1 - t) / 2, (1 + t) / 2) for t in ts})
    return alphas


# Interior orbit structure and seed parameters per degree.  Seeds are the
# converged weights/positions (orbit weights first, free positions after);
# the Gauss-Newton refinement below polishes them to machine precision.
_INTERIOR = {
    0: ([], [2.0 / 3.0], 1),
    1: ([("centroid",)], [0.1, 4.0 / 15.0, 0.9], 3),
    2: ([("median",)], [0.02504451, 0.1072952, 0.42703176, 0.21285436], 4),
    3: (
        [("median",), ("median",)],
        [0.00913026, 0.04537037, 0.06201621, 0.29870678, 0.20607267, 0.42438603, 0.14200508],
        6,
    ),
    4: (
        [("median",), ("median",), ("median",), ("general",)],
        [
            0.00404271, 0.0218968, 0.03158245, 0.11832798, 0.09876935, 0.02276896,
            0.15789959, 0.28582899, 0.09821998, 0.16408757, 0.31967567, 0.09864592,
        ],
        8,
    ),
}


def _orbit_config(p: int):
    interior, seed, exactness = _INTERIOR[p]
    config = [("vertex", ())]
    for a in _edge_orbit_alphas(p):
        config.append(("edge", (a,)))
    for (kind,) in interior:
        config.append((kind, ()))
    return config, np.array(seed, dtype=float), exactness


def _assemble_orbits(config, x):
    nw = len(config)
    weights, pos = x[:nw], x[nw:]
    lams, ws = [], []
    k = 0
    for (kind, fixed), w in zip(config, weights):
        nfree = _N_FREE[kind]
        params = tuple(fixed) + tuple(pos[k : k + nfree])
        k += nfree
        lam = _orbit_bary(kind, params)
        lams.append(lam)
        ws.append(np.full(len(lam), w))
    return np.vstack(lams), np.concatenate(ws)


def _residual(config, x, q):
    lam, w = _assemble_orbits(config, x)
    xy = lam @ REF_VERTICES
    V, _, _ = pkd_vandermonde(q, xy[:, 0], xy[:, 1])
    m = V.T @ w
    m[0] -= np.sqrt(2.0)  # integral of the constant mode over area 2
    return m


def _gauss_newton(config, x0, q, max_iter=200, tol=2e-13, stall_tol=5e-12):
    x = np.array(x0, dtype=float)
    r = _residual(config, x, q)
    for _ in range(max_iter):
        norm = np.linalg.norm(r)
        if norm < tol:
            return x
        J = np.zeros((len(r), len(x)))
        h = 1e-7
        for k in range(len(x)):
            xp = x.copy()
            xp[k] += h
            xm = x.copy()
            xm[k] -= h
            J[:, k] = (_residual(config, xp, q) - _residual(config, xm, q)) / (2 * h)
        dx, *_ = np.linalg.lstsq(J, -r, rcond=1e-12)
        step = 1.0
        for _ in range(60):
            xn = x + step * dx
            rn = _residual(config, xn, q)
            if np.linalg.norm(rn) < norm:
                break
            step *= 0.5
        else:
            # finite-difference Jacobian noise floor; accept if already converged
            if norm < stall_tol:
                return x
            raise RuntimeError("cubature Newton stalled: damping produced no decrease")
        x, r = xn, rn
    raise RuntimeError(f"cubature Newton failed to converge (residual {np.linalg.norm(r):.2e})")


# --- rule materialization ----------------------------------------------------

def _materialize(p: int, config, x) -> TriCubature:
    nw = len(config)
    weights, pos = x[:nw], x[nw:]
    orbit_weight = {}
    k = 0
    interior_orbits = []
    for (kind, fixed), w in zip(config, weights):
        nfree = _N_FREE[kind]
        params = tuple(fixed) + tuple(pos[k : k + nfree])
        k += nfree
        if kind == "vertex":
            orbit_weight["vertex"] = w
        elif kind == "edge":
            orbit_weight[("edge", round(fixed[0], 12))] = w
        else:
            interior_orbits.append((kind, params, w))

    nodes = [REF_VERTICES[0], REF_VERTICES[1], REF_VERTICES[2]]
    wts = [orbit_weight["vertex"]] * 3
    face_ids = []
    ts = lgl_rule(p + 2).nodes[1:-1]
    faces = ((0, 1), (1, 2), (2, 0))
    for fa, fb in faces:
        ids = [fa, fb]
        for t in ts:
            nodes.append(0.5 * (1 - t) * REF_VERTICES[fa] + 0.5 * (1 + t) * REF_VERTICES[fb])
            alpha = round(min((1 - t) / 2, (1 + t) / 2), 12)
            wts.append(orbit_weight[("edge", alpha)])
            ids.append(len(nodes) - 1)
        face_ids.append(ids)
    for kind, params, w in interior_orbits:
        lam = _orbit_bary(kind, params)
        for row in lam:
            nodes.append(row @ REF_VERTICES)
            wts.append(w)

    nodes = np.array(nodes)
    wts = np.array(wts)
    cub = TriCubature(
        p=p,
        n_k=len(nodes),
        nodes=nodes,
        weights=wts,
        vertex_ids=np.array([0, 1, 2]),
        face_node_ids=np.array(face_ids, dtype=int),
    )
    _check_rule(cub)
    return cub


def _check_rule(cub: TriCubature) -> None:
    if np.any(cub.weights <= 0):
        raise RuntimeError(f"cubature for p={cub.p} has a non-positive weight")
    if cub.n_k < basis_size(cub.p):
        raise RuntimeError("fewer cubature nodes than basis functions")
    err = verify_cubature(cub, 2 * cub.p)
    if err > 1e-12:
        raise RuntimeError(f"moment residual {err:.2e} exceeds tolerance for p={cub.p}")
    from scipy.spatial.distance import pdist

    if pdist(cub.nodes).min() < 1e-8:
        raise RuntimeError("coincident cubature nodes")


@lru_cache(maxsize=None)
def build_tri_cubature(p: int) -> TriCubature:
    """Build (and verify) the degree-p rule; p in 0..4."""
    if p not in _INTERIOR:
        raise ValueError(f"no cubature configuration for p={p}; supported: 0..4")
    config, seed, exactness = _orbit_config(p)
    x = _gauss_newton(config, seed, exactness)
    return _materialize(p, config, x)


def verify_cubature(cub: TriCubature, q: int) -> float:
    """Max moment error over all monomials of total degree <= q."""
    err = 0.0
    for a in range(q + 1):
        for b in range(q + 1 - a):
            approx = np.dot(cub.weights, cub.nodes[:, 0] ** a * cub.nodes[:, 1] ** b)
            err = max(err, abs(approx - tri_monomial_moment(a, b)))
    return err


# --- fixtures ---------------------------------------------------------------

def save_cubature(cub: TriCubature, path) -> None:
    with open(path, "w") as fh:
        json.dump(cub.to_dict(), fh, indent=1)


def load_cubature(path) -> TriCubature:
    """Load a rule from JSON and re-verify it before accepting."""
    with open(path) as fh:
        d = json.load(fh)
    cub = TriCubature(
        p=int(d["p"]),
        n_k=len(d["nodes"]),
        nodes=np.array(d["nodes"], dtype=float),
        weights=np.array(d["weights"], dtype=float),
        vertex_ids=np.array(d["vertex_ids"], dtype=int),
        face_node_ids=np.array(d["face_node_ids"], dtype=int),
    )
    _check_rule(cub)
    return cub
