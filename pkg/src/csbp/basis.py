"""Orthonormal polynomial bases on the reference triangle.

The reference triangle is T = {(xi, eta) : xi >= -1, eta >= -1, eta <= -xi}
with vertices (-1,-1), (1,-1), (-1,1).  The basis is the standard
Proriol-Koornwinder-Dubiner family evaluated through the collapsed
coordinate map, orthonormal in the exact L2 inner product on T.
"""

import math

import numpy as np

REF_VERTICES = np.array([[-1.0, -1.0], [1.0, -1.0], [-1.0, 1.0]])
REF_AREA = 2.0

# Faces of the reference triangle, as (start vertex, end vertex) indices,
# with their outward unit normals and lengths.
REF_FACES = ((0, 1), (1, 2), (2, 0))
REF_NORMALS = np.array([[0.0, -1.0], [np.sqrt(0.5), np.sqrt(0.5)], [-1.0, 0.0]])
REF_FACE_LENGTHS = np.array([2.0, 2.0 * np.sqrt(2.0), 2.0])


def basis_size(p: int) -> int:
    return (p + 1) * (p + 2) // 2


def jacobi_p(x: np.ndarray, alpha: float, beta: float, n: int) -> np.ndarray:
    """Jacobi polynomial of degree n, normalized to unit weighted L2 norm."""
    x = np.asarray(x, dtype=float)
    gamma0 = (
        2.0 ** (alpha + beta + 1)
        / (alpha + beta + 1.0)
        * math.gamma(alpha + 1)
        * math.gamma(beta + 1)
        / math.gamma(alpha + beta + 1)
    )
    pm1 = np.full_like(x, 1.0 / np.sqrt(gamma0))
    if n == 0:
        return pm1
    gamma1 = (alpha + 1.0) * (beta + 1.0) / (alpha + beta + 3.0) * gamma0
    pcur = ((alpha + beta + 2.0) * x / 2.0 + (alpha - beta) / 2.0) / np.sqrt(gamma1)
    aold = 2.0 / (2.0 + alpha + beta) * np.sqrt((alpha + 1.0) * (beta + 1.0) / (alpha + beta + 3.0))
    for i in range(1, n):
        h1 = 2.0 * i + alpha + beta
        anew = (
            2.0
            / (h1 + 2.0)
            * np.sqrt(
                (i + 1)
                * (i + 1.0 + alpha + beta)
                * (i + 1.0 + alpha)
                * (i + 1.0 + beta)
                / (h1 + 1.0)
                / (h1 + 3.0)
            )
        )
        bnew = -(alpha * alpha - beta * beta) / h1 / (h1 + 2.0)
        pm1, pcur = pcur, ((x - bnew) * pcur - aold * pm1) / anew
        aold = anew
    return pcur


def grad_jacobi_p(x: np.ndarray, alpha: float, beta: float, n: int) -> np.ndarray:
    if n == 0:
        return np.zeros_like(np.asarray(x, dtype=float))
    return np.sqrt(n * (n + alpha + beta + 1.0)) * jacobi_p(x, alpha + 1, beta + 1, n - 1)


def _collapsed(xi: np.ndarray, eta: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    xi = np.asarray(xi, dtype=float)
    eta = np.asarray(eta, dtype=float)
    denom = 1.0 - eta
    a = np.where(np.abs(denom) > 1e-14, 2.0 * (1.0 + xi) / np.where(denom == 0, 1.0, denom) - 1.0, -1.0)
    return a, eta


def pkd_vandermonde(p: int, xi: np.ndarray, eta: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Values and (xi, eta) derivatives of the degree-p PKD basis.

    Columns are graded by total degree (all modes of degree 0, then 1, ...),
    which every downstream construction relies on.
    """
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    eta = np.atleast_1d(np.asarray(eta, dtype=float))
    a, b = _collapsed(xi, eta)
    n = xi.shape[0]
    cols = basis_size(p)
    V = np.zeros((n, cols))
    Vxi = np.zeros((n, cols))
    Veta = np.zeros((n, cols))
    half1mb = 0.5 * (1.0 - b)
    k = 0
    for deg in range(p + 1):
        for j in range(deg + 1):
            i = deg - j
            fa = jacobi_p(a, 0, 0, i)
            dfa = grad_jacobi_p(a, 0, 0, i)
            gb = jacobi_p(b, 2 * i + 1, 0, j)
            dgb = grad_jacobi_p(b, 2 * i + 1, 0, j)
            V[:, k] = np.sqrt(2.0) * fa * gb * (1.0 - b) ** i
            dmodedr = dfa * gb
            if i > 0:
                dmodedr = dmodedr * half1mb ** (i - 1)
            dmodeds = dfa * (gb * (0.5 * (1.0 + a)))
            if i > 0:
                dmodeds = dmodeds * half1mb ** (i - 1)
            tmp = dgb * half1mb**i
            if i > 0:
                tmp = tmp - 0.5 * i * gb * half1mb ** (i - 1)
            dmodeds = dmodeds + fa * tmp
            Vxi[:, k] = 2.0 ** (i + 0.5) * dmodedr
            Veta[:, k] = 2.0 ** (i + 0.5) * dmodeds
            k += 1
    return V, Vxi, Veta


def uniform_nodes(q: int) -> np.ndarray:
    """(q+1)(q+2)/2 uniformly spaced nodes on the reference triangle."""
    pts = []
    for j in range(q + 1):
        for i in range(q + 1 - j):
            lam2 = i / q
            lam3 = j / q
            lam1 = 1.0 - lam2 - lam3
            pts.append(lam1 * REF_VERTICES[0] + lam2 * REF_VERTICES[1] + lam3 * REF_VERTICES[2])
    return np.array(pts)


def lagrange_eval_matrices(q: int, xi: np.ndarray, eta: np.ndarray):
    """Evaluation and derivative matrices of the degree-q Lagrange basis on
    uniform nodes, at the supplied points: rows f(target) = M @ f(nodes)."""
    nodes = uniform_nodes(q)
    Vn, _, _ = pkd_vandermonde(q, nodes[:, 0], nodes[:, 1])
    Vt, Vtxi, Vteta = pkd_vandermonde(q, xi, eta)
    Vinv = np.linalg.inv(Vn)
    return Vt @ Vinv, Vtxi @ Vinv, Vteta @ Vinv


def tri_monomial_moment(a: int, b: int) -> float:
    """Exact integral of xi^a eta^b over the reference triangle."""
    # Substitute xi = 2u-1, eta = 2v-1 on the unit simplex and expand.
    total = 0.0
    for i in range(a + 1):
        for j in range(b + 1):
            c = (
                math.comb(a, i)
                * math.comb(b, j)
                * (2.0**i) * ((-1.0) ** (a - i))
                * (2.0**j) * ((-1.0) ** (b - j))
            )
            total += c * math.factorial(i) * math.factorial(j) / math.factorial(i + j + 2)
    return 4.0 * total
