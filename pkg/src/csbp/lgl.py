"""Legendre-Gauss-Lobatto rules and 1D normalized-Legendre Vandermonde matrices."""

from dataclasses import dataclass

import numpy as np
from numpy.polynomial import legendre as npleg


@dataclass(frozen=True)
class Lgl1D:
    """An n-point Legendre-Gauss-Lobatto quadrature on [-1, 1].

    The rule includes both endpoints, has strictly increasing nodes and
    positive weights summing to 2, and integrates polynomials of degree
    2n-3 exactly.
    """

    n: int
    nodes: np.ndarray
    weights: np.ndarray


@dataclass(frozen=True)
class Vandermonde1D:
    """Nodal values of the unit-L2-norm Legendre basis up to degree p.

    L[i, j] holds basis polynomial j at node i; Lp holds its derivative.
    When the underlying quadrature is at least 2p exact, L.T @ H @ L is
    the (p+1) identity.
    """

    p: int
    L: np.ndarray
    Lp: np.ndarray


def lgl_rule(n: int, tol: float = 1e-14) -> Lgl1D:
    """Compute the n-point LGL rule on [-1, 1].

    Interior nodes are the roots of P'_{n-1}, found by Newton iteration
    from the Chebyshev-Gauss-Lobatto guess with a bisection fallback;
    weights are w_i = 2 / (n (n-1) P_{n-1}(x_i)^2).
    """
    if n < 2:
        raise ValueError(f"LGL rule needs at least 2 nodes, got {n}")
    if n == 2:
        return Lgl1D(2, np.array([-1.0, 1.0]), np.array([1.0, 1.0]))

    c = np.zeros(n)
    c[-1] = 1.0  # coefficients of P_{n-1}
    dc = npleg.legder(c)
    d2c = npleg.legder(dc)

    x = -np.cos(np.pi * np.arange(1, n - 1) / (n - 1))
    for _ in range(100):
        g = npleg.legval(x, dc)
        gp = npleg.legval(x, d2c)
        dx = g / gp
        x = x - dx
        if np.max(np.abs(dx)) < tol:
            break
    else:
        x = _bisect_dlegendre_roots(dc, n, tol)
    if np.max(np.abs(npleg.legval(x, dc))) > 1e-12:
        raise RuntimeError(f"LGL Newton iteration failed to converge for n={n}")

    x = 0.5 * (x - x[::-1])  # enforce the exact +- symmetry of the node set
    nodes = np.concatenate(([-1.0], x, [1.0]))
    if np.any(np.diff(nodes) <= 0):
        raise RuntimeError(f"LGL nodes not strictly increasing for n={n}")
    pn = npleg.legval(nodes, c)
    weights = 2.0 / (n * (n - 1) * pn**2)
    return Lgl1D(n, nodes, weights)


def _bisect_dlegendre_roots(dc: np.ndarray, n: int, tol: float) -> np.ndarray:
    """Bracketed bisection for the n-2 interior roots of P'_{n-1}."""
    # P'_{n-1} alternates sign between consecutive Chebyshev-Lobatto points.
    guess = -np.cos(np.pi * np.arange(n) / (n - 1))
    roots = []
    for k in range(n - 2):
        a, b = guess[k], guess[k + 2]
        fa = npleg.legval(a, dc)
        for _ in range(200):
            m = 0.5 * (a + b)
            fm = npleg.legval(m, dc)
            if fa * fm <= 0:
                b = m
            else:
                a, fa = m, fm
            if b - a < tol:
                break
        roots.append(0.5 * (a + b))
    return np.array(roots)


def legendre_values(p: int, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Values and derivatives of the unnormalized Legendre polynomials 0..p."""
    x = np.asarray(x, dtype=float)
    P = np.zeros((p + 1,) + x.shape)
    Pd = np.zeros_like(P)
    P[0] = 1.0
    if p >= 1:
        P[1] = x
        Pd[1] = 1.0
    for k in range(2, p + 1):
        P[k] = ((2 * k - 1) * x * P[k - 1] - (k - 1) * P[k - 2]) / k
        Pd[k] = Pd[k - 2] + (2 * k - 1) * P[k - 1]
    return P, Pd


def legendre_vandermonde(p: int, nodes: np.ndarray, weights: np.ndarray) -> Vandermonde1D:
    """Unit-L2-norm Legendre Vandermonde (values and derivatives) at the nodes.

    Raises if the supplied quadrature is not accurate enough to render
    the discrete basis orthonormal (it must be at least 2p exact).
    """
    nodes = np.asarray(nodes, dtype=float)
    weights = np.asarray(weights, dtype=float)
    P, Pd = legendre_values(p, nodes)
    scale = np.sqrt((2 * np.arange(p + 1) + 1) / 2.0)
    L = (scale[:, None] * P).T
    Lp = (scale[:, None] * Pd).T
    gram = L.T @ (weights[:, None] * L)
    err = np.max(np.abs(gram - np.eye(p + 1)))
    if err > 1e-12:
        raise ValueError(
            f"quadrature is not 2p exact: Legendre Gram matrix deviates from "
            f"identity by {err:.2e} for p={p}, n={len(nodes)}"
        )
    return Vandermonde1D(p, L, Lp)


def lgl_moment_error(rule: Lgl1D, degree: int) -> float:
    """Max error of the rule on monomial moments up to the given degree."""
    err = 0.0
    for k in range(degree + 1):
        exact = 0.0 if k % 2 == 1 else 2.0 / (k + 1)
        err = max(err, abs(np.dot(rule.weights, rule.nodes**k) - exact))
    return err
