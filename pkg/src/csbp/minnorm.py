"""Weighted minimum-Frobenius-norm solve for the skew part of an SBP operator.

Given the diagonal norm H, the diagonal boundary operator E, and nodal
basis values L with directional derivatives Lder, the skew-symmetric S is
the minimizer of ||H^{-1} S||_F subject to the accuracy constraint

    S L = H Lder - (1/2) E L.

The constraint is consistent whenever the quadrature behind H and E is
accurate enough; this is checked up front (the compatibility condition)
and the solve is rejected otherwise.
"""

import numpy as np


def lower_index(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Row/column indices of the strict lower triangle, in the order
    m(i,j) = j + (i-1)(i-2)/2 used to vectorize S."""
    rows, cols = [], []
    for i in range(1, n):
        for j in range(i):
            rows.append(i)
            cols.append(j)
    return np.array(rows), np.array(cols)


def compatibility_residual(H: np.ndarray, E: np.ndarray, L: np.ndarray, Lder: np.ndarray) -> float:
    """Residual of L'T H L + L^T H L' = L^T E L (must vanish for consistency)."""
    HL = H[:, None] * Lder
    M = L.T @ HL + HL.T @ L - L.T @ (E[:, None] * L)
    return float(np.max(np.abs(M)))


def build_S_minnorm(
    H: np.ndarray,
    E: np.ndarray,
    L: np.ndarray,
    Lder: np.ndarray,
    rcond: float = 1e-12,
) -> np.ndarray:
    """Skew-symmetric S minimizing ||H^{-1} S||_F under S L = H Lder - E L / 2.

    H and E are the diagonals of the norm and boundary matrices.  The
    quadratic objective is diagonalized over the strict lower triangle of
    S with weights 1/H_ii^2 + 1/H_jj^2 and reduced to a minimum-2-norm
    least-squares problem.
    """
    H = np.asarray(H, dtype=float)
    E = np.asarray(E, dtype=float)
    n = H.shape[0]
    npb = L.shape[1]
    if L.shape[0] != n or Lder.shape != L.shape:
        raise ValueError("basis value/derivative shapes inconsistent with H")

    comp = compatibility_residual(H, E, L, Lder)
    if comp > 1e-10:
        raise ValueError(
            f"accuracy constraints are inconsistent (compatibility residual "
            f"{comp:.2e}); the cubature behind H and E is not exact enough"
        )

    rows, cols = lower_index(n)
    nun = len(rows)
    B = H[:, None] * Lder - 0.5 * E[:, None] * L

    # Constraint rows are (node i, basis q); unknown m couples nodes (rows[m], cols[m]).
    A = np.zeros((n * npb, nun))
    for m, (i, j) in enumerate(zip(rows, cols)):
        A[i * npb : (i + 1) * npb, m] += L[j]
        A[j * npb : (j + 1) * npb, m] -= L[i]
    b = B.reshape(-1)

    w = 1.0 / H[rows] ** 2 + 1.0 / H[cols] ** 2
    wsqrt = np.sqrt(w)
    t, *_ = np.linalg.lstsq(A / wsqrt[None, :], b, rcond=rcond)
    s = t / wsqrt

    S = np.zeros((n, n))
    S[rows, cols] = s
    S[cols, rows] = -s

    resid = np.max(np.abs(S @ L - B))
    scale = max(1.0, np.max(np.abs(B)))
    if resid > 1e-11 * scale:
        raise RuntimeError(
            f"min-norm solve left accuracy residual {resid:.2e} "
            f"(relative scale {scale:.2e})"
        )
    return S
