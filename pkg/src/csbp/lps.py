"""Local-projection stabilization operators and dissipation spectra.

Three projector constructions are provided: the exact L2 projection for
2p-exact norms, the Gram-corrected approximate projection for weaker
norms, and the reconstruction-based variant for uniform finite-difference
grids.  All yield dissipation matrices M = P^T H A P that annihilate the
resolved polynomial space.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .trisbp import SbpTri


@dataclass(frozen=True)
class Projector:
    """High-frequency extractor P: u - (projection of u), with P @ 1 = 0."""

    P: np.ndarray
    variant: str  # exact2p | approx2pMinus1 | fdReconstruction
    p: int


@dataclass(frozen=True)
class LpsMatrix:
    """Symmetric PSD dissipation matrix M = P^T H A P."""

    M: np.ndarray
    scaling_desc: str


def projector_exact(L: np.ndarray, H: np.ndarray) -> Projector:
    """P = I - L L^T H, valid when the discrete basis is orthonormal."""
    H = np.asarray(H, dtype=float)
    gram = L.T @ (H[:, None] * L)
    err = np.max(np.abs(gram - np.eye(L.shape[1])))
    if err > 1e-10:
        raise ValueError(f"basis not discretely orthonormal (deviation {err:.2e})")
    n = L.shape[0]
    P = np.eye(n) - L @ (L.T * H[None, :])
    p = _degree_from_columns(L.shape[1])
    return Projector(P, "exact2p", p)


def projector_approx(L: np.ndarray, H: np.ndarray) -> Projector:
    """P = I - L (L^T H L)^{-1} L^T H for norms that are only 2p-1 exact.

    Exact for constants regardless of quadrature accuracy, so the induced
    stabilization stays conservative.
    """
    H = np.asarray(H, dtype=float)
    gram = L.T @ (H[:, None] * L)
    cond = np.linalg.cond(gram)
    if not np.isfinite(cond) or cond > 1e12:
        raise ValueError(f"Gram matrix numerically singular (cond {cond:.2e})")
    n = L.shape[0]
    coeffs = np.linalg.solve(gram, L.T * H[None, :])
    P = np.eye(n) - L @ coeffs
    p = _degree_from_columns(L.shape[1])
    return Projector(P, "approx2pMinus1", p)


def projector_fd(n: int) -> Projector:
    """Reconstruction projector on a uniform 1D grid: neighbor averages at
    interior nodes, linear extrapolation from the interior at boundaries."""
    if n < 4:
        raise ValueError(f"reconstruction projector needs n >= 4, got {n}")
    R = np.zeros((n, n))
    for i in range(1, n - 1):
        R[i, i - 1] = 0.5
        R[i, i + 1] = 0.5
    R[0, 1], R[0, 2] = 2.0, -1.0
    R[-1, -2], R[-1, -3] = 2.0, -1.0
    return Projector(np.eye(n) - R, "fdReconstruction", 1)


def _degree_from_columns(n_p: int) -> int:
    # triangle basis: n_p = (p+1)(p+2)/2; 1D basis: n_p = p+1.  The stored
    # degree is informational only, so the 1D reading is used as fallback.
    p = int(round((np.sqrt(8 * n_p + 1) - 3) / 2))
    if (p + 1) * (p + 2) // 2 == n_p:
        return p
    return n_p - 1


def lps_matrix(P: Projector, H: np.ndarray, A: np.ndarray | float = 1.0) -> LpsMatrix:
    """Assemble M = P^T H A P; requires H A symmetric positive semi-definite."""
    H = np.asarray(H, dtype=float)
    n = P.P.shape[0]
    if np.isscalar(A):
        HA = H * float(A)
        desc = f"scalar A={A}"
    else:
        A = np.asarray(A, dtype=float)
        if A.ndim == 1:
            HA = H * A
            desc = "diagonal A"
        else:
            HA = H[:, None] * A
            desc = "dense A"
    if HA.ndim == 1:
        if np.any(HA < -1e-14 * max(1.0, np.max(np.abs(HA)))):
            raise ValueError("H A must be positive semi-definite")
        M = P.P.T @ (HA[:, None] * P.P)
    else:
        sym = np.max(np.abs(HA - HA.T))
        if sym > 1e-12 * max(1.0, np.max(np.abs(HA))):
            raise ValueError("H A must be symmetric")
        ev = np.linalg.eigvalsh(0.5 * (HA + HA.T))
        if ev[0] < -1e-12 * max(1.0, ev[-1]):
            raise ValueError("H A must be positive semi-definite")
        M = P.P.T @ HA @ P.P
    return LpsMatrix(0.5 * (M + M.T), desc)


def derivative_dissipation_tri(
    op: SbpTri,
    s: int | None = None,
    Axi: np.ndarray | float = 1.0,
    Aeta: np.ndarray | float = 1.0,
) -> np.ndarray:
    """Sum of directional derivative-based dissipation operators with s = p+1."""
    if s is None:
        s = op.p + 1
    if s != op.p + 1:
        raise ValueError(f"dissipation order must be p+1={op.p + 1}, got {s}")
    n = op.n_k
    Axi = np.full(n, Axi) if np.isscalar(Axi) else np.asarray(Axi, dtype=float)
    Aeta = np.full(n, Aeta) if np.isscalar(Aeta) else np.asarray(Aeta, dtype=float)
    Dxs = np.linalg.matrix_power(op.Dxi, s)
    Dys = np.linalg.matrix_power(op.Deta, s)
    Dis = Dxs.T @ (op.H[:, None] * Axi[:, None] * Dxs) + Dys.T @ (op.H[:, None] * Aeta[:, None] * Dys)
    return 0.5 * (Dis + Dis.T)


def lps_matrix_tri(op: SbpTri, A: np.ndarray | float = 1.0) -> LpsMatrix:
    """Projection-based dissipation for a triangle operator."""
    proj = projector_exact(op.basis.L, op.H)
    return lps_matrix(proj, op.H, A)


def dissipation_spectrum(
    M: np.ndarray, H: np.ndarray, zero_tol: float = 1e-10
) -> tuple[np.ndarray, int, float]:
    """Eigenvalues of H^{-1} M (all real, nonnegative), the count of zero
    eigenvalues, and the max/min ratio over the nonzero part.

    Eigenvalues below zero_tol * max are counted as zero.
    """
    H = np.asarray(H, dtype=float)
    ev = scipy.linalg.eigh(M, np.diag(H), eigvals_only=True)
    ev = np.sort(ev)
    lam_max = ev[-1]
    if lam_max <= 0:
        return ev, len(ev), np.nan
    nz = ev[ev > zero_tol * lam_max]
    n_zero = len(ev) - len(nz)
    ratio = float(nz[-1] / nz[0]) if len(nz) else np.nan
    return ev, n_zero, ratio
