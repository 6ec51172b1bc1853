"""Diagonal-norm SBP first-derivative operators on LGL nodes, with the
derivative- and projection-based dissipation operators they induce."""

import warnings
from dataclasses import dataclass

import numpy as np

from .lgl import Lgl1D, Vandermonde1D, lgl_rule, legendre_vandermonde, legendre_values
from .minnorm import build_S_minnorm


class TrivialDissipationWarning(UserWarning):
    """Raised when the requested derivative order forces a zero operator."""


@dataclass(frozen=True)
class Sbp1D:
    """Degree-p diagonal-norm SBP operator on n >= p+1 LGL nodes.

    D = H^{-1} Q with Q = S + E/2, S skew-symmetric, E = diag(-1, 0, ..., 1).
    D differentiates polynomials of degree <= p exactly at the nodes.
    """

    p: int
    n: int
    nodes: np.ndarray
    H: np.ndarray  # diagonal entries
    Q: np.ndarray
    S: np.ndarray
    E: np.ndarray  # diagonal entries

    @property
    def D(self) -> np.ndarray:
        return self.Q / self.H[:, None]

    def to_dict(self) -> dict:
        """JSON-ready matrix bundle."""
        return {
            "p": self.p,
            "n": self.n,
            "nodes": self.nodes.tolist(),
            "H_diag": self.H.tolist(),
            "Q_rows": self.Q.tolist(),
            "E_diag": self.E.tolist(),
        }


def build_sbp_1d(p: int, n: int) -> Sbp1D:
    """Construct the degree-p SBP operator on the n-point LGL rule.

    The skew part comes from the weighted minimum-norm solve shared with
    the triangle construction, applied with the 1D Legendre Vandermonde.
    """
    if n < p + 1:
        raise ValueError(f"need n >= p+1 nodes, got p={p}, n={n}")
    rule = lgl_rule(n)
    H = rule.weights
    E = np.zeros(n)
    E[0], E[-1] = -1.0, 1.0
    # Raw normalized-Legendre values suffice for the accuracy constraints;
    # discrete orthonormality is not required here (n = p+1 is allowed).
    P, Pd = legendre_values(p, rule.nodes)
    scale = np.sqrt((2 * np.arange(p + 1) + 1) / 2.0)
    L = (scale[:, None] * P).T
    Lp = (scale[:, None] * Pd).T
    S = build_S_minnorm(H, E, L, Lp)
    Q = S + 0.5 * np.diag(E)

    D = Q / H[:, None]
    resid = np.max(np.abs(D @ L - Lp))
    if resid > 1e-10:
        raise RuntimeError(f"SBP accuracy residual {resid:.2e} for p={p}, n={n}")
    return Sbp1D(p, n, rule.nodes, H, Q, S, E)


def sbp_vandermonde(op: Sbp1D) -> Vandermonde1D:
    """Orthonormal Legendre Vandermonde matching the operator's rule."""
    return legendre_vandermonde(op.p, op.nodes, op.H)


def derivative_dissipation_1d(op: Sbp1D, s: int | None = None, A: np.ndarray | None = None) -> np.ndarray:
    """Derivative-based dissipation (D^s)^T H A D^s with s = p+1.

    D^s is the s-fold product of the first-derivative operator.  The
    result is symmetric positive semi-definite and annihilates nodal
    polynomials of degree <= p.  For n < s+1 the operator is identically
    zero; this is reported as a TrivialDissipationWarning.
    """
    if s is None:
        s = op.p + 1
    if s != op.p + 1:
        raise ValueError(f"dissipation order must be p+1={op.p + 1}, got {s}")
    if A is None:
        A = np.ones(op.n)
    A = np.asarray(A, dtype=float)
    if np.any(A < 0):
        raise ValueError("dissipation scaling must be nonnegative")
    if op.n < s + 1:
        warnings.warn(
            f"n={op.n} < s+1={s + 1}: derivative dissipation is the trivial operator",
            TrivialDissipationWarning,
        )
    Ds = np.linalg.matrix_power(op.D, s)
    Dis = Ds.T @ (op.H[:, None] * A[:, None] * Ds)
    return 0.5 * (Dis + Dis.T)


def lps_dissipation_1d(op: Sbp1D, V: Vandermonde1D | None = None, A: np.ndarray | None = None) -> np.ndarray:
    """Projection-based dissipation M = P^T H A P with P = I - L L^T H."""
    if V is None:
        V = sbp_vandermonde(op)
    if A is None:
        A = np.ones(op.n)
    A = np.asarray(A, dtype=float)
    P = np.eye(op.n) - V.L @ (V.L.T * op.H[None, :])
    M = P.T @ (op.H[:, None] * A[:, None] * P)
    return 0.5 * (M + M.T)


def rank_one_equivalence(Dis: np.ndarray, M: np.ndarray) -> tuple[np.ndarray, float, float, float]:
    """Rank-one decompositions Dis = lam_D m m^T, M = lam_P m m^T.

    Valid for operators built on n = p+2 LGL nodes with A = I, where both
    matrices are symmetric rank one with a common unit eigenvector m
    (fixed here to have a nonnegative first entry).  Returns
    (m, lam_D, lam_P, alpha) with alpha = lam_D / lam_P.
    """
    evD, vecD = np.linalg.eigh(Dis)
    evP, vecP = np.linalg.eigh(M)
    for name, ev in (("derivative", evD), ("projection", evP)):
        if ev[-1] <= 0:
            raise ValueError(f"{name} dissipation matrix is zero")
        if np.any(np.abs(ev[:-1]) > 1e-9 * ev[-1]):
            raise ValueError(
                f"{name} dissipation matrix is not rank one "
                f"(second eigenvalue {ev[-2]:.2e} vs {ev[-1]:.2e})"
            )
    mD = vecD[:, -1] * np.sign(vecD[0, -1]) if vecD[0, -1] != 0 else vecD[:, -1]
    mP = vecP[:, -1] * np.sign(vecP[0, -1]) if vecP[0, -1] != 0 else vecP[:, -1]
    align = abs(float(mD @ mP))
    if abs(align - 1.0) > 1e-10:
        raise ValueError(f"rank-one eigenvectors disagree (|cos| = {align:.12f})")
    lam_D = float(evD[-1])
    lam_P = float(evP[-1])
    return mD, lam_D, lam_P, lam_D / lam_P
