"""Euler state transformations, entropy machinery, and numerical fluxes.

All functions are vectorized over leading axes; the conservative state
U = (rho, rho u, rho v, e) sits on the last axis.
"""

import numpy as np

GAMMA = 1.4


class InadmissibleState(ValueError):
    """Density or pressure lost positivity."""


def primitive(U):
    rho = U[..., 0]
    u = U[..., 1] / rho
    v = U[..., 2] / rho
    p = (GAMMA - 1.0) * (U[..., 3] - 0.5 * rho * (u * u + v * v))
    return rho, u, v, p


def conservative(rho, u, v, p):
    rho = np.asarray(rho, dtype=float)
    e = p / (GAMMA - 1.0) + 0.5 * rho * (u * u + v * v)
    return np.stack([rho, rho * u, rho * v, e], axis=-1)


def pressure(U):
    return primitive(U)[3]


def sound_speed(U):
    rho, _, _, p = primitive(U)
    return np.sqrt(GAMMA * p / rho)


def check_admissible(U, context: str = "") -> None:
    rho = U[..., 0]
    p = pressure(U)
    bad = ~(np.isfinite(rho) & np.isfinite(p) & (rho > 0) & (p > 0))
    if np.any(bad):
        idx = np.argwhere(bad)[0]
        raise InadmissibleState(
            f"inadmissible state{(' in ' + context) if context else ''} at index "
            f"{tuple(idx)}: rho={np.asarray(rho)[tuple(idx)]:.4g}, "
            f"p={np.asarray(p)[tuple(idx)]:.4g}"
        )


def thermo_entropy(U):
    """s = ln(p / rho^gamma)."""
    rho, _, _, p = primitive(U)
    return np.log(p) - GAMMA * np.log(rho)


def entropy_vars(U):
    """W = dS/dU for the mathematical entropy S = -rho s / (gamma - 1)."""
    rho, u, v, p = primitive(U)
    s = np.log(p) - GAMMA * np.log(rho)
    w0 = (GAMMA - s) / (GAMMA - 1.0) - 0.5 * rho * (u * u + v * v) / p
    return np.stack([w0, rho * u / p, rho * v / p, -rho / p], axis=-1)


def entropy_and_potentials(U):
    """Mathematical entropy and the potential fluxes (psi_x, psi_y)."""
    rho = U[..., 0]
    s = thermo_entropy(U)
    S = -rho * s / (GAMMA - 1.0)
    return S, U[..., 1].copy(), U[..., 2].copy()


def state_from_entropy_vars(W):
    """Invert W -> U (used by tests to probe the dU/dW Jacobian)."""
    w1, w2, w3, w4 = W[..., 0], W[..., 1], W[..., 2], W[..., 3]
    u = -w2 / w4
    v = -w3 / w4
    k = 0.5 * (u * u + v * v)
    s = GAMMA - (GAMMA - 1.0) * (w1 - w4 * k)
    rho = (-w4 * np.exp(s)) ** (-1.0 / (GAMMA - 1.0))
    p = rho / (-w4)
    return conservative(rho, u, v, p)


def dudw(U):
    """Symmetrizer dU/dW (inverse entropy Hessian); SPD for admissible U."""
    rho, u, v, p = primitive(U)
    e = U[..., 3]
    h = (e + p) / rho
    a2 = GAMMA * p / rho
    A = np.empty(U.shape[:-1] + (4, 4))
    A[..., 0, 0] = rho
    A[..., 0, 1] = rho * u
    A[..., 0, 2] = rho * v
    A[..., 0, 3] = e
    A[..., 1, 1] = rho * u * u + p
    A[..., 1, 2] = rho * u * v
    A[..., 1, 3] = (e + p) * u
    A[..., 2, 2] = rho * v * v + p
    A[..., 2, 3] = (e + p) * v
    A[..., 3, 3] = rho * h * h - a2 * p / (GAMMA - 1.0)
    A[..., 1, 0] = A[..., 0, 1]
    A[..., 2, 0] = A[..., 0, 2]
    A[..., 2, 1] = A[..., 1, 2]
    A[..., 3, 0] = A[..., 0, 3]
    A[..., 3, 1] = A[..., 1, 3]
    A[..., 3, 2] = A[..., 2, 3]
    return A


def euler_flux(U, direction: int):
    rho, u, v, p = primitive(U)
    vel = u if direction == 0 else v
    F = np.empty_like(U)
    F[..., 0] = rho * vel
    F[..., 1] = rho * u * vel + (p if direction == 0 else 0.0)
    F[..., 2] = rho * v * vel + (0.0 if direction == 0 else p)
    F[..., 3] = (U[..., 3] + p) * vel
    return F


def log_mean(a, b):
    """Logarithmic mean with the usual series guard near a = b."""
    zeta = a / b
    f = (zeta - 1.0) / (zeta + 1.0)
    u = f * f
    small = u < 1e-4
    series = 1.0 + u / 3.0 + u * u / 5.0 + u * u * u / 7.0
    with np.errstate(divide="ignore", invalid="ignore"):
        exact = np.where(small, 1.0, np.log(zeta) / np.where(small, 1.0, 2.0 * f))
    F = np.where(small, series, exact)
    return (a + b) / (2.0 * F)


def ec_flux_ismail_roe(UL, UR):
    """Entropy-conservative two-point flux (both directions at once)."""
    rhoL, uL, vL, pL = primitive(UL)
    rhoR, uR, vR, pR = primitive(UR)
    z1L, z1R = np.sqrt(rhoL / pL), np.sqrt(rhoR / pR)
    z4L, z4R = np.sqrt(rhoL * pL), np.sqrt(rhoR * pR)
    z1 = 0.5 * (z1L + z1R)
    z2 = 0.5 * (z1L * uL + z1R * uR)
    z3 = 0.5 * (z1L * vL + z1R * vR)
    z4 = 0.5 * (z4L + z4R)
    z1ln = log_mean(z1L, z1R)
    z4ln = log_mean(z4L, z4R)
    rho_h = z1 * z4ln
    u_h = z2 / z1
    v_h = z3 / z1
    p1 = z4 / z1
    p2 = (GAMMA + 1.0) / (2.0 * GAMMA) * z4ln / z1ln + (GAMMA - 1.0) / (2.0 * GAMMA) * z4 / z1
    a2 = GAMMA * p2 / rho_h
    h_h = a2 / (GAMMA - 1.0) + 0.5 * (u_h * u_h + v_h * v_h)
    fx = np.stack([rho_h * u_h, rho_h * u_h * u_h + p1, rho_h * u_h * v_h, rho_h * u_h * h_h], axis=-1)
    fy = np.stack([rho_h * v_h, rho_h * u_h * v_h, rho_h * v_h * v_h + p1, rho_h * v_h * h_h], axis=-1)
    return fx, fy


def ec_flux_chandrashekar(UL, UR):
    """Kinetic-energy-preserving entropy-conservative flux."""
    rhoL, uL, vL, pL = primitive(UL)
    rhoR, uR, vR, pR = primitive(UR)
    betaL = 0.5 * rhoL / pL
    betaR = 0.5 * rhoR / pR
    rho_ln = log_mean(rhoL, rhoR)
    beta_ln = log_mean(betaL, betaR)
    rho_a = 0.5 * (rhoL + rhoR)
    beta_a = 0.5 * (betaL + betaR)
    u_a = 0.5 * (uL + uR)
    v_a = 0.5 * (vL + vR)
    q2_a = 0.5 * (uL * uL + vL * vL + uR * uR + vR * vR)
    p_h = 0.5 * rho_a / beta_a
    bracket = 0.5 / ((GAMMA - 1.0) * beta_ln) - 0.5 * q2_a
    fx0 = rho_ln * u_a
    fx1 = u_a * fx0 + p_h
    fx2 = v_a * fx0
    fx3 = bracket * fx0 + u_a * fx1 + v_a * fx2
    fy0 = rho_ln * v_a
    fy1 = u_a * fy0
    fy2 = v_a * fy0 + p_h
    fy3 = bracket * fy0 + u_a * fy1 + v_a * fy2
    fx = np.stack([fx0, fx1, fx2, fx3], axis=-1)
    fy = np.stack([fy0, fy1, fy2, fy3], axis=-1)
    return fx, fy


TWO_POINT_FLUXES = {
    "ismail_roe": ec_flux_ismail_roe,
    "chandrashekar": ec_flux_chandrashekar,
}


def wave_speeds_nodal(U, jgxi, jgeta):
    """Reference-space flux-Jacobian spectral radii per node.

    jgxi/jgeta hold the contravariant vectors J grad(xi), J grad(eta) on
    the trailing axis.
    """
    rho, u, v, p = primitive(U)
    a = np.sqrt(GAMMA * p / rho)
    sx = np.abs(jgxi[..., 0] * u + jgxi[..., 1] * v) + a * np.sqrt(
        jgxi[..., 0] ** 2 + jgxi[..., 1] ** 2
    )
    se = np.abs(jgeta[..., 0] * u + jgeta[..., 1] * v) + a * np.sqrt(
        jgeta[..., 0] ** 2 + jgeta[..., 1] ** 2
    )
    return sx, se


def normal_flux(U, Nx, Ny):
    """Scaled normal flux Nx Fx + Ny Fy."""
    return Nx[..., None] * euler_flux(U, 0) + Ny[..., None] * euler_flux(U, 1)


def roe_flux(U_in, U_out, Nx, Ny):
    """Roe-type upwind flux through a face with scaled normal (Nx, Ny).

    For supersonic normal velocity all waves travel one way and the flux
    reduces to the pure upwind value.
    """
    nrm = np.sqrt(Nx * Nx + Ny * Ny)
    nx, ny = Nx / nrm, Ny / nrm
    rhoL, uL, vL, pL = primitive(U_in)
    rhoR, uR, vR, pR = primitive(U_out)
    hL = (U_in[..., 3] + pL) / rhoL
    hR = (U_out[..., 3] + pR) / rhoR
    sL, sR = np.sqrt(rhoL), np.sqrt(rhoR)
    wsum = sL + sR
    u_t = (sL * uL + sR * uR) / wsum
    v_t = (sL * vL + sR * vR) / wsum
    h_t = (sL * hL + sR * hR) / wsum
    q2 = 0.5 * (u_t * u_t + v_t * v_t)
    a2 = (GAMMA - 1.0) * (h_t - q2)
    a_t = np.sqrt(a2)
    rho_t = sL * sR
    un = nx * u_t + ny * v_t

    d_rho = rhoR - rhoL
    d_p = pR - pL
    d_u = uR - uL
    d_v = vR - vL
    d_un = nx * d_u + ny * d_v
    d_ut = -ny * d_u + nx * d_v

    alpha1 = (d_p - rho_t * a_t * d_un) / (2.0 * a2)
    alpha2 = d_rho - d_p / a2
    alpha3 = (d_p + rho_t * a_t * d_un) / (2.0 * a2)
    alpha4 = rho_t * d_ut

    lam1 = np.abs(un - a_t)
    lam2 = np.abs(un)
    lam3 = np.abs(un + a_t)

    def wave(alpha, lam, r):
        return (alpha * lam)[..., None] * r

    r1 = np.stack([np.ones_like(un), u_t - a_t * nx, v_t - a_t * ny, h_t - a_t * un], axis=-1)
    r2 = np.stack([np.ones_like(un), u_t, v_t, q2], axis=-1)
    r3 = np.stack([np.ones_like(un), u_t + a_t * nx, v_t + a_t * ny, h_t + a_t * un], axis=-1)
    r4 = np.stack([np.zeros_like(un), -ny, nx, -u_t * ny + v_t * nx], axis=-1)

    diss = wave(alpha1, lam1, r1) + wave(alpha2, lam2, r2) + wave(alpha3, lam3, r3) + wave(alpha4, lam2, r4)
    central = 0.5 * (normal_flux(U_in, nx, ny) + normal_flux(U_out, nx, ny))
    return nrm[..., None] * (central - 0.5 * diss)


def slip_wall_flux(U, Nx, Ny):
    """Pressure-only wall flux for the inviscid slip condition."""
    p = pressure(U)
    zero = np.zeros_like(p)
    return np.stack([zero, p * Nx, p * Ny, zero], axis=-1)
