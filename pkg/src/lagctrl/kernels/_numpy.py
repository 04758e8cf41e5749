"""Pure numpy/scipy implementations of the time-stepping hot loops.

Same call signatures as the compiled core in ``_core.pyx``; selected as a
fallback when the extension is unavailable.  Status codes returned by the
runs: 0 ok, 1 CFL violation, 2 non-finite field, 3 vacuum approach.
"""

import numpy as np
from scipy.linalg import solve_banded

STATUS_OK = 0
STATUS_CFL = 1
STATUS_NONFINITE = 2
STATUS_VACUUM = 3


def linear_run(f_mid, g_mid, dt, dx, c, cfl):
    """March the linearized system; returns histories and per-step norms.

    f_mid: (steps, M+1) node forcing at half-step times.
    g_mid: (steps, M) cell source at half-step times.
    Returns (v_hist, eta_final, eta_l2, v_l2, vx_l2sq, eta_int, status, bad_step).
    """
    steps, nodes = f_mid.shape
    M = nodes - 1
    c2 = c * c
    eta = np.zeros(M)
    v = np.zeros(M + 1)
    v_hist = np.zeros((steps + 1, M + 1))
    eta_l2 = np.zeros(steps + 1)
    v_l2 = np.zeros(steps + 1)
    vx_l2sq = np.zeros(steps + 1)
    eta_int = np.zeros(steps + 1)

    r = dt / (dx * dx)
    ab = np.zeros((3, M - 1))
    ab[0, 1:] = -r
    ab[1, :] = 1.0 + 2.0 * r
    ab[2, :-1] = -r

    status, bad_step = STATUS_OK, -1
    for m in range(steps):
        eta = eta - (dt / dx) * (v[1:] - v[:-1]) + dt * g_mid[m]
        rhs = v[1:-1] - (dt * c2 / dx) * (eta[1:] - eta[:-1]) + dt * f_mid[m, 1:-1]
        v = np.zeros(M + 1)
        v[1:-1] = solve_banded((1, 1), ab, rhs, check_finite=False)
        v_hist[m + 1] = v

        if not (np.all(np.isfinite(v)) and np.all(np.isfinite(eta))):
            status, bad_step = STATUS_NONFINITE, m + 1
            break
        vmax = np.max(np.abs(v))
        if dt > cfl * dx / (vmax + c):
            status, bad_step = STATUS_CFL, m + 1
            break
        eta_l2[m + 1] = np.sqrt(dx * np.sum(eta * eta))
        v_l2[m + 1] = np.sqrt(dx * np.sum(v * v))
        dvdx = (v[1:] - v[:-1]) / dx
        vx_l2sq[m + 1] = dx * np.sum(dvdx * dvdx)
        eta_int[m + 1] = dx * np.sum(eta)
    return v_hist, eta, eta_l2, v_l2, vx_l2sq, eta_int, status, bad_step


def nonlinear_run(f_mid, dt, dx, c, gamma, cfl, rho_floor):
    """March the full system from the rest state (rho, u) = (1, 0).

    Mass by conservative upwind flux, momentum semi-implicit with the
    viscosity solved by a tridiagonal system.  Returns
    (u_hist, rho, mass, rho_min, state_h1, ux_h1sq, status, bad_step).
    """
    steps, nodes = f_mid.shape
    M = nodes - 1
    c2 = c * c
    rho = np.ones(M)
    u = np.zeros(M + 1)
    u_hist = np.zeros((steps + 1, M + 1))
    mass = np.zeros(steps + 1)
    rho_min = np.zeros(steps + 1)
    state_h1 = np.zeros(steps + 1)
    ux_h1sq = np.zeros(steps + 1)
    mass[0] = dx * M
    rho_min[0] = 1.0

    status, bad_step = STATUS_OK, -1
    for m in range(steps):
        uj = u[1:-1]
        flux = np.zeros(M + 1)
        flux[1:-1] = uj * np.where(uj > 0.0, rho[:-1], rho[1:])
        rho = rho - (dt / dx) * (flux[1:] - flux[:-1])
        rmin = np.min(rho)
        rho_min[m + 1] = rmin
        if not np.all(np.isfinite(rho)):
            status, bad_step = STATUS_NONFINITE, m + 1
            break
        if rmin < rho_floor:
            status, bad_step = STATUS_VACUUM, m + 1
            break

        p = (c2 / gamma) * rho**gamma
        rbar = 0.5 * (rho[:-1] + rho[1:])
        dudx_up = np.where(uj > 0.0, (u[1:-1] - u[:-2]) / dx, (u[2:] - u[1:-1]) / dx)
        rhs = u[1:-1] + dt * (
            -uj * dudx_up - (p[1:] - p[:-1]) / (dx * rbar) + f_mid[m, 1:-1] / rbar
        )
        r = dt / (rbar * dx * dx)
        ab = np.zeros((3, M - 1))
        ab[0, 1:] = -r[:-1]
        ab[1, :] = 1.0 + 2.0 * r
        ab[2, :-1] = -r[1:]
        u = np.zeros(M + 1)
        u[1:-1] = solve_banded((1, 1), ab, rhs, check_finite=False)
        u_hist[m + 1] = u

        if not np.all(np.isfinite(u)):
            status, bad_step = STATUS_NONFINITE, m + 1
            break
        umax = np.max(np.abs(u))
        if dt > cfl * dx / (umax + c):
            status, bad_step = STATUS_CFL, m + 1
            break
        mass[m + 1] = dx * np.sum(rho)
        drho = (rho[1:] - rho[:-1]) / dx
        e = rho - 1.0
        du = (u[1:] - u[:-1]) / dx
        d2u = (u[2:] - 2.0 * u[1:-1] + u[:-2]) / (dx * dx)
        state_h1[m + 1] = np.sqrt(dx * np.sum(e * e) + dx * np.sum(drho * drho)) + np.sqrt(
            dx * np.sum(u * u) + dx * np.sum(du * du)
        )
        ux_h1sq[m + 1] = dx * np.sum(du * du) + dx * np.sum(d2u * d2u)
    return u_hist, rho, mass, rho_min, state_h1, ux_h1sq, status, bad_step


def _hermite(u_row, d_row, dx, M, y):
    """Monotone-cubic evaluation of one snapshot at positions y."""
    yc = np.clip(y, 0.0, M * dx)
    k = np.minimum((yc / dx).astype(np.int64), M - 1)
    s = yc / dx - k
    s2 = s * s
    s3 = s2 * s
    h00 = 2.0 * s3 - 3.0 * s2 + 1.0
    h10 = s3 - 2.0 * s2 + s
    h01 = -2.0 * s3 + 3.0 * s2
    h11 = s3 - s2
    return (
        h00 * u_row[k]
        + h10 * dx * d_row[k]
        + h01 * u_row[k + 1]
        + h11 * dx * d_row[k + 1]
    )


def advect_rk4(u_hist, d_hist, x0, dt, dx, substeps):
    """Trace particles through the stored velocity history.

    Classical RK4 with ``substeps`` sub-intervals per snapshot interval;
    velocity is monotone-cubic in space (derivative table d_hist) and linear
    in time between consecutive snapshots.  Returns (steps+1, len(x0))
    positions recorded at snapshot times.
    """
    steps = u_hist.shape[0] - 1
    M = u_hist.shape[1] - 1
    x0 = np.asarray(x0, dtype=float)
    pos = np.zeros((steps + 1, x0.size))
    y = x0.copy()
    pos[0] = y
    h = dt / substeps
    for m in range(steps):
        u0, u1 = u_hist[m], u_hist[m + 1]
        d0, d1 = d_hist[m], d_hist[m + 1]

        def vel(theta, q):
            a = _hermite(u0, d0, dx, M, q)
            b = _hermite(u1, d1, dx, M, q)
            return (1.0 - theta) * a + theta * b

        for s in range(substeps):
            t0 = s / substeps
            k1 = vel(t0, y)
            k2 = vel(t0 + 0.5 / substeps, y + 0.5 * h * k1)
            k3 = vel(t0 + 0.5 / substeps, y + 0.5 * h * k2)
            k4 = vel(t0 + 1.0 / substeps, y + h * k3)
            y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        pos[m + 1] = y
    return pos
