# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled time-stepping core; same contracts as ``_numpy``.

Status codes: 0 ok, 1 CFL violation, 2 non-finite field, 3 vacuum approach.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport fabs, isfinite, pow, sqrt

cnp.import_array()


cdef inline double _dmax(double a, double b) nogil:
    return a if a > b else b


def linear_run(double[:, ::1] f_mid, double[:, ::1] g_mid, double dt, double dx,
               double c, double cfl):
    cdef Py_ssize_t steps = f_mid.shape[0]
    cdef Py_ssize_t M = f_mid.shape[1] - 1
    cdef Py_ssize_t K = M - 1
    cdef double c2 = c * c
    cdef double r = dt / (dx * dx)

    eta_np = np.zeros(M)
    v_np = np.zeros(M + 1)
    v_hist_np = np.zeros((steps + 1, M + 1))
    eta_l2_np = np.zeros(steps + 1)
    v_l2_np = np.zeros(steps + 1)
    vx_l2sq_np = np.zeros(steps + 1)
    eta_int_np = np.zeros(steps + 1)
    w_np = np.empty(K)
    g_np = np.empty(K)
    y_np = np.empty(K)

    cdef double[::1] eta = eta_np
    cdef double[::1] v = v_np
    cdef double[:, ::1] v_hist = v_hist_np
    cdef double[::1] eta_l2 = eta_l2_np
    cdef double[::1] v_l2 = v_l2_np
    cdef double[::1] vx_l2sq = vx_l2sq_np
    cdef double[::1] eta_int = eta_int_np
    cdef double[::1] w = w_np
    cdef double[::1] gam = g_np
    cdef double[::1] y = y_np

    cdef int status = 0
    cdef Py_ssize_t bad_step = -1
    cdef Py_ssize_t m, j
    cdef double b = 1.0 + 2.0 * r
    cdef double rhs, vmax, acc, acc2, dv, ok

    # constant-coefficient elimination factors, computed once
    w[0] = b
    gam[0] = -r / w[0]
    for j in range(1, K):
        w[j] = b + r * gam[j - 1]
        gam[j] = -r / w[j]

    with nogil:
        for m in range(steps):
            for j in range(M):
                eta[j] = eta[j] - (dt / dx) * (v[j + 1] - v[j]) + dt * g_mid[m, j]
            # forward sweep
            rhs = v[1] - (dt * c2 / dx) * (eta[1] - eta[0]) + dt * f_mid[m, 1]
            y[0] = rhs / w[0]
            for j in range(1, K):
                rhs = v[j + 1] - (dt * c2 / dx) * (eta[j + 1] - eta[j]) + dt * f_mid[m, j + 1]
                y[j] = (rhs + r * y[j - 1]) / w[j]
            # back substitution
            v[M - 1] = y[K - 1]
            for j in range(K - 2, -1, -1):
                v[j + 1] = y[j] - gam[j] * v[j + 2]
            v[0] = 0.0
            v[M] = 0.0
            for j in range(M + 1):
                v_hist[m + 1, j] = v[j]

            ok = 0.0
            vmax = 0.0
            acc = 0.0
            for j in range(M + 1):
                ok += v[j]
                vmax = _dmax(vmax, fabs(v[j]))
            for j in range(M):
                ok += eta[j]
            if not isfinite(ok):
                status = 2
                bad_step = m + 1
                break
            if dt > cfl * dx / (vmax + c):
                status = 1
                bad_step = m + 1
                break
            acc = 0.0
            acc2 = 0.0
            for j in range(M):
                acc += eta[j] * eta[j]
                acc2 += eta[j]
            eta_l2[m + 1] = sqrt(dx * acc)
            eta_int[m + 1] = dx * acc2
            acc = 0.0
            acc2 = 0.0
            for j in range(M + 1):
                acc += v[j] * v[j]
            for j in range(M):
                dv = (v[j + 1] - v[j]) / dx
                acc2 += dv * dv
            v_l2[m + 1] = sqrt(dx * acc)
            vx_l2sq[m + 1] = dx * acc2

    return v_hist_np, eta_np, eta_l2_np, v_l2_np, vx_l2sq_np, eta_int_np, status, bad_step


def nonlinear_run(double[:, ::1] f_mid, double dt, double dx, double c,
                  double gamma, double cfl, double rho_floor):
    cdef Py_ssize_t steps = f_mid.shape[0]
    cdef Py_ssize_t M = f_mid.shape[1] - 1
    cdef Py_ssize_t K = M - 1
    cdef double c2 = c * c

    rho_np = np.ones(M)
    u_np = np.zeros(M + 1)
    u_hist_np = np.zeros((steps + 1, M + 1))
    mass_np = np.zeros(steps + 1)
    rho_min_np = np.zeros(steps + 1)
    state_h1_np = np.zeros(steps + 1)
    ux_h1sq_np = np.zeros(steps + 1)
    p_np = np.empty(M)
    flux_np = np.zeros(M + 1)
    w_np = np.empty(K)
    gam_np = np.empty(K)
    y_np = np.empty(K)
    rbar_np = np.empty(K)
    unew_np = np.zeros(M + 1)

    cdef double[::1] rho = rho_np
    cdef double[::1] u = u_np
    cdef double[:, ::1] u_hist = u_hist_np
    cdef double[::1] mass = mass_np
    cdef double[::1] rho_min = rho_min_np
    cdef double[::1] state_h1 = state_h1_np
    cdef double[::1] ux_h1sq = ux_h1sq_np
    cdef double[::1] p = p_np
    cdef double[::1] flux = flux_np
    cdef double[::1] w = w_np
    cdef double[::1] gam = gam_np
    cdef double[::1] y = y_np
    cdef double[::1] rbar = rbar_np
    cdef double[::1] unew = unew_np

    cdef int status = 0
    cdef Py_ssize_t bad_step = -1
    cdef Py_ssize_t m, j
    cdef double uj, rmin, conv, rhs, rj, umax, ok, acc, acc2, acc3, acc4, d1, d2

    mass[0] = dx * M
    rho_min[0] = 1.0

    with nogil:
        for m in range(steps):
            for j in range(1, M):
                uj = u[j]
                flux[j] = uj * (rho[j - 1] if uj > 0.0 else rho[j])
            rmin = 1e300
            ok = 0.0
            for j in range(M):
                rho[j] = rho[j] - (dt / dx) * (flux[j + 1] - flux[j])
                ok += rho[j]
                if rho[j] < rmin:
                    rmin = rho[j]
            rho_min[m + 1] = rmin
            if not isfinite(ok):
                status = 2
                bad_step = m + 1
                break
            if rmin < rho_floor:
                status = 3
                bad_step = m + 1
                break

            for j in range(M):
                p[j] = (c2 / gamma) * pow(rho[j], gamma)
            # rows j = 1..M-1: semi-implicit momentum update
            for j in range(K):
                rbar[j] = 0.5 * (rho[j] + rho[j + 1])
            # assemble + Thomas in one pass (variable coefficients)
            for j in range(K):
                uj = u[j + 1]
                if uj > 0.0:
                    conv = uj * (u[j + 1] - u[j]) / dx
                else:
                    conv = uj * (u[j + 2] - u[j + 1]) / dx
                rhs = u[j + 1] + dt * (
                    -conv
                    - (p[j + 1] - p[j]) / (dx * rbar[j])
                    + f_mid[m, j + 1] / rbar[j]
                )
                rj = dt / (rbar[j] * dx * dx)
                if j == 0:
                    w[0] = 1.0 + 2.0 * rj
                    gam[0] = -rj / w[0]
                    y[0] = rhs / w[0]
                else:
                    w[j] = (1.0 + 2.0 * rj) + rj * gam[j - 1]
                    gam[j] = -rj / w[j]
                    y[j] = (rhs + rj * y[j - 1]) / w[j]
            unew[M - 1] = y[K - 1]
            for j in range(K - 2, -1, -1):
                unew[j + 1] = y[j] - gam[j] * unew[j + 2]
            unew[0] = 0.0
            unew[M] = 0.0
            for j in range(M + 1):
                u[j] = unew[j]
                u_hist[m + 1, j] = u[j]

            ok = 0.0
            umax = 0.0
            for j in range(M + 1):
                ok += u[j]
                umax = _dmax(umax, fabs(u[j]))
            if not isfinite(ok):
                status = 2
                bad_step = m + 1
                break
            if dt > cfl * dx / (umax + c):
                status = 1
                bad_step = m + 1
                break

            acc = 0.0
            for j in range(M):
                acc += rho[j]
            mass[m + 1] = dx * acc
            acc = 0.0   # ||rho-1||^2
            acc2 = 0.0  # ||d rho||^2
            acc3 = 0.0  # ||u||^2
            acc4 = 0.0  # ||du||^2
            for j in range(M):
                acc += (rho[j] - 1.0) * (rho[j] - 1.0)
            for j in range(K):
                d1 = (rho[j + 1] - rho[j]) / dx
                acc2 += d1 * d1
            for j in range(M + 1):
                acc3 += u[j] * u[j]
            for j in range(M):
                d1 = (u[j + 1] - u[j]) / dx
                acc4 += d1 * d1
            state_h1[m + 1] = sqrt(dx * (acc + acc2)) + sqrt(dx * (acc3 + acc4))
            acc = 0.0
            for j in range(1, M):
                d2 = (u[j + 1] - 2.0 * u[j] + u[j - 1]) / (dx * dx)
                acc += d2 * d2
            ux_h1sq[m + 1] = dx * acc4 + dx * acc

    return u_hist_np, rho_np, mass_np, rho_min_np, state_h1_np, ux_h1sq_np, status, bad_step


cdef inline double _hermite(double[:, ::1] hist, double[:, ::1] dhist,
                            Py_ssize_t row, double dx, Py_ssize_t M, double y) nogil:
    cdef double top = M * dx
    cdef double yc = y
    cdef Py_ssize_t k
    cdef double s, s2, s3, h00, h10, h01, h11
    if yc < 0.0:
        yc = 0.0
    elif yc > top:
        yc = top
    k = <Py_ssize_t>(yc / dx)
    if k > M - 1:
        k = M - 1
    s = yc / dx - k
    s2 = s * s
    s3 = s2 * s
    h00 = 2.0 * s3 - 3.0 * s2 + 1.0
    h10 = s3 - 2.0 * s2 + s
    h01 = -2.0 * s3 + 3.0 * s2
    h11 = s3 - s2
    return (h00 * hist[row, k] + h10 * dx * dhist[row, k]
            + h01 * hist[row, k + 1] + h11 * dx * dhist[row, k + 1])


def advect_rk4(double[:, ::1] u_hist, double[:, ::1] d_hist, x0,
               double dt, double dx, int substeps):
    cdef Py_ssize_t steps = u_hist.shape[0] - 1
    cdef Py_ssize_t M = u_hist.shape[1] - 1
    x0_np = np.ascontiguousarray(np.atleast_1d(np.asarray(x0, dtype=np.float64)))
    cdef Py_ssize_t P = x0_np.shape[0]
    pos_np = np.zeros((steps + 1, P))
    cdef double[:, ::1] pos = pos_np
    cdef double[::1] seeds = x0_np
    cdef double h = dt / substeps
    cdef Py_ssize_t m, p, s
    cdef double y, t0, th, a, b, k1, k2, k3, k4

    with nogil:
        for p in range(P):
            y = seeds[p]
            pos[0, p] = y
            for m in range(steps):
                for s in range(substeps):
                    t0 = (<double>s) / substeps
                    th = t0
                    a = _hermite(u_hist, d_hist, m, dx, M, y)
                    b = _hermite(u_hist, d_hist, m + 1, dx, M, y)
                    k1 = (1.0 - th) * a + th * b
                    th = t0 + 0.5 / substeps
                    a = _hermite(u_hist, d_hist, m, dx, M, y + 0.5 * h * k1)
                    b = _hermite(u_hist, d_hist, m + 1, dx, M, y + 0.5 * h * k1)
                    k2 = (1.0 - th) * a + th * b
                    a = _hermite(u_hist, d_hist, m, dx, M, y + 0.5 * h * k2)
                    b = _hermite(u_hist, d_hist, m + 1, dx, M, y + 0.5 * h * k2)
                    k3 = (1.0 - th) * a + th * b
                    th = t0 + 1.0 / substeps
                    a = _hermite(u_hist, d_hist, m, dx, M, y + h * k3)
                    b = _hermite(u_hist, d_hist, m + 1, dx, M, y + h * k3)
                    k4 = (1.0 - th) * a + th * b
                    y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
                pos[m + 1, p] = y
    return pos_np
