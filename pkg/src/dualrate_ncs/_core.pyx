# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels. Operation order mirrors ``_core_py``; build with
-ffp-contract=off so no fused multiply-add changes the rounding."""

from libc.math cimport fabs


def run_ticks(double[::1] coef, double x0, double x1, double[::1] u_cmd,
              double sat, double dz, bint dz_on,
              double[::1] y_out, double[::1] u_out):
    cdef double a00 = coef[0], a01 = coef[1], a10 = coef[2], a11 = coef[3]
    cdef double b0 = coef[4], b1 = coef[5], c0 = coef[6], c1 = coef[7]
    cdef Py_ssize_t n, count = u_cmd.shape[0]
    cdef double u, n0, n1
    for n in range(count):
        u = u_cmd[n]
        if u > sat:
            u = sat
        elif u < -sat:
            u = -sat
        if dz_on and fabs(u) < dz:
            u = 0.0
        y_out[n] = c0 * x0 + c1 * x1
        u_out[n] = u
        n0 = a00 * x0 + a01 * x1 + b0 * u
        n1 = a10 * x0 + a11 * x1 + b1 * u
        x0 = n0
        x1 = n1
    return x0, x1


def cascade(bint dependent, int H, int N, int L, double[::1] model,
            double x0, double x1, double u_cur, double e_cur, double u_pd_prev,
            double last_action, double[::1] refs, double kpi, double pi_coef,
            double T, double kpd1, double td1, int ticks1,
            double kpd2, double td2, int ticks2,
            double[::1] u_out, double[::1] x_out, double[::1] y_out,
            double[::1] last_out):
    cdef double a00 = model[0], a01 = model[1], a10 = model[2], a11 = model[3]
    cdef double b0 = model[4], b1 = model[5], c0 = model[6], c1 = model[7]
    cdef double u_pi = u_cur, u_prev = u_pd_prev, e_prev = e_cur
    cdef double prev_action = last_action
    cdef double kpd, td, c_now, c_old, first, rest, u, n0, n1, y, e, u_next
    cdef int i, j, l, ticks
    for i in range(H):
        if i == 0:
            kpd = kpd1
            td = td1
            ticks = ticks1
        else:
            kpd = kpd2
            td = td2
            ticks = ticks2
        c_now = kpd * (1.0 + td / T)
        c_old = kpd * (td / T)
        first = c_now * u_pi - c_old * u_prev
        rest = c_now * u_pi - c_old * u_pi
        if dependent:
            for l in range(L * N):
                if l < ticks:
                    u = prev_action
                elif l < L:
                    u = first
                else:
                    u = rest
                n0 = a00 * x0 + a01 * x1 + b0 * u
                n1 = a10 * x0 + a11 * x1 + b1 * u
                x0 = n0
                x1 = n1
        else:
            for j in range(N):
                u = first if j == 0 else rest
                n0 = a00 * x0 + a01 * x1 + b0 * u
                n1 = a10 * x0 + a11 * x1 + b1 * u
                x0 = n0
                x1 = n1
        prev_action = first if N == 1 else rest
        y = c0 * x0 + c1 * x1
        e = refs[i + 1] - y
        u_next = u_pi + kpi * e - kpi * pi_coef * e_prev
        u_out[i] = u_next
        x_out[2 * i] = x0
        x_out[2 * i + 1] = x1
        y_out[i] = y
        last_out[i] = prev_action
        u_prev = u_pi
        u_pi = u_next
        e_prev = e
