"""Pure-Python kernels. Mirror of ``_core.pyx`` operation for operation; the two
must produce bit-identical results (same evaluation order, no FMA)."""


def run_ticks(coef, x0, x1, u_cmd, sat, dz, dz_on, y_out, u_out):
    """Step the plant once per entry of ``u_cmd``.

    ``y_out[n]`` is the output read *before* the n-th step, ``u_out[n]`` the input
    after saturation/dead zone. Returns the final state.
    """
    a00, a01, a10, a11, b0, b1, c0, c1 = (float(v) for v in coef)
    ys = []
    us = []
    for u in u_cmd.tolist():
        if u > sat:
            u = sat
        elif u < -sat:
            u = -sat
        if dz_on and abs(u) < dz:
            u = 0.0
        ys.append(c0 * x0 + c1 * x1)
        us.append(u)
        n0 = a00 * x0 + a01 * x1 + b0 * u
        n1 = a10 * x0 + a11 * x1 + b1 * u
        x0 = n0
        x1 = n1
    y_out[:] = ys
    u_out[:] = us
    return x0, x1


def cascade(dependent, H, N, L, model, x0, x1, u_cur, e_cur, u_pd_prev, last_action,
            refs, kpi, pi_coef, T, kpd1, td1, ticks1, kpd2, td2, ticks2,
            u_out, x_out, y_out, last_out):
    """Chained one-period-ahead predictions, ``H`` iterations.

    Iteration i (0-based) builds the PD actions of period k+i from the PI value
    of that period, propagates the model over the period and predicts the PI
    value of period k+i+1 into ``u_out[i]``.
    """
    a00, a01, a10, a11, b0, b1, c0, c1 = (float(v) for v in model)
    refs = refs.tolist()
    u_pi = u_cur
    u_prev = u_pd_prev
    e_prev = e_cur
    prev_action = last_action
    for i in range(H):
        if i == 0:
            kpd, td, ticks = kpd1, td1, ticks1
        else:
            kpd, td, ticks = kpd2, td2, ticks2
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
