"""Compiled time loops for the uniform and adaptive solvers.

Both loops share the stage arithmetic so that an adaptive run on a full tree
reproduces the uniform run bit for bit. Status codes returned:
0 reached t_end, 1 trace buffer full, 2 non-finite state, 3 step budget
exhausted, 4 grading violation, 5 structural error in the tree update.
"""

import math

from ._kernels import kernel
from .fv_kernel import fv_divergence
from .mr_tree import grading_violations, mr_divergence, mr_update
from .time_integrator import next_step

DONE, TRACE_FULL, NONFINITE, BUDGET, GRADING, STRUCTURE = 0, 1, 2, 3, 4, 5

# ctrl = [dt, delta_desired, s0, s_min, p, dt_max]


@kernel
def _scale(h, D, k, n):
    for i in range(n):
        k[i] = h * D[i]


@kernel
def _stage2(u, k1, out, n):
    for i in range(n):
        out[i] = u[i] + k1[i]


@kernel
def _stage3(u, k1, k2, out, n):
    for i in range(n):
        out[i] = u[i] + 0.25 * k1[i] + 0.25 * k2[i]


@kernel
def _finish(u, k1, k2, k3, n, rkf):
    """u <- third-order candidate; returns (delta_old, sum of new values)."""
    delta = 0.0
    total = 0.0
    for i in range(n):
        hat = u[i] + k1[i] / 6.0 + k2[i] / 6.0 + 2.0 * k3[i] / 3.0
        if rkf:
            check = u[i] + 0.5 * k1[i] + 0.5 * k2[i]
            e = abs(hat - check)
            if e > delta:
                delta = e
        u[i] = hat
        total += hat
    return delta, total


@kernel
def _plan(t, t_end, dt):
    """Step length and whether it was shortened to land on t_end."""
    h = dt
    if t + h >= t_end - 1e-10 * h:
        return t_end - t, True
    return h, False


@kernel
def _control(ctrl, h, delta, t):
    dt = next_step(h, delta, ctrl[1], t, ctrl[4], ctrl[2], ctrl[3])
    if dt > ctrl[5]:
        dt = ctrl[5]
    ctrl[0] = dt


@kernel
def fv_advance(u, t, t_end, ctrl, rkf, dx, theta, kd, periodic, light_face, lp,
               s, F, Acell, D, k1, k2, k3, ut,
               tr_step, tr_t, tr_dt, tr_delta, tr_n, ntr, stride, step0, max_steps):
    n = u.size
    steps = 0
    while t < t_end:
        if steps >= max_steps:
            return t, steps, ntr, BUDGET
        h, last = _plan(t, t_end, ctrl[0])
        if h <= 0.0:
            break
        fv_divergence(u, t, dx, theta, kd, periodic, light_face, lp, s, F, Acell, D)
        _scale(h, D, k1, n)
        _stage2(u, k1, ut, n)
        fv_divergence(ut, t + h, dx, theta, kd, periodic, light_face, lp, s, F, Acell, D)
        _scale(h, D, k2, n)
        _stage3(u, k1, k2, ut, n)
        fv_divergence(ut, t + 0.5 * h, dx, theta, kd, periodic, light_face, lp, s, F, Acell, D)
        _scale(h, D, k3, n)
        delta, total = _finish(u, k1, k2, k3, n, rkf)
        if not (math.isfinite(total) and math.isfinite(delta)):
            return t, steps, ntr, NONFINITE
        t_old = t
        t = t_end if last else t + h
        if rkf and not last:
            _control(ctrl, h, delta, t_old)
        steps += 1
        if (step0 + steps) % stride == 0:
            tr_step[ntr] = step0 + steps
            tr_t[ntr] = t
            tr_dt[ntr] = h
            tr_delta[ntr] = delta
            tr_n[ntr] = n
            ntr += 1
            if ntr == tr_t.size:
                return t, steps, ntr, TRACE_FULL
    return t, steps, ntr, DONE


@kernel
def mr_advance(T, t, t_end, ctrl, rkf, kd, theta, periodic, has_light, lp, eps, L, length,
               light_pos, check_grading, w, F, D, k1, k2, k3, ut,
               tr_step, tr_t, tr_dt, tr_delta, tr_n, ntr, stride, step0, max_steps):
    status = T[0]
    val = T[1]
    leaves = T[7]
    meta = T[16]
    lev = T[17]
    n = meta[0]
    for i in range(n):
        w[i] = val[leaves[i]]
    steps = 0
    while t < t_end:
        if steps >= max_steps:
            return t, steps, ntr, BUDGET
        h, last = _plan(t, t_end, ctrl[0])
        if h <= 0.0:
            break
        mr_divergence(T, w, t, kd, theta, periodic, has_light, lp, F, D)
        _scale(h, D, k1, n)
        _stage2(w, k1, ut, n)
        mr_divergence(T, ut, t + h, kd, theta, periodic, has_light, lp, F, D)
        _scale(h, D, k2, n)
        _stage3(w, k1, k2, ut, n)
        mr_divergence(T, ut, t + 0.5 * h, kd, theta, periodic, has_light, lp, F, D)
        _scale(h, D, k3, n)
        delta, total = _finish(w, k1, k2, k3, n, rkf)
        if not (math.isfinite(total) and math.isfinite(delta)):
            return t, steps, ntr, NONFINITE
        t_old = t
        t = t_end if last else t + h
        if rkf and not last:
            _control(ctrl, h, delta, t_old)
        if mr_update(T, w, eps, L, periodic, length, light_pos) != 0:
            return t, steps, ntr, STRUCTURE
        if check_grading and grading_violations(status, lev, L, periodic) != 0:
            return t, steps, ntr, GRADING
        n = meta[0]
        for i in range(n):
            w[i] = val[leaves[i]]
        steps += 1
        if (step0 + steps) % stride == 0:
            tr_step[ntr] = step0 + steps
            tr_t[ntr] = t
            tr_dt[ntr] = h
            tr_delta[ntr] = delta
            tr_n[ntr] = n
            ntr += 1
            if ntr == tr_t.size:
                return t, steps, ntr, TRACE_FULL
    return t, steps, ntr, DONE
