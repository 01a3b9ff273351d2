"""Compiled scalar kernels shared by the uniform and adaptive solvers.

Model functions reach compiled code as one flat float64 array ``kp``; a
single array keeps hot loops free of per-call reference counting.

    kp[0] b kind, kp[1] A kind, kp[2] u_max, kp[3] u_peak (-1 if b is not
    unimodal), kp[4] b(u_peak), kp[5] u_c
    sedimentation b: kp[6] v_inf, kp[7] K
    polynomial A:    kp[8] degree n, kp[9] offset of the coefficients of A in
                     powers of (u - u_c), highest first, left-padded with
                     zeros to POLY_PAD terms when shorter
    traffic:         kp[6] v_max*Theta, kp[7] v_max, kp[8] u_star, kp[9] k,
                     kp[10] c1, kp[11] P(u_c), kp[12] A(u_star), kp[13] slope
    tables:          kp[40] segments, kp[41] knots, kp[42..47] offsets of
                     edges, segment starts, widths, values (3 x knots),
                     left and right derivatives (3 x intervals)

Hot loops branch on the kinds once and then call the closed_* or table_*
variants, which keeps each loop body small enough for the compiler to
optimise. Table rows are b+, b- and A, interpolated by piecewise cubic Hermite
polynomials on knots aligned with the kinks of b and a.
"""

import math

import numpy as np
from numba import njit

B_SEDIMENTATION = 0
B_TRAFFIC = 1
B_TABLE = 2

A_POLY = 0
A_TRAFFIC = 1
A_TABLE = 2

ROW_BPLUS = 0
ROW_BMINUS = 1
ROW_A = 2

HEADER = 48
POLY_PAD = 16

# Compiled kernels never allocate, so they run without the reference-counting
# runtime; with it, each array argument of a helper call costs a pair of
# atomic updates, which dominates the small loop bodies.
kernel = njit(cache=True, _nrt=False)
inline_kernel = njit(cache=True, inline="always", _nrt=False)


def pack(b_kind, a_kind, u_max, u_peak, b_peak, u_c, params=(), poly=None, tables=None):
    """Assemble the flat parameter array."""
    kp = np.zeros(HEADER)
    kp[:6] = b_kind, a_kind, u_max, u_peak, b_peak, u_c
    kp[6:6 + len(params)] = params
    tail = []
    off = HEADER
    if poly is not None:
        poly = np.asarray(poly, dtype=float)
        kp[8] = poly.size - 1
        kp[9] = off
        if poly.size < POLY_PAD:
            poly = np.concatenate([np.zeros(POLY_PAD - poly.size), poly])
        tail.append(poly)
        off += poly.size
    if tables is not None:
        edges, start, width, vals, dl, dr = tables
        kp[40] = len(edges) - 1
        kp[41] = np.shape(vals)[1]
        for slot, arr in zip(range(42, 48), tables):
            flat = np.asarray(arr, dtype=float).ravel()
            kp[slot] = off
            tail.append(flat)
            off += flat.size
    return np.concatenate([kp] + tail)


@inline_kernel
def table_eval(u, row, kp):
    """Piecewise cubic Hermite lookup; ``u`` must already be clamped."""
    nseg = int(kp[40])
    nk = int(kp[41])
    oe = int(kp[42])
    ost = int(kp[43])
    s = 0
    while s < nseg - 1 and u >= kp[oe + s + 1]:
        s += 1
    h = kp[int(kp[44]) + s]
    x = (u - kp[oe + s]) / h
    i = int(x)
    first = int(kp[ost + s])
    nint = int(kp[ost + s + 1]) - first
    if i >= nint:
        i = nint - 1
    if i < 0:
        i = 0
    t = x - i
    k = first + i
    ov = int(kp[45]) + row * nk
    od = row * (nk - 1) + k
    y0 = kp[ov + k]
    y1 = kp[ov + k + 1]
    m0 = kp[int(kp[46]) + od] * h
    m1 = kp[int(kp[47]) + od] * h
    t2 = t * t
    t3 = t2 * t
    return ((2.0 * t3 - 3.0 * t2 + 1.0) * y0 + (t3 - 2.0 * t2 + t) * m0
            + (-2.0 * t3 + 3.0 * t2) * y1 + (t3 - t2) * m1)


@inline_kernel
def _power(x, e):
    """x**e with straight-line products for small integer e."""
    if e == 5.0:
        x2 = x * x
        return x2 * x2 * x
    if e == 4.0:
        x2 = x * x
        return x2 * x2
    if e == 3.0:
        return x * x * x
    if e == 2.0:
        return x * x
    if e == 1.0:
        return x
    k = int(e)
    if k == e and 0 <= k <= 64:
        r = 1.0
        while k:
            if k & 1:
                r *= x
            x *= x
            k >>= 1
        return r
    return x ** e


@inline_kernel
def closed_flux(u, kp):
    """b(u) for the closed-form kinds."""
    umax = kp[2]
    if u <= 0.0 or u >= umax:
        return 0.0
    if kp[0] == B_SEDIMENTATION:
        return kp[6] * u * _power(umax - u, kp[7])
    if u <= kp[5]:
        return kp[7] * u
    return kp[6] * u * math.log(umax / u)


@inline_kernel
def table_flux(u, kp):
    if u <= 0.0 or u >= kp[2]:
        return 0.0
    return table_eval(u, ROW_BPLUS, kp) + table_eval(u, ROW_BMINUS, kp)


@inline_kernel
def flux_eval(u, kp):
    """b(u), zero outside (0, u_max)."""
    if kp[0] == B_TABLE:
        return table_flux(u, kp)
    return closed_flux(u, kp)


@inline_kernel
def _traffic_p(s, umax):
    ell = math.log(umax / s)
    return s * (ell * ell + 2.0 * ell + 2.0)


@inline_kernel
def closed_a(u, kp):
    """A(clamp(u, 0, u_max)) for the polynomial and traffic kinds."""
    umax = kp[2]
    if u <= kp[5]:
        return 0.0
    if u > umax:
        u = umax
    if kp[1] == A_POLY:
        w = u - kp[5]
        o = int(kp[9])
        n = int(kp[8])
        if n < POLY_PAD:
            # coefficients are left-padded with zeros to POLY_PAD terms
            acc = kp[o]
            for i in range(1, POLY_PAD):
                acc = acc * w + kp[o + i]
            return acc
        acc = kp[o]
        for i in range(1, n + 1):
            acc = acc * w + kp[o + i]
        return acc
    if u <= kp[8]:
        return kp[9] * (_traffic_p(u, umax) - kp[11]) - kp[10] * (u - kp[5])
    return kp[12] + kp[13] * (u - kp[8])


@inline_kernel
def table_a(u, kp):
    return table_eval(min(max(u, 0.0), kp[2]), ROW_A, kp)


@inline_kernel
def integrated_diffusion_eval(u, kp):
    """A(clamp(u, 0, u_max))."""
    if kp[1] == A_TABLE:
        return table_a(u, kp)
    return closed_a(u, kp)


@inline_kernel
def closed_eo(u, v, kp):
    """EO flux of a unimodal closed-form b peaking at u_peak:
    b+(u) = b(min(u, u_peak)), b-(v) = b(max(v, u_peak)) - b(u_peak)."""
    um = kp[3]
    uu = u if u < um else um
    vv = v if v > um else um
    return closed_flux(uu, kp) + closed_flux(vv, kp) - kp[4]


@inline_kernel
def table_eo(u, v, kp):
    umax = kp[2]
    uu = min(max(u, 0.0), umax)
    vv = min(max(v, 0.0), umax)
    return table_eval(uu, ROW_BPLUS, kp) + table_eval(vv, ROW_BMINUS, kp)


@inline_kernel
def engquist_osher(u, v, kp):
    """h(u, v) = b(0) + int_0^u max(b', 0) + int_0^v min(b', 0)."""
    if kp[3] >= 0.0:
        return closed_eo(u, v, kp)
    return table_eo(u, v, kp)


@inline_kernel
def minmod3(a, b, c):
    if a > 0.0 and b > 0.0 and c > 0.0:
        return min(a, min(b, c))
    if a < 0.0 and b < 0.0 and c < 0.0:
        return max(a, max(b, c))
    return 0.0


@inline_kernel
def limited_slope(um, u0, up, dx, theta):
    return minmod3(theta * (u0 - um) / dx, (up - um) / (2.0 * dx), theta * (up - u0) / dx)


@inline_kernel
def face_flux(u0, u1, s0, s1, a0, a1, dx, kp, cm, dm):
    """Interface flux between a left cell (u0, slope s0, A(u0)=a0) and a right cell."""
    ul = u0 + 0.5 * dx * s0
    ur = u1 - 0.5 * dx * s1
    return cm * engquist_osher(ul, ur, kp) - dm * (a1 - a0) / dx


@kernel
def light_factor(t, lp):
    """Traffic-light value S(t); lp = (period, red_start, red_end, total_flag)."""
    period = lp[0]
    phase = t / period - math.floor(t / period)
    if lp[1] <= phase <= lp[2]:
        return 0.0
    return 1.0


@njit(cache=True)
def eval_array(which, u, kp):
    """0: b, 1: A, 2: b+, 3: b- (tables only)."""
    out = np.empty(u.size)
    for i in range(u.size):
        if which == 0:
            out[i] = flux_eval(u[i], kp)
        elif which == 1:
            out[i] = integrated_diffusion_eval(u[i], kp)
        else:
            x = min(max(u[i], 0.0), kp[2])
            out[i] = table_eval(x, which - 2, kp)
    return out


@njit(cache=True)
def eo_array(u, v, kp):
    out = np.empty(u.size)
    for i in range(u.size):
        out[i] = engquist_osher(u[i], v[i], kp)
    return out
