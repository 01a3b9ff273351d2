"""Continuous problem definitions.

A problem is the strongly degenerate parabolic equation

    u_t + b(u)_x = A(u)_xx,   A(u) = int_0^u a(s) ds,

on an interval with zero-flux or periodic boundaries. Two presets are
provided: batch sedimentation (zero-flux) and traffic on a circular road
with a traffic light (periodic).
"""

from __future__ import annotations

import dataclasses
import enum
import math
from typing import Callable, Optional

import numpy as np
from numpy.polynomial import Polynomial
from scipy import integrate, optimize

from . import _kernels as K

NORM_SAMPLES = 100_000
_SENTINEL = ()
TABLE_KNOTS = 4096
GAUSS_POINTS = 8


class Boundary(enum.Enum):
    ZERO_FLUX = "zero-flux"
    PERIODIC = "periodic"


@dataclasses.dataclass(frozen=True)
class TrafficLight:
    """Periodic red/green signal S(t) placed at one interface.

    Red (S = 0) on [(k + red_start) period, (k + red_end) period]. With
    ``blocks="total"`` the whole interface flux is multiplied by S(t); with
    ``blocks="convective"`` only the convective part is.
    """

    position: float
    period: float = 1.0
    red_start: float = 0.125
    red_end: float = 0.375
    blocks: str = "total"

    def __post_init__(self):
        if self.blocks not in ("total", "convective"):
            raise ValueError(f"blocks must be 'total' or 'convective', got {self.blocks!r}")

    def __call__(self, x_interface, t):
        return self.value(t)

    def value(self, t):
        phase = t / self.period - math.floor(t / self.period)
        return 0.0 if self.red_start <= phase <= self.red_end else 1.0

    def kernel_params(self):
        return np.array([self.period, self.red_start, self.red_end,
                         1.0 if self.blocks == "total" else 0.0])


@dataclasses.dataclass(eq=False)
class ProblemSpec:
    """Everything the numerical layers need to know about a problem.

    ``flux``, ``flux_derivative``, ``diffusion`` and ``integrated_diffusion``
    are vectorised and clamp their argument to [0, u_max]. ``kernel`` is the
    tuple handed to compiled code; it is built from tables when not given.
    """

    name: str
    flux: Callable
    flux_derivative: Callable
    diffusion: Callable
    integrated_diffusion: Callable
    u_max: float
    domain: tuple
    boundary: Boundary
    initial_datum: Callable
    flux_modulator: Optional[TrafficLight] = None
    breakpoints: tuple = ()
    datum_breakpoints: tuple = ()
    kernel: Optional[np.ndarray] = None
    preset: object = None
    lipschitz_b: float = dataclasses.field(init=False)
    sup_a: float = dataclasses.field(init=False)

    def __post_init__(self):
        self.domain = (float(self.domain[0]), float(self.domain[1]))
        if not self.domain[1] > self.domain[0]:
            raise ValueError("domain must be a non-empty interval")
        self.lipschitz_b, self.sup_a = _sup_norms(self)
        if self.kernel is None:
            self.kernel = build_table_kernel(self)
        elif self.kernel is _SENTINEL:
            self.kernel = None

    @property
    def length(self):
        return self.domain[1] - self.domain[0]

    @property
    def periodic(self):
        return self.boundary is Boundary.PERIODIC

    def with_initial_datum(self, u0, datum_breakpoints=()):
        return dataclasses.replace(self, initial_datum=u0,
                                   datum_breakpoints=tuple(datum_breakpoints))


def _sup_norms(spec):
    u = np.linspace(0.0, spec.u_max, NORM_SAMPLES)
    bp = [b for b in spec.breakpoints if 0.0 < b < spec.u_max]
    # one-sided values at kinks so the norms dominate every sample
    side = np.array([x * (1 + s * 1e-12) for x in bp for s in (-1.0, 1.0)])
    u = np.concatenate([u, side]) if side.size else u
    lip = float(np.max(np.abs(spec.flux_derivative(u))))
    sup_a = float(np.max(spec.diffusion(u)))
    return lip, sup_a


def _clamp(u, u_max):
    return np.clip(np.asarray(u, dtype=float), 0.0, u_max)


def _scalar_or_array(f):
    def wrapped(u):
        out = f(np.asarray(u, dtype=float))
        return float(out) if np.ndim(out) == 0 else out
    wrapped.__doc__ = f.__doc__
    return wrapped


# ---------------------------------------------------------------------------
# tables for problems without closed forms

def _segments(spec):
    """Split [0, u_max] at kinks and sign changes of b'."""
    umax = spec.u_max
    edges = {0.0, umax}
    edges.update(b for b in spec.breakpoints if 0.0 < b < umax)
    edges = sorted(edges)
    roots = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        n = max(64, int(NORM_SAMPLES * (hi - lo) / umax))
        x = np.linspace(lo, hi, n + 1)[1:-1]
        if x.size < 2:
            continue
        d = spec.flux_derivative(x)
        sgn = np.sign(d)
        for i in np.nonzero(sgn[:-1] * sgn[1:] < 0)[0]:
            roots.append(optimize.brentq(spec.flux_derivative, x[i], x[i + 1], xtol=1e-15))
    return np.array(sorted(set(edges) | set(roots)))


def build_table_kernel(spec, knots=TABLE_KNOTS):
    """Hermite tables of b+, b- and A on knots aligned with kinks of b, a."""
    umax = spec.u_max
    edges = _segments(spec)
    nseg = edges.size - 1
    counts = [max(16, int(round(knots * (hi - lo) / umax))) for lo, hi in zip(edges[:-1], edges[1:])]
    start = np.zeros(nseg + 1, dtype=np.int64)
    start[1:] = np.cumsum(counts)
    width = np.diff(edges) / np.array(counts, dtype=float)
    nk = int(start[-1]) + 1
    x = np.empty(nk)
    for s in range(nseg):
        x[start[s]:start[s + 1]] = edges[s] + width[s] * np.arange(counts[s])
    x[-1] = edges[-1]
    seg_of = np.repeat(np.arange(nseg), counts)
    tiny = 1e-9 * width[seg_of]
    xl, xr = x[:-1] + tiny, x[1:] - tiny

    # b+ and b- from exact flux differences on monotone pieces
    bx = spec.flux(x)
    rising = np.array([spec.flux_derivative(0.5 * (lo + hi)) >= 0.0
                       for lo, hi in zip(edges[:-1], edges[1:])])[seg_of]
    db = np.diff(bx)
    vals = np.zeros((3, nk))
    vals[0, 1:] = np.cumsum(np.where(rising, db, 0.0))
    vals[1, 1:] = np.cumsum(np.where(rising, 0.0, db))
    vals[0] += float(spec.flux(0.0))
    dl = np.zeros((3, nk - 1))
    dr = np.zeros((3, nk - 1))
    bl, br = spec.flux_derivative(xl), spec.flux_derivative(xr)
    dl[0], dr[0] = np.where(rising, bl, 0.0), np.where(rising, br, 0.0)
    dl[1], dr[1] = np.where(rising, 0.0, bl), np.where(rising, 0.0, br)

    vals[2] = spec.integrated_diffusion(x)
    dl[2], dr[2] = spec.diffusion(xl), spec.diffusion(xr)

    return K.pack(K.B_TABLE, K.A_TABLE, umax, -1.0, 0.0, 0.0,
                  tables=(edges, start, width, vals, dl, dr))


def quadrature_integrated_diffusion(diffusion, u_max, breakpoints=(), knots=TABLE_KNOTS):
    """A(u) by adaptive quadrature of a, memoised on knots and Hermite-interpolated."""
    edges = sorted({0.0, u_max} | {b for b in breakpoints if 0.0 < b < u_max})
    xs, As = [0.0], [0.0]
    for lo, hi in zip(edges[:-1], edges[1:]):
        n = max(16, int(round(knots * (hi - lo) / u_max)))
        grid = np.linspace(lo, hi, n + 1)
        for a0, a1 in zip(grid[:-1], grid[1:]):
            val, _ = integrate.quad(diffusion, a0, a1, epsabs=0.0, epsrel=1e-10, limit=200)
            xs.append(a1)
            As.append(As[-1] + val)
    xs, As = np.array(xs), np.array(As)
    h = np.diff(xs)
    dl = diffusion(xs[:-1] + 1e-9 * h)
    dr = diffusion(xs[1:] - 1e-9 * h)

    def A(u):
        u = _clamp(u, u_max)
        k = np.clip(np.searchsorted(xs, u, side="right") - 1, 0, xs.size - 2)
        t = (u - xs[k]) / h[k]
        t2, t3 = t * t, t * t * t
        return ((2 * t3 - 3 * t2 + 1) * As[k] + (t3 - 2 * t2 + t) * dl[k] * h[k]
                + (-2 * t3 + 3 * t2) * As[k + 1] + (t3 - t2) * dr[k] * h[k])

    return _scalar_or_array(A)


# ---------------------------------------------------------------------------
# sedimentation

@dataclasses.dataclass(frozen=True)
class SedimentationPreset:
    v_inf: float = 1.0e-4
    K: float = 5.0
    u_max: float = 1.0
    sigma_0: float = 1.0
    u_c: float = 0.1
    beta: float = 6.0
    delta_rho: float = 1660.0
    g: float = 9.81
    H: float = 1.0
    u0: float = 0.08

    @property
    def u_peak(self):
        return self.u_max / (self.K + 1.0)

    def flux(self, u):
        u = np.asarray(u, dtype=float)
        inside = (u > 0.0) & (u < self.u_max)
        uc = np.where(inside, u, 0.0)
        return np.where(inside, self.v_inf * uc * (self.u_max - uc) ** self.K, 0.0)

    def flux_derivative(self, u):
        u = _clamp(u, self.u_max)
        return self.v_inf * (self.u_max - u) ** (self.K - 1) * (self.u_max - (self.K + 1) * u)

    def _a_factor(self):
        return self.v_inf * self.sigma_0 * self.beta / (self.u_c ** self.beta * self.delta_rho * self.g)

    def diffusion(self, u):
        """a(u) = b(u) sigma_e'(u) / (delta_rho g u)."""
        u = _clamp(u, self.u_max)
        val = self._a_factor() * (self.u_max - u) ** self.K * u ** (self.beta - 1)
        return np.where(u > self.u_c, val, 0.0)

    def a_polynomial(self):
        """A above u_c as a polynomial in w = u - u_c, or None."""
        if float(self.K).is_integer() and float(self.beta).is_integer():
            w = Polynomial([0.0, 1.0])
            q = self._a_factor() * (self.u_max - self.u_c - w) ** int(self.K) * (self.u_c + w) ** int(self.beta - 1)
            return q.integ(lbnd=0.0)
        return None


def make_sedimentation(preset: SedimentationPreset = SedimentationPreset(), initial="default"):
    poly = preset.a_polynomial()
    if poly is not None:
        coef = poly.coef

        def A(u):
            u = _clamp(u, preset.u_max)
            return np.where(u > preset.u_c, poly(u - preset.u_c), 0.0)
        a_kind = K.A_POLY
    else:
        A = quadrature_integrated_diffusion(preset.diffusion, preset.u_max, (preset.u_c,))
        a_kind = None

    u0, dbp = sedimentation_datum(preset, initial)
    spec = ProblemSpec(
        name="sedimentation-ex1",
        flux=_scalar_or_array(preset.flux),
        flux_derivative=_scalar_or_array(preset.flux_derivative),
        diffusion=_scalar_or_array(preset.diffusion),
        integrated_diffusion=_scalar_or_array(A),
        u_max=preset.u_max,
        domain=(0.0, preset.H),
        boundary=Boundary.ZERO_FLUX,
        initial_datum=u0,
        breakpoints=(preset.u_c,),
        datum_breakpoints=dbp,
        kernel=None if a_kind is None else _SENTINEL,
        preset=preset,
    )
    up = preset.u_peak
    bp = float(preset.flux(up))
    if a_kind is None:
        # closed-form b with tabulated A
        kp = spec.kernel.copy()
        kp[0], kp[3], kp[4], kp[5], kp[6], kp[7] = K.B_SEDIMENTATION, up, bp, preset.u_c, preset.v_inf, preset.K
        spec.kernel = kp
    else:
        spec.kernel = K.pack(K.B_SEDIMENTATION, a_kind, preset.u_max, up, bp, preset.u_c,
                             params=(preset.v_inf, preset.K), poly=coef[::-1])
    return spec


def make_sedimentation_example1():
    """Batch settling of a homogeneous suspension u0 = 0.08 in a 1 m column."""
    return make_sedimentation(SedimentationPreset())


def sedimentation_datum(preset, name):
    if name in (None, "default"):
        return _constant_datum(preset.u0), ()
    if name == "rough":
        # zero on [0,1/8], [2/8,1/4], [5/8,3/4], [7/8,1]; the second interval is a single point
        zero = [(0.0, 0.125), (0.25, 0.25), (0.625, 0.75), (0.875, 1.0)]

        def u0(x):
            x = np.asarray(x, dtype=float) / preset.H
            out = np.full(x.shape, 0.1)
            for lo, hi in zero:
                out[(x >= lo) & (x <= hi)] = 0.0
            return out
        return u0, tuple(preset.H * b for b in (0.125, 0.25, 0.625, 0.75, 0.875))
    if name == "smooth":
        return (lambda x: 0.3 + 0.1 * np.cos(np.pi * np.asarray(x, dtype=float) / preset.H)), ()
    return _named_constant(name)


# ---------------------------------------------------------------------------
# traffic

MILE = 1609.344


@dataclasses.dataclass(frozen=True)
class TrafficPreset:
    v_max: float = 70.0
    u_max: float = 220.0
    theta: float = math.e / 7.0
    tau: float = 2.0 / 3600.0
    g_si: float = 9.81
    decel_fraction: float = 0.1
    L_min: float = 0.05
    H: float = 10.0
    light_position: float = 5.0
    light_period: float = 1.0
    red_start: float = 0.125
    red_end: float = 0.375
    light_blocks: str = "total"

    @property
    def u_c(self):
        return self.u_max * math.exp(-1.0 / self.theta)

    @property
    def a_tilde(self):
        """Deceleration in mi/h^2."""
        return self.decel_fraction * self.g_si * 3600.0 ** 2 / MILE

    @property
    def u_star(self):
        """Density above which the anticipation distance is L_min."""
        vt = self.v_max * self.theta
        return self.u_max * math.exp(-math.sqrt(2.0 * self.a_tilde * self.L_min) / vt)

    @property
    def u_peak(self):
        return self.u_max / math.e

    def velocity(self, u):
        u = _clamp(u, self.u_max)
        safe = np.maximum(u, 1e-300)
        return self.v_max * np.minimum(1.0, self.theta * np.log(self.u_max / safe))

    def flux(self, u):
        u = np.asarray(u, dtype=float)
        inside = (u > 0.0) & (u < self.u_max)
        uc = np.where(inside, u, 1.0)
        lin = self.v_max * uc
        log = self.v_max * self.theta * uc * np.log(self.u_max / uc)
        return np.where(inside, np.where(uc <= self.u_c, lin, log), 0.0)

    def flux_derivative(self, u):
        u = np.maximum(_clamp(u, self.u_max), 1e-300)
        return np.where(u <= self.u_c, self.v_max,
                        self.v_max * self.theta * (np.log(self.u_max / u) - 1.0))

    def diffusion(self, u):
        """a(u) = -u v_max V'(u) (L(u) + tau v_max u V'(u)) above u_c."""
        u = np.maximum(_clamp(u, self.u_max), 1e-300)
        vt = self.v_max * self.theta
        v = vt * np.log(self.u_max / u)
        reach = np.maximum(v * v / (2.0 * self.a_tilde), self.L_min)
        return np.where(u > self.u_c, vt * (reach - self.tau * vt), 0.0)

    def a_constants(self):
        vt = self.v_max * self.theta
        k = vt ** 3 / (2.0 * self.a_tilde)
        c1 = self.tau * vt * vt
        slope = vt * (self.L_min - self.tau * vt)
        pc = _traffic_p(self.u_c, self.u_max)
        us = self.u_star
        a_star = k * (_traffic_p(us, self.u_max) - pc) - c1 * (us - self.u_c)
        return k, c1, pc, a_star, slope

    def integrated_diffusion(self, u):
        u = _clamp(u, self.u_max)
        k, c1, pc, a_star, slope = self.a_constants()
        us, uc = self.u_star, self.u_c
        mid = k * (_traffic_p(np.clip(u, uc, us), self.u_max) - pc) - c1 * (np.clip(u, uc, us) - uc)
        return np.where(u <= uc, 0.0, np.where(u <= us, mid, a_star + slope * (u - us)))


def _traffic_p(s, umax):
    ell = np.log(umax / s)
    return s * (ell * ell + 2.0 * ell + 2.0)


def make_traffic(preset: TrafficPreset = TrafficPreset(), initial="default"):
    light = TrafficLight(preset.light_position, preset.light_period,
                         preset.red_start, preset.red_end, preset.light_blocks)
    u0, dbp = traffic_datum(preset, initial)
    k, c1, pc, a_star, slope = preset.a_constants()
    up = preset.u_peak
    kp = K.pack(K.B_TRAFFIC, K.A_TRAFFIC, preset.u_max, up, float(preset.flux(up)), preset.u_c,
                params=(preset.v_max * preset.theta, preset.v_max, preset.u_star,
                        k, c1, pc, a_star, slope))
    return ProblemSpec(
        name="traffic-ex2",
        flux=_scalar_or_array(preset.flux),
        flux_derivative=_scalar_or_array(preset.flux_derivative),
        diffusion=_scalar_or_array(preset.diffusion),
        integrated_diffusion=_scalar_or_array(preset.integrated_diffusion),
        u_max=preset.u_max,
        domain=(0.0, preset.H),
        boundary=Boundary.PERIODIC,
        initial_datum=u0,
        flux_modulator=light,
        breakpoints=(preset.u_c, preset.u_star),
        datum_breakpoints=dbp,
        kernel=kp,
        preset=preset,
    )


def make_traffic_example2():
    """Dick-Greenberg traffic on a 10 mi ring road with a light at 5 mi."""
    return make_traffic(TrafficPreset())


def traffic_datum(preset, name):
    if name in (None, "default", "smooth"):
        return (lambda x: 50.0 * (1.0 + np.sin(0.4 * np.pi * np.asarray(x, dtype=float)))), ()
    return _named_constant(name)


# ---------------------------------------------------------------------------
# helpers

def _constant_datum(c):
    return lambda x: np.full(np.shape(x), float(c))


def _named_constant(name):
    """Generic data: ``constant:c``, ``step:x0:left:right`` or ``sine:mean:amplitude:wavelength``."""
    if isinstance(name, str):
        kind, _, rest = name.partition(":")
        try:
            args = [float(v) for v in rest.split(":")] if rest else []
        except ValueError:
            args = None
        if kind == "constant" and args and len(args) == 1:
            return _constant_datum(args[0]), ()
        if kind == "step" and args and len(args) == 3:
            x0, left, right = args
            return (lambda x: np.where(np.asarray(x, dtype=float) < x0, left, right)), (x0,)
        if kind == "sine" and args and len(args) == 3 and args[2] > 0.0:
            mean, amp, wave = args
            return (lambda x: mean + amp * np.sin(2.0 * np.pi * np.asarray(x, dtype=float) / wave)), ()
    raise ValueError(f"unknown initial datum {name!r}")


PRESETS = {
    "sedimentation-ex1": (make_sedimentation, SedimentationPreset),
    "traffic-ex2": (make_traffic, TrafficPreset),
}


def make_problem(name, overrides=None, initial="default", light_blocks=None):
    """Build a preset by name with optional numeric parameter overrides.

    ``custom`` builds a polynomial problem from the overrides ``flux``,
    ``diffusion`` (coefficients, lowest order first), ``u_max``, ``domain``,
    ``boundary`` and ``u_c``; its initial datum must be a generic one.
    """
    if name == "custom":
        kw = dict(overrides or {})
        try:
            flux, diffusion = kw.pop("flux"), kw.pop("diffusion")
        except KeyError:
            raise ValueError("custom problems need 'flux' and 'diffusion' coefficients") from None
        u0, dbp = _named_constant(initial)
        allowed = {"u_max", "domain", "boundary", "u_c"}
        if set(kw) - allowed:
            raise ValueError(f"unknown parameters for custom: {sorted(set(kw) - allowed)}")
        spec = make_custom(flux, diffusion, kw.get("u_max", 1.0), kw.get("domain", (0.0, 1.0)),
                           kw.get("boundary", "zero-flux"), u0, u_c=float(kw.get("u_c", 0.0)))
        spec.datum_breakpoints = dbp
        return spec
    try:
        factory, preset_cls = PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown problem {name!r}; choose from {sorted(PRESETS)}") from None
    fields = {f.name for f in dataclasses.fields(preset_cls)}
    kwargs = dict(overrides or {})
    bad = set(kwargs) - fields
    if bad:
        raise ValueError(f"unknown parameters for {name}: {sorted(bad)}")
    if light_blocks is not None and "light_blocks" in fields:
        kwargs["light_blocks"] = light_blocks
    return factory(preset_cls(**kwargs), initial=initial)


def make_custom(flux_coeffs, diffusion_coeffs, u_max, domain, boundary, initial_datum,
                u_c=0.0, name="custom"):
    """Problem with polynomial b (vanishing outside (0, u_max)) and polynomial a above u_c.

    Coefficients are given lowest order first.
    """
    bpoly = Polynomial(flux_coeffs)
    dbpoly = bpoly.deriv()
    apoly = Polynomial(diffusion_coeffs)
    Apoly = apoly.integ(lbnd=u_c)

    def b(u):
        u = np.asarray(u, dtype=float)
        return np.where((u > 0.0) & (u < u_max), bpoly(np.clip(u, 0.0, u_max)), 0.0)

    def db(u):
        return dbpoly(_clamp(u, u_max))

    def a(u):
        u = _clamp(u, u_max)
        return np.where(u > u_c, np.maximum(apoly(u), 0.0), 0.0)

    def A(u):
        u = _clamp(u, u_max)
        return np.where(u > u_c, Apoly(u), 0.0)

    return ProblemSpec(
        name=name,
        flux=_scalar_or_array(b),
        flux_derivative=_scalar_or_array(db),
        diffusion=_scalar_or_array(a),
        integrated_diffusion=_scalar_or_array(A),
        u_max=float(u_max),
        domain=tuple(domain),
        boundary=Boundary(boundary) if not isinstance(boundary, Boundary) else boundary,
        initial_datum=initial_datum,
        breakpoints=(u_c,) if 0.0 < u_c < u_max else (),
    )


# ---------------------------------------------------------------------------
# derived quantities

def eval_integrated_diffusion(spec: ProblemSpec, u):
    """A(clamp(u, 0, u_max))."""
    return spec.integrated_diffusion(u)


def cell_averages(spec: ProblemSpec, n_cells: int):
    """Exact cell averages of the initial datum by Gauss-Legendre per smooth piece."""
    xa, xb = spec.domain
    edges = np.linspace(xa, xb, n_cells + 1)
    gx, gw = np.polynomial.legendre.leggauss(GAUSS_POINTS)
    out = np.empty(n_cells)
    mid, half = 0.5 * (edges[1:] + edges[:-1]), 0.5 * (edges[1:] - edges[:-1])
    pts = mid[:, None] + half[:, None] * gx[None, :]
    out[:] = (spec.initial_datum(pts) * gw[None, :]).sum(axis=1) / 2.0
    jumps = [b for b in spec.datum_breakpoints if xa < b < xb]
    for j in np.unique(np.searchsorted(edges, jumps, side="right") - 1):
        cuts = [edges[j]] + sorted(b for b in jumps if edges[j] < b < edges[j + 1]) + [edges[j + 1]]
        total = 0.0
        for lo, hi in zip(cuts[:-1], cuts[1:]):
            if hi > lo:
                # sample strictly inside the piece so one-sided values are used
                total += 0.5 * (hi - lo) * float(np.dot(gw, spec.initial_datum(0.5 * (lo + hi) + 0.5 * (hi - lo) * gx)))
        out[j] = total / (edges[j + 1] - edges[j])
    return out


def regularity_sum(spec: ProblemSpec, J: int):
    """M estimate: sum |A(u_{m+1}) - 2A(u_m) + A(u_{m-1})| / dx over interior cells."""
    u = cell_averages(spec, J)
    A = np.asarray(spec.integrated_diffusion(u), dtype=float)
    dx = spec.length / J
    if spec.periodic:
        d2 = np.roll(A, -1) - 2.0 * A + np.roll(A, 1)
    else:
        d2 = A[2:] - 2.0 * A[1:-1] + A[:-2]
    return float(np.sum(np.abs(d2)) / dx)


def check_initial_regularity(spec: ProblemSpec, J: int, doublings: int = 3):
    """Evaluate M on J, 2J, ... and report whether it stays bounded.

    Bounded means the sequence does not grow by more than 10% per doubling.
    Returns (bounded, largest M seen).
    """
    if J < 4:
        raise ValueError("J must be at least 4")
    ms = [regularity_sum(spec, J * 2 ** k) for k in range(doublings + 1)]
    bounded = all(m1 <= 1.1 * m0 + 1e-300 for m0, m1 in zip(ms[:-1], ms[1:]))
    return bounded, max(ms)


def check_invariants(spec: ProblemSpec, n: int = 10_000):
    """Sampled checks of b >= 0, a >= 0, A nondecreasing and the norm bounds."""
    u = np.linspace(0.0, spec.u_max, n)
    A = np.asarray(spec.integrated_diffusion(u))
    scale = max(1.0, float(np.max(np.abs(A))))
    return {
        "b_nonnegative": bool(np.all(spec.flux(u) >= 0.0)),
        "a_nonnegative": bool(np.all(spec.diffusion(u) >= 0.0)),
        "A_monotone": bool(np.all(np.diff(A) >= -1e-14 * scale)),
        "A_zero_at_0": float(spec.integrated_diffusion(0.0)) == 0.0,
        "norms_dominate": bool(np.all(np.abs(spec.flux_derivative(u)) <= spec.lipschitz_b)
                               and np.all(spec.diffusion(u) <= spec.sup_a)),
    }
