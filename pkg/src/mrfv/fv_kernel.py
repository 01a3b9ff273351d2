"""Uniform-grid spatial discretisation.

Engquist-Osher convective flux with theta-limited MUSCL reconstruction,
centred differences of A for the diffusive flux, and zero-flux or periodic
closures.
"""

from __future__ import annotations

import dataclasses

import numpy as np

from . import _kernels as K
from ._kernels import kernel
from .model import ProblemSpec, cell_averages


class StepSizeError(ValueError):
    """Raised when a time step violates the stability bound."""


@dataclasses.dataclass
class UniformField:
    """Cell averages on the 2**level uniform grid of ``domain``."""

    values: np.ndarray
    level: int
    domain: tuple

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (2 ** self.level,):
            raise ValueError(f"expected {2 ** self.level} values, got {self.values.shape}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field contains non-finite values")

    @property
    def n(self):
        return self.values.size

    @property
    def dx(self):
        return (self.domain[1] - self.domain[0]) / self.n

    @property
    def centers(self):
        return self.domain[0] + (np.arange(self.n) + 0.5) * self.dx

    def mass(self):
        return float(np.sum(self.values) * self.dx)

    def copy(self):
        return UniformField(self.values.copy(), self.level, self.domain)


@dataclasses.dataclass
class SlopeField:
    slopes: np.ndarray
    theta: float


def initial_field(spec: ProblemSpec, level: int) -> UniformField:
    return UniformField(cell_averages(spec, 2 ** level), level, spec.domain)


def light_face_index(spec: ProblemSpec, level: int) -> int:
    """Index (0..N-1) of the interface nearest the flux modulator, or -1."""
    if spec.flux_modulator is None:
        return -1
    n = 2 ** level
    i = int(round((spec.flux_modulator.position - spec.domain[0]) / spec.length * n))
    return i % n


def light_params(spec: ProblemSpec):
    if spec.flux_modulator is None:
        return np.array([1.0, 2.0, 2.0, 1.0])
    return spec.flux_modulator.kernel_params()


# ---------------------------------------------------------------------------
# compiled operators

@kernel
def fv_slopes(u, dx, theta, periodic, s):
    n = u.size
    for j in range(1, n - 1):
        s[j] = K.limited_slope(u[j - 1], u[j], u[j + 1], dx, theta)
    if periodic:
        s[0] = K.limited_slope(u[n - 1], u[0], u[1 % n], dx, theta)
        s[n - 1] = K.limited_slope(u[n - 2], u[n - 1], u[0], dx, theta)
    else:
        for j in (0, 1, n - 2, n - 1):
            if 0 <= j < n:
                s[j] = 0.0


@kernel
def fv_cell_a(u, kd, Acell):
    if kd[1] == K.A_TABLE:
        for j in range(u.size):
            Acell[j] = K.table_a(u[j], kd)
    else:
        for j in range(u.size):
            Acell[j] = K.closed_a(u[j], kd)


@kernel
def fv_inner_faces(u, s, Acell, dx, kd, F):
    """F[i] for the faces between cells i-1 and i, i = 1..n-1."""
    h = 0.5 * dx
    if kd[3] >= 0.0:
        for i in range(1, u.size):
            F[i] = (K.closed_eo(u[i - 1] + h * s[i - 1], u[i] - h * s[i], kd)
                    - (Acell[i] - Acell[i - 1]) / dx)
    else:
        for i in range(1, u.size):
            F[i] = (K.table_eo(u[i - 1] + h * s[i - 1], u[i] - h * s[i], kd)
                    - (Acell[i] - Acell[i - 1]) / dx)


@kernel
def fv_divergence_from_slopes(u, s, t, dx, kd, periodic, light_face, lp, F, Acell, D):
    """D_j = -(F_{j+1/2} - F_{j-1/2}) / dx; F[i] is the flux through the left face of cell i."""
    n = u.size
    fv_cell_a(u, kd, Acell)
    fv_inner_faces(u, s, Acell, dx, kd, F)
    if periodic:
        F[0] = K.face_flux(u[n - 1], u[0], s[n - 1], s[0], Acell[n - 1], Acell[0], dx, kd, 1.0, 1.0)
    else:
        F[0] = 0.0
    if light_face >= 0:
        S = K.light_factor(t, lp)
        if S != 1.0:
            i = light_face
            im = (i - 1) % n
            dm = S if lp[3] > 0.5 else 1.0
            F[i] = K.face_flux(u[im], u[i], s[im], s[i], Acell[im], Acell[i], dx, kd, S, dm)
    F[n] = F[0] if periodic else 0.0
    for j in range(n):
        D[j] = -(F[j + 1] - F[j]) / dx


@kernel
def fv_divergence(u, t, dx, theta, kd, periodic, light_face, lp, s, F, Acell, D):
    fv_slopes(u, dx, theta, periodic, s)
    fv_divergence_from_slopes(u, s, t, dx, kd, periodic, light_face, lp, F, Acell, D)


class FvOperator:
    """Callable D(t, u) for one problem on one uniform level, with reused buffers."""

    def __init__(self, spec: ProblemSpec, level: int, theta: float = 0.5):
        self.spec = spec
        self.level = level
        self.n = 2 ** level
        self.dx = spec.length / self.n
        self.theta = float(theta)
        self.kd = spec.kernel
        self.periodic = spec.periodic
        self.light_face = light_face_index(spec, level)
        self.lp = light_params(spec)
        self._s = np.zeros(self.n)
        self._F = np.zeros(self.n + 1)
        self._A = np.zeros(self.n)

    def __call__(self, t, u):
        D = np.empty(self.n)
        fv_divergence(np.ascontiguousarray(u, dtype=float), float(t), self.dx, self.theta, self.kd,
                      self.periodic, self.light_face, self.lp, self._s, self._F, self._A, D)
        return D

    def faces(self, t, u):
        """Interface fluxes F_{-1/2} .. F_{N-1/2} for the given state."""
        self(t, u)
        return self._F.copy()


# ---------------------------------------------------------------------------
# public operations

def minmod(a, b, c):
    """Three-argument minmod."""
    return K.minmod3(float(a), float(b), float(c))


def engquist_osher_flux(spec: ProblemSpec, u, v):
    """h(u, v); scalars give a float, arrays an array."""
    uu = np.atleast_1d(np.asarray(u, dtype=float))
    vv = np.atleast_1d(np.asarray(v, dtype=float))
    uu, vv = np.broadcast_arrays(uu, vv)
    out = K.eo_array(np.ascontiguousarray(uu.ravel()), np.ascontiguousarray(vv.ravel()), spec.kernel)
    if np.ndim(u) == 0 and np.ndim(v) == 0:
        return float(out[0])
    return out.reshape(uu.shape)


def muscl_slopes(field: UniformField, theta: float = 0.5, boundary=None) -> SlopeField:
    """Limited slopes; zero in the two cells next to each end for zero-flux boundaries."""
    from .model import Boundary
    if not 0.0 <= theta <= 2.0:
        raise ValueError("theta must lie in [0, 2]")
    periodic = (boundary is Boundary.PERIODIC) or boundary == "periodic"
    s = np.zeros(field.n)
    fv_slopes(field.values, field.dx, float(theta), periodic, s)
    return SlopeField(s, float(theta))


def numerical_divergence(spec: ProblemSpec, field: UniformField, slopes: SlopeField, t: float = 0.0):
    n = field.n
    D = np.empty(n)
    fv_divergence_from_slopes(field.values, np.ascontiguousarray(slopes.slopes, dtype=float), float(t),
                              field.dx, spec.kernel, spec.periodic, light_face_index(spec, field.level),
                              light_params(spec), np.zeros(n + 1), np.zeros(n), D)
    return D


def cfl_number(spec: ProblemSpec, dx: float, dt: float) -> float:
    """lambda ||b'|| + nu ||a|| with lambda = dt/dx, nu = dt/dx^2."""
    if dx <= 0.0 or dt < 0.0:
        raise ValueError("dx must be positive and dt non-negative")
    return dt / dx * spec.lipschitz_b + dt / dx ** 2 * spec.sup_a


def cfl_time_step(spec: ProblemSpec, dx: float, cfl: float) -> float:
    """Step that gives the requested CFL number."""
    return cfl / (spec.lipschitz_b / dx + spec.sup_a / dx ** 2)


def first_order_step(spec: ProblemSpec, field: UniformField, dt: float, t: float = 0.0) -> UniformField:
    """Explicit Euler step of the monotone scheme (zero slopes)."""
    c = cfl_number(spec, field.dx, dt)
    if c > 0.5 * (1.0 + 1e-12):
        raise StepSizeError(f"CFL number {c:.6g} exceeds 1/2")
    D = numerical_divergence(spec, field, SlopeField(np.zeros(field.n), 0.0), t)
    return UniformField(field.values + dt * D, field.level, field.domain)
