"""Three-stage RK3 and the embedded RK3(2) pair with step-size control.

The pair shares its stages; the third-order weights advance the solution
and the difference to the second-order weights estimates the local error.
The step-size rule limits the relative change per step by S(t, dt)/2 with

    S(t, dt) = (S0 - Smin) exp(-t/dt) + Smin.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np

from ._kernels import kernel


@dataclasses.dataclass(frozen=True)
class ButcherRk32:
    c: tuple = (0.0, 1.0, 0.5)
    a21: float = 1.0
    a31: float = 0.25
    a32: float = 0.25
    b_hat: tuple = (1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0)
    b_check: tuple = (0.5, 0.5, 0.0)
    order: int = 3

    @property
    def error_weights(self):
        return tuple(h - c for h, c in zip(self.b_hat, self.b_check))


TABLEAU = ButcherRk32()


@dataclasses.dataclass
class RkfController:
    """Mutable step-size state owned by one run."""

    dt: float
    delta_desired: float
    s0: float = 0.1
    s_min: float = 0.01
    t: float = 0.0
    p: int = 3
    dt_max: float = math.inf

    def __post_init__(self):
        if not self.dt > 0.0:
            raise ValueError("dt must be positive")
        if not self.delta_desired > 0.0:
            raise ValueError("delta_desired must be positive")


@kernel
def limiter_value(t, dt_old, s0, s_min):
    return (s0 - s_min) * math.exp(-t / dt_old) + s_min


@kernel
def next_step(dt_old, delta_old, delta_desired, t, p, s0, s_min):
    s = limiter_value(t, dt_old, s0, s_min)
    if delta_old <= 0.0:
        return dt_old * (1.0 + 0.5 * s)
    cand = dt_old * (delta_desired / delta_old) ** (1.0 / p)
    if abs(cand - dt_old) / dt_old <= 0.5 * s:
        return cand
    if cand > dt_old:
        return dt_old * (1.0 + 0.5 * s)
    return dt_old * (1.0 - 0.5 * s)


def limiter(t, dt_old, s0=0.1, s_min=0.01):
    """S(t, dt_old)."""
    if dt_old <= 0.0:
        raise ValueError("dt_old must be positive")
    return limiter_value(float(t), float(dt_old), float(s0), float(s_min))


def new_dt(dt_old, delta_old, delta_desired, t, p=3, s0=0.1, s_min=0.01):
    """Step-size update; the relative change is capped at S(t, dt_old)/2."""
    if dt_old <= 0.0 or delta_desired <= 0.0:
        raise ValueError("dt_old and delta_desired must be positive")
    return next_step(float(dt_old), float(delta_old), float(delta_desired), float(t),
                     float(p), float(s0), float(s_min))


def _stages(divergence_op, state, dt, t):
    u = np.asarray(state, dtype=float)
    k1 = dt * divergence_op(t, u)
    k2 = dt * divergence_op(t + dt, u + k1)
    k3 = dt * divergence_op(t + 0.5 * dt, u + 0.25 * k1 + 0.25 * k2)
    return u, k1, k2, k3


def rk3_step(divergence_op, state, dt, t=0.0):
    """One third-order step of u' = D(t, u)."""
    u, k1, k2, k3 = _stages(divergence_op, state, dt, t)
    return u + k1 / 6.0 + k2 / 6.0 + 2.0 * k3 / 3.0


def rkf_step(divergence_op, state, controller: RkfController, t=None):
    """Advance with the third-order candidate and update the controller.

    Returns (new_state, delta_old, controller). delta_old is the max-norm of
    the difference between the third- and second-order candidates.
    """
    t = controller.t if t is None else t
    dt = controller.dt
    u, k1, k2, k3 = _stages(divergence_op, state, dt, t)
    hat = u + k1 / 6.0 + k2 / 6.0 + 2.0 * k3 / 3.0
    check = u + 0.5 * k1 + 0.5 * k2
    delta = float(np.max(np.abs(hat - check))) if hat.size else 0.0
    dt_next = min(new_dt(dt, delta, controller.delta_desired, t, controller.p,
                         controller.s0, controller.s_min), controller.dt_max)
    new = dataclasses.replace(controller, dt=dt_next, t=t + dt)
    return hat, delta, new
