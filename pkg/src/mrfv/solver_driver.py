"""Run orchestration for the four solver modes.

FV      uniform grid, fixed step
FV_RKF  uniform grid, embedded RK3(2) step control
MR      adaptive tree, fixed step
MR_RKF  adaptive tree, embedded RK3(2) step control
"""

from __future__ import annotations

import dataclasses
import json
import math
import time
from typing import Optional

import numpy as np

from . import _loops
from .fv_kernel import (StepSizeError, UniformField, cfl_number, cfl_time_step, initial_field,
                        light_face_index, light_params)
from .model import ProblemSpec, make_problem
from .mr_tree import GradingError, build_initial_tree, compression_rate, decode, level_tolerances

MODES = ("FV", "FV_RKF", "MR", "MR_RKF")
TRACE_CHUNK = 1 << 16


class SimulationError(RuntimeError):
    """Raised when a run produces a non-finite state or exceeds its step budget."""


@dataclasses.dataclass
class RunConfig:
    problem: str = "sedimentation-ex1"
    initial: str = "default"
    params: dict = dataclasses.field(default_factory=dict)
    light_blocks: Optional[str] = None
    levels: int = 7
    mode: str = "FV"
    t_final: float = 1.0
    snapshot_times: tuple = ()
    epsilon: Optional[float] = None
    C: Optional[float] = None
    alpha: float = 0.6
    dt0: Optional[float] = None
    cfl0: Optional[float] = None
    lambda_fixed: Optional[float] = None
    delta_desired: float = 5e-4
    s0: float = 0.1
    s_min: float = 0.01
    cfl_ceiling: float = 1.0
    theta: float = 0.5
    trace_stride: int = 1
    check_grading: bool = False
    top_down_init: bool = False
    max_steps: int = 10 ** 9

    def __post_init__(self):
        self.mode = self.mode.upper()
        self.snapshot_times = tuple(sorted(float(t) for t in self.snapshot_times))
        self.params = dict(self.params)
        self.validate()

    @property
    def adaptive(self):
        return self.mode.startswith("MR")

    @property
    def rkf(self):
        return self.mode.endswith("RKF")

    def validate(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if not 1 <= int(self.levels) <= 20:
            raise ValueError("levels must lie in [1, 20]")
        if not self.t_final >= 0.0:
            raise ValueError("t_final must be non-negative")
        if any(t < 0.0 or t > self.t_final for t in self.snapshot_times):
            raise ValueError("snapshot times must lie in [0, t_final]")
        if self.adaptive and (self.epsilon is None) == (self.C is None):
            raise ValueError("adaptive modes need exactly one of epsilon or C")
        if sum(x is not None for x in (self.dt0, self.cfl0, self.lambda_fixed)) > 1:
            raise ValueError("give at most one of dt0, cfl0, lambda_fixed")
        if not 0.0 <= self.theta <= 2.0:
            raise ValueError("theta must lie in [0, 2]")
        if self.trace_stride < 1:
            raise ValueError("trace_stride must be positive")

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    def to_dict(self):
        d = dataclasses.asdict(self)
        d["snapshot_times"] = list(self.snapshot_times)
        return d

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in dataclasses.fields(cls)}
        bad = set(d) - known
        if bad:
            raise ValueError(f"unknown config keys: {sorted(bad)}")
        return cls(**d)

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


@dataclasses.dataclass(frozen=True)
class ReferenceTolerance:
    epsilon_R: float
    C: float
    alpha: float
    L: int
    length: float
    lipschitz_b: float
    sup_a: float

    @property
    def levels(self):
        return level_tolerances(self.epsilon_R, self.L)


def reference_tolerance(C, alpha, L, spec: ProblemSpec) -> ReferenceTolerance:
    """eps_R = C 2**(-(alpha+1) L) / (|I| ||b'|| + 2**L ||a||)."""
    if not (C > 0 and alpha > 0):
        raise ValueError("C and alpha must be positive")
    eps = C * 2.0 ** (-(alpha + 1.0) * L) / (spec.length * spec.lipschitz_b + 2.0 ** L * spec.sup_a)
    return ReferenceTolerance(eps, C, alpha, L, spec.length, spec.lipschitz_b, spec.sup_a)


@dataclasses.dataclass
class RunReport:
    config: RunConfig
    epsilon_R: Optional[float]
    dt_initial: float
    dt_final: float
    n_steps: int
    cpu_time: float
    snapshots: dict
    leaves: dict
    mu: dict
    mass: dict
    trace: dict
    mass0: float = 0.0
    errors: dict = dataclasses.field(default_factory=dict)
    speedup: Optional[float] = None

    @property
    def final(self) -> UniformField:
        return self.snapshots[max(self.snapshots)]


def problem_for(config: RunConfig) -> ProblemSpec:
    return make_problem(config.problem, config.params, config.initial, config.light_blocks)


def initial_step(config: RunConfig, spec: ProblemSpec) -> float:
    dx = spec.length / 2 ** config.levels
    if config.lambda_fixed is not None:
        return config.lambda_fixed * dx
    if config.dt0 is not None:
        return float(config.dt0)
    return cfl_time_step(spec, dx, 0.5 if config.cfl0 is None else config.cfl0)


class Simulation:
    """One run: owns the field or tree, the clock and the step controller."""

    def __init__(self, config: RunConfig, spec: Optional[ProblemSpec] = None):
        self.config = config
        self.spec = spec if spec is not None else problem_for(config)
        L = config.levels
        self.dx = self.spec.length / 2 ** L
        self.dt_initial = initial_step(config, self.spec)
        if not config.rkf:
            c = cfl_number(self.spec, self.dx, self.dt_initial)
            if c > 0.5 * (1.0 + 1e-12):
                raise StepSizeError(f"fixed step {self.dt_initial:.6g} gives CFL {c:.6g} > 1/2")
        dt_max = cfl_time_step(self.spec, self.dx, config.cfl_ceiling) if config.rkf else math.inf
        self.ctrl = np.array([min(self.dt_initial, dt_max), config.delta_desired, config.s0,
                              config.s_min, 3.0, dt_max])
        self.t = 0.0
        self.steps = 0
        self.cpu_time = 0.0
        self.kd = self.spec.kernel
        self.lp = light_params(self.spec)
        self.has_light = self.spec.flux_modulator is not None
        self.light_pos = light_face_index(self.spec, L)
        N = 2 ** L
        self._bufs = [np.zeros(N) for _ in range(7)]
        self._F = np.zeros(N + 1)
        self._chunks = []
        self._new_trace()
        self.epsilon_R = None
        if config.adaptive:
            if config.epsilon is not None:
                self.epsilon_R = float(config.epsilon)
            else:
                self.epsilon_R = reference_tolerance(config.C, config.alpha, L, self.spec).epsilon_R
            self.eps_levels = level_tolerances(self.epsilon_R, L)
            self.tree = build_initial_tree(self.spec, L, self.epsilon_R, config.top_down_init)
            self.field = None
        else:
            self.field = initial_field(self.spec, L)
            self.tree = None
        self.mass0 = self.mass()

    def _new_trace(self):
        n = TRACE_CHUNK
        self._tr = (np.zeros(n, dtype=np.int64), np.zeros(n), np.zeros(n), np.zeros(n),
                    np.zeros(n, dtype=np.int64))
        self._ntr = 0

    def _flush_trace(self):
        if self._ntr:
            self._chunks.append(tuple(a[:self._ntr].copy() for a in self._tr))
        self._ntr = 0

    def advance_to(self, t_target):
        cfg = self.config
        while self.t < t_target:
            budget = cfg.max_steps - self.steps
            if budget <= 0:
                raise SimulationError(f"step budget exhausted at t={self.t:.6g}")
            tr = self._tr
            start = time.process_time()
            if self.tree is None:
                s, Acell, D, k1, k2, k3, ut = self._bufs
                t, n, ntr, status = _loops.fv_advance(
                    self.field.values, self.t, float(t_target), self.ctrl, cfg.rkf, self.dx, cfg.theta,
                    self.kd, self.spec.periodic, self.light_pos, self.lp,
                    s, self._F, Acell, D, k1, k2, k3, ut,
                    tr[0], tr[1], tr[2], tr[3], tr[4], self._ntr, cfg.trace_stride, self.steps, budget)
            else:
                w, D, k1, k2, k3, ut, _ = self._bufs
                tree = self.tree
                t, n, ntr, status = _loops.mr_advance(
                    tree.T, self.t, float(t_target), self.ctrl, cfg.rkf, self.kd, cfg.theta,
                    self.spec.periodic, self.has_light, self.lp, self.eps_levels, cfg.levels,
                    self.spec.length, self.light_pos, cfg.check_grading, w, self._F, D, k1, k2, k3, ut,
                    tr[0], tr[1], tr[2], tr[3], tr[4], self._ntr, cfg.trace_stride, self.steps, budget)
            self.cpu_time += time.process_time() - start
            self.t = t
            self.steps += n
            self._ntr = ntr
            if status == _loops.TRACE_FULL:
                self._flush_trace()
                self._new_trace()
            elif status == _loops.NONFINITE:
                raise SimulationError(f"non-finite state at t={self.t:.6g} after {self.steps} steps")
            elif status == _loops.BUDGET:
                raise SimulationError(f"step budget exhausted at t={self.t:.6g}")
            elif status in (_loops.GRADING, _loops.STRUCTURE):
                raise GradingError(f"grading violated at t={self.t:.6g} after {self.steps} steps")
        return self

    def snapshot(self) -> UniformField:
        if self.tree is None:
            return self.field.copy()
        return decode(self.tree)

    def leaf_rows(self):
        if self.tree is None:
            f = self.field
            N = f.n
            return np.column_stack([np.full(N, self.config.levels), np.arange(N), f.centers,
                                    np.full(N, f.dx), f.values])
        return self.tree.leaf_rows()

    def mass(self):
        if self.tree is None:
            return self.field.mass()
        return self.tree.mass()

    def compression(self):
        return 1.0 if self.tree is None else compression_rate(self.tree)

    @property
    def dt(self):
        return float(self.ctrl[0])

    def trace(self):
        self._flush_trace()
        names = ("step", "t", "dt", "delta_old", "n_leaves")
        if not self._chunks:
            return {k: np.zeros(0) for k in names}
        return {k: np.concatenate([c[i] for c in self._chunks]) for i, k in enumerate(names)}


def snapshot_at(sim: Simulation, t) -> UniformField:
    """Advance to t (shortening the last step to land exactly) and return the level-L field."""
    if t < sim.t:
        raise ValueError(f"cannot go back from t={sim.t} to t={t}")
    sim.advance_to(t)
    return sim.snapshot()


def run(config: RunConfig, spec: Optional[ProblemSpec] = None) -> RunReport:
    sim = Simulation(config, spec)
    targets = sorted(set(config.snapshot_times) | {float(config.t_final)})
    snaps, leaves, mu, mass = {}, {}, {}, {}
    for t in targets:
        sim.advance_to(t)
        snaps[t] = sim.snapshot()
        leaves[t] = sim.leaf_rows()
        mu[t] = sim.compression()
        mass[t] = sim.mass()
    return RunReport(config, sim.epsilon_R, sim.dt_initial, sim.dt, sim.steps, sim.cpu_time,
                     snaps, leaves, mu, mass, sim.trace(), mass0=sim.mass0)
