"""Fixed-step RK4 propagation with a held input.

Lur'e plants whose nonlinearity has a kernel code go through
:mod:`qstc.kernels` (compiled when available); anything else uses a
vectorized numpy RK4 on the plant's ``f``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import kernels
from .errors import IntegrationError
from .plant import LurePlant, Plant

# fraction of dt below which a leftover partial step is skipped
PARTIAL_TOL = 1e-9


@dataclass(eq=False)
class Trajectory:
    """States on a fixed grid, plus an optional trailing partial step.

    ``times`` holds the actual sample times; all but possibly the last
    spacing equal ``dt``.
    """

    t0: float
    dt: float
    states: np.ndarray
    times: np.ndarray = None
    inputs: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        self.states = np.atleast_2d(np.asarray(self.states, dtype=float))
        if self.states.shape[0] == 0:
            raise ValueError("trajectory has no states")
        if not np.all(np.isfinite(self.states)):
            raise ValueError("trajectory contains non-finite states")
        if self.times is None:
            self.times = self.t0 + self.dt * np.arange(self.states.shape[0])
        else:
            self.times = np.asarray(self.times, dtype=float)
            if self.times.shape[0] != self.states.shape[0]:
                raise ValueError("times and states differ in length")

    def __len__(self):
        return self.states.shape[0]

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    @property
    def t_end(self) -> float:
        return float(self.times[-1])

    def at(self, t: float) -> np.ndarray:
        """Linear interpolation between grid states."""
        if t < self.times[0] - 1e-12 or t > self.times[-1] + 1e-12:
            raise ValueError(f"t={t} outside [{self.times[0]}, {self.times[-1]}]")
        return np.array([np.interp(t, self.times, self.states[:, i])
                         for i in range(self.states.shape[1])])


def _rk4_numpy(rhs, x0, dt, nsteps):
    out = np.empty((nsteps + 1, x0.size))
    out[0] = x = x0
    h2 = 0.5 * dt
    for k in range(nsteps):
        k1 = rhs(x)
        k2 = rhs(x + h2 * k1)
        k3 = rhs(x + h2 * k2)
        k4 = rhs(x + dt * k3)
        x = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(x)):
            raise IntegrationError(f"non-finite state after {k + 1} steps", (k + 1) * dt)
        out[k + 1] = x
    return out


def hold_steps(p: Plant, q, x0, dt: float, nsteps: int) -> np.ndarray:
    """``nsteps`` RK4 steps of ``x' = f(x, g(q))``; returns ``(nsteps+1, n)`` states."""
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    u = p.g(q)
    if isinstance(p, LurePlant) and p.kernel_ready:
        bias = p.B @ u
        return kernels.lure_rk4(p.A, bias, p.xi, p.eta, p.phi.kind, p.phi.params,
                                x0, float(dt), int(nsteps))
    return _rk4_numpy(lambda x: p.eval_f(x, u), x0, dt, nsteps)


def closed_steps(p: Plant, x0, dt: float, nsteps: int) -> np.ndarray:
    """``nsteps`` RK4 steps of the ideal loop ``x' = F(x, 0)``."""
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    if isinstance(p, LurePlant) and p.kernel_ready:
        return kernels.lure_rk4(p.closed_matrix, np.zeros(p.n), p.xi, p.eta, p.phi.kind,
                                p.phi.params, x0, float(dt), int(nsteps))
    return _rk4_numpy(p.F0, x0, dt, nsteps)


def _split(duration, dt):
    if duration < 0:
        raise ValueError(f"duration must be nonnegative, got {duration}")
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    n = int(math.floor(duration / dt + PARTIAL_TOL))
    rest = duration - n * dt
    return n, (rest if rest > PARTIAL_TOL * dt else 0.0)


def _assemble(stepper, x0, duration, dt, t0):
    n, rest = _split(duration, dt)
    states = stepper(x0, dt, n)
    times = t0 + dt * np.arange(n + 1)
    if rest > 0.0:
        tail = stepper(states[-1], rest, 1)[-1]
        states = np.vstack([states, tail])
        times = np.append(times, t0 + duration)
    return Trajectory(t0, dt, states, times)


def integrate_hold(p: Plant, q, x0, duration: float, dt: float, t0: float = 0.0) -> Trajectory:
    """RK4 for ``x' = f(x, g(q))`` from ``x0`` over ``duration`` (final partial step if needed)."""
    traj = _assemble(lambda x, h, k: hold_steps(p, q, x, h, k), x0, duration, dt, t0)
    traj.inputs = np.tile(p.g(q), (len(traj), 1))
    return traj


def predict(p: Plant, q, duration: float, dt: float) -> Trajectory:
    """Prediction ``x_q`` started at the quantized value itself."""
    return integrate_hold(p, q, q, duration, dt)


def integrate_closed(p: Plant, x0, duration: float, dt: float, t0: float = 0.0) -> Trajectory:
    """RK4 for the ideal closed loop ``x' = f(x, g(x))``."""
    traj = _assemble(lambda x, h, k: closed_steps(p, x, h, k), x0, duration, dt, t0)
    traj.inputs = np.array([p.g(x) for x in traj.states])
    return traj
