"""Closed-loop runs: sample, quantize, pick the next sampling time, hold, repeat."""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import AssumptionViolation
from .integrate import Trajectory, closed_steps, hold_steps
from .plant import LurePlant
from .quantize import LogQuantizer, ZoomQuantizer
from .stm import (
    DT_PRED,
    StmLogConfig,
    StmZoomConfig,
    TriggerCause,
    next_steps_zoom,
    next_time_log,
    zoom_update,
)

SNAP_EPS = 1e-6

__all__ = ["SamplingRecord", "SimResult", "TriggerCause", "run_log", "run_zoom", "run_ideal",
           "run_many"]


@dataclass(frozen=True)
class SamplingRecord:
    k: int
    t_k: float
    step: int  # grid index of t_k
    x_at_tk: np.ndarray
    q_k: np.ndarray
    tau_or_ell: float  # seconds (log) or periods (zoom) actually applied
    tau_raw: float  # STM output before snapping or truncation
    cause: TriggerCause
    mu_k: Optional[float] = None
    flagged: bool = False
    truncated: bool = False
    in_range: bool = True


@dataclass(eq=False)
class SimResult:
    scheme: str  # "log", "zoom" or "ideal"
    trajectory: Trajectory
    inputs: np.ndarray  # input applied on [t_i, t_{i+1}) for each grid step i
    records: list = field(default_factory=list)
    cert: object = None
    params: dict = field(default_factory=dict)
    verification: object = None

    @property
    def horizon(self) -> float:
        return float(self.trajectory.times[-1])

    @property
    def sample_times(self) -> np.ndarray:
        return np.array([r.t_k for r in self.records])

    def samples_in_horizon(self) -> int:
        """Sampling instants in ``(0, horizon]``."""
        return int(sum(1 for r in self.records if r.step > 0))

    def intervals(self) -> np.ndarray:
        """Applied inter-sampling times of completed intervals."""
        return np.array([self.records[i + 1].t_k - self.records[i].t_k
                         for i in range(len(self.records) - 1)])


def _grid_steps(horizon, dt):
    if not dt > 0 or not horizon > 0:
        raise ValueError("horizon and dt must be positive")
    n = int(round(horizon / dt))
    if abs(n * dt - horizon) > 1e-9 * max(horizon, 1.0):
        raise ValueError(f"horizon {horizon} is not a multiple of dt {dt}")
    return n


def _check_start(x0, bound, norm, strict, what):
    nx = norm(x0)
    if strict and not nx < bound:
        raise AssumptionViolation(
            "initial_ball", f"||x0||_cl = {nx!r} must be below {what} = {bound!r}", bound - nx)


def _run(plant, x0, horizon, dt, decide, record_extra, quantize, finish):
    """Shared sample-and-hold loop.

    ``decide(k, q, x)`` returns ``(nsteps, tau_applied, tau_raw, cause, flagged, extra)``.
    """
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    N = _grid_steps(horizon, dt)
    states = np.empty((N + 1, plant.n))
    states[0] = x0
    inputs = np.empty((N, plant.m))
    records = []
    i = 0
    k = 0
    while True:
        x = states[i]
        q = quantize(k, x)
        nsteps, applied, raw, cause, flagged, extra = decide(k, q, x)
        nsteps = max(int(nsteps), 1)
        end = min(i + nsteps, N)
        truncated = i + nsteps > N or i == N
        if i < N:
            states[i:end + 1] = hold_steps(plant, q, x, dt, end - i)
            inputs[i:end] = plant.g(q)
        records.append(SamplingRecord(
            k=k, t_k=i * dt, step=i, x_at_tk=x.copy(), q_k=q, tau_or_ell=applied, tau_raw=raw,
            cause=cause, flagged=flagged, truncated=truncated, **record_extra(k, x, extra)))
        finish(k, nsteps)
        if end >= N and (i == N or i + nsteps != N):
            break
        i = end
        k += 1
    traj = Trajectory(0.0, dt, states)
    return traj, inputs, records


def run_log(plant, cert, quant: LogQuantizer, cfg: StmLogConfig, x0, horizon: float,
            dt: float, dt_pred: float = DT_PRED, strict: bool = True) -> SimResult:
    """Closed loop with the logarithmic quantizer and its STM.

    With ``strict`` the initial state must lie in ``B_cl(R / L_cl)``.
    """
    _check_start(x0, cert.R / cert.L_cl, cert.cl_norm, strict, "R/L_cl")

    def decide(k, q, x):
        d = next_time_log(plant, q, cert, cfg, quant.rho, dt_pred)
        nsteps = math.floor(d.tau_safe / dt + SNAP_EPS)
        return nsteps, max(nsteps, 1) * dt, d.tau, d.cause, d.flagged, None

    traj, inputs, records = _run(
        plant, x0, horizon, dt, decide, lambda k, x, e: {}, lambda k, x: quant(x),
        lambda k, n: None)
    res = SimResult("log", traj, inputs, records, cert,
                    {"rho": quant.rho, "chi0": quant.chi0, "sigma": cfg.sigma,
                     "tau_max": cfg.tau_max, "lam": cfg.lam, "dt": dt, "dt_pred": dt_pred})
    return _attach_verification(res)


def run_zoom(plant, cert, quant: ZoomQuantizer, cfg: StmZoomConfig, x0, horizon: float,
             dt: float, dt_pred: float = DT_PRED, strict: bool = True) -> SimResult:
    """Closed loop with the zooming quantizer; ``mu`` shrinks after every interval."""
    _check_start(x0, quant.M * quant.mu0, cert.cl_norm, strict, "M mu0")
    per = int(round(cfg.h / dt))
    if per < 1 or abs(per * dt - cfg.h) > 1e-9 * cfg.h:
        raise ValueError(f"h={cfg.h} must be a multiple of dt={dt}")
    mus = [quant.mu0]

    def quantize(k, x):
        return quant.at(mus[k])(x)

    def decide(k, q, x):
        d = next_steps_zoom(plant, q, mus[k], cert, cfg, quant.M, quant.Delta, dt_pred)
        return d.steps * per, d.steps, d.tau_safe, d.cause, d.flagged, None

    def extra(k, x, _):
        return {"mu_k": mus[k], "in_range": bool(cert.cl_norm(x) < quant.M * mus[k])}

    def finish(k, nsteps):
        mus.append(zoom_update(mus[k], nsteps * dt, cert, cfg.sigma))

    traj, inputs, records = _run(plant, x0, horizon, dt, decide, extra, quantize, finish)
    res = SimResult("zoom", traj, inputs, records, cert,
                    {"M": quant.M, "Delta": quant.Delta, "mu0": quant.mu0, "sigma": cfg.sigma,
                     "h": cfg.h, "ell_max": cfg.ell_max, "lam": cfg.lam, "dt": dt,
                     "dt_pred": dt_pred})
    return _attach_verification(res)


def run_ideal(plant, x0, horizon: float, dt: float, cert=None) -> SimResult:
    """Continuous state feedback ``u = g(x)`` on the same grid."""
    N = _grid_steps(horizon, dt)
    states = closed_steps(plant, x0, dt, N)
    inputs = _batch_inputs(plant, states[:-1])
    res = SimResult("ideal", Trajectory(0.0, dt, states), inputs, [], cert, {"dt": dt})
    return _attach_verification(res) if cert is not None else res


def _batch_inputs(plant, X):
    K = getattr(plant, "K", None)
    if isinstance(K, np.ndarray) and isinstance(plant, LurePlant):
        return X @ K.T
    return np.array([plant.g(x) for x in X]).reshape(X.shape[0], plant.m)


def _attach_verification(res):
    from .analysis import verify_theorem

    res.verification = verify_theorem(res)
    return res


def run_many(fn: Callable, tasks: Sequence, jobs: int = 1) -> list:
    """Evaluate ``fn`` over ``tasks`` in order, optionally in worker processes."""
    tasks = list(tasks)
    if jobs <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(fn, tasks))
