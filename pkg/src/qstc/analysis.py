"""Post-hoc checks of the closed-loop guarantees, the decay lemma, the (rho, sigma) region
and relative-error comparisons."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import AssumptionViolation
from .stm import (
    gamma_log,
    gamma_zoom,
    sigma_bounds_log,
    sigma_bounds_zoom,
    tau_min_log,
    tilde_tau_min,
)

MARGIN_TOL = 1e-9
UNDEFINED_NORM = 1e-12


def decay_w(t, eps: float, c: float):
    """``w(t) = e^{-ct}(1 - eps) + eps``."""
    _check_eps_c(eps, c)
    t = np.asarray(t, dtype=float)
    out = np.exp(-c * t) * (1.0 - eps) + eps
    return float(out) if out.ndim == 0 else out


def big_w(t, eps: float, c: float):
    """``W(t) = -ln w(t) / t`` for ``t > 0``."""
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise ValueError("W is defined for t > 0")
    out = -np.log(decay_w(t, eps, c)) / t
    return float(out) if np.ndim(out) == 0 else out


def _check_eps_c(eps, c):
    if not 0.0 < eps < 1.0:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    if not c > 0:
        raise ValueError(f"c must be positive, got {c}")


@dataclass(frozen=True)
class Check:
    name: str
    bound: str
    margin: float  # worst observed (bound - value); >= -MARGIN_TOL passes

    @property
    def passed(self) -> bool:
        return self.margin >= -MARGIN_TOL


@dataclass
class VerificationReport:
    scheme: str
    checks: list = field(default_factory=list)
    samples: int = 0
    min_interval: float = math.nan
    constants: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def get(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def lines(self):
        out = [f"{self.scheme}: samples on (0, T] = {self.samples}, "
               f"min inter-sampling time = {self.min_interval:.6g}"]
        for c in self.checks:
            out.append(f"  [{'PASS' if c.passed else 'FAIL'}] {c.name}: {c.bound}; "
                       f"worst margin {c.margin:.3e}")
        return out


def _rows(X, theta):
    return np.max(np.abs(X * theta), axis=1)


def _intervals(sim):
    """``(start_step, end_step, record)`` for each applied interval."""
    recs = sim.records
    N = sim.trajectory.states.shape[0] - 1
    out = []
    for j, r in enumerate(recs):
        if r.step >= N:
            break
        end = recs[j + 1].step if j + 1 < len(recs) else N
        out.append((r.step, end, r))
    return out


def verify_theorem(sim, scheme: Optional[str] = None) -> VerificationReport:
    """Re-check the guarantees of a finished run on every grid point.

    Never raises for failed checks; they show up as negative margins.
    """
    scheme = scheme or sim.scheme
    cert = sim.cert
    if cert is None:
        raise ValueError("verification needs the certificate the run used")
    X = sim.trajectory.states
    t = sim.trajectory.times
    ncl = _rows(X, cert.theta_cl)
    rep = VerificationReport(scheme, samples=sim.samples_in_horizon())
    ivs = sim.intervals()  # only the last record can be truncated, and it starts no interval here
    if len(ivs):
        rep.min_interval = float(ivs.min())
    p = sim.params

    if scheme == "ideal":
        bound = ncl[0] * np.exp(-cert.c * t)
        rep.checks.append(Check("decay", "||x(t)||_cl <= e^{-ct} ||x0||_cl",
                                float(np.min(bound - ncl))))
        return rep

    if scheme == "log":
        lo, s1 = sigma_bounds_log(p["rho"], cert)
        try:
            gam = gamma_log(p["sigma"], s1, cert.c, p["tau_max"])
        except AssumptionViolation:
            gam = 0.0
        rep.constants.update(gamma=gam, sigma1=s1)
        rep.checks.append(Check("sigma_window", f"{lo:.6g} < sigma < {s1:.6g}",
                                float(min(p["sigma"] - lo, s1 - p["sigma"]))))
        bound = np.exp(-gam * t) * ncl[0]
        rep.checks.append(Check("decay", f"||x(t)||_cl <= e^(-{gam:.6g} t) ||x0||_cl",
                                float(np.min(bound - ncl))))
        try:
            tmin = tau_min_log(p["rho"], p["sigma"], cert)
        except AssumptionViolation:
            tmin = 0.0
        dwell = min(p["tau_max"], tmin, tilde_tau_min(p["lam"], cert.d1, cert.d2))
        rep.constants["min_dwell"] = dwell
        rep.checks.append(Check(
            "min_dwell", f"t_(k+1) - t_k >= {dwell:.6g}",
            float(ivs.min() - dwell) if len(ivs) else 0.0))
    elif scheme == "zoom":
        M, h, lmax = p["M"], p["h"], p["ell_max"]
        try:
            gam = gamma_zoom(p["sigma"], cert, lmax, h)
        except AssumptionViolation:
            gam = 0.0
        rep.constants["gamma"] = gam
        try:
            lo, hi = sigma_bounds_zoom(h, M, p["Delta"], cert, p["lam"])
            win = min(p["sigma"] - lo, hi - p["sigma"])
        except AssumptionViolation as exc:
            lo, hi, win = math.nan, math.nan, exc.margin
        rep.checks.append(Check("sigma_window", f"{lo:.6g} <= sigma < {hi:.6g}", float(win)))
        bound = M * p["mu0"] * np.exp(-gam * t)
        rep.checks.append(Check("decay", f"||x(t)||_cl < M mu0 e^(-{gam:.6g} t)",
                                float(np.min(bound - ncl))))
        worst = math.inf
        for iv in ivs:
            ell = iv / h
            off = abs(ell - round(ell)) * h
            worst = min(worst, -off, (round(ell) - 1) * h, (lmax - round(ell)) * h)
        rep.checks.append(Check("dwell_grid", f"t_(k+1) - t_k in {{h, ..., {lmax} h}}",
                                float(worst) if math.isfinite(worst) else 0.0))
        rng = [M * r.mu_k - cert.cl_norm(r.x_at_tk) for r in sim.records]
        rep.checks.append(Check("range", "||x(t_k)||_cl < M mu_k", float(min(rng))))
    else:
        raise ValueError(f"unknown scheme {scheme!r}")

    worst = math.inf
    for a, b, r in _intervals(sim):
        e = _rows(X[a:b] - r.q_k, cert.theta_op)
        if scheme == "log":
            thr = p["sigma"] * cert.cl_norm(r.q_k)
        else:
            thr = p["sigma"] * p["M"] * r.mu_k
        worst = min(worst, float(thr - e.max()))
    bound = ("||q_k - x(t)||_op <= sigma ||q_k||_cl" if scheme == "log"
             else "||q_k - x(t)||_op <= sigma M mu_k")
    rep.checks.append(Check("error_contract", bound, worst if math.isfinite(worst) else 0.0))
    return rep


@dataclass(frozen=True)
class RegionTable:
    rows: tuple  # (rho, lower, upper, feasible)
    rho_min: float
    crossing: float
    upper_at_one: float


def stabilizable_region(rho_grid: Sequence[float], cert, tol: float = 1e-10) -> RegionTable:
    """Evaluate the sigma window over ``rho_grid`` and locate where the bounds cross."""
    rows = []
    for rho in rho_grid:
        if not 0.0 < rho <= 1.0:
            raise ValueError(f"rho must lie in (0, 1], got {rho}")
        lo, hi = sigma_bounds_log(float(rho), cert)
        rows.append((float(rho), lo, hi, bool(lo < hi)))

    def gap(r):
        lo, hi = sigma_bounds_log(r, cert)
        return lo - hi

    a, b = 1e-12, 1.0
    if gap(b) >= 0:
        rho_min = math.nan
    else:
        # gap is decreasing in rho
        while b - a > tol:
            m = 0.5 * (a + b)
            if gap(m) > 0:
                a = m
            else:
                b = m
        rho_min = 0.5 * (a + b)
    crossing = sigma_bounds_log(rho_min, cert)[1] if math.isfinite(rho_min) else math.nan
    return RegionTable(tuple(rows), rho_min, crossing, sigma_bounds_log(1.0, cert)[1])


def relative_error(sim, ideal) -> np.ndarray:
    """``||x - x_ideal||_2 / ||x_ideal||_2`` per grid point; ``nan`` where undefined."""
    X, Y = sim.trajectory.states, ideal.trajectory.states
    if X.shape != Y.shape or not np.allclose(sim.trajectory.times, ideal.trajectory.times):
        raise ValueError("runs must share the same grid and horizon")
    den = np.linalg.norm(Y, axis=1)
    num = np.linalg.norm(X - Y, axis=1)
    out = np.full(den.shape, np.nan)
    ok = den >= UNDEFINED_NORM
    out[ok] = num[ok] / den[ok]
    return out


def linear_fit(t, y):
    """Least-squares line through ``(t, y)``; returns ``(slope, intercept, r2)``."""
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    ok = np.isfinite(y)
    t, y = t[ok], y[ok]
    A = np.vstack([t, np.ones_like(t)]).T
    (slope, icpt), *_ = np.linalg.lstsq(A, y, rcond=None)
    ss_res = float(np.sum((y - (slope * t + icpt)) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(icpt), r2


def window(t, y, a, b):
    t = np.asarray(t)
    m = (t >= a - 1e-12) & (t <= b + 1e-12)
    return t[m], np.asarray(y)[m]
