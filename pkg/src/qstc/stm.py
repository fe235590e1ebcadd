"""Self-triggering mechanisms and their closed-form design constants.

Both mechanisms predict ``x_q`` (the open-loop solution started at the
quantized sample with the input held at ``g(q)``) on a grid of step
``dt_pred``, look for the first threshold or ball-exit crossing, and refine
it by bisection.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import AssumptionViolation, STMError
from .integrate import hold_steps

BISECT_TOL = 1e-7
CHUNK = 256
DT_PRED = 1e-4
FLOOR_EPS = 1e-9


class TriggerCause(str, enum.Enum):
    THRESHOLD = "threshold"
    BALL_EXIT = "ball_exit"
    MAX_TIME = "max_time"


# ---------------------------------------------------------------- constants

def nu(t, d1: float, d2: float):
    """Growth function ``d2 (e^{d1 t} - 1) / d1`` (``d2 t`` when ``d1 = 0``)."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("nu needs t >= 0")
    out = d2 * t if d1 == 0 else d2 * np.expm1(d1 * t) / d1
    return float(out) if out.ndim == 0 else out


def tilde_tau_min(lam: float, d1: float, d2: float) -> float:
    """Solution of ``lam (1 + nu(t)) = 1``."""
    if not 0.0 < lam < 1.0:
        raise ValueError(f"lambda must lie in (0, 1), got {lam}")
    r = (1.0 - lam) / (d2 * lam)
    return r if d1 == 0 else math.log1p(d1 * r) / d1


def tau_min_log(rho: float, sigma: float, cert) -> float:
    """Positive root of ``L_op (1-rho)/(1+rho) e^{d1 t} + nu(t) = sigma / Gamma``."""
    G, L, d1, d2 = cert.Gamma, cert.L_op, cert.d1, cert.d2
    base = L * (1.0 - rho) / (1.0 + rho)
    if not G * base < sigma:
        raise AssumptionViolation(
            "rho_sigma", f"need Gamma L_op (1-rho)/(1+rho) = {G * base!r} < sigma = {sigma!r}",
            sigma - G * base,
        )
    if d1 == 0:
        return (sigma / G - base) / d2
    num = sigma * (1 + rho) * d1 + G * (1 + rho) * d2
    den = G * L * (1 - rho) * d1 + G * (1 + rho) * d2
    return math.log(num / den) / d1


def sigma_bounds_log(rho: float, cert):
    """``(Gamma L_op (1-rho)/(1+rho), 2 c rho / (alpha L_cl (1+rho)))``."""
    if not 0.0 < rho <= 1.0:
        raise ValueError(f"rho must lie in (0, 1], got {rho}")
    lower = cert.Gamma * cert.L_op * (1.0 - rho) / (1.0 + rho)
    upper = 2.0 * cert.c * rho / (cert.alpha * cert.L_cl * (1.0 + rho))
    return lower, upper


def _decay_rate(ratio, c, T):
    return -math.log(math.exp(-c * T) * (1.0 - ratio) + ratio) / T


def gamma_log(sigma: float, sigma1: float, c: float, tau_max: float) -> float:
    """Guaranteed decay rate of the logarithmic scheme."""
    if not sigma < sigma1:
        raise AssumptionViolation("sigma_upper", f"sigma={sigma!r} must be below sigma1={sigma1!r}",
                                  sigma1 - sigma)
    return _decay_rate(sigma / sigma1, c, tau_max)


def _zoom_ratio(sigma, cert):
    r = cert.alpha * sigma / cert.c
    if not r < 1.0:
        raise AssumptionViolation(
            "sigma_upper", f"alpha sigma / c = {r!r} must be below 1", 1.0 - r
        )
    return r


def sigma_bounds_zoom(h: float, M: float, Delta: float, cert, lam: Optional[float] = None):
    """Lower and upper bound on sigma for the zooming scheme.

    When ``lam`` is given, ``h <= tilde_tau_min(lam)`` is enforced.
    """
    if not h > 0:
        raise ValueError(f"h must be positive, got {h}")
    if lam is not None:
        ttm = tilde_tau_min(lam, cert.d1, cert.d2)
        if h > ttm:
            raise AssumptionViolation("h_bound", f"h={h!r} exceeds tilde_tau_min={ttm!r}", ttm - h)
    v = nu(h, cert.d1, cert.d2)
    lower = (Delta / M) * (math.exp(cert.d1 * h) + v) + cert.Gamma * v
    return lower, cert.c / cert.alpha


def zoom_update(mu: float, delta_t: float, cert, sigma: float) -> float:
    r = _zoom_ratio(sigma, cert)
    return (math.exp(-cert.c * delta_t) * (1.0 - r) + r) * mu


def gamma_zoom(sigma: float, cert, ell_max: int, h: float) -> float:
    """Guaranteed decay rate of the zooming scheme."""
    return _decay_rate(_zoom_ratio(sigma, cert), cert.c, ell_max * h)


# ---------------------------------------------------------------- configs

@dataclass(frozen=True)
class StmLogConfig:
    sigma: float
    tau_max: float
    lam: float
    S: Optional[tuple] = None

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if not self.tau_max > 0:
            raise ValueError(f"tau_max must be positive, got {self.tau_max}")
        if not 0.0 < self.lam < 1.0:
            raise ValueError(f"lambda must lie in (0, 1), got {self.lam}")
        if self.S is not None:
            S = tuple(sorted(float(s) for s in self.S))
            if not S or S[0] <= 0:
                raise ValueError("S must be a nonempty set of positive times")
            object.__setattr__(self, "S", S)

    def validate(self, rho: float, cert, lam0: Optional[float] = None) -> dict:
        """Check every theorem precondition; return the derived constants.

        Raises :class:`AssumptionViolation` naming the violated inequality
        and its margin.
        """
        lo, hi = sigma_bounds_log(rho, cert)
        if not self.sigma <= cert.sigma0:
            raise AssumptionViolation("sigma0", f"sigma={self.sigma!r} exceeds sigma0={cert.sigma0!r}",
                                      cert.sigma0 - self.sigma)
        if not lo < self.sigma:
            raise AssumptionViolation(
                "thres_cond_lower", f"sigma={self.sigma!r} must exceed {lo!r}", self.sigma - lo)
        if not self.sigma < hi:
            raise AssumptionViolation(
                "thres_cond_upper", f"sigma={self.sigma!r} must be below sigma1={hi!r}", hi - self.sigma)
        if lam0 is not None and not lam0 < self.lam:
            raise AssumptionViolation(
                "lambda", f"lambda={self.lam!r} must exceed lambda0={lam0!r}", self.lam - lam0)
        tmin = tau_min_log(rho, self.sigma, cert)
        ttmin = tilde_tau_min(self.lam, cert.d1, cert.d2)
        dwell = min(self.tau_max, tmin, ttmin)
        if self.S is not None:
            if not (self.S[0] <= min(tmin, ttmin) <= self.S[-1] <= self.tau_max):
                raise AssumptionViolation(
                    "S_window", "S must satisfy inf S <= min(tau_min, tilde_tau_min) <= sup S <= tau_max",
                    min(min(tmin, ttmin) - self.S[0], self.tau_max - self.S[-1]))
            dwell = self.S[0] if self.S[0] < dwell else dwell
        return {"sigma_lower": lo, "sigma1": hi, "tau_min": tmin, "tilde_tau_min": ttmin,
                "min_dwell": dwell, "gamma": gamma_log(self.sigma, hi, cert.c, self.tau_max)}


@dataclass(frozen=True)
class StmZoomConfig:
    sigma: float
    h: float
    ell_max: int
    lam: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if not self.h > 0:
            raise ValueError(f"h must be positive, got {self.h}")
        if int(self.ell_max) != self.ell_max or self.ell_max < 1:
            raise ValueError(f"ell_max must be a positive integer, got {self.ell_max}")
        object.__setattr__(self, "ell_max", int(self.ell_max))
        if not 0.0 < self.lam < 1.0:
            raise ValueError(f"lambda must lie in (0, 1), got {self.lam}")

    def validate(self, M: float, Delta: float, cert) -> dict:
        if not self.sigma <= cert.sigma0:
            raise AssumptionViolation("sigma0", f"sigma={self.sigma!r} exceeds sigma0={cert.sigma0!r}",
                                      cert.sigma0 - self.sigma)
        lo, hi = sigma_bounds_zoom(self.h, M, Delta, cert, self.lam)
        if not lo <= self.sigma:
            raise AssumptionViolation(
                "thres_cond_varying_lower", f"sigma={self.sigma!r} must be at least {lo!r}", self.sigma - lo)
        if not self.sigma < hi:
            raise AssumptionViolation(
                "thres_cond_varying_upper", f"sigma={self.sigma!r} must be below c/alpha={hi!r}",
                hi - self.sigma)
        return {"sigma_lower": lo, "sigma_upper": hi,
                "tilde_tau_min": tilde_tau_min(self.lam, cert.d1, cert.d2),
                "gamma": gamma_zoom(self.sigma, cert, self.ell_max, self.h)}


# ---------------------------------------------------------------- triggering

@dataclass(frozen=True)
class StmDecision:
    """Outcome of one STM evaluation.

    ``tau`` is the refined crossing (violating side) or the cap;
    ``tau_safe`` is the last time known to comply. ``steps`` is ``ell``
    for the zooming scheme. ``flagged`` marks a condition already violated
    where the mechanism does not look (``tau <= h`` for zoom, ``tau = 0``
    for log).
    """

    tau: float
    tau_safe: float
    cause: TriggerCause
    steps: Optional[int] = None
    flagged: bool = False


def _op_rows(X, theta):
    return np.max(np.abs(X * theta), axis=1)


def _scan(plant, q, dt, n_total, start, psi, thr, R2, theta_op):
    """Walk the prediction grid and return ``(index, cause, state_before)`` of the first violation.

    Grid indices ``< start`` are not examined. ``index`` is ``None`` when
    nothing is violated up to ``n_total``.
    """
    x = np.asarray(q, dtype=float)
    k0 = 0
    while k0 < n_total:
        m = min(CHUNK, n_total - k0)
        X = hold_steps(plant, q, x, dt, m)
        taus = (k0 + np.arange(m + 1)) * dt
        exit_ = _op_rows(X, theta_op) >= R2
        trig = psi(taus, X) > thr
        first = max(start - k0, 0)
        bad = np.flatnonzero((exit_ | trig)[first:])
        if bad.size:
            i = first + int(bad[0])
            cause = TriggerCause.BALL_EXIT if exit_[i] else TriggerCause.THRESHOLD
            return k0 + i, cause, (X[i - 1] if i > 0 else X[0])
        x = X[-1]
        k0 += m
    return None, TriggerCause.MAX_TIME, None


def _bisect(plant, q, x_base, t_base, t_lo, t_hi, violated):
    """Shrink ``(t_lo, t_hi]`` around the first violation.

    States off the grid come from a single RK4 step out of ``x_base``
    (the last compliant grid state, at ``t_base``).
    """
    while t_hi - t_lo > BISECT_TOL:
        t = 0.5 * (t_lo + t_hi)
        x = hold_steps(plant, q, x_base, t - t_base, 1)[-1]
        if violated(t, x):
            t_hi = t
        else:
            t_lo = t
    return t_lo, t_hi


def _grid(span, dt_pred, unit=None):
    """Step count and adjusted step so that ``span`` (and ``unit``) are grid points."""
    base = span if unit is None else unit
    per = max(1, math.ceil(base / dt_pred - FLOOR_EPS))
    dt = base / per
    return int(round(span / dt)), dt


def _first_crossing(plant, q, cert, psi, thr, T, dt_pred, start_time=0.0, unit=None):
    n_total, dt = _grid(T, dt_pred, unit)
    start = int(round(start_time / dt))
    theta_op = cert.theta_op
    R2 = cert.R2
    idx, cause, x_prev = _scan(plant, q, dt, n_total, start, psi, thr, R2, theta_op)
    if idx is None:
        return None, None, cause
    t_hi = idx * dt
    if idx == 0 or idx <= start:
        return t_hi, t_hi, cause

    def violated(t, x):
        x = x.reshape(1, -1)
        return bool(_op_rows(x, theta_op)[0] >= R2 or psi(np.array([t]), x)[0] > thr)

    t_base = (idx - 1) * dt
    t_lo, t_hi = _bisect(plant, q, x_prev, t_base, t_base, t_hi, violated)
    return t_lo, t_hi, cause


def psi_log(taus, X, q, rho, cert):
    """``L_op (1-rho)/(1+rho) e^{d1 tau} ||q||_op + ||x_q(tau) - q||_op`` along a prediction."""
    th = cert.theta_op
    qn = float(np.max(np.abs(q * th)))
    base = cert.L_op * (1.0 - rho) / (1.0 + rho)
    return base * np.exp(cert.d1 * np.asarray(taus)) * qn + _op_rows(np.atleast_2d(X) - q, th)


def psi_zoom(taus, X, q, mu, Delta, cert):
    """``Delta mu e^{d1 tau} + ||x_q(tau) - q||_op`` along a prediction."""
    return Delta * mu * np.exp(cert.d1 * np.asarray(taus)) + _op_rows(np.atleast_2d(X) - q,
                                                                      cert.theta_op)


def floor_to_set(tau: float, S: Sequence[float]) -> float:
    """Largest element of ``S`` not exceeding ``tau``."""
    cands = [s for s in S if s <= tau + 1e-12]
    if not cands:
        raise STMError(f"no admissible inter-sampling time in S below {tau!r}")
    return max(cands)


def next_time_log(plant, q, cert, cfg: StmLogConfig, rho: float,
                  dt_pred: float = DT_PRED) -> StmDecision:
    """Next inter-sampling time of the logarithmic scheme from the sample ``q``."""
    q = np.asarray(q, dtype=float).reshape(-1)
    thr = cfg.sigma * float(np.max(np.abs(q * cert.theta_cl)))
    t_lo, t_hi, cause = _first_crossing(
        plant, q, cert, lambda t, X: psi_log(t, X, q, rho, cert), thr, cfg.tau_max, dt_pred)
    if t_hi is None:
        tau, safe = cfg.tau_max, cfg.tau_max
    else:
        tau, safe = t_hi, t_lo
    flagged = safe <= 0.0
    if cfg.S is not None:
        tau = safe = floor_to_set(safe, cfg.S)
    return StmDecision(tau, safe, cause, flagged=flagged)


def floor_h(tau: float, h: float) -> int:
    return int(math.floor(tau / h + FLOOR_EPS))


def next_steps_zoom(plant, q, mu: float, cert, cfg: StmZoomConfig, M: float, Delta: float,
                    dt_pred: float = DT_PRED) -> StmDecision:
    """Number of periods ``ell`` until the next sample of the zooming scheme."""
    q = np.asarray(q, dtype=float).reshape(-1)
    thr = cfg.sigma * M * mu
    T = cfg.ell_max * cfg.h
    t_lo, t_hi, cause = _first_crossing(
        plant, q, cert, lambda t, X: psi_zoom(t, X, q, mu, Delta, cert), thr, T, dt_pred,
        start_time=cfg.h, unit=cfg.h)
    if t_hi is None:
        return StmDecision(T, T, TriggerCause.MAX_TIME, cfg.ell_max)
    flagged = t_lo <= cfg.h * (1.0 + FLOOR_EPS)
    ell = min(max(floor_h(t_lo, cfg.h), 1), cfg.ell_max)
    # a crossing exactly at ell_max h leaves the open scan interval untouched
    if ell == cfg.ell_max:
        cause = TriggerCause.MAX_TIME
    return StmDecision(ell * cfg.h, t_lo, cause, ell, flagged)
