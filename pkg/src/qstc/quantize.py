"""Logarithmic and zooming quantizers."""
from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import AssumptionViolation


def _round_half_away(z: np.ndarray) -> np.ndarray:
    return np.sign(z) * np.floor(np.abs(z) + 0.5)


@dataclass(frozen=True, eq=False)
class LogQuantizer:
    """Elementwise logarithmic quantizer with levels ``rho**j * chi0 / theta_cl[i]``.

    If ``cert`` is given, the admissible window for ``chi0``
    (``R/L_cl2 <= chi0 < 2R/(L_cl2 (1+rho))``) is checked here.
    """

    rho: float
    chi0: float
    theta_cl: np.ndarray
    cert: object = field(default=None, repr=False)

    def __post_init__(self):
        if not 0.0 < self.rho < 1.0:
            raise ValueError(f"rho must lie in (0, 1), got {self.rho}")
        if not self.chi0 > 0.0:
            raise ValueError(f"chi0 must be positive, got {self.chi0}")
        th = np.asarray(self.theta_cl, dtype=float).reshape(-1).copy()
        if np.any(th <= 0):
            raise ValueError("theta_cl must be strictly positive")
        th.setflags(write=False)
        object.__setattr__(self, "theta_cl", th)
        if self.cert is not None:
            check_log_window(self.rho, self.chi0, self.cert)

    @property
    def base_levels(self) -> np.ndarray:
        return self.chi0 / self.theta_cl

    def __call__(self, x) -> np.ndarray:
        return q_log(x, self)


def check_log_window(rho, chi0, cert):
    lo = cert.R / cert.L_cl2
    hi = 2.0 * cert.R / (cert.L_cl2 * (1.0 + rho))
    if chi0 < lo:
        raise AssumptionViolation(
            "chi0_window", f"chi0={chi0!r} below R/L_cl2={lo!r}", chi0 - lo
        )
    if not chi0 < hi:
        raise AssumptionViolation(
            "chi0_window", f"chi0={chi0!r} not below 2R/(L_cl2(1+rho))={hi!r}", hi - chi0
        )


def _q_log_scalar(z: float, chi: float, rho: float, log_rho: float) -> float:
    if z == 0.0:
        return 0.0
    a = abs(z)
    # bin index j with rho^(j+1) chi <= a < rho^j chi, then correct for rounding
    j = math.ceil(math.log(a / chi) / log_rho) - 1
    while a >= chi * rho**j:
        j -= 1
    while a < chi * rho ** (j + 1):
        j += 1
    mid = 0.5 * (chi * rho**j + chi * rho ** (j + 1))
    return mid if z > 0 else -mid


def q_log(x, q: LogQuantizer) -> np.ndarray:
    """Quantize each coordinate to the midpoint of its logarithmic bin; 0 maps to 0."""
    v = np.asarray(x, dtype=float).reshape(-1)
    levels = q.base_levels
    if v.size != levels.size:
        raise ValueError(f"state has length {v.size}, quantizer expects {levels.size}")
    lr = math.log(q.rho)
    return np.array([_q_log_scalar(float(z), float(c), q.rho, lr) for z, c in zip(v, levels)])


def lambda0_log(q: LogQuantizer, cert) -> float:
    """Containment ratio ``(1+rho) L_cl2 chi0 / (2R)``; must be < 1."""
    check_log_window(q.rho, q.chi0, cert)
    return (1.0 + q.rho) * cert.L_cl2 * q.chi0 / (2.0 * cert.R)


def log_sector_constants(rho, L_cl=1.0, L_op=1.0):
    """``(growth, error)`` factors of the logarithmic quantizer.

    ``||Q(x)||_cl <= growth ||x||_cl`` and
    ``||Q(x) - x||_op <= error ||Q(x)||_op``.
    """
    return L_cl * (1.0 + rho) / (2.0 * rho), L_op * (1.0 - rho) / (1.0 + rho)


@dataclass(eq=False)
class ZoomQuantizer:
    """Uniform quantizer ``Q_mu(x) = mu Q(x / mu)`` with per-coordinate step ``2 Delta / theta_op[i]``.

    ``mu`` is the only mutable field. ``mu0`` keeps the value at
    construction, which is what the initial-zoom condition constrains.
    """

    M: float
    Delta: float
    mu: float
    theta_op: np.ndarray
    cert: object = field(default=None, repr=False)
    mu0: float = field(init=False)

    def __post_init__(self):
        for name in ("M", "Delta", "mu"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        th = np.asarray(self.theta_op, dtype=float).reshape(-1).copy()
        if np.any(th <= 0):
            raise ValueError("theta_op must be strictly positive")
        th.setflags(write=False)
        self.theta_op = th
        self.mu0 = float(self.mu)
        if self.cert is not None:
            lambda_zoom(self, self.cert)

    @property
    def steps(self) -> np.ndarray:
        return 2.0 * self.Delta / self.theta_op

    def at(self, mu: float) -> "ZoomQuantizer":
        """Copy with a different current zoom parameter (``mu0`` is kept)."""
        out = copy.copy(self)
        out.mu = float(mu)
        return out

    def __call__(self, x) -> np.ndarray:
        return q_zoom(x, self)


def q_zoom(x, q: ZoomQuantizer) -> np.ndarray:
    """Nearest point of the grid ``mu * 2 Delta / theta_op[i] * Z``; ties away from zero."""
    v = np.asarray(x, dtype=float).reshape(-1)
    steps = q.steps
    if v.size != steps.size:
        raise ValueError(f"state has length {v.size}, quantizer expects {steps.size}")
    mu = q.mu
    z = v / mu
    return mu * (steps * _round_half_away(z / steps))


def lambda_zoom(q: ZoomQuantizer, cert) -> float:
    """``mu0 (M + Gamma Delta) / R``; raises unless < 1."""
    lam = q.mu0 * (q.M + cert.Gamma * q.Delta) / cert.R
    if not lam < 1.0:
        bound = cert.R / (q.M + cert.Gamma * q.Delta)
        raise AssumptionViolation(
            "mu0_bound",
            f"mu0={q.mu0!r} must be below R/(M+Gamma*Delta)={bound!r}",
            bound - q.mu0,
        )
    return lam
