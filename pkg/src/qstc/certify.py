"""Certification of Lur'e plants with diagonally weighted infinity norms.

Given a contraction rate ``c`` and a growth rate ``d1`` this finds (or
verifies) weights ``theta_cl``, ``theta_op`` such that

* ``mu_cl(A + BK + kappa xi eta^T) <= -c``  for kappa in [kappa_min, kappa_max]
* ``mu_op(A + kappa xi eta^T) <= d1``       for the same kappa range

and derives every constant the design formulas need.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import CertificationError, SolverError
from .lp import linprog_max
from .norms import (
    INF,
    WeightedNorm,
    dual_one_norm,
    gamma_constant,
    induced_norm_inf,
    metzler_majorant,
)

KAPPA_SAMPLES = 4096
SLACK_TOL = 1e-12
V_MIN = 1e-6
V_MAX = 1e6


def kappa_bounds(phi_prime: Callable, R0: float, decimals: Optional[int] = 2,
                 samples: int = KAPPA_SAMPLES):
    """Infimum and supremum of ``phi_prime`` on ``(-R0, R0)``.

    Dense sampling plus the endpoint limits, refined locally around the
    sampled extremes, then rounded outward to ``decimals`` places
    (``None`` keeps full precision).
    """
    from scipy.optimize import minimize_scalar

    if not R0 > 0:
        raise ValueError(f"R0 must be positive, got {R0}")
    if math.isinf(R0):
        s = np.linspace(-1.0, 1.0, samples)[1:-1]
        z = np.tan(0.5 * math.pi * s)
        z = np.concatenate([[-1e12], z, [1e12]])
    else:
        z = np.linspace(-R0, R0, samples)
    with np.errstate(all="ignore"):
        vals = np.array([float(phi_prime(float(v))) for v in z])
    if not np.all(np.isfinite(vals)) or np.max(np.abs(vals)) >= 1e10:
        raise CertificationError("kappa_bounds", "phi' is unbounded on (-R0, R0)")

    lo, hi = float(vals.min()), float(vals.max())
    for sign, idx in ((1.0, int(vals.argmin())), (-1.0, int(vals.argmax()))):
        a = z[max(idx - 1, 0)]
        b = z[min(idx + 1, z.size - 1)]
        if b > a:
            res = minimize_scalar(lambda t: sign * float(phi_prime(t)), bounds=(a, b),
                                  method="bounded", options={"xatol": 1e-12})
            v = float(phi_prime(res.x))
            lo, hi = (min(lo, v), hi) if sign > 0 else (lo, max(hi, v))
    if decimals is not None:
        scale = 10.0**decimals
        lo = math.floor(round(lo * scale, 9)) / scale
        hi = math.ceil(round(hi * scale, 9)) / scale
    return lo, hi


def lp_slacks(mats: Sequence, rate: float, v) -> np.ndarray:
    """Slacks ``-(ceil(M)_Mzr v + rate v)`` for every matrix and row (shape ``(len(mats), n)``)."""
    v = np.asarray(v, dtype=float)
    return np.array([-(metzler_majorant(M) @ v + rate * v) for M in mats])


def lp_feasible_theta(mats: Sequence, rate: float) -> Optional[np.ndarray]:
    """Find ``v > 0`` with ``ceil(M)_Mzr v <= -rate v`` for every ``M``; return ``v`` or ``None``.

    ``v`` is normalized to ``v[0] = 1`` and maximizes a shared slack ``t``
    over all inequalities. The weighting vector is ``theta = 1 / v``.
    """
    mats = [np.asarray(M, dtype=float) for M in mats]
    if not mats:
        raise ValueError("need at least one matrix")
    n = mats[0].shape[0]
    if any(M.shape != (n, n) for M in mats):
        raise ValueError("all matrices must be square with the same size")
    G = np.vstack([metzler_majorant(M) + rate * np.eye(n) for M in mats])
    # variables: w = v - V_MIN (n), t_plus, t_minus
    A_ub = np.hstack([G, np.ones((G.shape[0], 1)), -np.ones((G.shape[0], 1))])
    b_ub = -G @ np.full(n, V_MIN)
    caps = np.hstack([np.eye(n), np.zeros((n, 2))])
    A_ub = np.vstack([A_ub, caps])
    b_ub = np.concatenate([b_ub, np.full(n, V_MAX - V_MIN)])
    A_eq = np.zeros((1, n + 2))
    A_eq[0, 0] = 1.0
    b_eq = np.array([1.0 - V_MIN])
    obj = np.zeros(n + 2)
    obj[n], obj[n + 1] = 1.0, -1.0
    res = linprog_max(obj, A_ub, b_ub, A_eq, b_eq)
    if res.status == "unbounded":
        raise SolverError("slack LP reported unbounded")
    if res.status != "optimal" or res.objective < -SLACK_TOL:
        return None
    v = _closest_to_ones(G, n, res.objective)
    if v is None:
        v = res.x[:n] + V_MIN
    v = v / v[0]
    if lp_slacks(mats, rate, v).min() < -SLACK_TOL:
        raise SolverError("LP solution failed re-verification by substitution")
    return v


def _closest_to_ones(G: np.ndarray, n: int, t_star: float) -> Optional[np.ndarray]:
    """Among (near) max-slack solutions pick the ``v`` with least ``sum |v - 1|``.

    The max-slack optimum is often a whole face; without a tie-break the
    simplex returns an arbitrary vertex of it (e.g. a weight at the cap).
    """
    t_req = max(min(t_star, 0.0), t_star - 1e-9 * (1.0 + abs(t_star)))
    m = G.shape[0]
    # variables: w = v - V_MIN (n), d_plus (n), d_minus (n)
    I, Z = np.eye(n), np.zeros((n, n))
    A_ub = np.vstack([np.hstack([G, np.zeros((m, 2 * n))]), np.hstack([I, Z, Z])])
    b_ub = np.concatenate([-G @ np.full(n, V_MIN) - t_req, np.full(n, V_MAX - V_MIN)])
    A_eq = np.vstack([np.hstack([I, -I, I]), np.eye(1, 3 * n)])
    b_eq = np.concatenate([np.full(n, 1.0 - V_MIN), [1.0 - V_MIN]])
    obj = np.concatenate([np.zeros(n), -np.ones(2 * n)])
    res = linprog_max(obj, A_ub, b_ub, A_eq, b_eq)
    if res.status != "optimal":
        return None
    return res.x[:n] + V_MIN


def max_contraction_rate(mats: Sequence, lo=0.0, hi=100.0, tol=1e-6) -> float:
    """Largest ``c`` in ``[lo, hi]`` for which ``lp_feasible_theta(mats, c)`` succeeds (bisection)."""
    if lp_feasible_theta(mats, lo) is None:
        raise CertificationError("LP_for_c", f"infeasible already at rate {lo}")
    if lp_feasible_theta(mats, hi) is not None:
        return hi
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if lp_feasible_theta(mats, mid) is None:
            hi = mid
        else:
            lo = mid
    return lo


def _array_field():
    return field(default_factory=lambda: np.zeros(0))


@dataclass(frozen=True, eq=False)
class Certificate:
    """Constants certifying the closed- and open-loop assumptions for one plant.

    Radii may be ``inf``. ``L_cl``, ``L_op`` and ``L_cl2`` are the
    norm-equivalence ratios against the weighted infinity norms; they are 1
    whenever the working norms are those norms themselves, which is the only
    case :func:`certify_lure` produces.
    """

    c: float
    d1: float
    d2: float
    theta_cl: np.ndarray
    theta_op: np.ndarray
    kappa_min: float
    kappa_max: float
    R0: float
    R1: float
    R2: float
    Gamma: float
    R: float
    alpha: float
    sigma0: float = 1.0
    L_cl: float = 1.0
    L_op: float = 1.0
    L_cl2: float = 1.0
    slack_cl: np.ndarray = _array_field()
    slack_op: np.ndarray = _array_field()

    def __post_init__(self):
        for name in ("theta_cl", "theta_op", "slack_cl", "slack_op"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def kappa(self) -> float:
        return max(abs(self.kappa_min), abs(self.kappa_max))

    @property
    def cl_norm(self) -> WeightedNorm:
        return WeightedNorm(self.theta_cl, INF)

    @property
    def op_norm(self) -> WeightedNorm:
        return WeightedNorm(self.theta_op, INF)

    def to_dict(self) -> dict:
        d = asdict(self)
        for k, v in d.items():
            if isinstance(v, np.ndarray):
                d[k] = v.tolist()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Certificate":
        return cls(**{k: d[k] for k in cls.__dataclass_fields__ if k in d})

    def to_json(self) -> str:
        # repr-precision floats; inf is written as Infinity
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "Certificate":
        return cls.from_dict(json.loads(text))

    def summary(self, digits: int = 4) -> str:
        def f(v):
            return f"{v:.{digits}f}" if np.isfinite(v) else "inf"

        def vec(v):
            return "[" + ", ".join(f(x) for x in v) + "]"

        rows = [
            ("c", f(self.c), "(d1, d2)", f"({f(self.d1)}, {f(self.d2)})"),
            ("theta_cl", vec(self.theta_cl), "theta_op", vec(self.theta_op)),
            ("R1", f(self.R1), "R2", f(self.R2)),
            ("Gamma", f(self.Gamma), "R", f(self.R)),
            ("alpha", f(self.alpha), "sigma0", f(self.sigma0)),
            ("kappa_min", f(self.kappa_min), "kappa_max", f(self.kappa_max)),
        ]
        w = [max(len(r[i]) for r in rows) for i in range(4)]
        return "\n".join(
            f"{a:<{w[0]}}  {b:>{w[1]}}  |  {c:<{w[2]}}  {d:>{w[3]}}" for a, b, c, d in rows
        )


def closed_loop_vertices(plant, kappa_min, kappa_max):
    base = plant.closed_matrix
    return [base + kappa_min * plant.rank_one, base + kappa_max * plant.rank_one]


def open_loop_vertices(plant, kappa_min, kappa_max):
    return [plant.A + kappa_min * plant.rank_one, plant.A + kappa_max * plant.rank_one]


def _weights(mats, rate, theta, stage):
    if theta is None:
        v = lp_feasible_theta(mats, rate)
        if v is None:
            raise CertificationError(stage, f"no positive weighting vector exists for rate {rate!r}")
        theta = 1.0 / v
    theta = np.asarray(theta, dtype=float)
    if np.any(theta <= 0):
        raise CertificationError(stage, "weights must be strictly positive")
    slack = lp_slacks(mats, rate, 1.0 / theta)
    if slack.min() < -SLACK_TOL:
        raise CertificationError(
            stage, f"supplied weights violate the inequalities (worst slack {slack.min():.3e})"
        )
    return theta, slack


def certify_lure(plant, c: float, d1: float = 0.0, theta_cl=None, theta_op=None,
                 kappa_decimals: Optional[int] = 2, sigma0: float = 1.0) -> Certificate:
    """Compute the certificate of a :class:`~qstc.plant.LurePlant`.

    When ``theta_cl``/``theta_op`` are given they are verified instead of
    searched for. Raises :class:`CertificationError` naming the failing
    stage (``kappa_bounds``, ``LP_for_c`` or ``LP_for_d``).
    """
    if not c > 0:
        raise ValueError(f"c must be positive, got {c}")
    if not d1 >= 0:
        raise ValueError(f"d1 must be nonnegative, got {d1}")
    kmin, kmax = kappa_bounds(plant.phi.derivative, plant.R0, kappa_decimals)
    theta_cl, slack_cl = _weights(closed_loop_vertices(plant, kmin, kmax), c, theta_cl, "LP_for_c")
    theta_op, slack_op = _weights(open_loop_vertices(plant, kmin, kmax), -d1, theta_op, "LP_for_d")

    eta_cl = dual_one_norm(plant.eta, theta_cl)
    eta_op = dual_one_norm(plant.eta, theta_op)
    R1 = plant.R0 / eta_cl
    R2 = plant.R0 / eta_op
    Gamma = gamma_constant(theta_cl, theta_op)
    R = min(R1, R2 / Gamma)
    kappa = max(abs(kmin), abs(kmax))
    op = WeightedNorm(theta_op, INF)
    d2 = induced_norm_inf(plant.closed_matrix, theta_op, theta_op) + kappa * op(plant.xi) * eta_op
    alpha = induced_norm_inf(plant.B @ plant.K, theta_cl, theta_op)
    return Certificate(
        c=float(c), d1=float(d1), d2=d2, theta_cl=theta_cl, theta_op=theta_op,
        kappa_min=kmin, kappa_max=kmax, R0=plant.R0, R1=R1, R2=R2, Gamma=Gamma, R=R,
        alpha=alpha, sigma0=float(sigma0), slack_cl=slack_cl, slack_op=slack_op,
    )
