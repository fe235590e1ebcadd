"""Plant models: generic ``f(x, u)`` with feedback ``g(x)``, Lur'e plants, and the two-tank example.

For a plant with vector field ``f`` and feedback ``g`` the derived fields are

* ``F(x, e) = f(x, g(x + e))``  (closed loop with measurement error ``e``)
* ``F0(x) = F(x, 0)``           (ideal closed loop)
* ``f_q(x) = f(x, g(q))``       (open loop with the input held at ``g(q)``)
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import DimensionError, DomainError
from .kernels import PHI_LINEAR, PHI_SQRT_SHIFT, PHI_ZERO

FD_STEP = 1e-6
EQUILIBRIUM_TOL = 1e-12


@dataclass(frozen=True)
class Nonlinearity:
    """Scalar C^1 function with ``phi(0) = 0`` and its derivative.

    ``kind``/``params`` identify catalog entries the compiled kernel can
    evaluate; custom functions leave ``kind`` as ``None``.
    """

    name: str
    func: Callable[[float], float]
    deriv: Callable[[float], float]
    kind: Optional[int] = None
    params: tuple = (0.0, 0.0)
    domain: tuple = (-math.inf, math.inf)

    def __call__(self, z):
        return self.func(z)

    def derivative(self, z):
        return self.deriv(z)


def zero_nonlinearity() -> Nonlinearity:
    return Nonlinearity(
        "zero",
        lambda z: 0.0 * np.asarray(z, dtype=float),
        lambda z: 0.0 * np.asarray(z, dtype=float),
        PHI_ZERO,
        (0.0, 0.0),
    )


def linear_nonlinearity(slope: float) -> Nonlinearity:
    s = float(slope)
    return Nonlinearity(
        "linear",
        lambda z: s * np.asarray(z, dtype=float),
        lambda z: s + 0.0 * np.asarray(z, dtype=float),
        PHI_LINEAR,
        (s, 0.0),
    )


def sqrt_shift(a: float, H: float) -> Nonlinearity:
    """``phi(z) = a sqrt(H + z) - a sqrt(H) - z``, defined for ``z >= -H``."""
    a = float(a)
    H = float(H)
    if not (a > 0 and H > 0):
        raise ValueError(f"sqrt_shift needs a > 0 and H > 0, got a={a}, H={H}")
    sH = math.sqrt(H)

    def _check(z):
        z = np.asarray(z, dtype=float)
        if np.any(H + z < 0):
            raise DomainError(f"sqrt_shift evaluated below z = -H = {-H}")
        return z

    def func(z):
        z = _check(z)
        return a * np.sqrt(H + z) - a * sH - z

    def deriv(z):
        z = _check(z)
        with np.errstate(divide="ignore"):
            return 0.5 * a / np.sqrt(H + z) - 1.0

    return Nonlinearity("sqrt_shift", func, deriv, PHI_SQRT_SHIFT, (a, H), (-H, math.inf))


NONLINEARITIES = {
    "zero": lambda **kw: zero_nonlinearity(),
    "linear": lambda slope=0.0, **kw: linear_nonlinearity(slope),
    "sqrt_shift": lambda a=2.0, H=1.0, **kw: sqrt_shift(a, H),
}


def make_nonlinearity(name: str, **params) -> Nonlinearity:
    try:
        factory = NONLINEARITIES[name]
    except KeyError:
        raise ValueError(
            f"unknown nonlinearity {name!r}; choose from {sorted(NONLINEARITIES)}"
        ) from None
    return factory(**params)


def _vec(x, n, what="state"):
    v = np.asarray(x, dtype=float).reshape(-1)
    if v.size != n:
        raise DimensionError(f"{what} has length {v.size}, expected {n}")
    return v


class Plant:
    """Generic plant ``x' = f(x, u)`` with state feedback ``u = g(x)``.

    Parameters
    ----------
    n, m : int
        State and input dimensions.
    f : callable
        ``f(x, u) -> dx``.
    g : callable
        ``g(x) -> u``.
    """

    def __init__(self, n: int, m: int, f: Callable, g: Callable, check_equilibrium=True):
        self.n = int(n)
        self.m = int(m)
        self._f = f
        self._g = g
        if check_equilibrium:
            r = self.eval_f(np.zeros(self.n), self.g(np.zeros(self.n)))
            if np.max(np.abs(r)) > EQUILIBRIUM_TOL:
                raise ValueError(f"f(0, g(0)) = {r} is not zero")

    def g(self, x) -> np.ndarray:
        return np.asarray(self._g(_vec(x, self.n)), dtype=float).reshape(-1)

    def eval_f(self, x, u) -> np.ndarray:
        return np.asarray(
            self._f(_vec(x, self.n), np.asarray(u, dtype=float).reshape(-1)), dtype=float
        ).reshape(-1)

    def eval_F(self, x, e) -> np.ndarray:
        x = _vec(x, self.n)
        return self.eval_f(x, self.g(x + _vec(e, self.n, "error")))

    def F0(self, x) -> np.ndarray:
        return self.eval_F(x, np.zeros(self.n))

    def f_q(self, x, q) -> np.ndarray:
        return self.eval_f(x, self.g(q))

    def jacobian_F0(self, x) -> np.ndarray:
        return _fd_jacobian(self.F0, _vec(x, self.n))

    def jacobian_fq(self, x, q) -> np.ndarray:
        q = _vec(q, self.n)
        return _fd_jacobian(lambda y: self.f_q(y, q), _vec(x, self.n))


def _fd_jacobian(fun, x, h=FD_STEP):
    n = x.size
    J = np.empty((n, n))
    for j in range(n):
        d = np.zeros(n)
        d[j] = h
        J[:, j] = (fun(x + d) - fun(x - d)) / (2 * h)
    return J


class LurePlant(Plant):
    """``x' = A x + B u + xi phi(eta^T x)`` with linear feedback ``u = K x``.

    ``R0`` bounds the slope region ``|eta^T x| < R0`` used for
    certification (``math.inf`` allowed).
    """

    def __init__(self, A, B, K, xi, eta, phi: Nonlinearity, R0=math.inf):
        A = np.atleast_2d(np.asarray(A, dtype=float))
        n = A.shape[0]
        if A.shape != (n, n):
            raise DimensionError(f"A must be square, got {A.shape}")
        B = np.asarray(B, dtype=float).reshape(n, -1)
        m = B.shape[1]
        K = np.asarray(K, dtype=float).reshape(m, n)
        xi = _vec(xi, n, "xi")
        eta = _vec(eta, n, "eta")
        if not np.any(xi) or not np.any(eta):
            raise ValueError("xi and eta must be nonzero")
        if abs(float(phi(0.0))) > EQUILIBRIUM_TOL:
            raise ValueError("phi(0) must be 0")
        if not R0 > 0:
            raise ValueError(f"R0 must be positive, got {R0}")
        for arr in (A, B, K, xi, eta):
            arr.setflags(write=False)
        self.A, self.B, self.K, self.xi, self.eta = A, B, K, xi, eta
        self.phi = phi
        self.R0 = float(R0)
        super().__init__(n, m, self._lure_f, self._lure_g)

    def _lure_f(self, x, u):
        return self.A @ x + self.B @ u + self.xi * float(self.phi(float(self.eta @ x)))

    def _lure_g(self, x):
        return self.K @ x

    @property
    def closed_matrix(self) -> np.ndarray:
        """``A + B K``."""
        return self.A + self.B @ self.K

    @property
    def rank_one(self) -> np.ndarray:
        """``xi eta^T``."""
        return np.outer(self.xi, self.eta)

    def jacobian_F0(self, x) -> np.ndarray:
        x = _vec(x, self.n)
        return self.closed_matrix + float(self.phi.derivative(float(self.eta @ x))) * self.rank_one

    def jacobian_fq(self, x, q=None) -> np.ndarray:
        x = _vec(x, self.n)
        return self.A + float(self.phi.derivative(float(self.eta @ x))) * self.rank_one

    def in_slope_region(self, x) -> bool:
        return abs(float(self.eta @ _vec(x, self.n))) < self.R0

    @property
    def kernel_ready(self) -> bool:
        return self.phi.kind is not None


class TwoTank(Plant):
    """Two equal tanks joined by a pipe; input is a control flow into tank 1.

    ``x1' = Phi(x2 - x1) + u``, ``x2' = -Phi(x2 - x1)`` with
    ``Phi(z) = a sqrt(H + z) - a sqrt(H)``.
    """

    def __init__(self, a: float = 2.0, H: float = 1.0, K=None):
        if not (a > 0 and H > 0):
            raise ValueError(f"need a > 0 and H > 0, got a={a}, H={H}")
        self.a = float(a)
        self.H = float(H)
        self.K = np.zeros((1, 2)) if K is None else np.asarray(K, dtype=float).reshape(1, 2)
        super().__init__(2, 1, self._tank_f, lambda x: self.K @ x)

    def Phi(self, z: float) -> float:
        if self.H + z < 0:
            raise DomainError(f"Phi needs H + z >= 0, got z={z}")
        return self.a * math.sqrt(self.H + z) - self.a * math.sqrt(self.H)

    def _tank_f(self, x, u):
        p = self.Phi(float(x[1] - x[0]))
        return np.array([p + float(u[0]), -p])


def lure_from_two_tank(tank: TwoTank, K, R0=math.inf) -> LurePlant:
    """Rewrite the tank model in Lur'e form with ``phi(z) = Phi(z) - z``."""
    return LurePlant(
        A=[[-1.0, 1.0], [1.0, -1.0]],
        B=[[1.0], [0.0]],
        K=K,
        xi=[1.0, -1.0],
        eta=[-1.0, 1.0],
        phi=sqrt_shift(tank.a, tank.H),
        R0=R0,
    )


def lqr_gain(A, B, Q=None, R=None) -> np.ndarray:
    """Continuous-time LQR gain with the sign convention ``u = K x``."""
    from scipy.linalg import solve_continuous_are

    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float).reshape(A.shape[0], -1)
    Q = np.eye(A.shape[0]) if Q is None else np.asarray(Q, dtype=float)
    R = np.eye(B.shape[1]) if R is None else np.asarray(R, dtype=float)
    P = solve_continuous_are(A, B, Q, R)
    return -np.linalg.solve(R, B.T @ P)
