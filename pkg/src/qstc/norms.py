"""Diagonally weighted vector norms, induced norms and matrix measures.

Only the weighted infinity norm gets closed forms for induced norms and
logarithmic norms; other exponents are supported for vectors only.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import DimensionError


class Exponent(enum.Enum):
    INF = "inf"


INF = Exponent.INF

ExponentLike = Union[float, int, Exponent]


def _as_vector(x) -> np.ndarray:
    v = np.asarray(x, dtype=float)
    if v.ndim != 1:
        v = v.reshape(-1)
    return v


def _as_square(A) -> np.ndarray:
    M = np.asarray(A, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {M.shape}")
    return M


@dataclass(frozen=True, eq=False)
class WeightedNorm:
    """The norm ``x -> ||diag(weights) x||_r``.

    Parameters
    ----------
    weights : array_like
        Strictly positive weights, one per coordinate.
    exponent : float or Exponent
        ``r >= 1`` or :data:`INF`.
    """

    weights: np.ndarray
    exponent: ExponentLike = INF

    def __post_init__(self):
        w = _as_vector(self.weights).copy()
        if w.size == 0 or not np.all(np.isfinite(w)) or np.any(w <= 0):
            raise ValueError(f"weights must be finite and strictly positive, got {w}")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        r = self.exponent
        if r is not INF:
            if isinstance(r, float) and np.isinf(r):
                raise ValueError("use norms.INF for the infinity exponent")
            if not r >= 1:
                raise ValueError(f"exponent must be >= 1, got {r}")
            object.__setattr__(self, "exponent", float(r))

    @property
    def n(self) -> int:
        return self.weights.size

    @property
    def is_inf(self) -> bool:
        return self.exponent is INF

    def __call__(self, x) -> float:
        return weighted_norm(x, self)

    def rows(self, X) -> np.ndarray:
        """Norm of every row of an ``(N, n)`` array."""
        X = np.asarray(X, dtype=float)
        if X.shape[-1] != self.n:
            raise DimensionError(f"row length {X.shape[-1]} != {self.n}")
        Y = np.abs(X * self.weights)
        if self.is_inf:
            return Y.max(axis=-1)
        r = self.exponent
        if r == 1.0:
            return Y.sum(axis=-1)
        # scale by the largest entry to avoid under/overflow in Y**r
        top = Y.max(axis=-1, keepdims=True)
        safe = np.where(top > 0, top, 1.0)
        return top[..., 0] * ((Y / safe) ** r).sum(axis=-1) ** (1.0 / r)

    def induced(self, A) -> float:
        """Induced matrix norm (infinity exponent only)."""
        self._require_inf("induced matrix norm")
        return induced_norm_inf(A, self.weights, self.weights)

    def log_norm(self, A) -> float:
        self._require_inf("matrix measure")
        return log_norm_weighted_inf(A, self.weights)

    def _require_inf(self, what):
        if not self.is_inf:
            raise NotImplementedError(f"{what} is only available for weighted infinity norms")

    def __repr__(self):
        r = "inf" if self.is_inf else f"{self.exponent:g}"
        return f"WeightedNorm(weights={self.weights.tolist()}, exponent={r})"


def weighted_norm(x, nrm: WeightedNorm) -> float:
    v = _as_vector(x)
    if v.size != nrm.n:
        raise DimensionError(f"vector has length {v.size}, norm expects {nrm.n}")
    return float(nrm.rows(v[None, :])[0])


def metzler_majorant(A) -> np.ndarray:
    """Keep the diagonal, replace off-diagonal entries by their absolute values."""
    M = _as_square(A)
    out = np.abs(M)
    np.fill_diagonal(out, np.diag(M))
    return out


def log_norm_weighted_inf(A, theta) -> float:
    """Matrix measure of ``A`` w.r.t. ``||.||_{inf,[theta]}``.

    Equals ``max_i (B_ii + sum_{j != i} |B_ij|)`` with
    ``B = diag(theta) A diag(theta)^-1``.
    """
    M = _as_square(A)
    th = _as_vector(theta)
    if th.size != M.shape[0]:
        raise DimensionError(f"theta has length {th.size}, matrix is {M.shape}")
    scaled = (th[:, None] * M) / th[None, :]
    return float(metzler_majorant(scaled).sum(axis=1).max())


def induced_norm_inf(A, theta_out, theta_in) -> float:
    """``||diag(theta_out) A diag(theta_in)^-1||_inf`` (max absolute row sum).

    With ``theta_out == theta_in`` this is the norm induced by
    ``||.||_{inf,[theta]}``; with different weights it is the smallest
    ``k`` such that ``||A e||_{out} <= k ||e||_{in}``.
    """
    M = np.asarray(A, dtype=float)
    if M.ndim != 2:
        raise DimensionError(f"expected a matrix, got shape {M.shape}")
    to = _as_vector(theta_out)
    ti = _as_vector(theta_in)
    if to.size != M.shape[0] or ti.size != M.shape[1]:
        raise DimensionError(f"weights {to.size}/{ti.size} do not fit matrix {M.shape}")
    return float(np.abs((to[:, None] * M) / ti[None, :]).sum(axis=1).max())


def dual_one_norm(eta, theta) -> float:
    """``||eta||_{1,[theta]^-1}``, so that ``|eta^T x| <= this * ||x||_{inf,[theta]}``."""
    e = _as_vector(eta)
    th = _as_vector(theta)
    if e.size != th.size:
        raise DimensionError(f"eta has length {e.size}, theta {th.size}")
    return float(np.sum(np.abs(e) / th))


def gamma_constant(theta_cl, theta_op) -> float:
    """Smallest Gamma with ``||x||_{inf,[theta_op]} <= Gamma ||x||_{inf,[theta_cl]}``."""
    cl = _as_vector(theta_cl)
    op = _as_vector(theta_op)
    if cl.size != op.size:
        raise DimensionError(f"theta_cl has length {cl.size}, theta_op {op.size}")
    return float(np.max(op / cl))
