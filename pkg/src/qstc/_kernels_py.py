"""Pure-Python fallback for the RK4 Lur'e kernels.

Mirrors ``_kernels.pyx`` call for call. Works on Python floats and lists
because per-step numpy overhead dominates for the small state dimensions
used here.
"""
import math

import numpy as np

from .errors import DomainError, IntegrationError

PHI_ZERO = 0
PHI_LINEAR = 1
PHI_SQRT_SHIFT = 2


def phi_value(kind, p0, p1, z):
    if kind == PHI_ZERO:
        return 0.0
    if kind == PHI_LINEAR:
        return p0 * z
    if kind == PHI_SQRT_SHIFT:
        s = p1 + z
        if s < 0.0:
            raise DomainError(f"sqrt_shift evaluated at z={z!r} < -H={-p1!r}")
        return p0 * math.sqrt(s) - p0 * math.sqrt(p1) - z
    raise ValueError(f"unknown nonlinearity code {kind}")


def lure_rk4(M, bias, xi, eta, kind, params, x0, dt, nsteps):
    """Classical RK4 for ``x' = M x + bias + xi * phi(eta . x)``.

    Returns an ``(nsteps + 1, n)`` array whose first row is ``x0``.
    """
    Ml = np.asarray(M, dtype=float).tolist()
    b = [float(v) for v in bias]
    xs = [float(v) for v in xi]
    es = [float(v) for v in eta]
    p0 = float(params[0])
    p1 = float(params[1])
    n = len(b)
    kind = int(kind)
    dt = float(dt)
    nsteps = int(nsteps)
    rng = range(n)
    sqrt = math.sqrt
    isfinite = math.isfinite
    sqrt_p1 = sqrt(p1) if kind == PHI_SQRT_SHIFT and p1 >= 0.0 else 0.0

    def rhs(x, t_rel):
        z = 0.0
        for j in rng:
            z += es[j] * x[j]
        if kind == PHI_ZERO:
            ph = 0.0
        elif kind == PHI_LINEAR:
            ph = p0 * z
        elif kind == PHI_SQRT_SHIFT:
            s = p1 + z
            if s < 0.0:
                raise DomainError(
                    f"sqrt_shift evaluated at z={z!r} < -H={-p1!r} (t={t_rel!r})"
                )
            ph = p0 * sqrt(s) - p0 * sqrt_p1 - z
        else:
            raise ValueError(f"unknown nonlinearity code {kind}")
        out = []
        for i in rng:
            row = Ml[i]
            acc = b[i] + xs[i] * ph
            for j in rng:
                acc += row[j] * x[j]
            out.append(acc)
        return out

    x = [float(v) for v in x0]
    flat = list(x)
    half = 0.5 * dt
    sixth = dt / 6.0
    for step in range(nsteps):
        t = step * dt
        k1 = rhs(x, t)
        k2 = rhs([x[i] + half * k1[i] for i in rng], t)
        k3 = rhs([x[i] + half * k2[i] for i in rng], t)
        k4 = rhs([x[i] + dt * k3[i] for i in rng], t)
        x = [x[i] + sixth * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) for i in rng]
        if not isfinite(sum(x)):
            raise IntegrationError(
                f"non-finite state after {step + 1} steps", (step + 1) * dt
            )
        flat.extend(x)
    return np.array(flat, dtype=float).reshape(nsteps + 1, n)
