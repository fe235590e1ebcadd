"""Acceptance criteria 1-7 on the bundled two-tank configuration.

Each criterion prints exactly one ``PASS``/``FAIL`` line with the measured
values. Run under pytest, or directly with ``python tests/test_acceptance.py``.
"""
import functools
import math
import sys
import time

import numpy as np
import pytest

from qstc.analysis import big_w, linear_fit, relative_error, stabilizable_region, window
from qstc.certify import closed_loop_vertices, lp_feasible_theta, lp_slacks, open_loop_vertices
from qstc.config import ExperimentConfig, bundled_config
from qstc.integrate import integrate_hold, predict
from qstc.quantize import LogQuantizer, lambda0_log, lambda_zoom, log_sector_constants
from qstc.simulate import run_ideal, run_log, run_zoom
from qstc.stm import nu, sigma_bounds_log, sigma_bounds_zoom, tau_min_log, tilde_tau_min


def close(x, ref, tol=1e-4):
    return abs(x - ref) <= tol + 1e-12


@functools.lru_cache(maxsize=None)
def setup():
    cfg = ExperimentConfig.load(bundled_config("two_tank.cfg"))
    plant = cfg.plant()
    t0 = time.perf_counter()
    cert = cfg.certificate()
    t_cert = time.perf_counter() - t0
    return cfg, plant, cert, t_cert


@functools.lru_cache(maxsize=None)
def runs():
    cfg, plant, cert, _ = setup()
    quant, stm, _ = cfg.log_setup(cert)
    t0 = time.perf_counter()
    log = run_log(plant, cert, quant, stm, cfg.x0, cfg.horizon, cfg.dt, cfg.dt_pred)
    t_log = time.perf_counter() - t0
    zq, zs, _ = cfg.zoom_setup(cert)
    t0 = time.perf_counter()
    zoom = run_zoom(plant, cert, zq, zs, cfg.x0, cfg.horizon, cfg.dt, cfg.dt_pred)
    t_zoom = time.perf_counter() - t0
    ideal = run_ideal(plant, cfg.x0, cfg.horizon, cfg.dt, cert)
    return log, zoom, ideal, t_log, t_zoom


def criterion_1():
    cfg, plant, cert, t_cert = setup()
    s_cl = lp_slacks(closed_loop_vertices(plant, cert.kappa_min, cert.kappa_max), cert.c,
                     1.0 / cert.theta_cl).min()
    s_op = lp_slacks(open_loop_vertices(plant, cert.kappa_min, cert.kappa_max), cert.d1,
                     1.0 / cert.theta_op).min()
    ok = (cert.c == 0.4 and np.allclose(cert.theta_cl, [1.0, 0.518]) and s_cl >= 0
          and cert.d1 == 0.0 and np.allclose(cert.theta_op, [1.0, 1.0]) and s_op >= 0
          and close(cert.d2, 2.8817) and close(cert.Gamma, 1.9305) and close(cert.R1, 0.1536)
          and cert.R2 == 0.225 and close(round(cert.R, 4), 0.1166) and close(cert.alpha, 1.4142)
          and t_cert < 1.0)
    return ok, (f"d2={cert.d2:.6f} Gamma={cert.Gamma:.6f} R1={cert.R1:.6f} R2={cert.R2} "
                f"R={cert.R:.6f} alpha={cert.alpha:.6f} slack_cl={s_cl:.3e} slack_op={s_op:.3e} "
                f"time={t_cert:.3f}s")


def criterion_2():
    cfg, plant, cert, _ = setup()
    lo, hi = sigma_bounds_log(0.85, cert)
    tmin = tau_min_log(0.85, 0.25, cert)
    lam0 = lambda0_log(LogQuantizer(0.85, cert.R, cert.theta_cl), cert)
    ttm = tilde_tau_min(0.9251, cert.d1, cert.d2)
    tab = stabilizable_region(cfg.region_grid(), cert)
    ok = (close(lo, 0.1565) and close(hi, 0.2599) and close(tmin, 0.0168)
          and abs(lam0 - 0.925) < 1e-12 and close(ttm, 0.0281) and close(tab.rho_min, 0.7734)
          and close(tab.crossing, 0.2467) and close(tab.upper_at_one, 0.2828))
    return ok, (f"window=({lo:.5f}, {hi:.5f}) tau_min={tmin:.5f} lambda0={lam0!r} "
                f"tilde_tau_min={ttm:.5f} rho_min={tab.rho_min:.5f} crossing={tab.crossing:.5f} "
                f"upper(1)={tab.upper_at_one:.5f}")


def criterion_3():
    cfg, plant, cert, _ = setup()
    zq, zs, _ = cfg.zoom_setup(cert)
    lam = lambda_zoom(zq, cert)
    ttm = tilde_tau_min(lam, cert.d1, cert.d2)
    lo, hi = sigma_bounds_zoom(zs.h, zq.M, zq.Delta, cert, lam)
    ok = (close(lam, 0.9837) and close(ttm, 0.0057) and close(lo, 0.0533) and close(hi, 0.2828)
          and zs.ell_max == 180)
    return ok, (f"lambda={lam:.6f} tilde_tau_min={ttm:.6f} window=[{lo:.5f}, {hi:.5f}) "
                f"ell_max={zs.ell_max}")


def criterion_4():
    log, zoom, _, t_log, t_zoom = runs()
    n_log, n_zoom = log.samples_in_horizon(), zoom.samples_in_horizon()
    ok = abs(n_log - 98) <= 3 and abs(n_zoom - 100) <= 3 and t_log < 60 and t_zoom < 60
    return ok, f"log samples={n_log} ({t_log:.2f}s) zoom samples={n_zoom} ({t_zoom:.2f}s)"


def criterion_5():
    log, zoom, _, _, _ = runs()
    lv, zv = log.verification, zoom.verification
    parts = {
        "log decay": lv.get("decay").margin,
        "log dwell": log.intervals().min() - 0.0168,
        "log contract": lv.get("error_contract").margin,
        "zoom decay": zv.get("decay").margin,
        "zoom grid": zv.get("dwell_grid").margin,
        "zoom contract": zv.get("error_contract").margin,
        "zoom range": zv.get("range").margin,
    }
    # zoom decay and range are strict inequalities: require a positive margin there
    ok = (all(m >= -1e-9 for m in parts.values())
          and parts["zoom decay"] > 0 and parts["zoom range"] > 0)
    return ok, " ".join(f"{k}={v:.3e}" for k, v in parts.items())


def criterion_6():
    cfg, plant, cert, _ = setup()
    rng = np.random.default_rng(2024)
    cl, op = cert.cl_norm, cert.op_norm
    notes = []

    # quantizer inequalities over 10^4 random inputs each
    lq, _, _ = cfg.log_setup(cert)
    grow, err = log_sector_constants(lq.rho, cert.L_cl, cert.L_op)
    zq, zs, _ = cfg.zoom_setup(cert)
    lam_z = lambda_zoom(zq, cert)
    bad = 0
    for _ in range(10_000):
        x = rng.normal(size=2) * 10.0 ** rng.uniform(-6, 1)
        q = lq(x)
        bad += cl(q) > grow * cl(x) * (1 + 1e-12)
        bad += op(q - x) > err * op(q) * (1 + 1e-12)
        y = rng.uniform(-1, 1, 2) * cert.R / cert.theta_cl
        if cl(y) < cert.R:
            bad += cl(lq(y)) >= 0.9251 * cert.R
        mu = rng.uniform(1e-3, 1.0)
        z = rng.uniform(-1, 1, 2) * zq.M * mu / cert.theta_cl
        if cl(z) < zq.M * mu:
            qz = zq.at(mu)(z)
            bad += op(qz - z) > zq.Delta * mu * (1 + 1e-12)
            bad += cl(qz) >= lam_z * cert.R
    notes.append(f"quantizer violations={bad}")
    ok = bad == 0

    # growth and incremental bounds along 100 random predictions
    ttm = tilde_tau_min(0.9251, cert.d1, cert.d2)
    worst_nu, worst_inc = math.inf, math.inf
    for _ in range(100):
        q = rng.uniform(-1, 1, 2) * 0.9251 * cert.R2 / cert.theta_op
        tr = predict(plant, q, ttm, 1e-4)
        dev = np.array([op(s - q) for s in tr.states])
        worst_nu = min(worst_nu, float(np.min(nu(tr.times, cert.d1, cert.d2) * op(q) - dev)))
        x1 = q + rng.uniform(-0.01, 0.01, 2)
        b = integrate_hold(plant, q, x1, ttm, 1e-4).states
        gaps = np.array([op(s) for s in tr.states - b])
        worst_inc = min(worst_inc, float(np.min(np.exp(cert.d1 * tr.times) * op(q - x1) - gaps)))
    ok &= worst_nu >= -1e-12 and worst_inc >= -1e-12
    notes.append(f"nu margin={worst_nu:.3e} incremental margin={worst_inc:.3e}")

    # W strictly decreasing over a dense (eps, c) grid
    t = np.linspace(1e-3, 10, 2000)
    mono = all(np.all(np.diff(big_w(t, e, c)) < 0)
               for e in np.linspace(0.01, 0.99, 40) for c in np.linspace(0.01, 5, 40))
    ok &= mono
    notes.append(f"W monotone={mono}")

    # LP results re-verified by substitution
    s_min = math.inf
    for _ in range(50):
        mats = [rng.normal(size=(3, 3)) - 2.5 * np.eye(3) for _ in range(2)]
        rate = rng.uniform(0, 1)
        v = lp_feasible_theta(mats, rate)
        if v is not None:
            s_min = min(s_min, float(lp_slacks(mats, rate, v).min()))
    v = lp_feasible_theta(closed_loop_vertices(plant, cert.kappa_min, cert.kappa_max), cert.c)
    s_min = min(s_min, float(lp_slacks(closed_loop_vertices(plant, cert.kappa_min, cert.kappa_max),
                                       cert.c, v).min()))
    ok &= s_min >= -1e-12
    notes.append(f"LP min slack={s_min:.3e}")

    # RK4 order on the two-tank system
    q = np.array([0.08, -0.15])
    ref = integrate_hold(plant, q, cfg.x0, 1.0, 0.05 / 16).final
    e1 = np.abs(integrate_hold(plant, q, cfg.x0, 1.0, 0.05).final - ref).max()
    e2 = np.abs(integrate_hold(plant, q, cfg.x0, 1.0, 0.025).final - ref).max()
    ok &= 12.0 < e1 / e2 < 20.0
    notes.append(f"RK4 ratio={e1 / e2:.2f}")
    return bool(ok), " ".join(notes)


def criterion_7():
    log, zoom, ideal, _, _ = runs()
    t = ideal.trajectory.times
    e_log = relative_error(log, ideal)
    e_zo = relative_error(zoom, ideal)
    tw, yw = window(t, e_log, 0.5, 6.0)
    _, _, r2 = linear_fit(tw, yw)
    _, a = window(t, e_log, 3.0, 4.0)
    _, b = window(t, e_zo, 3.0, 4.0)
    ratio = float(np.max(b / a))
    return r2 >= 0.9 and ratio >= 2.0, f"R2(e_log, [0.5,6])={r2:.4f} max e_zo/e_log on [3,4]={ratio:.3f}"


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6,
            criterion_7]


def report(i):
    ok, detail = CRITERIA[i - 1]()
    return ok, f"[{'PASS' if ok else 'FAIL'}] criterion {i}: {detail}"


@pytest.mark.parametrize("i", range(1, 8))
def test_criterion(i, capsys):
    ok, line = report(i)
    with capsys.disabled():
        print("\n" + line)
    assert ok, line


if __name__ == "__main__":
    results = [report(i) for i in range(1, 8)]
    for _, line in results:
        print(line)
    sys.exit(0 if all(ok for ok, _ in results) else 1)
