import math

import numpy as np
import pytest

from qstc.analysis import (
    big_w,
    decay_w,
    linear_fit,
    relative_error,
    stabilizable_region,
    verify_theorem,
    window,
)
from qstc.quantize import LogQuantizer
from qstc.simulate import run_log
from qstc.stm import StmLogConfig

from conftest import X0


def test_decay_lemma_examples():
    assert big_w(1.0, 0.5, 1.0) == pytest.approx(0.37989, abs=1e-5)
    assert big_w(2.0, 0.5, 1.0) == pytest.approx(0.28310, abs=1e-5)
    assert decay_w(0.0, 0.3, 2.0) == 1.0
    with pytest.raises(ValueError):
        big_w(0.0, 0.5, 1.0)
    with pytest.raises(ValueError):
        decay_w(1.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        decay_w(1.0, 0.5, 0.0)


def test_big_w_monotone_and_bound():
    t = np.linspace(1e-3, 10, 4000)
    for eps in (0.01, 0.3, 0.7, 0.99):
        for c in (0.05, 0.4, 3.0):
            W = big_w(t, eps, c)
            assert np.all(np.diff(W) < 0)
            assert np.all(W > 0)
            for tau_max in (0.18, 1.0, 5.0):
                s = t[t <= tau_max]
                assert np.all(decay_w(s, eps, c) <= np.exp(-big_w(tau_max, eps, c) * s) * (1 + 1e-14))


def test_region_examples(cert):
    tab = stabilizable_region([0.5, 0.85, 1.0], cert)
    rho, lo, hi, ok = tab.rows[0]
    assert lo == pytest.approx(0.6435, abs=1e-4)
    assert hi == pytest.approx(0.1886, abs=1e-4)
    assert not ok
    _, lo, hi, ok = tab.rows[1]
    assert (round(lo, 4), round(hi, 4), ok) == (0.1565, 0.2599, True)
    assert tab.rho_min == pytest.approx(0.7734, abs=1e-4)
    assert tab.crossing == pytest.approx(0.2467, abs=1e-4)
    assert tab.upper_at_one == pytest.approx(0.2828, abs=1e-4)
    with pytest.raises(ValueError):
        stabilizable_region([0.0], cert)


def test_region_monotone(cert):
    tab = stabilizable_region(np.linspace(0.05, 1.0, 400), cert)
    lo = np.array([r[1] for r in tab.rows])
    hi = np.array([r[2] for r in tab.rows])
    assert np.all(np.diff(lo) < 0) and np.all(np.diff(hi) > 0)
    feas = np.array([r[3] for r in tab.rows])
    rho = np.array([r[0] for r in tab.rows])
    np.testing.assert_array_equal(feas, rho > tab.rho_min)


def test_relative_error(log_run, ideal_run):
    assert np.all(relative_error(ideal_run, ideal_run) == 0.0)
    e = relative_error(log_run, ideal_run)
    assert e[0] == 0.0 and np.all(np.isfinite(e))
    with pytest.raises(ValueError):
        relative_error(log_run.__class__("x", log_run.trajectory.__class__(0, 1e-3, np.ones((3, 2))),
                                         np.zeros((2, 1))), ideal_run)


def test_linear_fit_and_window():
    t = np.linspace(0, 6, 601)
    s, i, r2 = linear_fit(t, 2 * t + 1)
    assert (s, i, r2) == pytest.approx((2.0, 1.0, 1.0))
    tw, yw = window(t, t, 3, 4)
    assert tw[0] == pytest.approx(3) and tw[-1] == pytest.approx(4) and len(yw) == 101


def test_reports_pass_on_reference_runs(log_run, zoom_run, ideal_run):
    for run in (log_run, zoom_run, ideal_run):
        rep = run.verification
        assert rep.passed, rep.lines()
        assert all(math.isfinite(c.margin) for c in rep.checks)
    assert zoom_run.verification.get("range").margin > 0
    assert log_run.verification.constants["min_dwell"] == pytest.approx(0.016802, abs=1e-6)


def test_reverification_is_bit_identical(log_run):
    again = verify_theorem(log_run)
    assert [c.margin for c in again.checks] == [c.margin for c in log_run.verification.checks]


def test_sigma_outside_window_is_flagged(tank_plant, cert):
    quant = LogQuantizer(0.85, cert.R, cert.theta_cl, cert)
    res = run_log(tank_plant, cert, quant, StmLogConfig(0.3, 0.18, 0.9251), X0, 2.0, 1e-4)
    rep = res.verification
    assert not rep.passed
    assert not rep.get("sigma_window").passed
    assert any("FAIL" in line for line in rep.lines())
