import numpy as np
import pytest

from qstc.errors import AssumptionViolation
from qstc.simulate import TriggerCause, run_ideal, run_log, run_many, run_zoom
from qstc.stm import StmZoomConfig

from conftest import X0


def test_log_counts_and_dwell(log_run):
    n = log_run.samples_in_horizon()
    assert 95 <= n <= 101
    assert log_run.intervals().min() >= 0.0168
    assert log_run.verification.passed


def test_zoom_counts_and_grid(zoom_run):
    n = zoom_run.samples_in_horizon()
    assert 97 <= n <= 103
    iv = zoom_run.intervals()
    ell = iv / 0.001
    np.testing.assert_allclose(ell, np.round(ell), atol=1e-6)
    assert ell.min() >= 1 - 1e-9 and ell.max() <= 180 + 1e-9
    assert zoom_run.verification.passed


def test_zoom_mu_strictly_decreasing(zoom_run):
    mus = np.array([r.mu_k for r in zoom_run.records])
    assert mus[0] == 1.0
    assert np.all(np.diff(mus) < 0)
    assert all(r.in_range for r in zoom_run.records)


def test_records_are_consistent(log_run):
    recs = log_run.records
    t = log_run.sample_times
    assert t[0] == 0.0 and np.all(np.diff(t) > 0)
    assert recs[-1].truncated and not any(r.truncated for r in recs[:-1])
    X = log_run.trajectory.states
    for r in recs:
        np.testing.assert_array_equal(r.x_at_tk, X[r.step])
        assert r.cause in TriggerCause


def test_zero_order_hold(log_run, tank_plant):
    U = log_run.inputs[:, 0]
    change = np.flatnonzero(np.diff(U) != 0) + 1
    steps = {r.step for r in log_run.records}
    assert set(change.tolist()) <= steps
    for r in log_run.records[:-1]:
        assert U[r.step] == tank_plant.g(r.q_k)[0]


def test_zero_initial_state(tank_plant, cert, log_quant, log_cfg, zoom_quant, zoom_cfg):
    res = run_log(tank_plant, cert, log_quant, log_cfg, [0.0, 0.0], 1.0, 1e-4)
    assert np.all(res.trajectory.states == 0.0)
    assert np.all(res.inputs == 0.0)
    assert all(r.tau_or_ell == pytest.approx(0.18) for r in res.records[:-1])
    assert all(not np.any(r.q_k) for r in res.records)
    z = run_zoom(tank_plant, cert, zoom_quant, zoom_cfg, [0.0, 0.0], 1.0, 1e-4)
    assert np.all(z.trajectory.states == 0.0)
    assert all(r.tau_or_ell == 180 for r in z.records[:-1])
    ideal = run_ideal(tank_plant, [0.0, 0.0], 1.0, 1e-4)
    assert np.all(ideal.trajectory.states == 0.0)


def test_ideal_contracts(ideal_run, cert):
    X = ideal_run.trajectory.states
    t = ideal_run.trajectory.times
    ncl = np.array([cert.cl_norm(x) for x in X[::100]])
    assert np.all(ncl <= np.exp(-0.4 * t[::100]) * ncl[0] * (1 + 1e-12))
    assert ideal_run.verification.passed


def test_log_tracks_ideal(log_run, ideal_run, cert):
    diff = np.abs(log_run.trajectory.states - ideal_run.trajectory.states).max()
    assert diff < 0.02


def test_determinism(tank_plant, cert, log_quant, log_cfg):
    a = run_log(tank_plant, cert, log_quant, log_cfg, X0, 1.0, 1e-5)
    b = run_log(tank_plant, cert, log_quant, log_cfg, X0, 1.0, 1e-5)
    np.testing.assert_array_equal(a.trajectory.states, b.trajectory.states)
    assert [r.t_k for r in a.records] == [r.t_k for r in b.records]


def test_start_outside_ball_rejected(tank_plant, cert, log_quant, log_cfg, zoom_quant, zoom_cfg):
    with pytest.raises(AssumptionViolation) as e:
        run_log(tank_plant, cert, log_quant, log_cfg, [0.2, 0.0], 1.0, 1e-4)
    assert e.value.name == "initial_ball"
    with pytest.raises(AssumptionViolation):
        run_zoom(tank_plant, cert, zoom_quant, zoom_cfg, [0.11, 0.0], 1.0, 1e-4)


def test_bad_grids_rejected(tank_plant, cert, log_quant, log_cfg, zoom_quant):
    with pytest.raises(ValueError):
        run_log(tank_plant, cert, log_quant, log_cfg, X0, 1.00005, 1e-4)
    cfg = StmZoomConfig(0.075, 0.00105, 180, 0.98372)
    with pytest.raises(ValueError):
        run_zoom(tank_plant, cert, zoom_quant, cfg, X0, 1.0, 1e-4)


def _square(v):
    return v * v


def test_run_many_preserves_order():
    assert run_many(_square, range(6), jobs=1) == [0, 1, 4, 9, 16, 25]
    assert run_many(_square, range(6), jobs=2) == [0, 1, 4, 9, 16, 25]
