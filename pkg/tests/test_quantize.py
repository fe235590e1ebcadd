import numpy as np
import pytest

from qstc.errors import AssumptionViolation
from qstc.quantize import (
    LogQuantizer,
    ZoomQuantizer,
    lambda0_log,
    lambda_zoom,
    log_sector_constants,
    q_zoom,
)


def test_q_log_examples():
    q = LogQuantizer(0.85, 0.1166, [1.0, 1.0])
    # bin j=0 is [0.85*0.1166, 0.1166), midpoint (0.1166 + 0.09911)/2
    assert q([0.1, 0.0])[0] == pytest.approx(0.107855, abs=1e-12)
    np.testing.assert_array_equal(q([0.0, 0.0]), [0.0, 0.0])
    assert q([-0.1, 0.0])[0] == pytest.approx(-0.107855, abs=1e-12)


def test_q_log_bins_exact_boundaries():
    rho, chi = 0.5, 1.0
    q = LogQuantizer(rho, chi, [1.0])
    # bins are [chi_(j+1), chi_j): a value on a level goes to the bin above it
    assert q([0.5])[0] == pytest.approx(0.75)
    assert q([0.4999999])[0] == pytest.approx(0.375)
    assert q([1.0])[0] == pytest.approx(1.5)
    assert q([3.9])[0] == pytest.approx(3.0)


def test_q_log_uses_theta_scaled_levels():
    q = LogQuantizer(0.85, 0.1166, [1.0, 0.518])
    # second coordinate levels are chi0 / 0.518
    x2 = -0.2
    lev = 0.1166 / 0.518
    assert 0.85 * lev <= abs(x2) < lev
    assert q([0.0, x2])[1] == pytest.approx(-(lev + 0.85 * lev) / 2)


def test_log_sector_properties(cert, log_quant):
    rng = np.random.default_rng(3)
    cl, op = cert.cl_norm, cert.op_norm
    grow, err = log_sector_constants(log_quant.rho, cert.L_cl, cert.L_op)
    lam = 0.9251
    for _ in range(10_000):
        x = rng.normal(size=2) * 10.0 ** rng.uniform(-6, 1)
        qx = log_quant(x)
        assert cl(qx) <= grow * cl(x) * (1 + 1e-12)
        assert op(qx - x) <= err * op(qx) * (1 + 1e-12) + 1e-300
    # containment inside B_cl(R)
    for _ in range(10_000):
        x = rng.uniform(-1, 1, 2) * cert.R / cert.theta_cl
        if cl(x) >= cert.R:
            continue
        assert cl(log_quant(x)) < lam * cert.R


def test_lambda0_examples(cert):
    assert lambda0_log(LogQuantizer(0.85, cert.R, cert.theta_cl), cert) == pytest.approx(0.925, abs=1e-15)
    assert lambda0_log(LogQuantizer(0.5, cert.R, cert.theta_cl), cert) == pytest.approx(0.75, abs=1e-15)
    assert lambda0_log(LogQuantizer(0.9999, cert.R, cert.theta_cl), cert) < 1.0


def test_chi0_window(cert):
    with pytest.raises(AssumptionViolation) as e:
        LogQuantizer(0.85, 0.9 * cert.R, cert.theta_cl, cert)
    assert e.value.name == "chi0_window"
    with pytest.raises(AssumptionViolation):
        LogQuantizer(0.85, 2 * cert.R / 1.85, cert.theta_cl, cert)
    # the rounded 0.1166 is inside the window but gives lambda0 above 0.9251
    q = LogQuantizer(0.85, 0.1166, cert.theta_cl, cert)
    assert lambda0_log(q, cert) > 0.9251


def test_log_rejects_bad_parameters():
    for rho in (0.0, 1.0, -0.5):
        with pytest.raises(ValueError):
            LogQuantizer(rho, 1.0, [1.0])
    with pytest.raises(ValueError):
        LogQuantizer(0.5, 0.0, [1.0])
    with pytest.raises(ValueError):
        LogQuantizer(0.5, 1.0, [1.0, -1.0])


def test_q_zoom_examples():
    q = ZoomQuantizer(0.105, 0.005, 1.0, [1.0, 1.0])
    assert q([0.1, 0.0])[0] == pytest.approx(0.1, abs=1e-15)
    assert q([0.1037, 0.0])[0] == pytest.approx(0.10, abs=1e-15)
    assert abs(q([0.1037, 0.0])[0] - 0.1037) <= 0.005
    assert q.at(0.5)([0.1037, 0.0])[0] == pytest.approx(0.105, abs=1e-15)
    assert q.at(0.5).mu0 == 1.0
    # ties go away from zero
    assert q([0.005, -0.005]).tolist() == pytest.approx([0.01, -0.01])


def test_zoom_containment_and_scaling(cert, zoom_quant):
    rng = np.random.default_rng(4)
    cl, op = cert.cl_norm, cert.op_norm
    lam = lambda_zoom(zoom_quant, cert)
    M, D = zoom_quant.M, zoom_quant.Delta
    for _ in range(10_000):
        mu = rng.uniform(1e-3, 1.0)
        x = rng.uniform(-1, 1, 2) * M * mu / cert.theta_cl
        if cl(x) >= M * mu:
            continue
        qm = zoom_quant.at(mu)
        qx = qm(x)
        assert op(qx - x) <= D * mu * (1 + 1e-12)
        assert cl(qx) < lam * cert.R
        np.testing.assert_array_equal(qx, mu * zoom_quant.at(1.0)(x / mu))


def test_lambda_zoom_examples(cert):
    q = ZoomQuantizer(0.105, 0.005, 1.0, cert.theta_op)
    assert lambda_zoom(q, cert) == pytest.approx(0.98372, abs=1e-5)
    assert round(lambda_zoom(q, cert), 4) == 0.9837
    assert lambda_zoom(ZoomQuantizer(0.05, 0.005, 1.0, cert.theta_op), cert) == pytest.approx(0.5118, abs=1e-4)
    assert lambda_zoom(ZoomQuantizer(0.105, 0.005, 1e-9, cert.theta_op), cert) < 1e-8
    with pytest.raises(AssumptionViolation) as e:
        ZoomQuantizer(0.105, 0.005, 1.1, cert.theta_op, cert)
    assert e.value.name == "mu0_bound"
    assert e.value.margin < 0


def test_zoom_rejects_bad_parameters():
    for args in ((0, 0.1, 1.0), (0.1, 0, 1.0), (0.1, 0.1, 0.0)):
        with pytest.raises(ValueError):
            ZoomQuantizer(*args, [1.0])
    with pytest.raises(ValueError):
        q_zoom([1.0, 2.0, 3.0], ZoomQuantizer(1, 1, 1, [1.0, 1.0]))
