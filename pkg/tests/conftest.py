import numpy as np
import pytest

from qstc.certify import certify_lure
from qstc.config import ExperimentConfig, bundled_config
from qstc.plant import TwoTank, lqr_gain, lure_from_two_tank
from qstc.quantize import LogQuantizer, ZoomQuantizer, lambda_zoom
from qstc.simulate import run_ideal, run_log, run_zoom
from qstc.stm import StmLogConfig, StmZoomConfig

A_TANK = np.array([[-1.0, 1.0], [1.0, -1.0]])
B_TANK = np.array([[1.0], [0.0]])
THETA_CL = np.array([1.0, 0.518])
THETA_OP = np.array([1.0, 1.0])
X0 = np.array([0.1, -0.2])


@pytest.fixture(scope="session")
def K():
    return lqr_gain(A_TANK, B_TANK)


@pytest.fixture(scope="session")
def tank_plant(K):
    return lure_from_two_tank(TwoTank(2.0, 1.0), K, 0.45)


@pytest.fixture(scope="session")
def cert(tank_plant):
    return certify_lure(tank_plant, 0.4, 0.0, theta_cl=THETA_CL, theta_op=THETA_OP)


@pytest.fixture(scope="session")
def log_quant(cert):
    return LogQuantizer(0.85, cert.R, cert.theta_cl, cert)


@pytest.fixture(scope="session")
def log_cfg():
    return StmLogConfig(sigma=0.25, tau_max=0.18, lam=0.9251)


@pytest.fixture(scope="session")
def zoom_quant(cert):
    return ZoomQuantizer(0.105, 0.005, 1.0, cert.theta_op, cert)


@pytest.fixture(scope="session")
def zoom_cfg(cert, zoom_quant):
    return StmZoomConfig(sigma=0.075, h=0.001, ell_max=180, lam=lambda_zoom(zoom_quant, cert))


@pytest.fixture(scope="session")
def log_run(tank_plant, cert, log_quant, log_cfg):
    return run_log(tank_plant, cert, log_quant, log_cfg, X0, 6.0, 1e-5)


@pytest.fixture(scope="session")
def zoom_run(tank_plant, cert, zoom_quant, zoom_cfg):
    return run_zoom(tank_plant, cert, zoom_quant, zoom_cfg, X0, 6.0, 1e-5)


@pytest.fixture(scope="session")
def ideal_run(tank_plant, cert):
    return run_ideal(tank_plant, X0, 6.0, 1e-5, cert)


@pytest.fixture(scope="session")
def bundled():
    return ExperimentConfig.load(bundled_config("two_tank.cfg"))
