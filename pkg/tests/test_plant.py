import math

import numpy as np
import pytest

from qstc.errors import DimensionError, DomainError
from qstc.plant import (
    LurePlant,
    Plant,
    TwoTank,
    linear_nonlinearity,
    lure_from_two_tank,
    make_nonlinearity,
    sqrt_shift,
    zero_nonlinearity,
)

from conftest import A_TANK, B_TANK


def test_tank_rhs_examples():
    tank = TwoTank(2.0, 1.0)
    phi = 2 * math.sqrt(0.7) - 2
    np.testing.assert_allclose(tank.eval_f([0.1, -0.2], [0.0]), [phi, -phi], rtol=1e-15)
    assert tank.eval_f([0.1, -0.2], [0.0])[0] == pytest.approx(-0.32668, abs=1e-5)
    np.testing.assert_array_equal(tank.eval_f([0, 0], [0]), [0, 0])
    np.testing.assert_array_equal(tank.eval_f([0, 0], [1]), [1, 0])


def test_lure_form_matrices(tank_plant):
    np.testing.assert_array_equal(tank_plant.A, A_TANK)
    np.testing.assert_array_equal(tank_plant.B, B_TANK)
    np.testing.assert_array_equal(tank_plant.xi, [1, -1])
    np.testing.assert_array_equal(tank_plant.eta, [-1, 1])
    assert tank_plant.phi(0.0) == 0.0
    assert tank_plant.phi.derivative(0.0) == pytest.approx(0.0, abs=1e-15)


def test_lure_matches_tank_rhs(K):
    tank = TwoTank(2.0, 1.0)
    lp = lure_from_two_tank(tank, K)
    rng = np.random.default_rng(5)
    for _ in range(10_000):
        x = rng.uniform(-0.4, 0.4, 2)
        u = rng.uniform(-1, 1, 1)
        np.testing.assert_allclose(lp.eval_f(x, u), tank.eval_f(x, u), atol=1e-12)
    np.testing.assert_allclose(lp.eval_f([0.1, -0.2], [0.3]), tank.eval_f([0.1, -0.2], [0.3]), atol=1e-12)


def test_lqr_gain_matches_reference(K):
    np.testing.assert_allclose(K, [[-0.7979, -0.6163]], atol=5e-5)
    # closed loop is Hurwitz and K solves the Riccati optimality condition
    assert np.all(np.linalg.eigvals(A_TANK + B_TANK @ K).real < 0)


def test_eval_F_identities(tank_plant, K):
    x = np.array([0.1, -0.2])
    np.testing.assert_array_equal(tank_plant.eval_F(x, [0, 0]), tank_plant.F0(x))
    np.testing.assert_allclose(tank_plant.eval_F([0, 0], [0.01, 0]), [K[0, 0] * 0.01, 0], atol=1e-15)
    assert tank_plant.eval_F([0, 0], [0.01, 0])[0] == pytest.approx(-0.007979, abs=1e-6)
    rng = np.random.default_rng(6)
    BK = tank_plant.B @ tank_plant.K
    for _ in range(1000):
        x, e = rng.uniform(-0.3, 0.3, 2), rng.uniform(-0.1, 0.1, 2)
        np.testing.assert_allclose(tank_plant.eval_F(x, e) - tank_plant.F0(x), BK @ e, atol=1e-14)
        np.testing.assert_allclose(tank_plant.f_q(x, x), tank_plant.F0(x), atol=1e-15)


def test_jacobians_match_finite_differences(tank_plant):
    x = np.array([0.05, -0.1])
    J_fd = Plant.jacobian_F0(tank_plant, x)
    np.testing.assert_allclose(tank_plant.jacobian_F0(x), J_fd, atol=1e-8)
    q = np.array([0.02, 0.03])
    np.testing.assert_allclose(tank_plant.jacobian_fq(x, q), Plant.jacobian_fq(tank_plant, x, q), atol=1e-8)


def test_domain_guard():
    phi = sqrt_shift(2.0, 1.0)
    with pytest.raises(DomainError):
        phi(-1.5)
    with pytest.raises(DomainError):
        TwoTank(2.0, 1.0).Phi(-2.0)
    with pytest.raises(ValueError):
        sqrt_shift(-1.0, 1.0)


def test_catalog_and_validation():
    assert make_nonlinearity("linear", slope=2.0)(3.0) == 6.0
    assert make_nonlinearity("zero")(1.0) == 0.0
    assert make_nonlinearity("sqrt_shift", a=2.0, H=1.0).derivative(0.0) == pytest.approx(0.0)
    with pytest.raises(ValueError):
        make_nonlinearity("cubic")
    with pytest.raises(ValueError):
        LurePlant(A_TANK, B_TANK, [[0, 0]], [0, 0], [1, 1], zero_nonlinearity())
    with pytest.raises(DimensionError):
        LurePlant(np.ones((2, 3)), B_TANK, [[0, 0]], [1, 0], [1, 1], zero_nonlinearity())
    with pytest.raises(ValueError):
        Plant(1, 1, lambda x, u: x + 1.0, lambda x: 0 * x)
    with pytest.raises(DimensionError):
        TwoTank().eval_F([1.0, 2.0, 3.0], [0, 0])


def test_slope_region(tank_plant):
    assert tank_plant.in_slope_region([0.1, -0.2])
    assert not tank_plant.in_slope_region([0.3, -0.2])
    lin = LurePlant([[-1.0]], [[1.0]], [[0.0]], [1.0], [1.0], linear_nonlinearity(0.5))
    assert lin.kernel_ready and math.isinf(lin.R0)
