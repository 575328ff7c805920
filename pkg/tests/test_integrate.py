import numpy as np
import pytest

from attnsim import quadspace
from attnsim.dynamics import rhs_vanilla
from attnsim.errors import DomainError, IntegrationError
from attnsim.integrate import IntegratorConfig, Termination, integrate, rk4_step, stable_step
from attnsim.params import ModelParams, params_from_w_and_a, random_params

from cases import SHRINK_A, SHRINK_W, SHRINK_X0


def test_config_validation():
    with pytest.raises(DomainError):
        IntegratorConfig(h=0.0)
    with pytest.raises(DomainError):
        IntegratorConfig(h=1.0, T=0.5)
    with pytest.raises(DomainError):
        IntegratorConfig(record_stride=0)


def test_zero_rhs_keeps_state():
    X0 = np.array([[1.0, 2.0], [3.0, 4.0]])
    traj = integrate(lambda t, X: np.zeros_like(X), X0, IntegratorConfig(h=0.1, T=1.0))
    assert traj.terminated is Termination.HORIZON_REACHED
    np.testing.assert_array_equal(traj.final, X0)
    np.testing.assert_allclose(traj.times, np.arange(11) * 0.1)


def test_rk4_scalar_exponential_one_step():
    X = np.array([[1.0]])
    out = rk4_step(lambda t, X: X, X, 0.0, 0.1)
    assert out[0, 0] == pytest.approx(1.10517083, abs=1e-7)
    assert abs(out[0, 0] - np.exp(0.1)) < 1e-7


def test_rk4_order_four_richardson():
    # halving h shrinks the global error at T=1 by ~16x on x' = x
    errs = []
    for h in (0.1, 0.05, 0.025):
        traj = integrate(lambda t, X: X, np.array([[1.0]]), IntegratorConfig(h=h, T=1.0))
        errs.append(abs(traj.final[0, 0] - np.e))
    assert 12.0 < errs[0] / errs[1] < 20.0
    assert 12.0 < errs[1] / errs[2] < 20.0


def test_single_token_matches_matrix_exponential():
    rng = np.random.default_rng(0)
    p = random_params(3, 41)
    x0 = rng.normal(size=(1, 3))
    traj = integrate(lambda t, X: rhs_vanilla(p, X), x0, IntegratorConfig(h=1e-3, T=2.0))
    expected = x0 @ quadspace.matexp(2.0 * p.V.T).T
    assert np.abs(traj.final - expected).max() < 1e-6


def test_blow_up_guard():
    p = ModelParams(D=2, Q=np.zeros((2, 2)), K=np.zeros((2, 2)), V=2.0 * np.eye(2), Dk=1)
    X0 = np.array([[1.0, 0.5], [0.8, 0.2]])
    traj = integrate(lambda t, X: rhs_vanilla(p, X), X0, IntegratorConfig(h=1e-2, T=20.0, blowup_norm=1e8))
    assert traj.terminated is Termination.BLOW_UP
    assert traj.blowup_time is not None and traj.blowup_time < 20.0
    assert np.linalg.norm(traj.final, axis=1).max() > 1e8
    assert np.isfinite(traj.states).all()


def test_determinism_bitwise():
    p = random_params(2, 3)
    X0 = np.array([[0.3, -0.4], [0.1, 0.9]])
    cfg = IntegratorConfig(h=1e-2, T=1.0)
    a = integrate(lambda t, X: rhs_vanilla(p, X), X0, cfg)
    b = integrate(lambda t, X: rhs_vanilla(p, X), X0, cfg)
    np.testing.assert_array_equal(a.states, b.states)


def test_record_stride_includes_endpoints():
    traj = integrate(lambda t, X: np.zeros_like(X), np.zeros((1, 1)), IntegratorConfig(h=0.1, T=1.0, record_stride=3))
    np.testing.assert_allclose(traj.times, [0.0, 0.3, 0.6, 0.9, 1.0])


def test_step_size_convergence_on_reference_set():
    p = params_from_w_and_a(SHRINK_W, quadspace.sym(SHRINK_A))
    finals = {}
    for h in (1e-2, 5e-3, 2.5e-3):
        traj = integrate(lambda t, X: rhs_vanilla(p, X), SHRINK_X0, IntegratorConfig(h=h, T=5.0))
        finals[h] = traj.final
    d1 = np.abs(finals[1e-2] - finals[5e-3]).max()
    d2 = np.abs(finals[5e-3] - finals[2.5e-3]).max()
    # fitted C = d / h^4 stays stable under refinement
    c1 = d1 / 1e-2**4
    c2 = d2 / 5e-3**4
    assert 0.25 < c1 / c2 < 4.0


def test_time_reversal_single_step():
    p = random_params(2, 9)
    X0 = np.array([[0.5, -0.2], [0.1, 0.4]])
    h = 1e-2
    fwd = rk4_step(lambda t, X: rhs_vanilla(p, X), X0, 0.0, h)
    back = rk4_step(lambda t, X: -rhs_vanilla(p, X), fwd, 0.0, h)
    assert np.abs(back - X0).max() < 1e-10


def test_rhs_error_carries_time():
    def bad(t, X):
        if t > 0.049:
            raise ValueError("boom")
        return np.zeros_like(X)

    with pytest.raises(IntegrationError, match="t=0.04"):
        integrate(bad, np.zeros((1, 1)), IntegratorConfig(h=1e-2, T=1.0))


def test_stable_step_caps_by_spectral_radius():
    assert stable_step(np.zeros((2, 2))) == 1e-2
    assert stable_step(100.0 * np.eye(2)) == pytest.approx(0.005)
