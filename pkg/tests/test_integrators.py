import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from degenlag import (
    CallableSystem,
    JacobianMode,
    MethodId,
    NewtonConfig,
    QuadraticLinearSystem,
    StarterMode,
    StarterSpec,
    del_residual,
    discrete_lagrangian,
    integrate,
    pendulum,
    start,
    step,
)
from degenlag.errors import IntegrationError, NewtonDiverged, SingularJacobian
from degenlag.integrators import del_jacobian, fd_jacobian, newton_solve
from degenlag.systems import free_system

PEND = pendulum()
METHODS = list(MethodId)


def _nonlinear_alpha():
    # alpha = (q2 (1 + q1^2 / 4), -q1 / 2), H = (q1^2 + q2^2) / 2
    def alpha(q):
        return np.array([q[1] * (1 + 0.25 * q[0] ** 2), -0.5 * q[0]])

    def a_matrix(q):
        return np.array([[0.5 * q[0] * q[1], 1 + 0.25 * q[0] ** 2], [-0.5, 0.0]])

    return CallableSystem(2, alpha, a_matrix, lambda q: 0.5 * q @ q, lambda q: q.copy(), lambda q: np.eye(2))


@pytest.mark.parametrize("method", METHODS)
def test_lagrangian_on_constant_pair(method):
    q = np.array([0.4, -1.2])
    assert discrete_lagrangian(method, PEND, q, q, 0.3) == pytest.approx(-PEND.hamiltonian(q))


def test_trapezoidal_lagrangian_direct_formula():
    qa, qb, h = np.array([3.0, 0.0]), np.array([3.0, -0.1]), 0.35
    alpha = lambda q: np.array([0.5 * q[1], -0.5 * q[0]])
    H = lambda q: 0.5 * q[1] ** 2 - np.cos(q[0])
    want = 0.5 * (alpha(qa) + alpha(qb)) @ (qb - qa) / h - 0.5 * H(qa) - 0.5 * H(qb)
    assert discrete_lagrangian("trapezoidal", PEND, qa, qb, h) == pytest.approx(want, rel=1e-15)
    # frozen oracle: 0.1/0.35*1.5 - (2*(-cos 3) + 0.005)/2
    assert want == pytest.approx(-0.5639210680, abs=1e-9)


@pytest.mark.parametrize("method", METHODS)
def test_lagrangian_consistency(method):
    qa, w = np.array([0.7, 0.2]), np.array([0.3, -0.8])
    want = PEND.alpha(qa) @ w - PEND.hamiltonian(qa)
    errs = [abs(discrete_lagrangian(method, PEND, qa, qa + h * w, h) - want) for h in (1e-2, 1e-3)]
    assert errs[1] < errs[0] / 5 and errs[1] < 1e-2


@pytest.mark.parametrize("method", METHODS)
def test_residual_at_equilibrium(method):
    z = np.zeros(2)
    assert np.all(del_residual(method, PEND, z, z, z, 0.2) == 0)


@pytest.mark.parametrize("method", METHODS)
@pytest.mark.parametrize("system", [PEND, _nonlinear_alpha()], ids=["pendulum", "nonlinear-alpha"])
def test_residual_is_d2_plus_d1_of_lagrangian(method, system, rng):
    h = 0.25
    for _ in range(5):
        qm, q, qp = rng.uniform(-1, 1, (3, 2))
        e = 1e-6
        grad = [(discrete_lagrangian(method, system, qm, q + e * v, h) + discrete_lagrangian(method, system, q + e * v, qp, h)
                 - discrete_lagrangian(method, system, qm, q - e * v, h) - discrete_lagrangian(method, system, q - e * v, qp, h))
                / (2 * e) for v in np.eye(2)]
        np.testing.assert_allclose(del_residual(method, system, qm, q, qp, h), grad, atol=1e-7)


@pytest.mark.parametrize("method", METHODS)
@pytest.mark.parametrize("system", [PEND, _nonlinear_alpha()], ids=["pendulum", "nonlinear-alpha"])
def test_analytic_jacobian(method, system, rng):
    qm, q, qp = rng.uniform(-1, 1, (3, 2))
    fd = fd_jacobian(lambda x: del_residual(method, system, qm, q, x, 0.3), qp)
    np.testing.assert_allclose(del_jacobian(method, system, q, qp, 0.3), fd, atol=1e-6)


def test_residual_rejects_zero_h():
    with pytest.raises(ValueError):
        del_residual("midpoint", PEND, [0, 0], [0, 0], [0, 0], 0.0)


@pytest.mark.parametrize("method", METHODS)
def test_free_system_step_returns_qm(method):
    free = free_system()
    qm, q = np.array([1.0, 2.0]), np.array([-0.5, 0.3])
    np.testing.assert_allclose(step(method, free, qm, q, 0.1), qm, atol=1e-14)


def test_trapezoidal_explicit_step_value():
    qp = step("trapezoidal", PEND, [3.0, 0.0], [3.0, 0.0], 0.35)
    np.testing.assert_allclose(qp, [3.0, -0.0987840057], atol=1e-10)


@pytest.mark.parametrize("method", METHODS)
def test_step_residual_rechecked(method, rng):
    for _ in range(10):
        qm = rng.uniform(-2, 2, 2)
        q = qm + 0.2 * rng.uniform(-1, 1, 2)
        qp = step(method, PEND, qm, q, 0.2)
        assert np.abs(del_residual(method, PEND, qm, q, qp, 0.2)).max() <= 1e-12


def test_trapezoidal_explicit_and_newton_agree(rng):
    for _ in range(10):
        qm, q = rng.uniform(-2, 2, (2, 2))
        explicit = step("trapezoidal", PEND, qm, q, 0.3)
        newton = newton_solve(lambda x: del_residual("trapezoidal", PEND, qm, q, x, 0.3), 2 * q - qm, NewtonConfig())
        np.testing.assert_allclose(explicit, newton, atol=1e-12)


@pytest.mark.parametrize("method", METHODS)
@given(st.lists(st.floats(-1.5, 1.5), min_size=4, max_size=4), st.floats(0.05, 0.4))
@settings(max_examples=30, deadline=None)
def test_time_symmetry(method, data, h):
    qm, q = np.array(data[:2]), np.array(data[2:])
    qp = step(method, PEND, qm, q, h)
    # reversal of the triple solves the recursion with the step negated
    assert np.abs(del_residual(method, PEND, qp, q, qm, -h)).max() <= 1e-11


@pytest.mark.parametrize("jac", list(JacobianMode))
def test_nonlinear_alpha_midpoint_step(jac, rng):
    system = _nonlinear_alpha()
    cfg = NewtonConfig(jacobian=jac)
    qm, q = np.array([0.3, 0.1]), np.array([0.32, 0.05])
    qp = step("midpoint", system, qm, q, 0.05, cfg)
    assert np.abs(del_residual("midpoint", system, qm, q, qp, 0.05)).max() <= 1e-12
    # trapezoidal with nonlinear alpha goes through Newton
    qp = step("trapezoidal", system, qm, q, 0.05, cfg)
    assert np.abs(del_residual("trapezoidal", system, qm, q, qp, 0.05)).max() <= 1e-12


def test_newton_failures():
    with pytest.raises(NewtonDiverged):
        newton_solve(lambda x: np.array([np.arctan(x[0]) + 2.0]), np.array([0.0]), NewtonConfig(max_iter=5))
    with pytest.raises(SingularJacobian):
        newton_solve(lambda x: np.array([1.0 + 0 * x[0]]), np.array([0.0]), NewtonConfig(), jac=lambda x: np.zeros((1, 1)))


def test_newton_config_validation():
    with pytest.raises(ValueError):
        NewtonConfig(tol=0.0)
    with pytest.raises(ValueError):
        NewtonConfig(max_iter=0)


def test_starters():
    q0 = np.array([3.0, 0.0])
    np.testing.assert_allclose(start(PEND, "midpoint", q0, 0.35, StarterSpec(StarterMode.EXPLICIT_EULER)),
                               [3.0, -0.0493920028], atol=1e-9)
    ref = start(PEND, "midpoint", q0, 0.35)
    np.testing.assert_array_equal(start(PEND, "midpoint", q0, 0.35, StarterSpec.perturbed(0.0)), ref)
    np.testing.assert_allclose(start(PEND, "midpoint", q0, 0.35, StarterSpec.perturbed(1e-3)), ref + [1e-3, 0])
    np.testing.assert_allclose(start(PEND, "midpoint", q0, 0.35, StarterSpec.perturbed(1e-3, [0, 2.0])), ref + [0, 2e-3])
    np.testing.assert_array_equal(start(free_system(), "midpoint", q0, 0.35), q0)


def test_reference_starter_accuracy():
    # the exact flow conserves energy
    q0 = np.array([1.0, 0.0])
    q1 = start(PEND, "midpoint", q0, 0.35)
    assert abs(PEND.hamiltonian(q1) - PEND.hamiltonian(q0)) < 1e-12


def test_starter_spec_validation():
    with pytest.raises(ValueError):
        StarterSpec(StarterMode.REFERENCE_FLOW, 1e-3)
    with pytest.raises(ValueError):
        StarterSpec.perturbed(-1.0)
    with pytest.raises(ValueError):
        StarterSpec(StarterMode.PERTURBED, 1e-3, "sideways")


@pytest.mark.parametrize("method", METHODS)
def test_integrate_lengths(method):
    tr = integrate(method, PEND, [1.0, 0.0], 0.1, 1)
    assert len(tr) == 2
    tr = integrate(method, PEND, [1.0, 0.0], 0.1, 7)
    assert len(tr) == 8 and tr.h == 0.1


@pytest.mark.parametrize("method", METHODS)
def test_free_system_alternates(method):
    q0 = np.array([1.0, 2.0])
    tr = integrate(method, free_system(), q0, 0.2, 9, StarterSpec.perturbed(0.01))
    np.testing.assert_allclose(tr.points[0::2], np.tile(q0, (5, 1)), atol=1e-14)
    np.testing.assert_allclose(tr.points[1::2], np.tile(q0 + [0.01, 0], (5, 1)), atol=1e-14)


@pytest.mark.parametrize("method", METHODS)
def test_quadratic_boundedness(method):
    a = np.array([[0.0, 0.5], [-0.5, 0.0]])
    quad = QuadraticLinearSystem(a, np.diag([1.0, 2.0]))
    tr = integrate(method, quad, [1.0, 0.5], 0.05, 10_000)
    assert np.all(np.isfinite(tr.points)) and np.abs(tr.points).max() < 1e3


def test_pendulum_figure_run_shows_parasites_only_for_trapezoidal():
    from degenlag import decompose_parasites

    amp = {m: decompose_parasites(integrate(m, PEND, [3.0, 0.0], 0.35, 200)).amplitude.max() for m in METHODS}
    assert amp[MethodId.TRAPEZOIDAL] > 10 * amp[MethodId.MIDPOINT]


def test_integration_error_keeps_partial_trajectory():
    cfg = NewtonConfig(max_iter=1, tol=1e-300)
    with pytest.raises(IntegrationError) as info:
        integrate("midpoint", PEND, [1.0, 0.0], 0.3, 10, cfg=cfg)
    assert info.value.trajectory is not None and len(info.value.trajectory) == 2


def test_method_parse():
    assert MethodId.parse("Midpoint") is MethodId.MIDPOINT
    with pytest.raises(ValueError):
        MethodId.parse("leapfrog")
