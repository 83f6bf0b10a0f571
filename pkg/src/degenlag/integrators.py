"""
Variational integrators for degenerate Lagrangians.

Two discrete Lagrangians are provided:

midpoint
    ``L(a, b) = <alpha((a+b)/2), (b-a)/h> - H((a+b)/2)``
trapezoidal
    ``L(a, b) = <(alpha(a)+alpha(b))/2, (b-a)/h> - (H(a)+H(b))/2``

Both lead to a three-point recursion ``D2 L(q_{j-1}, q_j) + D1 L(q_j, q_{j+1}) = 0``,
so they are two-step methods and need a second starting value.
"""
import enum
import logging
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .core import Trajectory, as_state, el_field, fd_step
from .errors import DegenLagError, IntegrationError, NewtonDiverged, SingularJacobian

log = logging.getLogger(__name__)


class MethodId(str, enum.Enum):
    MIDPOINT = "midpoint"
    TRAPEZOIDAL = "trapezoidal"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValueError(f"unknown method {value!r}; expected midpoint or trapezoidal") from None


class StarterMode(str, enum.Enum):
    REFERENCE_FLOW = "reference-flow"
    EXPLICIT_EULER = "explicit-euler"
    PERTURBED = "perturbed"


ALTERNATING_UNIT = "alternating-unit"


@dataclass(frozen=True)
class StarterSpec:
    """How the second point ``q_1`` of the recursion is produced.

    ``direction`` is a state vector or the string ``"alternating-unit"``
    (first coordinate unit vector).
    """

    mode: StarterMode = StarterMode.REFERENCE_FLOW
    epsilon: float = 0.0
    direction: object = ALTERNATING_UNIT

    def __post_init__(self):
        object.__setattr__(self, "mode", StarterMode(self.mode))
        if self.epsilon < 0:
            raise ValueError("epsilon must be non-negative")
        if self.epsilon != 0 and self.mode is not StarterMode.PERTURBED:
            raise ValueError("epsilon is only meaningful in perturbed mode")
        if not isinstance(self.direction, str):
            object.__setattr__(self, "direction", tuple(float(x) for x in np.ravel(self.direction)))
        elif self.direction != ALTERNATING_UNIT:
            raise ValueError(f"unknown direction {self.direction!r}")

    @classmethod
    def perturbed(cls, epsilon, direction=ALTERNATING_UNIT):
        return cls(StarterMode.PERTURBED, float(epsilon), direction)

    def direction_vector(self, dim):
        if isinstance(self.direction, str):
            e = np.zeros(dim)
            e[0] = 1.0
            return e
        return as_state(self.direction, dim)


class JacobianMode(str, enum.Enum):
    ANALYTIC = "analytic"
    FINITE_DIFFERENCE = "finite-difference"


@dataclass(frozen=True)
class NewtonConfig:
    tol: float = 1e-12
    max_iter: int = 50
    jacobian: JacobianMode = JacobianMode.ANALYTIC

    def __post_init__(self):
        object.__setattr__(self, "jacobian", JacobianMode(self.jacobian))
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")


# -- discrete Lagrangians and their partial derivatives -----------------------


def discrete_lagrangian(method, system, qa, qb, h):
    method = MethodId.parse(method)
    qa, qb = as_state(qa, system.dim), as_state(qb, system.dim)
    v = (qb - qa) / h
    if method is MethodId.MIDPOINT:
        m = 0.5 * (qa + qb)
        return float(system.alpha(m) @ v - system.hamiltonian(m))
    return float(0.5 * (system.alpha(qa) + system.alpha(qb)) @ v
                 - 0.5 * system.hamiltonian(qa) - 0.5 * system.hamiltonian(qb))


def d1_lagrangian(method, system, qa, qb, h):
    """Gradient of the discrete Lagrangian with respect to its first argument."""
    v = (qb - qa) / h
    if method is MethodId.MIDPOINT:
        m = 0.5 * (qa + qb)
        return 0.5 * system.a_matrix(m).T @ v - system.alpha(m) / h - 0.5 * system.grad_h(m)
    return (0.5 * system.a_matrix(qa).T @ v
            - 0.5 * (system.alpha(qa) + system.alpha(qb)) / h
            - 0.5 * system.grad_h(qa))


def d2_lagrangian(method, system, qa, qb, h):
    """Gradient of the discrete Lagrangian with respect to its second argument."""
    v = (qb - qa) / h
    if method is MethodId.MIDPOINT:
        m = 0.5 * (qa + qb)
        return 0.5 * system.a_matrix(m).T @ v + system.alpha(m) / h - 0.5 * system.grad_h(m)
    return (0.5 * system.a_matrix(qb).T @ v
            + 0.5 * (system.alpha(qa) + system.alpha(qb)) / h
            - 0.5 * system.grad_h(qb))


def del_residual(method, system, qm, q, qp, h):
    """Discrete Euler-Lagrange residual ``D2 L(qm, q) + D1 L(q, qp)`` as a column.

    A negative ``h`` is accepted and describes the backward recursion.
    """
    method = MethodId.parse(method)
    dim = system.dim
    qm, q, qp = as_state(qm, dim), as_state(q, dim), as_state(qp, dim)
    if h == 0:
        raise ValueError("h must be nonzero")
    if method is MethodId.TRAPEZOIDAL:
        # D2 + D1 collapses to a single expression around q
        return (system.a_matrix(q).T @ (qp - qm) - (system.alpha(qp) - system.alpha(qm))) / (2 * h) \
            - system.grad_h(q)
    return d2_lagrangian(method, system, qm, q, h) + d1_lagrangian(method, system, q, qp, h)


def del_jacobian(method, system, q, qp, h):
    """Jacobian of :func:`del_residual` with respect to ``qp``."""
    if method is MethodId.TRAPEZOIDAL:
        return (system.a_matrix(q).T - system.a_matrix(qp)) / (2 * h)
    m = 0.5 * (q + qp)
    a = system.a_matrix(m)
    jac = (a.T - a) / (2 * h) - 0.25 * system.hess_h(m)
    if not system.alpha_is_linear:
        # d/dm [A(m)^T w] with w fixed, by central differences of A
        w = (qp - q) / h
        eps = fd_step(m)
        eye = np.eye(system.dim)
        cols = [(system.a_matrix(m + eps * e).T @ w - system.a_matrix(m - eps * e).T @ w) / (2 * eps)
                for e in eye]
        jac = jac + 0.25 * np.column_stack(cols)
    return jac


def fd_jacobian(fun, x, step=1e-7):
    fx = fun(x)
    jac = np.empty((fx.size, x.size))
    for i in range(x.size):
        dx = np.zeros_like(x)
        dx[i] = step * max(1.0, abs(x[i]))
        jac[:, i] = (fun(x + dx) - fun(x - dx)) / (2 * dx[i])
    return jac


def newton_solve(fun, x0, cfg, jac=None):
    """Solve ``fun(x) = 0`` by Newton's method on the residual infinity-norm.

    ``jac`` is used when given and ``cfg`` asks for analytic Jacobians;
    otherwise central differences (step 1e-7) are used.
    """
    x = np.array(x0, float)
    r = fun(x)
    for it in range(cfg.max_iter + 1):
        err = np.max(np.abs(r))
        if not np.isfinite(err):
            break
        if err <= cfg.tol:
            return x
        if it == cfg.max_iter:
            break
        if jac is not None and cfg.jacobian is JacobianMode.ANALYTIC:
            J = jac(x)
        else:
            J = fd_jacobian(fun, x)
        try:
            with warnings.catch_warnings():
                # exact zero pivots are reported below
                warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
                lu = scipy.linalg.lu_factor(J, check_finite=True)
        except (ValueError, np.linalg.LinAlgError) as exc:
            raise SingularJacobian(str(exc)) from exc
        if np.any(np.abs(np.diag(lu[0])) <= 1e-300):
            raise SingularJacobian("Newton Jacobian is singular")
        x = x - scipy.linalg.lu_solve(lu, r)
        r = fun(x)
    raise NewtonDiverged(f"residual {np.max(np.abs(r)):.3e} above tol {cfg.tol:g} after {cfg.max_iter} iterations")


def step(method, system, qm, q, h, cfg=NewtonConfig()):
    """Solve the discrete Euler-Lagrange equation for the next point."""
    method = MethodId.parse(method)
    dim = system.dim
    qm, q = as_state(qm, dim), as_state(q, dim)
    if not h > 0:
        raise ValueError("h must be positive")
    if not (np.all(np.isfinite(qm)) and np.all(np.isfinite(q))):
        raise ValueError("non-finite input state")
    if method is MethodId.TRAPEZOIDAL and system.alpha_is_linear:
        return qm + 2 * h * el_field(system, q)
    return newton_solve(
        lambda x: del_residual(method, system, qm, q, x, h),
        2 * q - qm,
        cfg,
        jac=lambda x: del_jacobian(method, system, q, x, h),
    )


def start(system, method, q0, h, spec=StarterSpec()):
    """Produce ``q_1`` from ``q_0``."""
    from .analysis import reference_solve

    q0 = as_state(q0, system.dim)
    if not h > 0:
        raise ValueError("h must be positive")
    if spec.mode is StarterMode.EXPLICIT_EULER:
        return q0 + h * el_field(system, q0)
    n_sub = max(64, int(np.ceil(h / 2.5e-4)))
    q1 = reference_solve(lambda x: el_field(system, x), q0, h, h / n_sub).points[-1]
    if spec.mode is StarterMode.PERTURBED:
        q1 = q1 + spec.epsilon * spec.direction_vector(system.dim)
    return q1


def integrate(method, system, q0, h, n_steps, starter=StarterSpec(), cfg=NewtonConfig(), t0=0.0):
    """Run the two-step recursion; returns ``n_steps + 1`` points.

    On failure an :class:`IntegrationError` carrying the partial trajectory
    is raised.
    """
    method = MethodId.parse(method)
    if n_steps < 1:
        raise ValueError("n_steps must be at least 1")
    q0 = as_state(q0, system.dim)
    points = np.empty((n_steps + 1, system.dim))
    points[0] = q0
    j = 1
    try:
        points[1] = start(system, method, q0, h, starter)
        for j in range(2, n_steps + 1):
            points[j] = step(method, system, points[j - 2], points[j - 1], h, cfg)
            if not np.all(np.isfinite(points[j])):
                raise NewtonDiverged("non-finite state")
    except DegenLagError as exc:
        log.warning("integration stopped at step %d: %s", j, exc)
        partial = Trajectory(t0, h, points[:j]) if j > 0 else None
        raise IntegrationError(f"{method.value} integration failed at step {j}: {exc}", partial) from exc
    return Trajectory(t0, h, points)
