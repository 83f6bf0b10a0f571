"""
State and system abstractions for Lagrangians linear in the velocities,

    L(q, qdot) = <alpha(q), qdot> - H(q),

together with the exact Euler-Lagrange vector field

    qdot = A_skew(q)^{-1} H'(q)^T,   A = alpha'(q),   A_skew = A^T - A.

States are 1-D float arrays. Matrices are dense 2-D arrays; the systems of
interest are small (a handful to a few dozen coordinates).
"""
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.linalg

from .errors import NotLinearAlpha, SingularAskew

#: condition number above which A_skew is treated as singular
COND_LIMIT = 1e14


def fd_step(q):
    """Central finite-difference step used for derivative fallbacks and checks."""
    return 1e-5 * (1.0 + np.linalg.norm(q))


class SymThirdTensor:
    """Contraction ``H'''(q)(u, v, .)`` of a symmetric third derivative.

    Parameters
    ----------
    apply : callable
        ``apply(u, v)`` returns the contracted vector.
    """

    __slots__ = ("_apply",)

    def __init__(self, apply):
        self._apply = apply

    def apply(self, u, v):
        return np.asarray(self._apply(np.asarray(u, float), np.asarray(v, float)), float)

    __call__ = apply

    @classmethod
    def from_dense(cls, tensor):
        tensor = np.asarray(tensor, float)
        return cls(lambda u, v: np.einsum("ijk,i,j->k", tensor, u, v))

    @classmethod
    def zero(cls, dim):
        return cls(lambda u, v: np.zeros(dim))

    def dense(self, dim):
        """Materialize the full ``dim x dim x dim`` array (for tests)."""
        eye = np.eye(dim)
        out = np.empty((dim, dim, dim))
        for i in range(dim):
            for j in range(dim):
                out[i, j] = self.apply(eye[i], eye[j])
        return out


class DegenerateSystem:
    """Base class for first-order Lagrangian systems.

    Subclasses provide ``dim``, ``alpha``, ``a_matrix``, ``hamiltonian``,
    ``grad_h`` and ``hess_h``. ``third_h`` falls back to central differences
    of ``hess_h``; concrete systems shipped with the package override it with
    closed forms.

    Instances are treated as immutable.
    """

    dim: int
    alpha_is_linear: bool = False

    def alpha(self, q):
        raise NotImplementedError

    def a_matrix(self, q):
        raise NotImplementedError

    def hamiltonian(self, q):
        raise NotImplementedError

    def grad_h(self, q):
        raise NotImplementedError

    def hess_h(self, q):
        raise NotImplementedError

    def third_h(self, q):
        return fd_third_h(self, q)

    @cached_property
    def _askew_lu(self):
        # only valid for linear alpha, where A is constant
        return _factor_askew(a_skew(self, np.zeros(self.dim)))

    @cached_property
    def askew_inverse(self):
        """Constant ``A_skew^{-1}`` of a linear-alpha system."""
        require_linear(self)
        return scipy.linalg.lu_solve(self._askew_lu, np.eye(self.dim), check_finite=False)

    def askew_solve(self, q, rhs):
        """Solve ``A_skew(q) x = rhs`` by LU with partial pivoting."""
        if self.alpha_is_linear:
            lu = self._askew_lu
        else:
            lu = _factor_askew(a_skew(self, q))
        return scipy.linalg.lu_solve(lu, np.asarray(rhs, float), check_finite=False)


def _factor_askew(m):
    if not np.all(np.isfinite(m)):
        raise SingularAskew("A_skew has non-finite entries")
    cond = np.linalg.cond(m)
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise SingularAskew(f"A_skew is singular (condition estimate {cond:.3g})")
    return scipy.linalg.lu_factor(m, check_finite=False)


def fd_third_h(system, q):
    """Finite-difference third derivative built from ``hess_h``."""
    q = np.asarray(q, float)
    eps = fd_step(q)

    def apply(u, v):
        dh = (system.hess_h(q + eps * v) - system.hess_h(q - eps * v)) / (2 * eps)
        return dh @ u

    return SymThirdTensor(apply)


@dataclass(frozen=True)
class Trajectory:
    """Discrete curve with point ``j`` at time ``t0 + j*h``."""

    t0: float
    h: float
    points: np.ndarray = field(repr=False)

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, float))
        if pts.shape[0] == 0 or pts.shape[1] == 0:
            raise ValueError("trajectory must contain at least one non-empty state")
        if not self.h > 0:
            raise ValueError("trajectory step h must be positive")
        object.__setattr__(self, "points", pts)

    def __len__(self):
        return self.points.shape[0]

    @property
    def dim(self):
        return self.points.shape[1]

    @property
    def times(self):
        return self.t0 + self.h * np.arange(len(self))

    @property
    def t_end(self):
        return self.t0 + self.h * (len(self) - 1)


def as_state(q, dim=None):
    q = np.asarray(q, dtype=float).reshape(-1)
    if dim is not None and q.shape[0] != dim:
        raise ValueError(f"expected state of dimension {dim}, got {q.shape[0]}")
    return q


def a_skew(system, q):
    """Return ``A(q)^T - A(q)``; antisymmetric by construction."""
    a = np.asarray(system.a_matrix(as_state(q, system.dim)), float)
    return a.T - a


def el_field(system, q):
    """Exact Euler-Lagrange vector field ``A_skew(q)^{-1} H'(q)^T``."""
    q = as_state(q, system.dim)
    return system.askew_solve(q, system.grad_h(q))


def accel_leading(system, q):
    """Leading-order acceleration ``A_skew^{-1} H''(q) f0(q)`` for linear alpha.

    This is the time derivative of the exact field along its own flow,
    ``f0'(q) f0(q)``, which for constant ``A_skew`` reduces to the expression
    above.
    """
    require_linear(system)
    q = as_state(q, system.dim)
    f0 = el_field(system, q)
    return system.askew_solve(q, system.hess_h(q) @ f0)


def require_linear(system):
    if not system.alpha_is_linear:
        raise NotLinearAlpha(
            f"{type(system).__name__} has nonlinear alpha; only order-0 operations are supported"
        )
