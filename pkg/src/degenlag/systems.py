"""
Concrete degenerate Lagrangian systems.

* :class:`ToySeparable` -- ``L = (p qdot - q pdot)/2 - U(p) - V(q)``, state
  ordered ``(q, p)``; :func:`pendulum` is the instance ``V = -cos q``,
  ``U = p^2/2``.
* :class:`PointVortexSystem` -- ``n`` point vortices in the plane, state
  ``(a_1, b_1, ..., a_n, b_n)`` with ``z_j = a_j + i b_j``.
* :class:`QuadraticLinearSystem` -- constant ``A`` and ``H = q^T S q / 2``.
* :class:`CallableSystem` -- any system given by plain callables, including
  nonlinear ``alpha``.
"""
import numpy as np
from numpy.polynomial import polynomial as P

from .core import DegenerateSystem, SymThirdTensor, as_state, a_skew, _factor_askew
from .errors import VortexCollision

#: minimum admissible distance between two vortices
COLLISION_RADIUS = 1e-10


class ToySeparable(DegenerateSystem):
    """Separable toy problem with ``H(q, p) = U(p) + V(q)``.

    Parameters
    ----------
    u, v : sequence of 4 callables
        ``(U, U', U'', U''')`` as functions of ``p`` and ``(V, V', V'', V''')``
        as functions of ``q``.
    """

    dim = 2
    alpha_is_linear = True
    _A = np.array([[0.0, 0.5], [-0.5, 0.0]])

    def __init__(self, u, v, name="toy"):
        if len(u) != 4 or len(v) != 4:
            raise ValueError("u and v must each provide the function and three derivatives")
        self.u = tuple(u)
        self.v = tuple(v)
        self.name = name

    def alpha(self, q):
        q = as_state(q, 2)
        return np.array([0.5 * q[1], -0.5 * q[0]])

    def a_matrix(self, q):
        return self._A.copy()

    def hamiltonian(self, q):
        q = as_state(q, 2)
        return float(self.u[0](q[1]) + self.v[0](q[0]))

    def grad_h(self, q):
        q = as_state(q, 2)
        return np.array([self.v[1](q[0]), self.u[1](q[1])], float)

    def hess_h(self, q):
        q = as_state(q, 2)
        return np.diag([self.v[2](q[0]), self.u[2](q[1])]).astype(float)

    def third_h(self, q):
        q = as_state(q, 2)
        d3 = np.array([self.v[3](q[0]), self.u[3](q[1])], float)
        return SymThirdTensor(lambda a, b: d3 * a * b)

    @classmethod
    def from_polynomials(cls, u_coeffs, v_coeffs):
        """Build a toy system with polynomial ``U`` and ``V``.

        Coefficients are in increasing degree, ``c[0] + c[1] x + ...``.
        """
        return cls(_poly_derivs(u_coeffs), _poly_derivs(v_coeffs), name="toy-polynomial")

    def __repr__(self):
        return f"ToySeparable({self.name})"


def _poly_derivs(coeffs):
    c = np.asarray(coeffs, float)
    if c.size == 0:
        c = np.zeros(1)
    derivs = [c]
    for _ in range(3):
        derivs.append(P.polyder(derivs[-1]) if derivs[-1].size > 1 else np.zeros(1))
    return tuple((lambda x, cc=cc: float(P.polyval(x, cc))) for cc in derivs)


def pendulum():
    """Pendulum: ``V(q) = -cos q``, ``U(p) = p^2/2``."""
    u = (lambda p: 0.5 * p * p, lambda p: p, lambda p: 1.0, lambda p: 0.0)
    v = (lambda q: -np.cos(q), np.sin, np.cos, lambda q: -np.sin(q))
    return ToySeparable(u, v, name="pendulum")


PendulumSystem = pendulum


class PointVortexSystem(DegenerateSystem):
    """Planar point vortices with circulations ``gamma``.

    ``alpha_j = (-G_j b_j, G_j a_j)`` and
    ``H = (1/pi) sum_{j<k} G_j G_k log|z_j - z_k|``.
    """

    alpha_is_linear = True

    def __init__(self, gamma):
        gamma = np.asarray(gamma, float).reshape(-1)
        if gamma.size < 2:
            raise ValueError("need at least two vortices")
        if np.any(gamma == 0) or not np.all(np.isfinite(gamma)):
            raise ValueError("circulations must be finite and nonzero")
        self.gamma = gamma
        self.n_vortices = gamma.size
        self.dim = 2 * gamma.size
        a = np.zeros((self.dim, self.dim))
        for j, g in enumerate(gamma):
            a[2 * j, 2 * j + 1] = -g
            a[2 * j + 1, 2 * j] = g
        self._A = a
        self._j, self._k = np.triu_indices(self.n_vortices, 1)
        self._c = gamma[self._j] * gamma[self._k] / np.pi

    def __repr__(self):
        return f"PointVortexSystem(gamma={self.gamma.tolist()})"

    def positions(self, q):
        return as_state(q, self.dim).reshape(self.n_vortices, 2)

    def _differences(self, q):
        """Pair differences ``z_j - z_k`` (j < k) and their squared lengths."""
        z = self.positions(q)
        d = z[self._j] - z[self._k]
        r2 = np.einsum("pi,pi->p", d, d)
        if np.any(r2 < COLLISION_RADIUS**2):
            p = int(np.argmin(r2))
            raise VortexCollision(f"vortices {self._j[p]} and {self._k[p]} are {np.sqrt(r2[p]):.3g} apart")
        return d, r2

    def _scatter(self, t):
        # add pair terms with + at j and - at k
        out = np.zeros((self.n_vortices, 2))
        np.add.at(out, self._j, t)
        np.add.at(out, self._k, -t)
        return out.reshape(-1)

    def alpha(self, q):
        return self._A @ as_state(q, self.dim)

    def a_matrix(self, q):
        return self._A.copy()

    def hamiltonian(self, q):
        _, r2 = self._differences(q)
        return float(np.sum(0.5 * self._c * np.log(r2)))

    def grad_h(self, q):
        d, r2 = self._differences(q)
        return self._scatter((self._c / r2)[:, None] * d)

    def hess_h(self, q):
        d, r2 = self._differences(q)
        blk = self._c[:, None, None] * (np.eye(2) / r2[:, None, None]
                                        - 2.0 * d[:, :, None] * d[:, None, :] / (r2**2)[:, None, None])
        n = self.n_vortices
        hs = np.zeros((n, n, 2, 2))
        np.add.at(hs, (self._j, self._j), blk)
        np.add.at(hs, (self._k, self._k), blk)
        np.add.at(hs, (self._j, self._k), -blk)
        np.add.at(hs, (self._k, self._j), -blk)
        return hs.transpose(0, 2, 1, 3).reshape(self.dim, self.dim)

    def third_h(self, q):
        d, r2 = self._differences(q)
        n = self.n_vortices
        c1 = (-2.0 * self._c / r2**2)[:, None]
        c2 = (8.0 * self._c / r2**3)[:, None]

        def apply(u, v):
            u = u.reshape(n, 2)
            v = v.reshape(n, 2)
            du = u[self._j] - u[self._k]
            dv = v[self._j] - v[self._k]
            uv = np.einsum("pi,pi->p", du, dv)[:, None]
            ud = np.einsum("pi,pi->p", du, d)[:, None]
            vd = np.einsum("pi,pi->p", dv, d)[:, None]
            # third derivative of log|d| contracted twice
            t = c1 * (uv * d + ud * dv + vd * du) + c2 * ud * vd * d
            return self._scatter(t)

        return SymThirdTensor(apply)


def vortex_rhs_complex(system, z):
    """Velocities from ``zdot_j = (i/2pi) sum_{k!=j} G_k / conj(z_j - z_k)``.

    Evaluated in complex arithmetic, independently of the Lagrangian
    machinery; returns the real encoding ``(Re zdot_1, Im zdot_1, ...)``.
    """
    pos = system.positions(z)
    zc = pos[:, 0] + 1j * pos[:, 1]
    n = zc.size
    out = np.zeros(n, complex)
    for j in range(n):
        for k in range(n):
            if k == j:
                continue
            diff = zc[j] - zc[k]
            if abs(diff) < COLLISION_RADIUS:
                raise VortexCollision(f"vortices {j} and {k} collide")
            out[j] += system.gamma[k] / np.conj(diff)
    out *= 1j / (2 * np.pi)
    return np.column_stack([out.real, out.imag]).reshape(-1)


def vortex_invariants(system, z):
    """Return ``(H, linear impulse, angular impulse)``.

    The linear impulse ``sum G_j z_j`` is returned as a 2-vector and the
    angular impulse is ``sum G_j |z_j|^2``.
    """
    h = system.hamiltonian(z)
    pos = system.positions(z)
    impulse = system.gamma @ pos
    angular = float(system.gamma @ np.sum(pos**2, axis=1))
    return h, impulse, angular


class QuadraticLinearSystem(DegenerateSystem):
    """Constant ``A`` and quadratic ``H(q) = q^T S q / 2``; exactly solvable."""

    alpha_is_linear = True

    def __init__(self, A, S):
        A = np.atleast_2d(np.asarray(A, float))
        S = np.atleast_2d(np.asarray(S, float))
        if A.shape[0] != A.shape[1] or S.shape != A.shape:
            raise ValueError("A and S must be square matrices of the same size")
        if not np.allclose(S, S.T, rtol=0, atol=1e-14 * (1 + np.abs(S).max())):
            raise ValueError("S must be symmetric")
        self.A = A
        self.S = 0.5 * (S + S.T)
        self.dim = A.shape[0]
        _factor_askew(A.T - A)

    def __repr__(self):
        return f"QuadraticLinearSystem(dim={self.dim})"

    def alpha(self, q):
        return self.A @ as_state(q, self.dim)

    def a_matrix(self, q):
        return self.A.copy()

    def hamiltonian(self, q):
        q = as_state(q, self.dim)
        return float(0.5 * q @ self.S @ q)

    def grad_h(self, q):
        return self.S @ as_state(q, self.dim)

    def hess_h(self, q):
        return self.S.copy()

    def third_h(self, q):
        return SymThirdTensor.zero(self.dim)

    def field_matrix(self):
        """``M`` with ``el_field(q) = M q``."""
        return np.linalg.solve(a_skew(self, np.zeros(self.dim)), self.S)


class CallableSystem(DegenerateSystem):
    """System assembled from user callables.

    ``third_h`` may be omitted, in which case the finite-difference fallback
    on ``hess_h`` is used.
    """

    def __init__(self, dim, alpha, a_matrix, hamiltonian, grad_h, hess_h,
                 third_h=None, alpha_is_linear=False):
        self.dim = int(dim)
        self._alpha = alpha
        self._a_matrix = a_matrix
        self._hamiltonian = hamiltonian
        self._grad_h = grad_h
        self._hess_h = hess_h
        self._third_h = third_h
        self.alpha_is_linear = bool(alpha_is_linear)

    def alpha(self, q):
        return np.asarray(self._alpha(as_state(q, self.dim)), float)

    def a_matrix(self, q):
        return np.asarray(self._a_matrix(as_state(q, self.dim)), float)

    def hamiltonian(self, q):
        return float(self._hamiltonian(as_state(q, self.dim)))

    def grad_h(self, q):
        return np.asarray(self._grad_h(as_state(q, self.dim)), float)

    def hess_h(self, q):
        return np.asarray(self._hess_h(as_state(q, self.dim)), float)

    def third_h(self, q):
        if self._third_h is None:
            return super().third_h(q)
        t = self._third_h(as_state(q, self.dim))
        return t if isinstance(t, SymThirdTensor) else SymThirdTensor.from_dense(t)


def free_system(dim=2):
    """``H = 0`` with the canonical toy one-form; every state is an equilibrium."""
    a = np.zeros((dim, dim))
    for j in range(0, dim - 1, 2):
        a[j, j + 1] = 0.5
        a[j + 1, j] = -0.5
    return QuadraticLinearSystem(a, np.zeros((dim, dim)))
