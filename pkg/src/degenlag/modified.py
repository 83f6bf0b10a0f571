"""
Backward error analysis for the midpoint and trapezoidal variational integrators.

Principal modified equation
    The modified Lagrangian truncated after ``h^3`` reads
    ``L_mod = <A q, qdot> - H + h^2 ell(q, qdot)`` with

    * midpoint:    ``ell = (-qdot^T H'' qdot - 2 H' S H'' qdot) / 24``
    * trapezoidal: ``ell = (-2 qdot^T H'' qdot - H' S H'' qdot) / 12``

    where ``S = A_skew^{-1}``. Its Euler-Lagrange equation, reduced to first
    order by substituting the leading-order dynamics, gives the field
    ``f0 + h^2 f2``.

Full system of modified equations
    Writing ``q_j = x_j + (-1)^j y_j`` and averaging the discrete Lagrangian
    over both sign recombinations yields a doubled discrete Lagrangian whose
    critical curves encode two independent solutions of the original
    recursion. Its leading-order modified equations describe the smooth part
    ``x`` and the parasitic part ``y``.

Only linear ``alpha`` is supported here (constant ``A`` and ``S``).
"""
import enum
from dataclasses import dataclass

import numpy as np

from . import eigen
from .core import as_state, accel_leading, el_field, require_linear
from .integrators import (
    MethodId,
    NewtonConfig,
    del_residual,
    d1_lagrangian,
    d2_lagrangian,
    discrete_lagrangian,
    newton_solve,
)


class TruncationOrder(enum.IntEnum):
    ZERO = 0
    TWO = 2

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        names = {"zero": cls.ZERO, "0": cls.ZERO, "two": cls.TWO, "2": cls.TWO}
        try:
            return names[str(value).lower()]
        except KeyError:
            raise ValueError(f"unknown truncation order {value!r}") from None


@dataclass(frozen=True)
class DoubledState:
    """Smooth part ``x`` and parasitic part ``y`` of a state."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x, y = as_state(self.x), as_state(self.y)
        if x.shape != y.shape:
            raise ValueError("x and y must have the same dimension")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    def recombine(self, sign=1):
        """``x + sign*y``."""
        return self.x + sign * self.y


# weights (beta, gamma) of ell = beta * (-v^T H'' v) + gamma * (-H' S H'' v)
_ELL_WEIGHTS = {
    MethodId.MIDPOINT: (1.0 / 24.0, 2.0 / 24.0),
    MethodId.TRAPEZOIDAL: (2.0 / 12.0, 1.0 / 12.0),
}


def _askew_inverse(system):
    return system.askew_inverse


def h2_coefficient(method, system, q, qdot):
    """``ell(q, qdot)``, the ``h^2`` coefficient of the modified Lagrangian."""
    beta, gamma = _ELL_WEIGHTS[MethodId.parse(method)]
    hs = system.hess_h(q)
    g = system.grad_h(q)
    s = _askew_inverse(system)
    return float(-beta * qdot @ hs @ qdot - gamma * g @ s @ hs @ qdot)


def modified_lagrangian_order2(method, system, q, qdot, h):
    """Modified Lagrangian truncated after ``h^3``."""
    require_linear(system)
    q = as_state(q, system.dim)
    qdot = as_state(qdot, system.dim)
    base = float(qdot @ system.a_matrix(q) @ q) - system.hamiltonian(q)
    return base + h * h * h2_coefficient(method, system, q, qdot)


def _ell_partials(method, system, q, v):
    """Closed-form partials of ``ell`` at ``(q, v)``.

    Returns ``(ell_q, ell_vq, ell_vv)``. ``ell_vq`` is returned as the map
    ``w -> (d^2 ell / dv dq) w`` so the mixed block is never materialized.
    """
    beta, gamma = _ELL_WEIGHTS[method]
    hs = system.hess_h(q)
    g = system.grad_h(q)
    t3 = system.third_h(q)
    s = _askew_inverse(system)
    stg = s.T @ g
    ell_q = -beta * t3(v, v) - gamma * (hs @ (s @ (hs @ v)) + t3(stg, v))

    def ell_vq(w):
        return -2.0 * beta * t3(v, w) - gamma * (hs @ (s.T @ (hs @ w)) + t3(stg, w))

    ell_vv = -2.0 * beta * hs
    return ell_q, ell_vq, ell_vv


def principal_field(method, system, q, h, order=TruncationOrder.TWO):
    """Truncated principal modified vector field ``f0`` or ``f0 + h^2 f2``.

    ``f2 = -A_skew^{-1} (ell_q - ell_vq f0 - ell_vv qddot)`` with all partials
    evaluated at ``qdot = f0(q)`` and ``qddot`` the leading-order acceleration.
    """
    method = MethodId.parse(method)
    order = TruncationOrder.parse(order)
    q = as_state(q, system.dim)
    f0 = el_field(system, q)
    if order is TruncationOrder.ZERO:
        return f0
    require_linear(system)
    ell_q, ell_vq, ell_vv = _ell_partials(method, system, q, f0)
    acc = accel_leading(system, q)
    f2 = -system.askew_solve(q, ell_q - ell_vq(f0) - ell_vv @ acc)
    return f0 + h * h * f2


def toy_principal_field_closed_form(method, toy, q, p, h):
    """Order-``h^2`` principal modified field of the separable toy problem.

    midpoint::

        qdot = U' - h^2/24 (U''' V'^2 + 2 U'' V'' U')
        pdot = -V' + h^2/24 (V''' U'^2 + 2 V'' U'' V')

    trapezoidal::

        qdot = U' - h^2/6 (U''' V'^2 - U'' V'' U')
        pdot = -V' + h^2/6 (V''' U'^2 - V'' U'' V')
    """
    method = MethodId.parse(method)
    u1, u2, u3 = (f(p) for f in toy.u[1:])
    v1, v2, v3 = (f(q) for f in toy.v[1:])
    if method is MethodId.MIDPOINT:
        c, sgn = h * h / 24.0, 2.0
    else:
        c, sgn = h * h / 6.0, -1.0
    qdot = u1 - c * (u3 * v1**2 + sgn * u2 * v2 * u1)
    pdot = -v1 + c * (v3 * u1**2 + sgn * v2 * u2 * v1)
    return np.array([qdot, pdot])


def doubled_discrete_lagrangian(method, system, xa, ya, xb, yb, h):
    """``(L(xa+ya, xb-yb) + L(xa-ya, xb+yb)) / 2``."""
    method = MethodId.parse(method)
    return 0.5 * discrete_lagrangian(method, system, xa + ya, xb - yb, h) \
        + 0.5 * discrete_lagrangian(method, system, xa - ya, xb + yb, h)


def doubled_del_residual(method, system, sm, s, sp, h):
    """Euler-Lagrange residual of the doubled discrete Lagrangian.

    Returns the gradient of ``Lhat(sm, s) + Lhat(s, sp)`` with respect to the
    middle ``x`` and ``y``. The doubled recursion is the same at every index;
    if the middle index is even, ``x - y`` and ``x + y`` there are the middle
    points of ``q^-`` and ``q^+``, and the returned pair equals
    ``((R+ + R-)/2, (R+ - R-)/2)``.
    """
    method = MethodId.parse(method)
    xm, ym, x, y, xp, yp = sm.x, sm.y, s.x, s.y, sp.x, sp.y
    # partials of Lhat(sm, s) w.r.t. its second pair
    a2 = d2_lagrangian(method, system, xm + ym, x - y, h)
    b2 = d2_lagrangian(method, system, xm - ym, x + y, h)
    # partials of Lhat(s, sp) w.r.t. its first pair
    a1 = d1_lagrangian(method, system, x + y, xp - yp, h)
    b1 = d1_lagrangian(method, system, x - y, xp + yp, h)
    rx = 0.5 * (a2 + b2 + a1 + b1)
    ry = 0.5 * (-a2 + b2 + a1 - b1)
    return rx, ry


def doubled_step(method, system, sm, s, h, cfg=NewtonConfig()):
    """Next doubled state from a Newton solve of :func:`doubled_del_residual`."""
    n = system.dim

    def fun(z):
        rx, ry = doubled_del_residual(method, system, sm, s, DoubledState(z[:n], z[n:]), h)
        return np.concatenate([rx, ry])

    guess = np.concatenate([2 * s.x - sm.x, 2 * s.y - sm.y])
    z = newton_solve(fun, guess, cfg)
    return DoubledState(z[:n], z[n:])


def doubled_field_order0(method, system, s):
    """Leading-order full modified system ``(xdot, ydot)``.

    Midpoint: ``(f0(x), 0)``. Trapezoidal: ``xdot`` and ``ydot`` are
    ``A_skew^{-1}`` applied to the even and odd parts of ``H'(x +- y)``.
    """
    method = MethodId.parse(method)
    require_linear(system)
    if method is MethodId.MIDPOINT:
        return el_field(system, s.x), np.zeros_like(s.y)
    gp = system.grad_h(s.x + s.y)
    gm = system.grad_h(s.x - s.y)
    xdot = system.askew_solve(s.x, 0.5 * gp + 0.5 * gm)
    ydot = system.askew_solve(s.x, -0.5 * gp + 0.5 * gm)
    return xdot, ydot


def parasite_matrix(system, x):
    """``-A_skew^{-1} H''(x)``, the linearized parasitic dynamics."""
    require_linear(system)
    x = as_state(x, system.dim)
    return -system.askew_solve(x, system.hess_h(x))


def parasite_growth_indicator(system, x):
    """Largest real part in the spectrum of :func:`parasite_matrix`."""
    return eigen.max_real_part(parasite_matrix(system, x))
