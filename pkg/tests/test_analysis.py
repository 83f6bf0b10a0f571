import numpy as np
import pytest

from degenlag import (
    Trajectory,
    decompose_parasites,
    defect_on_curve,
    defect_order,
    el_field,
    error_vs_reference,
    fit_loglog,
    integrate,
    invariant_drift,
    parasite_envelope,
    pendulum,
    principal_field,
    reference_solve,
)
from degenlag.analysis import ParasiteDecomposition
from degenlag.errors import GridMismatch, TooShort
from degenlag.systems import free_system

PEND = pendulum()


def test_reference_solve_zero_field():
    tr = reference_solve(lambda q: np.zeros_like(q), [1.0, -2.0], 1.0, 0.1)
    assert len(tr) == 11 and tr.t_end == pytest.approx(1.0)
    np.testing.assert_array_equal(tr.points, np.tile([1.0, -2.0], (11, 1)))


def test_reference_solve_grid_ends_at_t_end():
    tr = reference_solve(lambda q: -q, [1.0], 1.0, 0.3)
    assert len(tr) == 5 and tr.h == pytest.approx(0.25)
    assert tr.points[-1, 0] == pytest.approx(np.exp(-1.0), abs=1e-4)
    with pytest.raises(ValueError):
        reference_solve(lambda q: q, [1.0], 1.0, 0.0)


def test_reference_solve_pendulum_energy():
    tr = reference_solve(lambda q: el_field(PEND, q), [1.5, 0.0], 10.0, 1e-3)
    assert invariant_drift(tr, PEND.hamiltonian) < 1e-10


def test_reference_solve_one_step_taylor():
    # one RK4 step agrees with the exponential to fifth order
    f = lambda q: np.array([q[1], -q[0]])
    errs = []
    for dt in (0.1, 0.05):
        q = reference_solve(f, [1.0, 0.0], dt, dt).points[-1]
        errs.append(abs(q[0] - np.cos(dt)) + abs(q[1] + np.sin(dt)))
    assert 25 < errs[0] / errs[1] < 40


def test_defect_on_constant_curve():
    curve = Trajectory(0.0, 0.05, np.tile([0.0, 0.0], (41, 1)))
    assert defect_on_curve("midpoint", PEND, curve, 0.2) == 0.0
    free_curve = Trajectory(0.0, 0.05, np.tile([0.3, 0.7], (41, 1)))
    assert defect_on_curve("trapezoidal", free_system(), free_curve, 0.1) == 0.0


def test_defect_grid_mismatch():
    curve = Trajectory(0.0, 0.05, np.zeros((41, 2)))
    with pytest.raises(GridMismatch):
        defect_on_curve("midpoint", PEND, curve, 0.12)
    with pytest.raises(GridMismatch):
        defect_on_curve("midpoint", PEND, curve, 1.0)


def test_defect_order_degenerate():
    rep = defect_order("midpoint", free_system(), "two", [1.0, 0.5], 1.0, [0.2, 0.1, 0.05])
    assert rep.degenerate and not rep.valid and np.isnan(rep.slope)


def test_defect_order_argument_checks():
    with pytest.raises(ValueError):
        defect_order("midpoint", PEND, "two", [1.0, 0.0], 1.0, [0.2, 0.1])
    with pytest.raises(ValueError):
        defect_order("midpoint", PEND, "two", [1.0, 0.0], 1.0, [0.2, 0.1, 0.1])


def test_defect_order_zero_truncation_is_second_order():
    rep = defect_order("midpoint", PEND, "zero", [1.5, 0.0], 2.0, [0.1, 0.05, 0.025])
    assert rep.valid and rep.slope == pytest.approx(2.0, abs=0.1)


def test_decompose_constant_and_alternating():
    const = Trajectory(0.0, 0.1, np.tile([1.0, 2.0], (6, 1)))
    dec = decompose_parasites(const)
    np.testing.assert_allclose(dec.x, np.tile([1.0, 2.0], (4, 1)))
    assert np.all(dec.y == 0) and np.all(dec.amplitude == 0)
    j = np.arange(8)
    alt = Trajectory(0.0, 0.1, np.column_stack([(-1.0) ** j, np.zeros(8)]))
    dec = decompose_parasites(alt)
    assert np.all(dec.x == 0)
    np.testing.assert_allclose(dec.y[:, 0], np.ones(6))
    np.testing.assert_allclose(dec.times, 0.1 * j[1:-1])


def test_decompose_reconstructs(rng):
    pts = rng.normal(size=(12, 3))
    dec = decompose_parasites(Trajectory(0.0, 0.2, pts))
    sign = (-1.0) ** np.arange(1, 11)[:, None]
    np.testing.assert_allclose(dec.x + sign * dec.y, pts[1:-1], atol=1e-15)


def test_decompose_smooth_curve_bias():
    # the stencil bias on a smooth curve is h^2 |q''| / 4
    h = 0.1
    t = h * np.arange(30)
    dec = decompose_parasites(Trajectory(0.0, h, np.column_stack([np.sin(t), np.cos(t)])))
    assert dec.amplitude.max() <= h * h / 4 * 1.01


def test_decompose_too_short():
    with pytest.raises(TooShort):
        decompose_parasites(Trajectory(0.0, 0.1, np.zeros((2, 2))))


def test_subtract_keeps_smooth_part():
    a = decompose_parasites(integrate("trapezoidal", PEND, [3.0, 0.0], 0.35, 20))
    b = decompose_parasites(integrate("midpoint", PEND, [3.0, 0.0], 0.35, 20))
    d = a - b
    np.testing.assert_array_equal(d.x, a.x)
    np.testing.assert_allclose(d.y, a.y - b.y)
    with pytest.raises(ValueError):
        a - decompose_parasites(integrate("midpoint", PEND, [3.0, 0.0], 0.35, 10))


def _dec(amplitude):
    amplitude = np.asarray(amplitude, float)
    t = np.arange(amplitude.size, dtype=float)
    z = np.zeros((amplitude.size, 1))
    return ParasiteDecomposition(t, z, z, amplitude)


def test_parasite_envelope():
    t, env = parasite_envelope(_dec([1.0, 2.0, 3.0]), 2)
    np.testing.assert_array_equal(env, [2.0, 3.0])
    np.testing.assert_array_equal(t, [1.0, 2.0])
    _, env = parasite_envelope(_dec(np.zeros(5)), 3)
    assert np.all(env == 0)
    _, env = parasite_envelope(_dec(np.full(5, 0.7)), 1)
    assert np.all(env == 0.7)
    with pytest.raises(TooShort):
        parasite_envelope(_dec([1.0]), 2)
    with pytest.raises(ValueError):
        parasite_envelope(_dec([1.0]), 0)


def test_invariant_drift():
    tr = Trajectory(0.0, 0.1, [[1.0], [2.0], [0.5]])
    assert invariant_drift(tr, lambda q: q[0]) == pytest.approx(0.5)
    assert invariant_drift(tr, lambda q: 3.0) == 0.0


def test_error_vs_reference():
    field = lambda q: principal_field("midpoint", PEND, q, 0.1)
    ref = reference_solve(field, [1.0, 0.0], 2.0, 0.01)
    sampled = Trajectory(0.0, 0.1, ref.points[::10])
    assert error_vs_reference(sampled, field, 0.01) <= 1e-10
    assert error_vs_reference(Trajectory(0.0, 0.1, [[1.0, 0.0]]), field, 0.01) == 0.0
    tr = integrate("midpoint", PEND, [1.0, 0.0], 0.1, 20)
    assert 0 < error_vs_reference(tr, lambda q: el_field(PEND, q), 0.001) < 0.01


def test_fit_loglog():
    x = np.array([0.2, 0.1, 0.05])
    slope, r2 = fit_loglog(x, 3 * x**4)
    assert slope == pytest.approx(4.0) and r2 == pytest.approx(1.0)
    slope, r2 = fit_loglog(x, np.ones(3))
    assert slope == pytest.approx(0.0, abs=1e-12) and r2 == 1.0
