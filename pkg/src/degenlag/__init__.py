"""Variational integrators for Lagrangians linear in the velocities, with
backward error analysis of their smooth and parasitic behaviour."""
from .core import DegenerateSystem, SymThirdTensor, Trajectory, a_skew, accel_leading, el_field
from .errors import *  # noqa: F401,F403
from .integrators import (
    JacobianMode,
    MethodId,
    NewtonConfig,
    StarterMode,
    StarterSpec,
    del_residual,
    discrete_lagrangian,
    integrate,
    start,
    step,
)
from .modified import (
    DoubledState,
    TruncationOrder,
    doubled_del_residual,
    doubled_discrete_lagrangian,
    doubled_field_order0,
    modified_lagrangian_order2,
    parasite_growth_indicator,
    parasite_matrix,
    principal_field,
    toy_principal_field_closed_form,
)
from .analysis import (
    DefectReport,
    ParasiteDecomposition,
    decompose_parasites,
    defect_on_curve,
    defect_order,
    error_vs_reference,
    fit_loglog,
    invariant_drift,
    parasite_envelope,
    reference_solve,
)
from .systems import (
    CallableSystem,
    PendulumSystem,
    PointVortexSystem,
    QuadraticLinearSystem,
    ToySeparable,
    pendulum,
    vortex_invariants,
    vortex_rhs_complex,
)

__version__ = "0.1.0"
