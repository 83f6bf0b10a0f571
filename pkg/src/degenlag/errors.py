"""Exception hierarchy shared by all modules."""


class DegenLagError(Exception):
    """Base class for every error raised by degenlag."""


class SingularAskew(DegenLagError):
    """A_skew(q) is numerically singular (condition estimate above threshold)."""


class NotLinearAlpha(DegenLagError):
    """An order-h^2 operation was requested for a system with nonlinear alpha."""


class VortexCollision(DegenLagError):
    """Two point vortices are closer than the collision guard radius."""


class NewtonDiverged(DegenLagError):
    """Newton iteration did not reach the residual tolerance."""


class SingularJacobian(DegenLagError):
    """The Newton Jacobian could not be factorized."""


class EigenNoConvergence(DegenLagError):
    """The Hessenberg QR iteration exhausted its iteration budget."""


class NonFiniteState(DegenLagError):
    """A state left the finite floating point range."""


class GridMismatch(DegenLagError):
    """A fine trajectory cannot be resampled on the requested h-mesh."""


class TooShort(DegenLagError):
    """A trajectory or sequence is too short for the requested operation."""


class IntegrationError(DegenLagError):
    """Integration stopped early.

    The points computed before the failure are kept in ``trajectory`` and the
    underlying exception in ``__cause__``.
    """

    def __init__(self, message, trajectory=None):
        super().__init__(message)
        self.trajectory = trajectory
