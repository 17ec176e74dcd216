"""Exception types raised by the fickjacobs package."""


class FickJacobsError(Exception):
    """Base class for all package errors."""


class OutOfDomainError(FickJacobsError):
    """A coordinate lies outside the profile's validity domain."""


class NonPositiveAreaError(FickJacobsError):
    """A cross-section evaluated to a non-positive area."""


class OutOfRangeError(FickJacobsError):
    """A transformed coordinate lies outside the cached map range."""


class QuadratureFailureError(FickJacobsError):
    """Adaptive quadrature did not reach the requested tolerance."""


class GridTooSmallError(FickJacobsError):
    """An operation needs more grid points than were supplied."""


class GridMismatchError(FickJacobsError):
    """Two fields do not live on compatible grids."""


class NonPositiveTimeError(FickJacobsError):
    """A strictly positive time was required."""


class NegativeCurvatureError(FickJacobsError):
    """The Gaussian-channel eigenmode solution needs positive curvature."""


class ConvergenceFailureError(FickJacobsError):
    """An iterative eigensolver failed to converge."""


class SingularSystemError(FickJacobsError):
    """The implicit linear system is singular or was solved inaccurately."""


class IntegrityError(FickJacobsError):
    """A concentration field violated a physical integrity bound."""


class ConfigError(FickJacobsError):
    """A scenario configuration is invalid; message names the field."""
