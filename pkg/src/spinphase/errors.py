"""Exception hierarchy shared by all spinphase modules."""


class SpinPhaseError(Exception):
    """Base class for all errors raised by this package."""


class ConfigurationError(SpinPhaseError):
    """Invalid parameter, grid, or experiment configuration."""


class BudgetError(SpinPhaseError):
    """A measurement plan exceeds the allowed measurement budget."""


class DegenerateUpdateError(SpinPhaseError):
    """A posterior update produced an identically zero density."""


class ImpossibleOutcomeError(SpinPhaseError):
    """An outcome with exactly zero likelihood was applied to a point mass."""


class UnsupportedStateError(SpinPhaseError):
    """The requested operation is not defined for this initial state."""


class ResourceLimitError(SpinPhaseError):
    """An exact oracle was asked for more work than its hard cap allows."""


class DirectionUndefinedError(SpinPhaseError):
    """A mean direction was requested from a distribution with no usable
    first moment (concentration below threshold)."""


class EmptySeriesError(SpinPhaseError):
    """An estimator was applied to a measurement series with no outcomes."""


class UnbalancedPopulationsWarning(UserWarning):
    """Two-mode number state constructed with unequal mode populations.

    The angular-momentum bookkeeping assumes equal populations; the phase
    statistics are still simulated with a flat prior.
    """
