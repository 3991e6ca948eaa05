"""Exception types shared across the package."""


class DomainError(ValueError):
    """A point or measure does not belong to the expected state space."""


class SpaceMismatch(ValueError):
    """Two objects that must live on the same state space do not."""


class UnsupportedPredictive(NotImplementedError):
    """No registered closed form (or increment) for this model / index / function."""


class BudgetExceeded(RuntimeError):
    """Exact enumeration would exceed the latent-step budget."""


class ConditioningError(ValueError):
    """Conditioning on an event of probability zero."""


class ConfigError(ValueError):
    """Invalid experiment configuration."""
