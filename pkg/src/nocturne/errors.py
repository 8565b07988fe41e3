"""Exception hierarchy shared by every pipeline stage."""


class NocturneError(Exception):
    """Base class for all errors raised by the package."""


class ConfigurationError(NocturneError, ValueError):
    """Invalid parameters, unknown channels, inconsistent shapes."""


class DomainError(NocturneError, ValueError):
    """An input outside the mathematical domain of an operation."""


class IngestError(NocturneError):
    """Fatal parse failure (missing file, malformed header, missing root id)."""


class FeatureUndefined(NocturneError):
    """A feature cannot be computed from the available observations."""


class BalanceImpossible(NocturneError):
    """Oversampling requested with fewer than two minority samples."""


class SingleClass(NocturneError):
    """A classifier was asked to fit data containing only one class."""


class TrainingDiverged(NocturneError):
    """Loss became non-finite during optimisation."""

    def __init__(self, epoch: int, message: str = ""):
        self.epoch = epoch
        super().__init__(message or f"training diverged at epoch {epoch}")


class StratificationImpossible(NocturneError):
    """A class has fewer members than requested folds."""


class UndefinedMetric(NocturneError):
    """A metric is undefined for the given labels (e.g. AUROC with one class)."""
