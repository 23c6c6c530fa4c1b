"""Exception hierarchy shared across the package."""


class MvStackError(Exception):
    """Base class for all mvstack errors."""


class NotPositiveDefinite(MvStackError):
    """A matrix required to be positive definite has a pivot at or below tolerance."""


class DimensionMismatch(MvStackError):
    """Operands have incompatible shapes."""


class RaggedCsv(MvStackError):
    """A CSV file has rows of unequal length."""


class UnmappedFeature(MvStackError):
    """A feature in the data file is missing from the view map."""


class NonBinaryOutcome(MvStackError):
    """The outcome column contains values other than 0 and 1."""


class ZeroVarianceFeature(MvStackError):
    """A feature column is constant and cannot be standardized."""


class NonPositiveEntry(MvStackError):
    """A value required to be strictly positive is zero or negative."""


class TooManyFolds(MvStackError):
    """More cross-validation folds requested than samples available."""


class NullPath(MvStackError):
    """No feature is admissible at the top of the penalty path; the all-zero
    model is optimal for every penalty strength."""


class OneClassOnly(MvStackError):
    """A ranking metric was asked for but only one class is present."""


class DegenerateSelection(MvStackError):
    """Selection stability is undefined: every model selected nothing, or everything."""


class ViewStructureMismatch(MvStackError):
    """New data does not match the view structure of a fitted classifier."""


class Infeasible(MvStackError):
    """No threshold in (0.5, 1] satisfies the requested error bound."""


class SchemaMismatch(MvStackError):
    """A result file does not match the expected column schema."""


class ConfigError(MvStackError):
    """An experiment config file is malformed or contains unknown keys."""


class BaseFitError(MvStackError):
    """A base-learner fit failed; carries view/fold context."""

    def __init__(self, message, view=None, fold=None):
        super().__init__(message)
        self.view = view
        self.fold = fold
