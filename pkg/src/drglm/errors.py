"""Exception hierarchy shared across the package."""


class DrglmError(Exception):
    """Base class for all errors raised by drglm."""


class DataError(DrglmError):
    """Malformed, ragged or mistyped tabular input."""


class SchemaError(DataError):
    """A dataset does not match the schema a design was built against."""


class FormulaSyntaxError(DrglmError):
    """Formula text does not match the grammar.

    The character ``offset`` of the failure is stored for diagnostics.
    """

    def __init__(self, message, offset):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset


class UnsupportedFeatureError(DrglmError):
    """A construct that is recognised but deliberately not supported."""


class FitError(DrglmError):
    """Base class for model fitting failures."""


class RankDeficientError(FitError):
    """The weighted information matrix is singular."""


class ConvergenceError(FitError):
    """IRLS did not converge; ``last_coefficients`` holds the final iterate."""

    def __init__(self, message, last_coefficients=None, iterations=None):
        super().__init__(message)
        self.last_coefficients = last_coefficients
        self.iterations = iterations


class PositivityError(DrglmError):
    """Estimated propensity of exactly 0 or 1; ``rows`` lists offenders."""

    def __init__(self, message, rows):
        super().__init__(message)
        self.rows = rows


class InferenceError(DrglmError):
    """Bootstrap or influence-function inference could not be completed."""


class ConfigError(DrglmError):
    """Invalid run or scenario configuration."""


class ScenarioError(DrglmError):
    """Too many replicates of a simulation scenario failed."""
