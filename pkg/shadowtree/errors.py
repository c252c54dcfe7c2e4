"""
Errors module for shadowtree.
Defines the error vocabulary shared by all pipeline stages.
"""


class ShadowtreeError(Exception):
    """Base class for all shadowtree failures.

    Every subclass carries a stable ``code`` string that reports and exit
    codes key on, plus a ``details`` dict with structured diagnostics.
    """

    code = 'shadowtree-error'

    def __init__(self, message, **details):
        super().__init__(message)
        self.message = message
        self.details = details

    def to_dict(self):
        """Serializable form used in partial reports."""
        return {'code': self.code, 'message': self.message, 'details': self.details}


class ConfigError(ShadowtreeError, ValueError):
    code = 'config-error'

    def __init__(self, message, field_errors=None):
        super().__init__(message, field_errors=list(field_errors or []))
        self.field_errors = list(field_errors or [])


class PrecisionExhausted(ShadowtreeError):
    code = 'precision-exhausted'


class ModelMismatch(ShadowtreeError):
    code = 'model-mismatch'


class NotLoxodromic(ShadowtreeError):
    code = 'not-loxodromic'


class LinearAlgebraFailure(ShadowtreeError):
    code = 'linear-algebra-failure'


class DegeneratePair(ShadowtreeError):
    code = 'degenerate-pair'


class NoSamples(ShadowtreeError):
    code = 'no-samples'


class BudgetExceeded(ShadowtreeError):
    code = 'budget-exceeded'


class ScaleInfeasible(ShadowtreeError):
    code = 'scale-infeasible'


class AmsSearchFailed(ShadowtreeError):
    code = 'ams-search-failed'


class SeedNotFound(ShadowtreeError):
    code = 'seed-not-found'


class NotGeodesic(ShadowtreeError):
    code = 'not-geodesic'


class SubcriticalExponent(ShadowtreeError):
    code = 'subcritical-s'


class InsufficientRange(ShadowtreeError):
    code = 'insufficient-range'


class ConventionMismatch(ShadowtreeError):
    code = 'convention-mismatch'


class PhiConeMismatch(ShadowtreeError):
    code = 'phi-cone-mismatch'
