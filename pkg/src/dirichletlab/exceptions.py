"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the open domain of a density or transform."""


class ConsistencyError(ValueError):
    """Inputs that must agree (e.g. conditional totals vs a marginal) do not."""


class CapacityError(ValueError):
    """An exact-enumeration request exceeds the supported problem size."""


class IntegrationError(RuntimeError):
    """Adaptive quadrature failed to reach the requested accuracy."""


class EnvelopeError(RuntimeError):
    """A rejection-sampling envelope is invalid or hopelessly loose."""


class DegenerateStatisticError(ValueError):
    """A test statistic is undefined for the given samples (constant block)."""


class CompletenessError(ValueError):
    """An operation requiring complete cases was given missing values."""


class DatasetFormatError(ValueError):
    """A dataset file violates the text format; carries a line number."""

    def __init__(self, line_number: int, message: str):
        self.line_number = line_number
        super().__init__(f"line {line_number}: {message}")
