"""Exception hierarchy shared by all colcirc modules."""


class ColcircError(Exception):
    """Base class for all errors raised by this package."""


class TypeDomainError(ColcircError):
    """A value does not belong to the domain of an element type."""

    def __init__(self, message, index=None, value=None):
        super().__init__(message)
        self.index = index
        self.value = value


class OperatorError(ColcircError):
    """An operator's precondition was violated (operators are partial functions).

    ``code`` is a stable machine-readable tag such as ``length-mismatch``,
    ``out-of-range`` or ``overflow``.
    """

    def __init__(self, code, message):
        super().__init__(f"{code}: {message}")
        self.code = code


class InvalidCircuitError(ColcircError):
    """A circuit failed structural validation; carries the full report."""

    def __init__(self, report):
        super().__init__("invalid circuit: " + "; ".join(v.describe() for v in report.violations))
        self.report = report


class MissingInputError(ColcircError):
    """Circuit evaluation was not given a column for every input label."""


class EvaluationError(ColcircError):
    """An operator failed while evaluating a circuit; reports the vertex."""

    def __init__(self, vertex_id, cause):
        super().__init__(f"operator failure at vertex {vertex_id!r}: {cause}")
        self.vertex_id = vertex_id
        self.cause = cause


class NotEncodable(ColcircError):
    """The input family is outside the scheme's encodable set."""

    def __init__(self, reason):
        super().__init__(reason)
        self.reason = reason


class VerificationFailed(ColcircError):
    """An operation requiring a valid encoded form was given a rejected one."""


class RegistryError(ColcircError):
    """Catalog or codec registry misuse (duplicate or unknown identifier)."""
