"""Exception types shared across the package."""


class DragchainError(Exception):
    """Base class for all library errors."""

    code = "error"


class InvalidArgument(DragchainError):
    code = "invalid-argument"


class NotFound(DragchainError):
    code = "not-found"


class BackendUnavailable(DragchainError):
    code = "backend-unavailable"


class FixtureSchemaInvalid(DragchainError):
    code = "fixture-schema-invalid"


class DegenerateContact(DragchainError):
    code = "degenerate-contact"


class InvalidChain(DragchainError):
    code = "invalid-chain"


class InvalidDrag(DragchainError):
    code = "invalid-drag"


class ParseError(DragchainError):
    code = "parse-error"

    def __init__(self, message: str, source: str | None = None, offset: int | None = None):
        super().__init__(message)
        self.source = source
        self.offset = offset


class UndefinedMetric(DragchainError):
    code = "undefined-metric"
