"""Exception hierarchy shared by all modules."""


class EcoDispatchError(Exception):
    """Base class for package errors."""


class DomainError(EcoDispatchError, ValueError):
    """An argument lies outside the domain of the operation."""


class ConfigError(EcoDispatchError, ValueError):
    pass


class SchemaError(EcoDispatchError, ValueError):
    """A file header does not match the expected schema."""


class RowError(EcoDispatchError, ValueError):
    """A single record failed parsing or validation."""

    def __init__(self, message: str, row: int | None = None):
        self.row = row
        super().__init__(message if row is None else f"row {row}: {message}")


class NoDriverError(EcoDispatchError, LookupError):
    """No candidate driver is available for a request."""


class ResourceError(EcoDispatchError, RuntimeError):
    """An instance exceeds a configured size guard."""


class ContractError(EcoDispatchError, ValueError):
    """A precondition on a composite value (e.g. plan completeness) is violated."""
