"""Exception hierarchy.

Every error carries an ``exit_code`` so the CLI can map it without a lookup
table: 1 for usage/config problems, 2 for data validation.
"""
from __future__ import annotations


class WaitlistError(Exception):
    exit_code = 1


class ParamsViolateTheorem(WaitlistError, ValueError):
    """Raised when (n, s, a1) fall outside 2 <= s < a1 <= n."""


class InvalidT(WaitlistError, ValueError):
    pass


class DomainError(WaitlistError, ValueError):
    pass


class CapExceeded(WaitlistError):
    def __init__(self, required: int, cap: int, what: str = "n"):
        self.required = required
        self.cap = cap
        super().__init__(f"{what}={required} exceeds the enumeration cap {cap}; raise the cap explicitly")


class MismatchedInputs(WaitlistError, ValueError):
    pass


class ConfigError(WaitlistError, ValueError):
    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


class DataError(WaitlistError, ValueError):
    exit_code = 2


class IngestionError(DataError):
    def __init__(self, message: str, rows: list[int] | None = None):
        self.rows = rows or []
        if self.rows:
            message = f"{message} (rows {', '.join(map(str, self.rows))})"
        super().__init__(message)


class NonPrefixOffers(DataError):
    pass


class AmbiguousSeats(DataError):
    pass


class DegenerateStratum(DataError):
    def __init__(self, stratum, message: str = "instrument arm is empty"):
        self.stratum = stratum
        super().__init__(f"stratum {stratum!r}: {message}")


class ZeroFirstStage(DataError):
    pass


class MissingTypes(DataError):
    pass
