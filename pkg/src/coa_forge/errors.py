"""Error taxonomy shared across the package.

Every error carries a stable ``code`` (its class name) so the HTTP layer and
the CLI can map failures to statuses and exit codes without string matching.
"""

from __future__ import annotations


class CoaForgeError(Exception):
    """Base class for all package errors."""

    def __init__(self, message: str, *, unit_id: int | None = None):
        super().__init__(message)
        self.unit_id = unit_id

    @property
    def code(self) -> str:
        return type(self).__name__


# -- scenario ---------------------------------------------------------------

class MalformedDocument(CoaForgeError):
    """Scenario document is not structurally readable."""


class InvariantViolation(CoaForgeError):
    """Scenario document parsed but breaks a domain invariant."""


# -- command / COA parsing ---------------------------------------------------

class CommandParseError(CoaForgeError):
    """Base for command grammar failures."""


class UnknownVerb(CommandParseError):
    pass


class ArityMismatch(CommandParseError):
    pass


class MalformedArgument(CommandParseError):
    pass


class NoJsonFound(CoaForgeError):
    """Model response contained no decodable JSON object."""


class SchemaError(CoaForgeError):
    """JSON decoded but does not fit the COA document shape."""


# -- simulation ---------------------------------------------------------------

class InvalidCoa(CoaForgeError):
    """COA failed validation against the scenario it is meant to run in."""

    def __init__(self, message: str, violations: list | None = None):
        super().__init__(message)
        self.violations = violations or []


# -- llm gateway --------------------------------------------------------------

class TransportError(CoaForgeError):
    """Network-level failure that survived the retry budget."""


class AuthError(CoaForgeError):
    """Live backend selected but credentials are missing or rejected."""


class ImageUnsupported(CoaForgeError):
    """Image attachment offered to a text-only model."""


class FixtureMiss(CoaForgeError):
    """Replay backend has no recorded response for this request."""


class UnparseableAfterRepairs(CoaForgeError):
    """Model output stayed unusable after the repair-round budget."""

    def __init__(self, message: str, attempts: list[str] | None = None):
        super().__init__(message)
        self.attempts = attempts or []


# -- session orchestration ----------------------------------------------------

class InvalidMission(CoaForgeError):
    pass


class StateError(CoaForgeError):
    """Operation not legal in the session's current status."""


class UnknownCoa(CoaForgeError):
    """coa_id does not name a COA in the session's latest set."""


class EmptyFeedback(CoaForgeError):
    pass


class SessionNotFound(CoaForgeError):
    pass


# -- metrics ------------------------------------------------------------------

class EmptyInput(CoaForgeError):
    pass


class UnsupportedFormat(CoaForgeError):
    pass
