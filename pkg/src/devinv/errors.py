"""Exception types shared across the toolkit.

Every domain error derives from DevinvError so the CLI and service can map
them to exit code 1 / HTTP status codes in one place.
"""

from __future__ import annotations


class DevinvError(Exception):
    """Base class for all domain errors."""


# --- corpus ---------------------------------------------------------------

class MalformedRecord(DevinvError):
    def __init__(self, line_no: int, reason: str):
        super().__init__(f"line {line_no}: {reason}")
        self.line_no = line_no
        self.reason = reason


class DuplicateId(DevinvError):
    def __init__(self, record_id: str):
        super().__init__(f"duplicate record id: {record_id}")
        self.record_id = record_id


# --- gateway --------------------------------------------------------------

class GatewayError(DevinvError):
    """Base class for provider/transport failures."""


class CredentialMissing(GatewayError):
    def __init__(self, env_var: str):
        super().__init__(f"credential environment variable not set: {env_var}")
        self.env_var = env_var


class Exhausted(GatewayError):
    """All retry attempts failed; carries the last underlying error."""

    def __init__(self, last_error: Exception, attempts: int):
        super().__init__(f"gave up after {attempts} attempts: {last_error}")
        self.last_error = last_error
        self.attempts = attempts


class ReplayMiss(GatewayError):
    """No scripted response for this prompt digest. Signals a fixture gap."""

    def __init__(self, digest: str):
        super().__init__(f"no scripted response for bundle digest {digest}")
        self.digest = digest


class EmptyInput(GatewayError):
    def __init__(self, detail: str = "text is empty after normalization"):
        super().__init__(detail)


class DimensionMismatch(DevinvError):
    def __init__(self, expected: int, got: int):
        super().__init__(f"expected dimension {expected}, got {got}")
        self.expected = expected
        self.got = got


class ContextTooLarge(GatewayError):
    def __init__(self, size: int, limit: int):
        super().__init__(f"prompt of {size} chars exceeds provider limit of {limit}")
        self.size = size
        self.limit = limit


# --- extraction -----------------------------------------------------------

class MissingTemplate(DevinvError):
    def __init__(self, name: str):
        super().__init__(f"template set is missing: {name}")
        self.name = name


# --- evaluation -----------------------------------------------------------

class DuplicateScored(DevinvError):
    def __init__(self, record_id: str, task: str, provider_id: str):
        super().__init__(
            f"duplicate scored result for ({record_id}, {task}, {provider_id})"
        )
        self.record_id = record_id
        self.task = task
        self.provider_id = provider_id


# --- embedding index ------------------------------------------------------

class ZeroVector(DevinvError):
    def __init__(self):
        super().__init__("vector has zero norm")


class EmptyIndex(DevinvError):
    def __init__(self):
        super().__init__("index holds no entries")


class MissingDescription(DevinvError):
    def __init__(self, record_id: str):
        super().__init__(f"record {record_id} has an empty description")
        self.record_id = record_id


class InconsistentIndex(DevinvError):
    def __init__(self, detail: str):
        super().__init__(f"index and corpus disagree: {detail}")


class IndexFormatError(DevinvError):
    """File is not a valid index: bad magic, version, or layout."""


class ChecksumMismatch(IndexFormatError):
    def __init__(self):
        super().__init__("index file checksum does not match (corrupt or truncated)")


# --- rag ------------------------------------------------------------------

class UnknownRecordId(DevinvError):
    def __init__(self, record_id: str):
        super().__init__(f"unknown record id: {record_id}")
        self.record_id = record_id
