class RagEvalError(Exception):
    """Base exception for all errors in the rageval application."""

    pass


class ConfigurationError(RagEvalError):
    """Raised when there is a problem with the user's configuration."""

    pass


# --- Score arithmetic ---


class ScoringError(RagEvalError):
    """Raised when a score cannot be computed from the given inputs."""

    pass


class EmptyVerdicts(ScoringError):
    pass


class EmptyList(ScoringError):
    pass


class CountExceedsTotal(ScoringError):
    pass


class DimensionMismatch(ScoringError):
    pass


class ZeroVector(ScoringError):
    pass


# --- LLM gateway ---


class LlmGatewayError(RagEvalError):
    """Raised when a chat or embedding request cannot be served."""

    pass


class LlmTimeout(LlmGatewayError):
    pass


class RateLimited(LlmGatewayError):
    """Raised on HTTP 429; carries the server's retry-after hint in seconds when present."""

    def __init__(self, message: str, retry_after: float | None = None):
        super().__init__(message)
        self.retry_after = retry_after


class AuthFailure(LlmGatewayError):
    pass


class MalformedResponse(LlmGatewayError):
    pass


class BackendUnavailable(LlmGatewayError):
    """Raised for connection errors and 5xx responses. Retried."""

    pass


class InvalidRequest(LlmGatewayError):
    """Raised before any network call when a request breaks its invariants."""

    pass


class ScriptedResponseMissing(LlmGatewayError):
    pass


# --- Prompt templates ---


class PromptError(RagEvalError):
    pass


class MissingBinding(PromptError):
    pass


class UnknownPlaceholder(PromptError):
    pass


class TemplateNotFound(PromptError):
    pass


# --- Response parsing ---


class ResponseParseError(RagEvalError):
    """Raised when an LLM response does not have the expected shape."""

    pass


class NoStatementsFound(ResponseParseError):
    pass


class VerdictCountMismatch(ResponseParseError):
    def __init__(self, expected: int, found: int):
        super().__init__(f"Expected {expected} verdicts, found {found}.")
        self.expected = expected
        self.found = found


class UnparseableVerdict(ResponseParseError):
    pass


class EmptyQuestion(ResponseParseError):
    pass


class UnparseableScore(ResponseParseError):
    pass


class OutOfRange(ResponseParseError):
    pass


class UnparseableRanking(ResponseParseError):
    pass


# --- Dataset ---


class DatasetError(RagEvalError):
    pass


class SchemaViolation(DatasetError):
    """Raised when a dataset line does not match the expected schema."""

    def __init__(self, line: int, field: str, message: str = ""):
        super().__init__(
            f"Line {line}: invalid field '{field}'" + (f": {message}" if message else "")
        )
        self.line = line
        self.field = field


class DuplicateId(DatasetError):
    def __init__(self, line: int, record_id: str):
        super().__init__(f"Line {line}: duplicate id '{record_id}'")
        self.line = line
        self.record_id = record_id


class GenerationFailed(DatasetError):
    pass


class ContainmentViolation(DatasetError):
    """Raised when a diluted context no longer contains every focused-context sentence."""

    pass


class ReplayError(RagEvalError):
    pass
