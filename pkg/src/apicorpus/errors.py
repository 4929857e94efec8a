"""Exception types shared across the pipeline."""


class ApicorpusError(Exception):
    """Base class for all package errors."""


class MalformedDocument(ApicorpusError):
    """Input bytes could not be decoded as JSON or YAML."""


class UnsupportedVersion(ApicorpusError):
    """Document declares a version that is neither OpenAPI v2 nor v3."""


class CyclicSchema(ApicorpusError):
    """A $ref cycle was found while building a body skeleton."""


class UnsupportedLanguage(ApicorpusError):
    """Requested snippet language is not one of the ten supported."""


class ExtractionFailed(ApicorpusError):
    """No HTTP verb or URL literal could be located in a snippet."""


class NoServerUrl(ApicorpusError):
    """Spec has no server URL and placeholder-host mode is off."""


class ServiceError(ApicorpusError):
    """A remote client call failed after exhausting its retry budget."""


class CapabilityError(ApicorpusError):
    """Client cannot perform the requested operation (e.g. logprobs)."""


class DimensionMismatch(ApicorpusError):
    """Embedding vectors in one index disagree on dimension."""


class InsufficientShots(ApicorpusError):
    """Three-shot template called without three same-API shot instances."""


class SchemaViolation(ApicorpusError):
    """A corpus line failed schema validation.

    Carries the 1-based line number.
    """

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class CorpusTooSmall(ApicorpusError):
    """Strict split mode needs more entries than the corpus has."""


class PromptRenderError(ApicorpusError):
    """Slot fill count does not match the template's slot occurrences."""
