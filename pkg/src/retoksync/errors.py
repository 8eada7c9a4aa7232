"""Exception hierarchy. Every failure mode callers are expected to
distinguish gets its own class; the CLI maps them to exit codes."""


class RetokSyncError(Exception):
    """Base class for all package errors."""


class TrainingError(RetokSyncError):
    """Tokenizer training preconditions violated (empty corpus, bad size)."""


class VocabularyError(RetokSyncError):
    """Token id outside the profile vocabulary."""


class PrecisionError(RetokSyncError):
    """Distribution cannot be quantized at the requested precision."""


class ProviderError(RetokSyncError):
    """Model provider failure. retryable marks transient transport faults."""

    def __init__(self, message, retryable=False):
        super().__init__(message)
        self.retryable = retryable


class OutOfSupportError(RetokSyncError):
    """Received token lies outside the truncated candidate set and
    skipping is disabled: the channel is corrupted or misconfigured."""


class SynchronizationError(RetokSyncError):
    """Sender and receiver views cannot be aligned (context prefix
    mismatch, unmatchable auxiliary text, key/config disagreement)."""


class CorrectionOverflowError(RetokSyncError):
    """More correction items in one group than the count field can hold."""


class ProtocolError(RetokSyncError):
    """Correction message malformed: truncated mid-item or decoded
    position out of range."""


class ConfigError(RetokSyncError):
    """Invalid or inconsistent run configuration."""
